#include "vocab_surgeon/tensorio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vocab_surgeon/error.hpp"

namespace vs {

namespace {

void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; i++) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (in.gcount() != 8) throw InputFormatError("matrix file: truncated header length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= std::uint64_t(buf[i]) << (8 * i);
    return v;
}

constexpr bool kLittleEndianHost = std::endian::native == std::endian::little;

}  // namespace

void EmbeddingMatrix::validate() const {
    if (rows < 1 || cols < 1) throw InvariantError("matrix must have rows >= 1 and cols >= 1");
    if (data.size() != rows * cols) {
        throw InvariantError("matrix payload size " + std::to_string(data.size()) +
                             " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (float v : data) {
        if (!std::isfinite(v)) throw InvariantError("matrix contains a non-finite value");
    }
}

void write_matrix(const EmbeddingMatrix& m, std::ostream& out) {
    m.validate();
    nlohmann::ordered_json header;
    header["format"] = "vocab-surgeon/matrix/v1";
    header["rows"] = m.rows;
    header["cols"] = m.cols;
    header["dtype"] = "f32";
    std::string header_text = header.dump();
    put_u64_le(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    if constexpr (kLittleEndianHost) {
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * sizeof(float)));
    } else {
        for (float v : m.data) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
            unsigned char buf[4] = {static_cast<unsigned char>(bits),
                                    static_cast<unsigned char>(bits >> 8),
                                    static_cast<unsigned char>(bits >> 16),
                                    static_cast<unsigned char>(bits >> 24)};
            out.write(reinterpret_cast<const char*>(buf), 4);
        }
    }
    if (!out) throw InputFormatError("matrix file: write failed");
}

EmbeddingMatrix read_matrix(std::istream& in) {
    std::uint64_t header_len = get_u64_le(in);
    if (header_len > (1ULL << 20)) throw InputFormatError("matrix file: implausible header length");
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (static_cast<std::uint64_t>(in.gcount()) != header_len) {
        throw InputFormatError("matrix file: truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputFormatError(std::string("matrix file: header is not valid JSON: ") + e.what());
    }
    if (header.value("format", "") != "vocab-surgeon/matrix/v1") {
        throw InputFormatError("matrix file: missing or unsupported \"format\" (bad magic)");
    }
    if (header.value("dtype", "") != "f32") {
        throw InputFormatError("matrix file: unsupported dtype");
    }
    EmbeddingMatrix m;
    try {
        m.rows = header.at("rows").get<std::uint64_t>();
        m.cols = header.at("cols").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw InputFormatError(std::string("matrix file: bad header fields: ") + e.what());
    }
    if (m.rows < 1 || m.cols < 1) throw InputFormatError("matrix file: rows and cols must be >= 1");

    m.data.resize(m.rows * m.cols);
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(float)));
    if (static_cast<std::uint64_t>(in.gcount()) != m.data.size() * sizeof(float)) {
        throw InputFormatError("matrix file: payload shorter than rows*cols*4 bytes");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw InputFormatError("matrix file: trailing bytes after payload");
    }
    if constexpr (!kLittleEndianHost) {
        for (float& v : m.data) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
            bits = ((bits & 0xFF) << 24) | ((bits & 0xFF00) << 8) | ((bits >> 8) & 0xFF00) |
                   (bits >> 24);
            v = std::bit_cast<float>(bits);
        }
    }
    for (float v : m.data) {
        if (!std::isfinite(v)) throw InputFormatError("matrix file: non-finite value in payload");
    }
    return m;
}

void write_matrix_file(const EmbeddingMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputFormatError("cannot open for writing: " + path);
    write_matrix(m, out);
}

EmbeddingMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputFormatError("cannot open: " + path);
    return read_matrix(in);
}

void ModelShape::validate() const {
    if (total_params <= vocab_size * hidden_dim * embedding_copies) {
        throw InvariantError("model shape: total_params must exceed embedding parameters");
    }
    if (embedding_copies != 1 && embedding_copies != 2) {
        throw InvariantError("model shape: embedding_copies must be 1 or 2");
    }
}

std::uint64_t predict_params(const ModelShape& shape_before, std::uint64_t new_vocab_size) {
    shape_before.validate();
    std::uint64_t backbone =
        shape_before.total_params -
        shape_before.vocab_size * shape_before.hidden_dim * shape_before.embedding_copies;
    return backbone + new_vocab_size * shape_before.hidden_dim * shape_before.embedding_copies;
}

}  // namespace vs
