#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace vs {

/// Dense row-major f32 matrix; one row per vocabulary id.
struct EmbeddingMatrix {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<float> data;  // rows * cols, row-major

    const float* row(std::uint64_t r) const { return data.data() + r * cols; }
    float* row(std::uint64_t r) { return data.data() + r * cols; }

    /// Throws InvariantError on shape/payload mismatch or non-finite values.
    void validate() const;

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

/// File layout: 8-byte little-endian header length H, then H bytes of UTF-8
/// JSON {"format":"vocab-surgeon/matrix/v1","rows":R,"cols":C,"dtype":"f32"},
/// then R*C*4 bytes of little-endian IEEE-754 binary32, row-major. Bit-exact
/// round trip, independent of host endianness.
void write_matrix(const EmbeddingMatrix& m, std::ostream& out);
EmbeddingMatrix read_matrix(std::istream& in);

void write_matrix_file(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix read_matrix_file(const std::string& path);

struct ModelShape {
    std::uint64_t total_params = 0;
    std::uint64_t vocab_size = 0;
    std::uint64_t hidden_dim = 0;
    std::uint64_t embedding_copies = 1;  // 2 when the output head is untied

    /// Throws InvariantError unless total_params > vocab * dim * copies.
    void validate() const;
};

/// Parameter count after swapping the embedding table for one sized
/// new_vocab_size; exact integer arithmetic.
std::uint64_t predict_params(const ModelShape& shape_before, std::uint64_t new_vocab_size);

}  // namespace vs
