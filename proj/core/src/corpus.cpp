#include "vocab_surgeon/corpus.hpp"

#include <cmath>

#include "vocab_surgeon/error.hpp"
#include "vocab_surgeon/unicode.hpp"

namespace vs {

namespace {

// Byte length of the UTF-8 sequence whose final byte sits at `end - 1`.
// Returns 0 if the tail is not a well-formed sequence start.
std::size_t last_codepoint_start(std::string_view s) {
    std::size_t i = s.size();
    while (i > 0) {
        i--;
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) return i;
        if (s.size() - i >= 4) break;  // malformed, give up
    }
    return s.size();
}

}  // namespace

std::string_view trim_trailing_whitespace(std::string_view text) {
    while (!text.empty()) {
        std::size_t start = last_codepoint_start(text);
        if (start >= text.size()) break;
        std::string_view tail = text.substr(start);
        std::size_t invalid = unicode::find_invalid_utf8(tail).value_or(tail.size());
        if (invalid != tail.size()) break;
        auto cps = unicode::decode_utf8(tail);
        if (cps.size() != 1 || !unicode::is_whitespace(cps[0])) break;
        text = text.substr(0, start);
    }
    return text;
}

DocumentReader::DocumentReader(std::istream& in, DocFormat format)
    : in_(in), format_(format) {}

std::optional<std::string> DocumentReader::read_raw() {
    if (format_ == DocFormat::kOnePerLine) {
        std::string line;
        while (std::getline(in_, line)) {
            std::size_t consumed = line.size() + (in_.eof() ? 0 : 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (auto bad = unicode::find_invalid_utf8(line)) {
                throw InputFormatError("invalid UTF-8 sequence at byte offset " +
                                       std::to_string(byte_offset_ + *bad));
            }
            byte_offset_ += consumed;
            if (!line.empty()) return line;
        }
        return std::nullopt;
    }
    // Blank-line-separated: accumulate lines until a blank line or EOF.
    std::string doc;
    std::string line;
    bool any = false;
    while (std::getline(in_, line)) {
        std::size_t consumed = line.size() + (in_.eof() ? 0 : 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (auto bad = unicode::find_invalid_utf8(line)) {
            throw InputFormatError("invalid UTF-8 sequence at byte offset " +
                                   std::to_string(byte_offset_ + *bad));
        }
        byte_offset_ += consumed;
        if (line.empty()) {
            if (any) return doc;
            continue;  // leading or repeated blank lines
        }
        if (any) doc.push_back('\n');
        doc += line;
        any = true;
    }
    if (any) return doc;
    return std::nullopt;
}

std::optional<Document> DocumentReader::next() {
    auto raw = read_raw();
    if (!raw) return std::nullopt;
    return Document{next_id_++, std::move(*raw)};
}

std::vector<Document> read_all_documents(std::istream& in, DocFormat format) {
    DocumentReader reader(in, format);
    std::vector<Document> docs;
    while (auto doc = reader.next()) docs.push_back(std::move(*doc));
    return docs;
}

bool Deduper::insert(std::string_view text) {
    Hash128 h = murmur3_128(trim_trailing_whitespace(text));
    if (seen_.insert(h).second) return true;
    duplicates_++;
    return false;
}

std::vector<Document> dedup(const std::vector<Document>& docs) {
    Deduper deduper;
    std::vector<Document> out;
    for (const auto& doc : docs) {
        if (deduper.insert(doc.text)) out.push_back(doc);
    }
    return out;
}

void SplitAssignment::validate() const {
    for (double f : {train_frac, valid_frac, test_frac}) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw InvariantError("split fractions must lie in [0,1]");
        }
    }
    if (std::fabs(train_frac + valid_frac + test_frac - 1.0) > 1e-9) {
        throw InvariantError("split fractions must sum to 1");
    }
}

const char* to_string(SplitLabel label) {
    switch (label) {
        case SplitLabel::kTrain: return "train";
        case SplitLabel::kValid: return "valid";
        case SplitLabel::kTest: return "test";
    }
    return "?";
}

SplitLabel assign_split(std::string_view text, const SplitAssignment& a) {
    std::uint64_t h = murmur3_64(text, a.seed);
    // Map to [0,1) with 53 bits so the double is exact.
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < a.test_frac) return SplitLabel::kTest;
    if (u < a.test_frac + a.valid_frac) return SplitLabel::kValid;
    return SplitLabel::kTrain;
}

std::uint64_t count_words(std::string_view text) {
    std::uint64_t words = 0;
    bool in_word = false;
    for (unicode::Codepoint cp : unicode::decode_utf8(text)) {
        bool ws = unicode::is_whitespace(cp);
        if (!ws && !in_word) words++;
        in_word = !ws;
    }
    return words;
}

std::uint64_t count_words(const std::vector<Document>& docs) {
    std::uint64_t total = 0;
    for (const auto& doc : docs) total += count_words(doc.text);
    return total;
}

}  // namespace vs
