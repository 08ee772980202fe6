#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "vocab_surgeon/hash.hpp"

namespace vs {

struct Document {
    std::uint64_t id = 0;
    std::string text;

    friend bool operator==(const Document&, const Document&) = default;
};

enum class DocFormat {
    kOnePerLine,
    kBlankSeparated,
};

/// Pulls documents off a text stream one at a time. Empty documents are
/// skipped; ids are consecutive from 0 over the documents actually yielded.
/// Invalid UTF-8 raises InputFormatError naming the absolute byte offset.
class DocumentReader {
public:
    DocumentReader(std::istream& in, DocFormat format);

    std::optional<Document> next();

private:
    std::optional<std::string> read_raw();

    std::istream& in_;
    DocFormat format_;
    std::uint64_t next_id_ = 0;
    std::uint64_t byte_offset_ = 0;
};

/// Reads the whole stream into memory. Convenience for tests and small inputs.
std::vector<Document> read_all_documents(std::istream& in, DocFormat format);

/// Exact-duplicate filter over document text, trailing whitespace trimmed
/// before hashing. First occurrence wins.
class Deduper {
public:
    /// True the first time this text (modulo trailing whitespace) is seen.
    bool insert(std::string_view text);

    std::uint64_t duplicates_seen() const { return duplicates_; }

private:
    std::unordered_set<Hash128, Hash128Hasher> seen_;
    std::uint64_t duplicates_ = 0;
};

std::vector<Document> dedup(const std::vector<Document>& docs);

struct SplitAssignment {
    double train_frac = 0.98;
    double valid_frac = 0.01;
    double test_frac = 0.01;
    std::uint64_t seed = 0;

    /// Throws InvariantError unless fractions are in [0,1] and sum to 1
    /// within 1e-9.
    void validate() const;
};

enum class SplitLabel { kTrain, kValid, kTest };

const char* to_string(SplitLabel label);

/// Deterministic assignment from (content hash, seed). Stable across runs,
/// machines, and corpus append.
SplitLabel assign_split(std::string_view text, const SplitAssignment& a);

/// Number of maximal non-whitespace code-point runs (Unicode whitespace).
std::uint64_t count_words(std::string_view text);
std::uint64_t count_words(const std::vector<Document>& docs);

/// Trailing-whitespace trim used by dedup hashing (ASCII + Unicode spaces
/// that end a valid UTF-8 string).
std::string_view trim_trailing_whitespace(std::string_view text);

}  // namespace vs
