#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vs {

enum class SpecialKind { kPad, kUnk, kCls, kSep, kMask };

const char* to_string(SpecialKind kind);
std::optional<SpecialKind> special_kind_from_string(std::string_view s);

struct SpecialToken {
    std::string piece;
    std::uint32_t id = 0;
    SpecialKind kind = SpecialKind::kUnk;

    friend bool operator==(const SpecialToken&, const SpecialToken&) = default;
};

struct Normalization {
    bool nfkc = true;
    bool lowercase = false;

    friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct TokenSequence {
    std::vector<std::uint32_t> ids;
    std::vector<std::string> pieces;

    std::size_t size() const { return ids.size(); }
    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

struct Segmentation {
    std::vector<std::uint32_t> ids;
    double score = 0.0;
};

/// SentencePiece-style Unigram vocabulary. Immutable once built; every
/// operation below is a pure function of (input, *this).
///
/// Ids cover 0..size()-1: specials sit at their declared ids and scored
/// pieces fill the remaining ids in piece order.
class UnigramVocab {
public:
    /// Word-boundary marker (U+2581).
    static constexpr const char* kDefaultMetaspace = "\xE2\x96\x81";

    /// Log-prob charged per emitted UNK during segmentation; low enough that
    /// any real lattice path beats any path with fewer UNKs.
    static constexpr double kUnkScore = -1.0e7;

    UnigramVocab(std::vector<std::pair<std::string, double>> pieces,
                 std::vector<SpecialToken> specials,
                 Normalization normalization = {},
                 std::string metaspace = kDefaultMetaspace);

    /// The conventional special set: [PAD]=0 [UNK]=1 [CLS]=2 [SEP]=3 [MASK]=4.
    static std::vector<SpecialToken> standard_specials();

    std::size_t size() const { return by_id_.size(); }
    std::size_t piece_count() const { return pieces_.size(); }
    const std::vector<std::pair<std::string, double>>& pieces() const { return pieces_; }
    const std::vector<SpecialToken>& specials() const { return specials_; }
    const Normalization& normalization() const { return normalization_; }
    const std::string& metaspace() const { return metaspace_; }
    std::size_t max_piece_codepoints() const { return max_piece_codepoints_; }

    /// Piece string for any id, specials included.
    const std::string& piece(std::uint32_t id) const;
    /// Log-prob for a scored piece id; throws for special ids.
    double logp(std::uint32_t id) const;
    bool is_special(std::uint32_t id) const;

    std::optional<std::uint32_t> find(std::string_view piece) const;
    std::uint32_t unk_id() const { return unk_id_; }
    std::optional<std::uint32_t> special_id(SpecialKind kind) const;

    std::string normalize(std::string_view text) const;

    /// Whitespace split of already-normalized text, metaspace prepended to
    /// each word. Whitespace itself is dropped.
    std::vector<std::string> pretokenize(std::string_view normalized) const;

    /// Max-score segmentation of one non-empty word-unit. Uncovered
    /// code-point runs emit one UNK each. Ties break by fewer pieces, then
    /// lexicographically smallest piece sequence.
    Segmentation viterbi_segment(std::string_view word) const;

    TokenSequence encode(std::string_view text, bool add_specials) const;

    /// Inverse of encode up to normalization and whitespace collapsing.
    std::string decode(const std::vector<std::uint32_t>& ids) const;

    std::string save() const;
    static UnigramVocab load(std::string_view json_text);

    friend bool operator==(const UnigramVocab& a, const UnigramVocab& b) {
        return a.pieces_ == b.pieces_ && a.specials_ == b.specials_ &&
               a.normalization_ == b.normalization_ && a.metaspace_ == b.metaspace_;
    }

private:
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::vector<std::pair<std::string, double>> pieces_;
    std::vector<SpecialToken> specials_;
    Normalization normalization_;
    std::string metaspace_;

    // id -> (piece string, scored-piece index or npos for specials)
    struct Entry {
        const std::string* piece;
        std::uint32_t piece_index;  // UINT32_MAX for specials
        static constexpr std::uint32_t kSpecial = UINT32_MAX;
    };
    std::vector<Entry> by_id_;
    std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> id_by_piece_;
    std::uint32_t unk_id_ = 0;
    std::size_t max_piece_codepoints_ = 0;
};

}  // namespace vs
