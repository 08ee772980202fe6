#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "vocab_surgeon/corpus.hpp"
#include "vocab_surgeon/tensorio.hpp"
#include "vocab_surgeon/unigram.hpp"

namespace vs {

/// Per-id occurrence statistics over a reference corpus.
struct UsageCounts {
    std::vector<std::uint64_t> token_occurrences;
    std::vector<std::uint64_t> doc_occurrences;
    std::uint64_t total_docs = 0;
    std::uint64_t total_tokens = 0;
    std::string vocab_fingerprint;  // hex murmur3 of the tokenizer file

    /// Throws InvariantError if the per-id arrays disagree with the vocab
    /// size or the internal consistency bounds fail.
    void validate(std::size_t vocab_size) const;

    std::string save() const;
    static UsageCounts load(std::string_view json_text);
};

/// Old-id -> new-id mapping with order preserved on kept ids.
struct TokenIdMap {
    static constexpr std::uint32_t kDropped = UINT32_MAX;

    std::vector<std::uint32_t> old_to_new;  // kDropped for removed ids
    std::vector<std::uint32_t> new_to_old;
    std::uint32_t old_size = 0;
    std::uint32_t new_size = 0;

    std::string save() const;
    static TokenIdMap load(std::string_view json_text);
};

struct MinOccurrences {
    std::uint64_t k = 1;
};
struct MinDocFraction {
    double fraction = 0.0005;
};
using PrunePolicy = std::variant<MinOccurrences, MinDocFraction>;

/// Encodes every document without specials and tallies per-id counts.
/// Specials get doc_occurrences = total_docs so no policy can drop them.
UsageCounts collect_usage(const std::vector<Document>& docs, const UnigramVocab& vocab,
                          unsigned threads = 1);

struct PruneResult {
    UnigramVocab vocab;
    TokenIdMap id_map;
};

/// Keeps specials plus every id passing the policy; ids compacted in order,
/// surviving log-probs untouched (so segmentations on the statistics corpus
/// are preserved exactly).
PruneResult prune(const UnigramVocab& vocab, const UsageCounts& counts,
                  const PrunePolicy& policy);

/// Gathers embedding rows into the new id order.
EmbeddingMatrix remap_embeddings(const EmbeddingMatrix& emb, const TokenIdMap& map);

enum class TransferInit { kMean, kFvt };

struct TransferDirective {
    enum class Kind { kCopy, kMeanInit, kSubtokenAvg } kind = Kind::kMeanInit;
    std::uint32_t old_id = 0;                 // kCopy
    std::vector<std::uint32_t> subtoken_ids;  // kSubtokenAvg
};

struct TransferPlan {
    std::vector<TransferDirective> directives;  // one per new id
    // New ids where FVT fell back to mean init (piece unsegmentable under
    // the old vocab).
    std::vector<std::uint32_t> fvt_fallbacks;
};

TransferPlan build_transfer_plan(const UnigramVocab& old_vocab, const UnigramVocab& new_vocab,
                                 TransferInit init);

/// Copy rows bit-identical; mean rows are the column-wise mean of the whole
/// old matrix (include_specials_in_mean=false drops special rows from it);
/// subtoken rows average the listed old rows. Means accumulate in double.
EmbeddingMatrix apply_transfer(const TransferPlan& plan, const EmbeddingMatrix& old_emb,
                               const std::vector<std::uint32_t>& special_old_ids = {},
                               bool include_specials_in_mean = true);

}  // namespace vs
