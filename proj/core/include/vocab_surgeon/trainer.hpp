#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vocab_surgeon/corpus.hpp"
#include "vocab_surgeon/unigram.hpp"

namespace vs {

struct TrainerConfig {
    std::uint32_t target_size = 32000;  // scored pieces, specials excluded
    std::uint32_t seed_size = 0;        // 0 means 10 * target_size
    std::uint32_t max_piece_len = 16;   // code points
    double shrink_factor = 0.75;
    unsigned em_iters_per_round = 2;
    double min_logp_floor = -20.0;
    Normalization normalization{};
    std::string metaspace = UnigramVocab::kDefaultMetaspace;
    unsigned threads = 1;

    std::uint32_t effective_seed_size() const {
        return seed_size == 0 ? target_size * 10 : seed_size;
    }

    /// Throws InvariantError on out-of-range fields.
    void validate() const;
};

struct LatticeStats {
    /// Indexed by scored-piece index (UnigramVocab::pieces() order).
    std::vector<double> expected_counts;
    /// Corpus log-likelihood under the parameters the E-step saw.
    double corpus_loglik = 0.0;
    /// Words whose lattice had no UNK-free path.
    std::uint64_t uncovered_words = 0;
};

/// Distinct word-units with frequencies, in first-occurrence order. EM and
/// pruning cost scales with distinct words, not corpus size.
struct WordCounts {
    std::vector<std::pair<std::string, std::uint64_t>> words;

    std::uint64_t total_words() const;
};

WordCounts collect_word_counts(const std::vector<Document>& docs, const Normalization& norm,
                               const std::string& metaspace = UnigramVocab::kDefaultMetaspace);

/// All observed single code points plus the most frequent word-internal
/// substrings, capped at seed_size pieces.
UnigramVocab seed_vocab(const WordCounts& words, const TrainerConfig& cfg);
UnigramVocab seed_vocab(const std::vector<Document>& docs, const TrainerConfig& cfg);

/// One EM sweep: forward-backward expected counts (E) and log-prob refresh
/// (M). The returned log-likelihood is measured under the input parameters.
std::pair<UnigramVocab, LatticeStats> em_step(const WordCounts& words, const UnigramVocab& vocab,
                                              unsigned threads = 1);
std::pair<UnigramVocab, LatticeStats> em_step(const std::vector<Document>& docs,
                                              const UnigramVocab& vocab, unsigned threads = 1);

/// Drops the multi-code-point pieces whose removal costs the least corpus
/// log-likelihood, down to max(target, shrink_factor * current). Single code
/// points and specials survive unconditionally.
UnigramVocab prune_round(const WordCounts& words, const UnigramVocab& vocab,
                         const TrainerConfig& cfg);
UnigramVocab prune_round(const std::vector<Document>& docs, const UnigramVocab& vocab,
                         const TrainerConfig& cfg);

using TrainProgressFn =
    std::function<void(unsigned round, std::size_t vocab_size, double loglik)>;

/// Full training loop: seed, then alternate EM sweeps and prune rounds until
/// exactly target_size scored pieces remain.
UnigramVocab train(const std::vector<Document>& docs, const TrainerConfig& cfg,
                   const TrainProgressFn& progress = nullptr);

}  // namespace vs
