#include "vocab_surgeon/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "vocab_surgeon/error.hpp"
#include "vocab_surgeon/unicode.hpp"

namespace vs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = std::max(a, b);
    double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

std::string normalize_text(std::string_view text, const Normalization& norm) {
    std::string out(text);
    if (norm.nfkc) out = unicode::nfkc(out);
    if (norm.lowercase) out = unicode::lowercase(out);
    return out;
}

std::vector<std::string> split_words(std::string_view normalized, const std::string& metaspace) {
    std::vector<std::string> words;
    std::string current;
    for (unicode::Codepoint cp : unicode::decode_utf8(normalized)) {
        if (unicode::is_whitespace(cp)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            if (current.empty()) current = metaspace;
            unicode::append_utf8(current, cp);
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::vector<std::size_t> codepoint_offsets(std::string_view word) {
    std::vector<std::size_t> offsets{0};
    std::size_t pos = 0;
    for (unicode::Codepoint cp : unicode::decode_utf8(word)) {
        std::string tmp;
        unicode::append_utf8(tmp, cp);
        pos += tmp.size();
        offsets.push_back(pos);
    }
    return offsets;
}

struct Edge {
    std::uint32_t start;         // code-point index
    std::uint32_t end;
    std::uint32_t piece_id;
    std::uint32_t piece_index;   // scored-piece index
    double logp;
};

// Real-piece edges of the word's segmentation lattice, in (start, end) order.
std::vector<Edge> lattice_edges(const UnigramVocab& vocab, std::string_view word,
                                const std::vector<std::size_t>& offsets) {
    std::vector<Edge> edges;
    const std::size_t n = offsets.size() - 1;
    const std::size_t max_len = vocab.max_piece_codepoints();
    for (std::size_t start = 0; start < n; start++) {
        for (std::size_t end = start + 1; end <= std::min(n, start + max_len); end++) {
            std::string_view candidate =
                word.substr(offsets[start], offsets[end] - offsets[start]);
            auto id = vocab.find(candidate);
            if (!id || vocab.is_special(*id)) continue;
            std::uint32_t piece_index = 0;
            // Recover the scored-piece index from the piece list order.
            // find() gives the id; map ids to indices once per vocab below.
            edges.push_back({static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(end),
                             *id, piece_index, vocab.logp(*id)});
        }
    }
    return edges;
}

// Maps every scored id to its index in vocab.pieces().
std::unordered_map<std::uint32_t, std::uint32_t> scored_index_by_id(const UnigramVocab& vocab) {
    std::unordered_map<std::uint32_t, std::uint32_t> out;
    for (std::uint32_t index = 0; index < vocab.pieces().size(); index++) {
        auto id = vocab.find(vocab.pieces()[index].first);
        out.emplace(*id, index);
    }
    return out;
}

// Best lattice score with one piece banned; UNK edges keep it finite.
double viterbi_score_banned(const UnigramVocab& vocab, std::string_view word,
                            const std::vector<std::size_t>& offsets,
                            const std::vector<Edge>& edges, std::uint32_t banned_id) {
    const std::size_t n = offsets.size() - 1;
    std::vector<double> best(n + 1, kNegInf);
    best[0] = 0.0;
    std::vector<std::vector<const Edge*>> by_start(n);
    for (const Edge& e : edges) by_start[e.start].push_back(&e);
    for (std::size_t start = 0; start < n; start++) {
        if (best[start] == kNegInf) continue;
        for (const Edge* e : by_start[start]) {
            if (e->piece_id == banned_id) continue;
            best[e->end] = std::max(best[e->end], best[start] + e->logp);
        }
        best[start + 1] = std::max(best[start + 1], best[start] + UnigramVocab::kUnkScore);
    }
    return best[n];
}

struct WordStats {
    std::unordered_map<std::uint32_t, double> expected;  // scored-piece index -> count
    double loglik = kNegInf;
    bool covered = true;
};

WordStats forward_backward(const UnigramVocab& vocab, std::string_view word,
                           const std::unordered_map<std::uint32_t, std::uint32_t>& index_by_id) {
    WordStats stats;
    auto offsets = codepoint_offsets(word);
    const std::size_t n = offsets.size() - 1;
    auto edges = lattice_edges(vocab, word, offsets);
    for (Edge& e : edges) e.piece_index = index_by_id.at(e.piece_id);

    std::vector<std::vector<const Edge*>> by_end(n + 1), by_start(n + 1);
    for (const Edge& e : edges) {
        by_end[e.end].push_back(&e);
        by_start[e.start].push_back(&e);
    }

    // Coverage: is there a real-edge path 0 -> n?
    {
        std::vector<bool> reach(n + 1, false);
        reach[0] = true;
        for (std::size_t start = 0; start < n; start++) {
            if (!reach[start]) continue;
            for (const Edge* e : by_start[start]) reach[e->end] = true;
        }
        stats.covered = reach[n];
    }

    // Forward/backward in log space; UNK edges cover gaps with a penalty so
    // the recursion never hits -inf.
    std::vector<double> alpha(n + 1, kNegInf), beta(n + 1, kNegInf);
    alpha[0] = 0.0;
    for (std::size_t end = 1; end <= n; end++) {
        double acc = alpha[end - 1] + UnigramVocab::kUnkScore;
        for (const Edge* e : by_end[end]) acc = log_add(acc, alpha[e->start] + e->logp);
        alpha[end] = acc;
    }
    beta[n] = 0.0;
    for (std::size_t start = n; start-- > 0;) {
        double acc = beta[start + 1] + UnigramVocab::kUnkScore;
        for (const Edge* e : by_start[start]) acc = log_add(acc, e->logp + beta[e->end]);
        beta[start] = acc;
    }
    stats.loglik = alpha[n];

    for (const Edge& e : edges) {
        double posterior = std::exp(alpha[e.start] + e.logp + beta[e.end] - alpha[n]);
        if (posterior > 0.0) stats.expected[e.piece_index] += posterior;
    }
    return stats;
}

}  // namespace

void TrainerConfig::validate() const {
    if (target_size == 0) throw InvariantError("target_size must be positive");
    if (max_piece_len == 0) throw InvariantError("max_piece_len must be positive");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) {
        throw InvariantError("shrink_factor must lie in (0,1)");
    }
    if (em_iters_per_round == 0) throw InvariantError("em_iters_per_round must be positive");
    if (!std::isfinite(min_logp_floor)) throw InvariantError("min_logp_floor must be finite");
    if (effective_seed_size() < target_size) {
        throw InvariantError("seed_size must be at least target_size");
    }
}

std::uint64_t WordCounts::total_words() const {
    std::uint64_t total = 0;
    for (const auto& [word, freq] : words) total += freq;
    return total;
}

WordCounts collect_word_counts(const std::vector<Document>& docs, const Normalization& norm,
                               const std::string& metaspace) {
    WordCounts counts;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& doc : docs) {
        for (auto& word : split_words(normalize_text(doc.text, norm), metaspace)) {
            auto [it, inserted] = index.emplace(word, counts.words.size());
            if (inserted) {
                counts.words.emplace_back(std::move(word), 1);
            } else {
                counts.words[it->second].second++;
            }
        }
    }
    return counts;
}

UnigramVocab seed_vocab(const WordCounts& words, const TrainerConfig& cfg) {
    cfg.validate();
    if (words.words.empty()) throw InvariantError("corpus has no words");

    // Exact substring counting within word-units. Scales with distinct
    // words; adequate for corpora that fit in memory.
    std::unordered_map<std::string, std::uint64_t> substr_counts;
    for (const auto& [word, freq] : words.words) {
        auto offsets = codepoint_offsets(word);
        const std::size_t n = offsets.size() - 1;
        for (std::size_t start = 0; start < n; start++) {
            for (std::size_t end = start + 1; end <= std::min(n, start + cfg.max_piece_len);
                 end++) {
                substr_counts[std::string(
                    word.substr(offsets[start], offsets[end] - offsets[start]))] += freq;
            }
        }
    }

    std::vector<std::pair<std::string, std::uint64_t>> singles, multis;
    for (auto& [piece, count] : substr_counts) {
        if (unicode::codepoint_count(piece) == 1) {
            singles.emplace_back(piece, count);
        } else {
            multis.emplace_back(piece, count);
        }
    }
    auto by_count_then_piece = [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    std::sort(singles.begin(), singles.end(), by_count_then_piece);
    std::sort(multis.begin(), multis.end(), by_count_then_piece);

    const std::size_t seed_size = cfg.effective_seed_size();
    if (singles.size() > seed_size) {
        throw InvariantError("seed_size smaller than the corpus alphabet (" +
                             std::to_string(singles.size()) + " single code points)");
    }
    std::vector<std::pair<std::string, std::uint64_t>> selected = singles;
    for (const auto& entry : multis) {
        if (selected.size() >= seed_size) break;
        selected.push_back(entry);
    }
    std::sort(selected.begin(), selected.end(), by_count_then_piece);

    std::uint64_t total = 0;
    for (const auto& [piece, count] : selected) total += count;
    std::vector<std::pair<std::string, double>> pieces;
    pieces.reserve(selected.size());
    for (const auto& [piece, count] : selected) {
        double logp = std::log(static_cast<double>(count) / static_cast<double>(total));
        pieces.emplace_back(piece, std::max(logp, cfg.min_logp_floor));
    }
    return UnigramVocab(std::move(pieces), UnigramVocab::standard_specials(), cfg.normalization,
                        cfg.metaspace);
}

UnigramVocab seed_vocab(const std::vector<Document>& docs, const TrainerConfig& cfg) {
    return seed_vocab(collect_word_counts(docs, cfg.normalization, cfg.metaspace), cfg);
}

std::pair<UnigramVocab, LatticeStats> em_step(const WordCounts& words, const UnigramVocab& vocab,
                                              unsigned threads) {
    const std::size_t piece_count = vocab.pieces().size();
    auto index_by_id = scored_index_by_id(vocab);

    LatticeStats stats;
    stats.expected_counts.assign(piece_count, 0.0);

    // Fixed chunking with in-order merge keeps the floating-point reduction
    // independent of the thread count.
    constexpr std::size_t kChunk = 64;
    const std::size_t nchunks = (words.words.size() + kChunk - 1) / kChunk;
    struct Partial {
        std::map<std::uint32_t, double> expected;
        double loglik = 0.0;
        std::uint64_t uncovered = 0;
    };
    std::vector<Partial> partials(nchunks);

    auto process_chunk = [&](std::size_t chunk) {
        Partial& p = partials[chunk];
        const std::size_t begin = chunk * kChunk;
        const std::size_t end = std::min(begin + kChunk, words.words.size());
        for (std::size_t i = begin; i < end; i++) {
            const auto& [word, freq] = words.words[i];
            WordStats ws = forward_backward(vocab, word, index_by_id);
            double f = static_cast<double>(freq);
            for (const auto& [index, count] : ws.expected) p.expected[index] += f * count;
            p.loglik += f * ws.loglik;
            if (!ws.covered) p.uncovered++;
        }
    };

    if (threads <= 1 || nchunks <= 1) {
        for (std::size_t c = 0; c < nchunks; c++) process_chunk(c);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (unsigned t = 0; t < threads; t++) {
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1)) {
                    process_chunk(c);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    for (const Partial& p : partials) {
        for (const auto& [index, count] : p.expected) stats.expected_counts[index] += count;
        stats.corpus_loglik += p.loglik;
        stats.uncovered_words += p.uncovered;
    }

    // M-step: renormalize; zero-count survivors land on the floor.
    double total = 0.0;
    for (double c : stats.expected_counts) total += c;
    std::vector<std::pair<std::string, double>> new_pieces;
    new_pieces.reserve(piece_count);
    // Reuse the seed floor default; callers tuning the floor rebuild via
    // TrainerConfig in train().
    constexpr double kFloor = -20.0;
    for (std::size_t i = 0; i < piece_count; i++) {
        double logp = stats.expected_counts[i] > 0.0 && total > 0.0
                          ? std::log(stats.expected_counts[i] / total)
                          : kFloor;
        new_pieces.emplace_back(vocab.pieces()[i].first, std::max(logp, kFloor));
    }
    UnigramVocab updated(std::move(new_pieces), vocab.specials(), vocab.normalization(),
                         vocab.metaspace());
    return {std::move(updated), std::move(stats)};
}

std::pair<UnigramVocab, LatticeStats> em_step(const std::vector<Document>& docs,
                                              const UnigramVocab& vocab, unsigned threads) {
    return em_step(collect_word_counts(docs, vocab.normalization(), vocab.metaspace()), vocab,
                   threads);
}

UnigramVocab prune_round(const WordCounts& words, const UnigramVocab& vocab,
                         const TrainerConfig& cfg) {
    const std::size_t piece_count = vocab.pieces().size();
    if (piece_count <= cfg.target_size) return vocab;

    // Likelihood loss of removing each multi-code-point piece, measured on
    // the Viterbi paths where it actually appears.
    std::unordered_map<std::uint32_t, double> loss_by_id;
    for (const auto& [word, freq] : words.words) {
        Segmentation seg = vocab.viterbi_segment(word);
        auto offsets = codepoint_offsets(word);
        auto edges = lattice_edges(vocab, word, offsets);
        std::vector<std::uint32_t> distinct;
        for (std::uint32_t id : seg.ids) {
            if (id == vocab.unk_id() || vocab.is_special(id)) continue;
            if (unicode::codepoint_count(vocab.piece(id)) <= 1) continue;
            if (std::find(distinct.begin(), distinct.end(), id) == distinct.end()) {
                distinct.push_back(id);
            }
        }
        for (std::uint32_t id : distinct) {
            double alt = viterbi_score_banned(vocab, word, offsets, edges, id);
            loss_by_id[id] += static_cast<double>(freq) * (seg.score - alt);
        }
    }

    std::vector<std::pair<std::string, double>> candidates;  // piece, loss
    std::size_t single_count = 0;
    for (const auto& [piece, logp] : vocab.pieces()) {
        if (unicode::codepoint_count(piece) <= 1) {
            single_count++;
            continue;
        }
        auto id = vocab.find(piece);
        auto it = loss_by_id.find(*id);
        candidates.emplace_back(piece, it == loss_by_id.end() ? 0.0 : it->second);
    }

    std::size_t shrink_target = static_cast<std::size_t>(
        std::ceil(cfg.shrink_factor * static_cast<double>(piece_count)));
    // Rounding may make the shrink a no-op; always make progress.
    shrink_target = std::min(shrink_target, piece_count - 1);
    const std::size_t next_size = std::max<std::size_t>(cfg.target_size, shrink_target);
    std::size_t to_drop = piece_count - next_size;
    if (to_drop > candidates.size()) {
        throw InvariantError("cannot reach target_size: only " +
                             std::to_string(single_count) +
                             " single code points plus " + std::to_string(candidates.size()) +
                             " droppable pieces");
    }

    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    std::unordered_set<std::string> dropped;
    for (std::size_t i = 0; i < to_drop; i++) dropped.insert(candidates[i].first);

    std::vector<std::pair<std::string, double>> kept;
    kept.reserve(piece_count - to_drop);
    for (const auto& entry : vocab.pieces()) {
        if (!dropped.contains(entry.first)) kept.push_back(entry);
    }
    return UnigramVocab(std::move(kept), vocab.specials(), vocab.normalization(),
                        vocab.metaspace());
}

UnigramVocab prune_round(const std::vector<Document>& docs, const UnigramVocab& vocab,
                         const TrainerConfig& cfg) {
    return prune_round(collect_word_counts(docs, vocab.normalization(), vocab.metaspace()), vocab,
                       cfg);
}

UnigramVocab train(const std::vector<Document>& docs, const TrainerConfig& cfg,
                   const TrainProgressFn& progress) {
    cfg.validate();
    WordCounts words = collect_word_counts(docs, cfg.normalization, cfg.metaspace);
    if (words.words.empty()) throw InvariantError("corpus has no words");

    UnigramVocab vocab = seed_vocab(words, cfg);
    if (vocab.pieces().size() < cfg.target_size) {
        throw InvariantError("target_size " + std::to_string(cfg.target_size) +
                             " infeasible: the corpus yields only " +
                             std::to_string(vocab.pieces().size()) + " candidate pieces");
    }

    for (unsigned round = 0;; round++) {
        LatticeStats stats;
        for (unsigned i = 0; i < cfg.em_iters_per_round; i++) {
            auto [updated, s] = em_step(words, vocab, cfg.threads);
            vocab = std::move(updated);
            stats = std::move(s);
        }
        if (progress) progress(round, vocab.pieces().size(), stats.corpus_loglik);
        if (vocab.pieces().size() <= cfg.target_size) break;
        vocab = prune_round(words, vocab, cfg);
    }
    return vocab;
}

}  // namespace vs
