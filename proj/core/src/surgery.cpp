#include "vocab_surgeon/surgery.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "vocab_surgeon/error.hpp"

namespace vs {

void UsageCounts::validate(std::size_t vocab_size) const {
    if (token_occurrences.size() != vocab_size || doc_occurrences.size() != vocab_size) {
        throw InvariantError("usage counts cover " + std::to_string(token_occurrences.size()) +
                             " ids but the vocab has " + std::to_string(vocab_size));
    }
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < token_occurrences.size(); i++) {
        sum += token_occurrences[i];
        if (doc_occurrences[i] > total_docs) {
            throw InvariantError("doc_occurrences exceeds total_docs at id " + std::to_string(i));
        }
    }
    if (sum != total_tokens) {
        throw InvariantError("token occurrence sum does not equal total_tokens");
    }
}

std::string UsageCounts::save() const {
    nlohmann::ordered_json j;
    j["vocab_fingerprint"] = vocab_fingerprint;
    j["total_docs"] = total_docs;
    j["total_tokens"] = total_tokens;
    auto& counts = j["counts"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < token_occurrences.size(); i++) {
        counts.push_back({token_occurrences[i], doc_occurrences[i]});
    }
    return j.dump() + "\n";
}

UsageCounts UsageCounts::load(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputFormatError(std::string("counts file is not valid JSON: ") + e.what());
    }
    UsageCounts counts;
    try {
        counts.vocab_fingerprint = j.at("vocab_fingerprint").get<std::string>();
        counts.total_docs = j.at("total_docs").get<std::uint64_t>();
        counts.total_tokens = j.at("total_tokens").get<std::uint64_t>();
        for (const auto& pair : j.at("counts")) {
            if (!pair.is_array() || pair.size() != 2) {
                throw InputFormatError("counts file: each entry must be [token_occ, doc_occ]");
            }
            counts.token_occurrences.push_back(pair[0].get<std::uint64_t>());
            counts.doc_occurrences.push_back(pair[1].get<std::uint64_t>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputFormatError(std::string("counts file: ") + e.what());
    }
    return counts;
}

std::string TokenIdMap::save() const {
    nlohmann::ordered_json j;
    j["old_size"] = old_size;
    j["new_size"] = new_size;
    j["new_to_old"] = new_to_old;
    return j.dump() + "\n";
}

TokenIdMap TokenIdMap::load(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputFormatError(std::string("id-map file is not valid JSON: ") + e.what());
    }
    TokenIdMap map;
    try {
        map.old_size = j.at("old_size").get<std::uint32_t>();
        map.new_size = j.at("new_size").get<std::uint32_t>();
        map.new_to_old = j.at("new_to_old").get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw InputFormatError(std::string("id-map file: ") + e.what());
    }
    if (map.new_to_old.size() != map.new_size) {
        throw InputFormatError("id-map file: new_to_old length does not equal new_size");
    }
    map.old_to_new.assign(map.old_size, kDropped);
    for (std::uint32_t new_id = 0; new_id < map.new_to_old.size(); new_id++) {
        std::uint32_t old_id = map.new_to_old[new_id];
        if (old_id >= map.old_size || map.old_to_new[old_id] != kDropped) {
            throw InputFormatError("id-map file: new_to_old is not injective into old ids");
        }
        map.old_to_new[old_id] = new_id;
    }
    return map;
}

UsageCounts collect_usage(const std::vector<Document>& docs, const UnigramVocab& vocab,
                          unsigned threads) {
    const std::size_t vocab_size = vocab.size();
    UsageCounts total;
    total.token_occurrences.assign(vocab_size, 0);
    total.doc_occurrences.assign(vocab_size, 0);
    total.total_docs = docs.size();

    // Fixed-size chunks merged in index order: the result does not depend
    // on the thread count.
    constexpr std::size_t kChunk = 256;
    const std::size_t nchunks = (docs.size() + kChunk - 1) / kChunk;
    if (threads == 0) threads = 1;

    struct Partial {
        std::vector<std::uint64_t> token_occ;
        std::vector<std::uint64_t> doc_occ;
        std::uint64_t tokens = 0;
    };
    std::vector<Partial> partials(nchunks);

    auto process_chunk = [&](std::size_t chunk) {
        Partial& p = partials[chunk];
        p.token_occ.assign(vocab_size, 0);
        p.doc_occ.assign(vocab_size, 0);
        std::vector<bool> seen(vocab_size);
        const std::size_t begin = chunk * kChunk;
        const std::size_t end = std::min(begin + kChunk, docs.size());
        for (std::size_t i = begin; i < end; i++) {
            std::fill(seen.begin(), seen.end(), false);
            TokenSequence seq = vocab.encode(docs[i].text, /*add_specials=*/false);
            for (std::uint32_t id : seq.ids) {
                p.token_occ[id]++;
                if (!seen[id]) {
                    seen[id] = true;
                    p.doc_occ[id]++;
                }
            }
            p.tokens += seq.ids.size();
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
        for (std::size_t i = 0; i < vocab_size; i++) {
            total.token_occurrences[i] += p.token_occ[i];
            total.doc_occurrences[i] += p.doc_occ[i];
        }
        total.total_tokens += p.tokens;
    }

    // Specials can never be pruned away.
    for (const auto& sp : vocab.specials()) {
        total.doc_occurrences[sp.id] = total.total_docs;
    }
    return total;
}

PruneResult prune(const UnigramVocab& vocab, const UsageCounts& counts,
                  const PrunePolicy& policy) {
    counts.validate(vocab.size());

    auto keeps = [&](std::uint32_t id) {
        if (vocab.is_special(id)) return true;
        if (const auto* min_occ = std::get_if<MinOccurrences>(&policy)) {
            return counts.token_occurrences[id] >= min_occ->k;
        }
        const auto& min_frac = std::get<MinDocFraction>(policy);
        if (!(min_frac.fraction > 0.0 && min_frac.fraction < 1.0)) {
            throw InvariantError("min-doc-frac policy requires a fraction in (0,1)");
        }
        auto threshold = static_cast<std::uint64_t>(
            std::ceil(min_frac.fraction * static_cast<double>(counts.total_docs)));
        return counts.doc_occurrences[id] >= threshold;
    };

    TokenIdMap map;
    map.old_size = static_cast<std::uint32_t>(vocab.size());
    map.old_to_new.assign(vocab.size(), TokenIdMap::kDropped);
    for (std::uint32_t old_id = 0; old_id < vocab.size(); old_id++) {
        if (keeps(old_id)) {
            map.old_to_new[old_id] = static_cast<std::uint32_t>(map.new_to_old.size());
            map.new_to_old.push_back(old_id);
        }
    }
    map.new_size = static_cast<std::uint32_t>(map.new_to_old.size());

    // Rebuild the vocab: specials keep their kind at compacted ids, scored
    // pieces keep their logp unchanged.
    std::vector<SpecialToken> new_specials;
    std::vector<std::pair<std::string, double>> new_pieces;
    for (std::uint32_t new_id = 0; new_id < map.new_size; new_id++) {
        std::uint32_t old_id = map.new_to_old[new_id];
        if (vocab.is_special(old_id)) {
            for (const auto& sp : vocab.specials()) {
                if (sp.id == old_id) {
                    new_specials.push_back({sp.piece, new_id, sp.kind});
                    break;
                }
            }
        } else {
            new_pieces.emplace_back(vocab.piece(old_id), vocab.logp(old_id));
        }
    }
    UnigramVocab new_vocab(std::move(new_pieces), std::move(new_specials),
                           vocab.normalization(), vocab.metaspace());
    // The rebuild fills non-special ids in piece order, which matches the
    // compacted order above; double-check rather than assume.
    for (std::uint32_t new_id = 0; new_id < map.new_size; new_id++) {
        if (new_vocab.piece(new_id) != vocab.piece(map.new_to_old[new_id])) {
            throw InvariantError("pruned vocab id order diverged from the id map");
        }
    }
    return PruneResult{std::move(new_vocab), std::move(map)};
}

EmbeddingMatrix remap_embeddings(const EmbeddingMatrix& emb, const TokenIdMap& map) {
    if (emb.rows != map.old_size) {
        throw InvariantError("embedding matrix has " + std::to_string(emb.rows) +
                             " rows but the id map expects " + std::to_string(map.old_size));
    }
    EmbeddingMatrix out;
    out.rows = map.new_size;
    out.cols = emb.cols;
    out.data.resize(out.rows * out.cols);
    for (std::uint32_t new_id = 0; new_id < map.new_size; new_id++) {
        const float* src = emb.row(map.new_to_old[new_id]);
        std::copy(src, src + emb.cols, out.row(new_id));
    }
    return out;
}

TransferPlan build_transfer_plan(const UnigramVocab& old_vocab, const UnigramVocab& new_vocab,
                                 TransferInit init) {
    TransferPlan plan;
    plan.directives.resize(new_vocab.size());

    for (std::uint32_t new_id = 0; new_id < new_vocab.size(); new_id++) {
        TransferDirective& d = plan.directives[new_id];
        if (new_vocab.is_special(new_id)) {
            // Specials pair up by kind, not by surface string.
            SpecialKind kind = SpecialKind::kUnk;
            for (const auto& sp : new_vocab.specials()) {
                if (sp.id == new_id) kind = sp.kind;
            }
            if (auto old_id = old_vocab.special_id(kind)) {
                d = {TransferDirective::Kind::kCopy, *old_id, {}};
            } else {
                d = {TransferDirective::Kind::kMeanInit, 0, {}};
            }
            continue;
        }

        const std::string& piece = new_vocab.piece(new_id);
        if (auto old_id = old_vocab.find(piece); old_id && !old_vocab.is_special(*old_id)) {
            d = {TransferDirective::Kind::kCopy, *old_id, {}};
            continue;
        }
        if (init == TransferInit::kMean) {
            d = {TransferDirective::Kind::kMeanInit, 0, {}};
            continue;
        }
        // FVT: average the embeddings of the piece's segmentation under the
        // old tokenizer. UNK-only segmentations have no usable sub-tokens.
        Segmentation seg = old_vocab.viterbi_segment(piece);
        std::vector<std::uint32_t> subtokens;
        for (std::uint32_t id : seg.ids) {
            if (id != old_vocab.unk_id()) subtokens.push_back(id);
        }
        if (subtokens.empty()) {
            d = {TransferDirective::Kind::kMeanInit, 0, {}};
            plan.fvt_fallbacks.push_back(new_id);
        } else {
            d = {TransferDirective::Kind::kSubtokenAvg, 0, std::move(subtokens)};
        }
    }
    return plan;
}

EmbeddingMatrix apply_transfer(const TransferPlan& plan, const EmbeddingMatrix& old_emb,
                               const std::vector<std::uint32_t>& special_old_ids,
                               bool include_specials_in_mean) {
    old_emb.validate();
    const std::uint64_t cols = old_emb.cols;

    std::unordered_set<std::uint32_t> excluded;
    if (!include_specials_in_mean) {
        excluded.insert(special_old_ids.begin(), special_old_ids.end());
    }

    std::vector<double> mean(cols, 0.0);
    std::uint64_t mean_rows = 0;
    for (std::uint64_t r = 0; r < old_emb.rows; r++) {
        if (excluded.contains(static_cast<std::uint32_t>(r))) continue;
        const float* row = old_emb.row(r);
        for (std::uint64_t c = 0; c < cols; c++) mean[c] += row[c];
        mean_rows++;
    }
    if (mean_rows == 0) throw InvariantError("mean init has no source rows");
    for (double& v : mean) v /= static_cast<double>(mean_rows);

    EmbeddingMatrix out;
    out.rows = plan.directives.size();
    out.cols = cols;
    out.data.resize(out.rows * cols);

    for (std::uint64_t new_id = 0; new_id < out.rows; new_id++) {
        const TransferDirective& d = plan.directives[new_id];
        float* dst = out.row(new_id);
        switch (d.kind) {
            case TransferDirective::Kind::kCopy: {
                if (d.old_id >= old_emb.rows) {
                    throw InvariantError("transfer plan references old id " +
                                         std::to_string(d.old_id) + " beyond matrix rows");
                }
                const float* src = old_emb.row(d.old_id);
                std::copy(src, src + cols, dst);
                break;
            }
            case TransferDirective::Kind::kMeanInit: {
                for (std::uint64_t c = 0; c < cols; c++) dst[c] = static_cast<float>(mean[c]);
                break;
            }
            case TransferDirective::Kind::kSubtokenAvg: {
                std::vector<double> acc(cols, 0.0);
                for (std::uint32_t old_id : d.subtoken_ids) {
                    if (old_id >= old_emb.rows) {
                        throw InvariantError("transfer plan references old id " +
                                             std::to_string(old_id) + " beyond matrix rows");
                    }
                    const float* src = old_emb.row(old_id);
                    for (std::uint64_t c = 0; c < cols; c++) acc[c] += src[c];
                }
                for (std::uint64_t c = 0; c < cols; c++) {
                    dst[c] = static_cast<float>(acc[c] / static_cast<double>(d.subtoken_ids.size()));
                }
                break;
            }
        }
    }
    return out;
}

}  // namespace vs
