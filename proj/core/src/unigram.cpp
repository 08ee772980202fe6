#include "vocab_surgeon/unigram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "vocab_surgeon/error.hpp"
#include "vocab_surgeon/unicode.hpp"

namespace vs {

const char* to_string(SpecialKind kind) {
    switch (kind) {
        case SpecialKind::kPad: return "PAD";
        case SpecialKind::kUnk: return "UNK";
        case SpecialKind::kCls: return "CLS";
        case SpecialKind::kSep: return "SEP";
        case SpecialKind::kMask: return "MASK";
    }
    return "?";
}

std::optional<SpecialKind> special_kind_from_string(std::string_view s) {
    if (s == "PAD") return SpecialKind::kPad;
    if (s == "UNK") return SpecialKind::kUnk;
    if (s == "CLS") return SpecialKind::kCls;
    if (s == "SEP") return SpecialKind::kSep;
    if (s == "MASK") return SpecialKind::kMask;
    return std::nullopt;
}

UnigramVocab::UnigramVocab(std::vector<std::pair<std::string, double>> pieces,
                           std::vector<SpecialToken> specials,
                           Normalization normalization, std::string metaspace)
    : pieces_(std::move(pieces)),
      specials_(std::move(specials)),
      normalization_(normalization),
      metaspace_(std::move(metaspace)) {
    if (unicode::codepoint_count(metaspace_) != 1) {
        throw InvariantError("metaspace must be a single code point");
    }

    const std::size_t total = pieces_.size() + specials_.size();
    by_id_.assign(total, Entry{nullptr, 0});

    int unk_count = 0;
    for (const auto& sp : specials_) {
        if (sp.id >= total) {
            throw InvariantError("special id " + std::to_string(sp.id) +
                                 " out of range for vocab of size " + std::to_string(total));
        }
        if (by_id_[sp.id].piece != nullptr) {
            throw InvariantError("duplicate special id " + std::to_string(sp.id));
        }
        by_id_[sp.id] = Entry{&sp.piece, Entry::kSpecial};
        if (sp.kind == SpecialKind::kUnk) {
            unk_id_ = sp.id;
            unk_count++;
        }
    }
    if (unk_count != 1) {
        throw InvariantError("vocab must declare exactly one UNK special");
    }

    std::uint32_t next_id = 0;
    for (std::uint32_t i = 0; i < pieces_.size(); i++) {
        const auto& [piece, logp] = pieces_[i];
        if (piece.empty()) throw InvariantError("empty piece string");
        if (!std::isfinite(logp) || logp > 0.0) {
            throw InvariantError("piece '" + piece + "' has invalid log-prob (must be finite and <= 0)");
        }
        while (by_id_[next_id].piece != nullptr) next_id++;
        by_id_[next_id] = Entry{&piece, i};
        next_id++;
    }

    for (std::uint32_t id = 0; id < total; id++) {
        if (!id_by_piece_.emplace(*by_id_[id].piece, id).second) {
            throw InvariantError("duplicate piece '" + *by_id_[id].piece + "'");
        }
    }
    for (const auto& [piece, logp] : pieces_) {
        max_piece_codepoints_ = std::max(max_piece_codepoints_, unicode::codepoint_count(piece));
    }
}

std::vector<SpecialToken> UnigramVocab::standard_specials() {
    return {
        {"[PAD]", 0, SpecialKind::kPad},   {"[UNK]", 1, SpecialKind::kUnk},
        {"[CLS]", 2, SpecialKind::kCls},   {"[SEP]", 3, SpecialKind::kSep},
        {"[MASK]", 4, SpecialKind::kMask},
    };
}

const std::string& UnigramVocab::piece(std::uint32_t id) const {
    if (id >= by_id_.size()) {
        throw InvariantError("id " + std::to_string(id) + " out of range");
    }
    return *by_id_[id].piece;
}

double UnigramVocab::logp(std::uint32_t id) const {
    if (id >= by_id_.size() || by_id_[id].piece_index == Entry::kSpecial) {
        throw InvariantError("id " + std::to_string(id) + " is not a scored piece");
    }
    return pieces_[by_id_[id].piece_index].second;
}

bool UnigramVocab::is_special(std::uint32_t id) const {
    if (id >= by_id_.size()) {
        throw InvariantError("id " + std::to_string(id) + " out of range");
    }
    return by_id_[id].piece_index == Entry::kSpecial;
}

std::optional<std::uint32_t> UnigramVocab::find(std::string_view piece) const {
    auto it = id_by_piece_.find(piece);
    if (it == id_by_piece_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> UnigramVocab::special_id(SpecialKind kind) const {
    for (const auto& sp : specials_) {
        if (sp.kind == kind) return sp.id;
    }
    return std::nullopt;
}

std::string UnigramVocab::normalize(std::string_view text) const {
    std::string out(text);
    if (normalization_.nfkc) out = unicode::nfkc(out);
    if (normalization_.lowercase) out = unicode::lowercase(out);
    return out;
}

std::vector<std::string> UnigramVocab::pretokenize(std::string_view normalized) const {
    std::vector<std::string> words;
    std::string current;
    for (unicode::Codepoint cp : unicode::decode_utf8(normalized)) {
        if (unicode::is_whitespace(cp)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            if (current.empty()) current = metaspace_;
            unicode::append_utf8(current, cp);
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

namespace {

struct DpState {
    double score = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    std::vector<std::uint32_t> ids;
    bool reached = false;
};

// True if candidate (score, count, ids) beats the incumbent under the
// (max score, min count, lex-min piece sequence) order.
bool beats(const UnigramVocab& vocab, double score, std::size_t count,
           const std::vector<std::uint32_t>& ids, const DpState& incumbent) {
    if (!incumbent.reached) return true;
    if (score != incumbent.score) return score > incumbent.score;
    if (count != incumbent.count) return count < incumbent.count;
    std::size_t n = std::min(ids.size(), incumbent.ids.size());
    for (std::size_t i = 0; i < n; i++) {
        if (ids[i] == incumbent.ids[i]) continue;
        return vocab.piece(ids[i]) < vocab.piece(incumbent.ids[i]);
    }
    return false;
}

}  // namespace

Segmentation UnigramVocab::viterbi_segment(std::string_view word) const {
    if (word.empty()) throw InvariantError("cannot segment an empty word");

    // Code-point boundaries as byte offsets into `word`.
    std::vector<std::size_t> offsets{0};
    {
        std::size_t pos = 0;
        for (unicode::Codepoint cp : unicode::decode_utf8(word)) {
            std::string tmp;
            unicode::append_utf8(tmp, cp);
            pos += tmp.size();
            offsets.push_back(pos);
        }
    }
    const std::size_t n = offsets.size() - 1;

    std::vector<DpState> dp(n + 1);
    dp[0].reached = true;
    dp[0].score = 0.0;

    for (std::size_t end = 1; end <= n; end++) {
        for (std::size_t start = end >= max_piece_codepoints_ ? end - max_piece_codepoints_ : 0;
             start < end; start++) {
            if (!dp[start].reached) continue;
            std::string_view candidate =
                word.substr(offsets[start], offsets[end] - offsets[start]);
            auto id = find(candidate);
            if (!id || is_special(*id)) continue;
            double score = dp[start].score + logp(*id);
            std::size_t count = dp[start].count + 1;
            auto ids = dp[start].ids;
            ids.push_back(*id);
            if (beats(*this, score, count, ids, dp[end])) {
                dp[end] = DpState{score, count, std::move(ids), true};
            }
        }
        // UNK over a single code point; penalized enough that real paths
        // always win.
        if (dp[end - 1].reached) {
            double score = dp[end - 1].score + kUnkScore;
            std::size_t count = dp[end - 1].count + 1;
            auto ids = dp[end - 1].ids;
            ids.push_back(unk_id_);
            if (beats(*this, score, count, ids, dp[end])) {
                dp[end] = DpState{score, count, std::move(ids), true};
            }
        }
    }

    // Merge consecutive UNKs: one UNK per maximal uncovered run.
    Segmentation result;
    double score = 0.0;
    for (std::uint32_t id : dp[n].ids) {
        if (id == unk_id_ && !result.ids.empty() && result.ids.back() == unk_id_) continue;
        result.ids.push_back(id);
        score += (id == unk_id_) ? kUnkScore : logp(id);
    }
    result.score = score;
    return result;
}

TokenSequence UnigramVocab::encode(std::string_view text, bool add_specials) const {
    TokenSequence seq;
    auto push = [&](std::uint32_t id) {
        seq.ids.push_back(id);
        seq.pieces.push_back(piece(id));
    };

    auto cls = special_id(SpecialKind::kCls);
    auto sep = special_id(SpecialKind::kSep);
    if (add_specials && cls) push(*cls);
    for (const auto& word : pretokenize(normalize(text))) {
        for (std::uint32_t id : viterbi_segment(word).ids) push(id);
    }
    if (add_specials && sep) push(*sep);
    return seq;
}

std::string UnigramVocab::decode(const std::vector<std::uint32_t>& ids) const {
    std::string joined;
    for (std::size_t i = 0; i < ids.size(); i++) {
        if (ids[i] >= by_id_.size()) {
            throw InputFormatError("unknown id " + std::to_string(ids[i]) +
                                   " at position " + std::to_string(i));
        }
        if (is_special(ids[i])) continue;
        joined += piece(ids[i]);
    }
    // Each metaspace marks a word start; map it back to one space.
    std::string out;
    std::size_t pos = 0;
    while (pos < joined.size()) {
        if (joined.compare(pos, metaspace_.size(), metaspace_) == 0) {
            out.push_back(' ');
            pos += metaspace_.size();
        } else {
            out.push_back(joined[pos]);
            pos++;
        }
    }
    if (!out.empty() && out.front() == ' ') out.erase(out.begin());
    return out;
}

std::string UnigramVocab::save() const {
    nlohmann::ordered_json j;
    j["format"] = "vocab-surgeon/unigram/v1";
    j["normalization"] = {{"nfkc", normalization_.nfkc}, {"lowercase", normalization_.lowercase}};
    j["metaspace"] = metaspace_;
    auto& specials = j["specials"] = nlohmann::ordered_json::array();
    for (const auto& sp : specials_) {
        specials.push_back({{"piece", sp.piece}, {"id", sp.id}, {"kind", to_string(sp.kind)}});
    }
    auto& pieces = j["pieces"] = nlohmann::ordered_json::array();
    for (const auto& [piece, logp] : pieces_) {
        pieces.push_back(nlohmann::ordered_json::array({piece, logp}));
    }
    return j.dump() + "\n";
}

UnigramVocab UnigramVocab::load(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputFormatError(std::string("tokenizer file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", "") != "vocab-surgeon/unigram/v1") {
            throw InputFormatError("tokenizer file: missing or unsupported \"format\"");
        }
        Normalization norm;
        norm.nfkc = j.at("normalization").at("nfkc").get<bool>();
        norm.lowercase = j.at("normalization").at("lowercase").get<bool>();
        std::string metaspace = j.at("metaspace").get<std::string>();

        std::vector<SpecialToken> specials;
        for (const auto& sp : j.at("specials")) {
            auto kind = special_kind_from_string(sp.at("kind").get<std::string>());
            if (!kind) {
                throw InputFormatError("tokenizer file: unknown special kind \"" +
                                       sp.at("kind").get<std::string>() + "\"");
            }
            specials.push_back({sp.at("piece").get<std::string>(),
                                sp.at("id").get<std::uint32_t>(), *kind});
        }

        std::vector<std::pair<std::string, double>> pieces;
        for (const auto& entry : j.at("pieces")) {
            if (!entry.is_array() || entry.size() != 2) {
                throw InputFormatError("tokenizer file: each pieces entry must be [piece, logp]");
            }
            pieces.emplace_back(entry[0].get<std::string>(), entry[1].get<double>());
        }
        try {
            return UnigramVocab(std::move(pieces), std::move(specials), norm, std::move(metaspace));
        } catch (const InvariantError& e) {
            throw InputFormatError(std::string("tokenizer file: ") + e.what());
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputFormatError(std::string("tokenizer file: ") + e.what());
    }
}

}  // namespace vs
