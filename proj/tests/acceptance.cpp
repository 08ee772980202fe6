// Acceptance suite: one pass/fail line per criterion, exit 0 only when all
// criteria hold. Runs offline against the bundled sample corpus.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include <unistd.h>

#include "vocab_surgeon/corpus.hpp"
#include "vocab_surgeon/metrics.hpp"
#include "vocab_surgeon/surgery.hpp"
#include "vocab_surgeon/tensorio.hpp"
#include "vocab_surgeon/trainer.hpp"
#include "vocab_surgeon/unicode.hpp"
#include "vocab_surgeon/unigram.hpp"

namespace fs = std::filesystem;
using namespace vs;

namespace {

const std::string MS = "\xE2\x96\x81";

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) g_failures++;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<Document> load_sample_corpus() {
    std::ifstream in(VS_SAMPLE_CORPUS, std::ios::binary);
    return read_all_documents(in, DocFormat::kOnePerLine);
}

std::vector<Document> make_docs(const std::vector<std::string>& texts) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < texts.size(); i++) docs.push_back({i, texts[i]});
    return docs;
}

// ---------------------------------------------------------------------------
// 1. Parameter arithmetic against the reference model sizes.

void criterion_1() {
    ModelShape shape;
    shape.total_params = 279'000'000;
    shape.vocab_size = 250'000;
    shape.hidden_dim = 768;
    shape.embedding_copies = 1;

    auto tuned = predict_params(shape, 32'000);
    auto pruned = predict_params(shape, 169'000);
    double tuned_err = std::abs(double(tuned) - 110e6) / 110e6;
    double pruned_err = std::abs(double(pruned) - 215e6) / 215e6;

    std::ostringstream d;
    d << "32K -> " << tuned << " (err " << tuned_err * 100 << "%), 169K -> " << pruned
      << " (err " << pruned_err * 100 << "%)";
    report(1, "predicted parameter counts within 2% of reference sizes",
           tuned_err < 0.02 && pruned_err < 0.02, d.str());
}

// ---------------------------------------------------------------------------
// 2. Vocabulary retention ratio.

void criterion_2() {
    double retention = 169'000.0 / 250'000.0 * 100.0;
    report(2, "169K/250K retention within 1pp of 67%", std::abs(retention - 67.0) < 1.0,
           "retention " + std::to_string(retention) + "%");
}

// ---------------------------------------------------------------------------
// 3. Pruning preserves segmentations on the sample corpus.

void criterion_3() {
    auto docs = load_sample_corpus();
    std::vector<Document> train_docs(docs.begin(), docs.begin() + std::min<std::size_t>(docs.size(), 2000));

    TrainerConfig cfg;
    cfg.target_size = 200;
    cfg.seed_size = 1200;
    cfg.normalization = {false, false};
    cfg.threads = 4;
    auto vocab = train(train_docs, cfg);

    auto counts = collect_usage(docs, vocab, 4);
    auto result = prune(vocab, counts, MinOccurrences{1});

    bool ids_match = true;
    for (const auto& doc : docs) {
        auto original = vocab.encode(doc.text, false).ids;
        auto translated = result.vocab.encode(doc.text, false).ids;
        if (translated.size() != original.size()) {
            ids_match = false;
            break;
        }
        for (std::size_t i = 0; i < translated.size(); i++) {
            if (result.id_map.new_to_old[translated[i]] != original[i]) {
                ids_match = false;
                break;
            }
        }
        if (!ids_match) break;
    }
    double tpw_before = tokens_per_word(docs, vocab);
    double tpw_after = tokens_per_word(docs, result.vocab);

    std::ostringstream d;
    d << "kept " << result.id_map.new_size << "/" << result.id_map.old_size
      << " ids, tokens-per-word " << tpw_before << " == " << tpw_after;
    report(3, "prune + re-encode yields identical id sequences and bit-equal tokens-per-word",
           ids_match && tpw_before == tpw_after, d.str());
}

// ---------------------------------------------------------------------------
// 4. Viterbi equals exhaustive enumeration on a toy vocabulary.

struct OracleBest {
    double score = -std::numeric_limits<double>::infinity();
    std::vector<std::string> pieces;
    bool set = false;
};

bool oracle_better(double score, const std::vector<std::string>& pieces, const OracleBest& best) {
    if (!best.set) return true;
    if (score != best.score) return score > best.score;
    if (pieces.size() != best.pieces.size()) return pieces.size() < best.pieces.size();
    return pieces < best.pieces;
}

void oracle_recurse(const UnigramVocab& v, const std::vector<std::uint32_t>& cps,
                    std::size_t pos, std::vector<std::string>& prefix, double score,
                    OracleBest& best) {
    if (pos == cps.size()) {
        // Merge adjacent UNK emissions, then recompute the score.
        std::vector<std::string> merged;
        const std::string& unk = v.piece(v.unk_id());
        for (const auto& p : prefix) {
            if (p == unk && !merged.empty() && merged.back() == unk) continue;
            merged.push_back(p);
        }
        double s = 0.0;
        for (const auto& p : merged) {
            if (p == unk) s += UnigramVocab::kUnkScore;
            else s += v.logp(*v.find(p));
        }
        if (oracle_better(s, merged, best)) {
            best.score = s;
            best.pieces = merged;
            best.set = true;
        }
        return;
    }
    std::string piece;
    for (std::size_t end = pos; end < cps.size(); end++) {
        unicode::append_utf8(piece, cps[end]);
        if (auto id = v.find(piece); id && !v.is_special(*id)) {
            prefix.push_back(piece);
            oracle_recurse(v, cps, end + 1, prefix, score, best);
            prefix.pop_back();
        }
    }
    // Single-code-point UNK edge.
    prefix.push_back(v.piece(v.unk_id()));
    oracle_recurse(v, cps, pos + 1, prefix, score, best);
    prefix.pop_back();
}

void criterion_4() {
    UnigramVocab v({{MS, -2.25}, {"a", -1.0}, {"b", -1.25}, {"ab", -1.75}, {"ba", -1.75},
                    {"bb", -2.0}, {MS + "a", -1.5}, {MS + "ab", -2.5}},
                   UnigramVocab::standard_specials(), {false, false});

    std::uint64_t cases = 0, mismatches = 0;
    for (int len = 1; len <= 12; len++) {
        for (std::uint64_t bits = 0; bits < (1ull << len); bits++) {
            std::string word = MS;
            for (int i = 0; i < len; i++) word += (bits >> i) & 1 ? 'b' : 'a';
            auto got = v.viterbi_segment(word);

            auto cps = unicode::decode_utf8(word);
            OracleBest best;
            std::vector<std::string> prefix;
            oracle_recurse(v, cps, 0, prefix, 0.0, best);

            std::vector<std::string> got_pieces;
            for (auto id : got.ids) got_pieces.push_back(v.piece(id));
            cases++;
            if (got.score != best.score || got_pieces != best.pieces) mismatches++;
        }
    }
    report(4, "Viterbi matches exhaustive enumeration with tie-breaks on all strings <= 12",
           mismatches == 0, std::to_string(cases) + " cases, " + std::to_string(mismatches) +
                                " mismatches");
}

// ---------------------------------------------------------------------------
// 5. Embedding transfer properties over randomized trials.

void criterion_5() {
    std::mt19937 rng(501);
    std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; trial++) {
        EmbeddingMatrix m;
        m.rows = 100;
        m.cols = 16;
        m.data.resize(100 * 16);
        for (float& x : m.data) x = dist(rng);

        TransferPlan plan;
        for (int i = 0; i < 30; i++) {
            int kind = rng() % 3;
            TransferDirective d;
            if (kind == 0) {
                d.kind = TransferDirective::Kind::kCopy;
                d.old_id = rng() % 100;
            } else if (kind == 1) {
                d.kind = TransferDirective::Kind::kMeanInit;
            } else {
                d.kind = TransferDirective::Kind::kSubtokenAvg;
                int n = 1 + int(rng() % 5);
                for (int j = 0; j < n; j++) d.subtoken_ids.push_back(rng() % 100);
            }
            plan.directives.push_back(std::move(d));
        }
        auto out = apply_transfer(plan, m);

        // Independent column mean, summed in reverse order.
        std::vector<double> mean(16, 0.0);
        for (std::uint64_t r = m.rows; r-- > 0;) {
            for (int c = 0; c < 16; c++) mean[c] += m.row(r)[c];
        }
        for (int c = 0; c < 16; c++) mean[c] /= double(m.rows);

        for (std::size_t i = 0; i < plan.directives.size() && ok; i++) {
            const auto& d = plan.directives[i];
            for (int c = 0; c < 16 && ok; c++) {
                float got = out.row(i)[c];
                if (d.kind == TransferDirective::Kind::kCopy) {
                    std::uint32_t a, b;
                    std::memcpy(&a, &got, 4);
                    float src = m.row(d.old_id)[c];
                    std::memcpy(&b, &src, 4);
                    ok = a == b;
                } else {
                    double want;
                    if (d.kind == TransferDirective::Kind::kMeanInit) {
                        want = mean[c];
                    } else {
                        double acc = 0.0;
                        for (auto id : d.subtoken_ids) acc += m.row(id)[c];
                        want = acc / double(d.subtoken_ids.size());
                    }
                    double denom = std::max(std::abs(want), 1.0);
                    ok = std::abs(double(got) - want) / denom < 1e-6;
                }
            }
        }
    }
    report(5, "transfer copies bit-identical, mean and sub-token rows within 1e-6", ok,
           "1000 randomized 100x16 trials");
}

// ---------------------------------------------------------------------------
// 6. EM log-likelihood is non-decreasing on three corpus families.

bool em_monotone(const std::vector<Document>& docs, const std::string& label,
                 std::string& detail) {
    TrainerConfig cfg;
    cfg.target_size = 50;
    cfg.seed_size = 400;
    cfg.normalization = {false, false};
    auto words = collect_word_counts(docs, cfg.normalization);
    auto vocab = seed_vocab(words, cfg);

    double prev = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 10; iter++) {
        auto [next, stats] = em_step(words, vocab);
        if (iter > 0 && stats.corpus_loglik < prev - 1e-9 * std::abs(prev)) {
            detail = label + ": decreased at iter " + std::to_string(iter) + " (" +
                     std::to_string(prev) + " -> " + std::to_string(stats.corpus_loglik) + ")";
            return false;
        }
        prev = stats.corpus_loglik;
        vocab = std::move(next);
    }
    return true;
}

void criterion_6() {
    std::mt19937 rng(601);
    auto random_word = [&](int len) {
        std::string w;
        for (int i = 0; i < len; i++) w += static_cast<char>('a' + rng() % 6);
        return w;
    };

    // Uniform: 200 distinct words, one occurrence each.
    std::vector<std::string> uniform_lines;
    for (int i = 0; i < 200; i++) uniform_lines.push_back(random_word(3 + int(rng() % 5)));

    // Zipfian: 100 word types, frequency ~ 1/rank.
    std::vector<std::string> zipf_types;
    for (int i = 0; i < 100; i++) zipf_types.push_back(random_word(3 + int(rng() % 5)));
    std::vector<std::string> zipf_lines;
    for (int rank = 0; rank < 100; rank++) {
        int freq = std::max(1, 200 / (rank + 1));
        for (int k = 0; k < freq; k++) zipf_lines.push_back(zipf_types[rank]);
    }

    // Concatenative morphology: stems x suffixes.
    std::vector<std::string> stems, suffixes = {"", "de", "le", "st", "mine", "ga"};
    for (int i = 0; i < 30; i++) stems.push_back(random_word(3));
    std::vector<std::string> morph_lines;
    for (const auto& stem : stems) {
        for (const auto& suffix : suffixes) morph_lines.push_back(stem + suffix);
    }

    std::string detail = "uniform, zipfian, morphology corpora x 10 iterations";
    bool ok = em_monotone(make_docs(uniform_lines), "uniform", detail) &&
              em_monotone(make_docs(zipf_lines), "zipfian", detail) &&
              em_monotone(make_docs(morph_lines), "morphology", detail);
    report(6, "EM log-likelihood non-decreasing (rel tol 1e-9)", ok, detail);
}

// ---------------------------------------------------------------------------
// 7. Trained vocabulary beats the single-character baseline.

void criterion_7() {
    std::mt19937 rng(701);
    std::vector<std::string> stems;
    for (int i = 0; i < 100; i++) {
        std::string s;
        for (int j = 0; j < 3 + int(rng() % 3); j++) s += static_cast<char>('a' + rng() % 10);
        stems.push_back(s);
    }
    std::vector<std::string> suffixes = {"",     "de",  "le",   "st",  "ga",  "ni",  "ta",
                                         "sse",  "des", "tele", "mine", "mise", "nud", "tud",
                                         "vad",  "sid", "gi",   "na",  "lt",  "lle"};
    std::vector<std::string> lines;
    for (int d = 0; d < 2000; d++) {
        std::string line;
        for (int w = 0; w < 8; w++) {
            if (w) line += ' ';
            line += stems[rng() % stems.size()] + suffixes[rng() % suffixes.size()];
        }
        lines.push_back(line);
    }
    auto docs = make_docs(lines);

    TrainerConfig cfg;
    cfg.target_size = 500;
    cfg.seed_size = 3000;
    cfg.normalization = {false, false};
    cfg.threads = 4;
    auto trained = train(docs, cfg);

    // Baseline: every observed code point as its own piece, uniform logp.
    std::set<std::string> singles{MS};
    for (const auto& line : lines) {
        for (char c : line) {
            if (c != ' ') singles.insert(std::string(1, c));
        }
    }
    std::vector<std::pair<std::string, double>> baseline_pieces;
    for (const auto& s : singles) {
        baseline_pieces.emplace_back(s, -std::log(double(singles.size())));
    }
    UnigramVocab baseline(std::move(baseline_pieces), UnigramVocab::standard_specials(),
                          {false, false});

    double trained_tpw = tokens_per_word(docs, trained);
    double baseline_tpw = tokens_per_word(docs, baseline);
    std::ostringstream d;
    d << "trained " << trained_tpw << " vs character baseline " << baseline_tpw;
    report(7, "trained 500-piece vocabulary lowers tokens-per-word vs character baseline",
           trained_tpw < baseline_tpw, d.str());
}

// ---------------------------------------------------------------------------
// 8. Bit-exact serialization round trips.

void criterion_8() {
    std::mt19937_64 rng(801);
    bool ok = true;

    for (int trial = 0; trial < 500 && ok; trial++) {
        // Random vocabulary with random finite non-positive log-probs.
        std::vector<std::pair<std::string, double>> pieces;
        std::set<std::string> used;
        int n = 2 + int(rng() % 30);
        std::uniform_real_distribution<double> logp_dist(-25.0, 0.0);
        while (int(pieces.size()) < n) {
            std::string piece;
            int len = 1 + int(rng() % 6);
            for (int i = 0; i < len; i++) piece += static_cast<char>('a' + rng() % 26);
            if (!used.insert(piece).second) continue;
            pieces.emplace_back(piece, logp_dist(rng));
        }
        UnigramVocab v(std::move(pieces), UnigramVocab::standard_specials(), {false, false});
        auto json = v.save();
        auto back = UnigramVocab::load(json);
        ok = back == v && back.save() == json;
    }

    for (int trial = 0; trial < 500 && ok; trial++) {
        EmbeddingMatrix m;
        m.rows = 1 + rng() % 8;
        m.cols = 1 + rng() % 8;
        for (std::uint64_t i = 0; i < m.rows * m.cols; i++) {
            float x;
            do {
                std::uint32_t bits = std::uint32_t(rng());
                switch (rng() % 4) {
                    case 0: bits = (bits & 0x807FFFFFu); break;  // subnormal or zero
                    case 1: bits = 0x80000000u; break;           // negative zero
                    default: break;
                }
                std::memcpy(&x, &bits, 4);
            } while (!std::isfinite(x));
            m.data.push_back(x);
        }
        std::ostringstream buf(std::ios::binary);
        write_matrix(m, buf);
        std::istringstream in(buf.str(), std::ios::binary);
        auto back = read_matrix(in);
        ok = back.rows == m.rows && back.cols == m.cols &&
             std::memcmp(back.data.data(), m.data.data(), m.data.size() * 4) == 0;
        if (ok) {
            std::ostringstream buf2(std::ios::binary);
            write_matrix(back, buf2);
            ok = buf2.str() == buf.str();
        }
    }
    report(8, "tokenizer JSON and matrix binary round-trips bit-exact", ok,
           "1000 randomized instances incl subnormals and negative zero");
}

// ---------------------------------------------------------------------------
// 9. CLI determinism across runs and thread counts.

int run_cli(const std::string& args) {
    std::string cmd = std::string(VS_CLI_PATH) + " " + args + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_9() {
    auto dir = fs::temp_directory_path() / ("vs_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto corpus = (dir / "corpus.txt").string();

    {
        auto docs = load_sample_corpus();
        std::ofstream out(corpus, std::ios::binary);
        for (std::size_t i = 0; i < std::min<std::size_t>(docs.size(), 1500); i++) {
            out << docs[i].text << "\n";
        }
    }

    bool ok = true;
    std::string why;
    auto p = [&](const std::string& name) { return (dir / name).string(); };

    struct Step {
        std::string label;
        std::string a, b;  // two command lines whose outputs must match
        std::vector<std::string> outputs_a, outputs_b;
    };
    std::vector<Step> steps;
    std::string train_common = "train --corpus " + corpus +
                               " --vocab-size 120 --seed-size 700 ";
    steps.push_back({"train repeat",
                     train_common + "--threads 4 -o " + p("tok_a.json"),
                     train_common + "--threads 4 -o " + p("tok_b.json"),
                     {p("tok_a.json")},
                     {p("tok_b.json")}});
    steps.push_back({"train threads 1 vs 8",
                     train_common + "--threads 1 -o " + p("tok_t1.json"),
                     train_common + "--threads 8 -o " + p("tok_t8.json"),
                     {p("tok_t1.json")},
                     {p("tok_t8.json")}});
    std::string stats_common = "stats --tokenizer " + p("tok_a.json") + " --corpus " + corpus + " ";
    steps.push_back({"stats threads 1 vs 8",
                     stats_common + "--threads 1 -o " + p("counts_t1.json"),
                     stats_common + "--threads 8 -o " + p("counts_t8.json"),
                     {p("counts_t1.json")},
                     {p("counts_t8.json")}});
    std::string prune_common = "prune --tokenizer " + p("tok_a.json") + " --counts " +
                               p("counts_t1.json") + " ";
    steps.push_back({"prune repeat",
                     prune_common + "--id-map " + p("map_a.json") + " -o " + p("pruned_a.json"),
                     prune_common + "--id-map " + p("map_b.json") + " -o " + p("pruned_b.json"),
                     {p("pruned_a.json"), p("map_a.json")},
                     {p("pruned_b.json"), p("map_b.json")}});
    std::string split_common = "split --corpus " + corpus + " --valid-frac 0.1 --test-frac 0.1 ";
    steps.push_back({"split repeat",
                     split_common + "-o " + p("sa"),
                     split_common + "-o " + p("sb"),
                     {p("sa.train.txt"), p("sa.valid.txt"), p("sa.test.txt")},
                     {p("sb.train.txt"), p("sb.valid.txt"), p("sb.test.txt")}});

    for (const auto& step : steps) {
        if (run_cli(step.a) != 0 || run_cli(step.b) != 0) {
            ok = false;
            why = step.label + ": command failed";
            break;
        }
        for (std::size_t i = 0; i < step.outputs_a.size(); i++) {
            if (slurp(step.outputs_a[i]) != slurp(step.outputs_b[i])) {
                ok = false;
                why = step.label + ": outputs differ";
                break;
            }
        }
        if (!ok) break;
    }
    fs::remove_all(dir);
    report(9, "train/stats/prune/split byte-identical across runs and thread counts", ok, why);
}

}  // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    auto dt = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0);
    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(g_failures))
              << " (" << dt.count() << "s)\n";
    return g_failures == 0 ? 0 : 1;
}
