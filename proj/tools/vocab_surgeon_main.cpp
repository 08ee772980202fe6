// vocab-surgeon: adapt a Unigram tokenizer and its embedding matrix to a
// target language corpus, and report the resulting efficiency metrics.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "vocab_surgeon/corpus.hpp"
#include "vocab_surgeon/error.hpp"
#include "vocab_surgeon/hash.hpp"
#include "vocab_surgeon/metrics.hpp"
#include "vocab_surgeon/surgery.hpp"
#include "vocab_surgeon/tensorio.hpp"
#include "vocab_surgeon/trainer.hpp"
#include "vocab_surgeon/unigram.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInputFormat = 2;
constexpr int kExitInvariant = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw vs::InputFormatError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// All outputs go through temp-file-plus-rename so a failure never leaves a
// partial file behind.
void atomic_write(const std::string& path, const std::string& content) {
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw vs::InputFormatError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw vs::InputFormatError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw vs::InputFormatError("cannot rename into place: " + path);
    }
}

vs::DocFormat parse_doc_format(const std::string& s) {
    if (s == "line") return vs::DocFormat::kOnePerLine;
    if (s == "blank") return vs::DocFormat::kBlankSeparated;
    throw vs::InputFormatError("unknown --doc-format '" + s + "' (expected line|blank)");
}

std::vector<vs::Document> load_corpus(const std::string& path, vs::DocFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw vs::InputFormatError("cannot open: " + path);
    return vs::read_all_documents(in, format);
}

std::string render_corpus(const std::vector<vs::Document>& docs, vs::DocFormat format) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); i++) {
        if (format == vs::DocFormat::kBlankSeparated && i > 0) out += "\n";
        out += docs[i].text;
        out += "\n";
    }
    return out;
}

unsigned default_threads() {
    if (const char* env = std::getenv("VOCAB_SURGEON_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

vs::ModelShape parse_model_shape(const std::string& spec) {
    vs::ModelShape shape;
    bool have_total = false, have_vocab = false, have_dim = false;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos) {
            throw vs::InputFormatError("bad --model-shape component '" + part +
                                       "' (expected key=value)");
        }
        std::string key = part.substr(0, eq);
        std::uint64_t value = std::stoull(part.substr(eq + 1));
        if (key == "total") { shape.total_params = value; have_total = true; }
        else if (key == "vocab") { shape.vocab_size = value; have_vocab = true; }
        else if (key == "dim") { shape.hidden_dim = value; have_dim = true; }
        else if (key == "copies") { shape.embedding_copies = value; }
        else throw vs::InputFormatError("unknown --model-shape key '" + key + "'");
    }
    if (!have_total || !have_vocab || !have_dim) {
        throw vs::InputFormatError("--model-shape needs total=, vocab=, and dim=");
    }
    return shape;
}

vs::PrunePolicy parse_policy(const std::string& spec) {
    auto eq = spec.find('=');
    std::string name = spec.substr(0, eq == std::string::npos ? spec.size() : eq);
    std::string value = eq == std::string::npos ? "" : spec.substr(eq + 1);
    if (name == "min-occ") {
        std::uint64_t k = value.empty() ? 1 : std::stoull(value);
        if (k < 1) throw vs::InputFormatError("min-occ requires k >= 1");
        return vs::MinOccurrences{k};
    }
    if (name == "min-doc-frac") {
        double f = value.empty() ? 0.0005 : std::stod(value);
        return vs::MinDocFraction{f};
    }
    throw vs::InputFormatError("unknown --policy '" + spec +
                               "' (expected min-occ=K or min-doc-frac=F)");
}

int run(int argc, char** argv) {
    CLI::App app{"vocab-surgeon: tokenizer and embedding-matrix adaptation toolkit"};
    app.require_subcommand(1);

    std::string corpus_path, doc_format_flag = "line", out_path;
    std::string tokenizer_path, counts_path, id_map_path, embeddings_path;
    std::string old_tokenizer_path, new_tokenizer_path, old_embeddings_path;
    unsigned threads = default_threads();

    // dedup
    auto* cmd_dedup = app.add_subcommand("dedup", "Drop exact-duplicate documents");
    cmd_dedup->add_option("--corpus", corpus_path, "Input corpus")->required();
    cmd_dedup->add_option("--doc-format", doc_format_flag, "line|blank");
    cmd_dedup->add_option("-o,--output", out_path, "Output corpus")->required();

    // split
    auto* cmd_split = app.add_subcommand("split", "Deterministic train/valid/test split");
    double valid_frac = 0.01, test_frac = 0.01;
    std::uint64_t seed = 0;
    cmd_split->add_option("--corpus", corpus_path, "Input corpus")->required();
    cmd_split->add_option("--doc-format", doc_format_flag, "line|blank");
    cmd_split->add_option("--valid-frac", valid_frac, "Validation fraction");
    cmd_split->add_option("--test-frac", test_frac, "Test fraction");
    cmd_split->add_option("--seed", seed, "Split hash seed");
    cmd_split->add_option("-o,--output", out_path, "Output prefix")->required();

    // train
    auto* cmd_train = app.add_subcommand("train", "Train a Unigram tokenizer");
    vs::TrainerConfig train_cfg;
    cmd_train->add_option("--corpus", corpus_path, "Training corpus")->required();
    cmd_train->add_option("--doc-format", doc_format_flag, "line|blank");
    cmd_train->add_option("--vocab-size", train_cfg.target_size,
                          "Final piece count, specials excluded");
    cmd_train->add_option("--seed-size", train_cfg.seed_size,
                          "Seed vocabulary size (default 10x vocab-size)");
    cmd_train->add_option("--max-piece-len", train_cfg.max_piece_len, "Max piece code points");
    cmd_train->add_option("--shrink", train_cfg.shrink_factor, "Prune-round shrink factor");
    cmd_train->add_option("--em-iters", train_cfg.em_iters_per_round, "EM sweeps per round");
    cmd_train->add_option("--threads", threads, "Worker threads");
    cmd_train->add_option("-o,--output", out_path, "Tokenizer JSON output")->required();

    // stats
    auto* cmd_stats = app.add_subcommand("stats", "Token usage statistics over a corpus");
    cmd_stats->add_option("--tokenizer", tokenizer_path, "Tokenizer JSON")->required();
    cmd_stats->add_option("--corpus", corpus_path, "Statistics corpus")->required();
    cmd_stats->add_option("--doc-format", doc_format_flag, "line|blank");
    cmd_stats->add_option("--threads", threads, "Worker threads");
    cmd_stats->add_option("-o,--output", out_path, "Counts JSON output")->required();

    // prune
    auto* cmd_prune = app.add_subcommand("prune", "Remove unused tokens, compact ids");
    std::string policy_flag = "min-occ=1";
    cmd_prune->add_option("--tokenizer", tokenizer_path, "Tokenizer JSON")->required();
    cmd_prune->add_option("--counts", counts_path, "Usage counts JSON")->required();
    cmd_prune->add_option("--policy", policy_flag, "min-occ=K or min-doc-frac=F");
    cmd_prune->add_option("--id-map", id_map_path, "Id map JSON output")->required();
    cmd_prune->add_option("-o,--output", out_path, "Pruned tokenizer output")->required();

    // remap-embeddings
    auto* cmd_remap = app.add_subcommand("remap-embeddings", "Gather embedding rows by id map");
    cmd_remap->add_option("--embeddings", embeddings_path, "Input matrix")->required();
    cmd_remap->add_option("--id-map", id_map_path, "Id map JSON")->required();
    cmd_remap->add_option("-o,--output", out_path, "Output matrix")->required();

    // transfer
    auto* cmd_transfer =
        app.add_subcommand("transfer", "Build a new embedding matrix for a new tokenizer");
    std::string init_flag = "mean";
    bool exclude_specials_from_mean = false;
    cmd_transfer->add_option("--old-tokenizer", old_tokenizer_path, "Source tokenizer")->required();
    cmd_transfer->add_option("--new-tokenizer", new_tokenizer_path, "Target tokenizer")->required();
    cmd_transfer->add_option("--old-embeddings", old_embeddings_path, "Source matrix")->required();
    cmd_transfer->add_option("--init", init_flag, "Initializer for new pieces: mean|fvt");
    cmd_transfer->add_flag("--exclude-specials-from-mean", exclude_specials_from_mean,
                           "Leave special rows out of the mean");
    cmd_transfer->add_option("-o,--output", out_path, "Output matrix")->required();

    // encode
    auto* cmd_encode = app.add_subcommand("encode", "Tokenize a corpus to JSON lines");
    bool add_specials = false;
    cmd_encode->add_option("--tokenizer", tokenizer_path, "Tokenizer JSON")->required();
    cmd_encode->add_option("--corpus", corpus_path, "Input corpus")->required();
    cmd_encode->add_option("--doc-format", doc_format_flag, "line|blank");
    cmd_encode->add_flag("--add-specials", add_specials, "Wrap documents with CLS/SEP");
    cmd_encode->add_option("-o,--output", out_path, "Output path (default stdout)");

    // report
    auto* cmd_report = app.add_subcommand("report", "Vocabulary and parameter efficiency report");
    std::string format_flag = "table", label = "model", model_shape_flag;
    cmd_report->add_option("--tokenizer", tokenizer_path, "Tokenizer JSON")->required();
    cmd_report->add_option("--embeddings", embeddings_path, "Embedding matrix (param count source)");
    cmd_report->add_option("--model-shape", model_shape_flag,
                           "total=N,vocab=N,dim=N[,copies=1|2]");
    cmd_report->add_option("--corpus", corpus_path, "Evaluation corpus")->required();
    cmd_report->add_option("--doc-format", doc_format_flag, "line|blank");
    cmd_report->add_option("--format", format_flag, "table|json|csv");
    cmd_report->add_option("--label", label, "Model label");
    cmd_report->add_option("-o,--output", out_path, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    if (*cmd_dedup) {
        auto docs = load_corpus(corpus_path, parse_doc_format(doc_format_flag));
        auto unique = vs::dedup(docs);
        atomic_write(out_path, render_corpus(unique, parse_doc_format(doc_format_flag)));
        std::cerr << "kept " << unique.size() << " of " << docs.size() << " documents\n";
    } else if (*cmd_split) {
        vs::SplitAssignment assignment;
        assignment.valid_frac = valid_frac;
        assignment.test_frac = test_frac;
        assignment.train_frac = 1.0 - valid_frac - test_frac;
        assignment.seed = seed;
        assignment.validate();
        auto format = parse_doc_format(doc_format_flag);
        auto docs = load_corpus(corpus_path, format);
        std::vector<vs::Document> train, valid, test;
        for (const auto& doc : docs) {
            switch (vs::assign_split(doc.text, assignment)) {
                case vs::SplitLabel::kTrain: train.push_back(doc); break;
                case vs::SplitLabel::kValid: valid.push_back(doc); break;
                case vs::SplitLabel::kTest: test.push_back(doc); break;
            }
        }
        atomic_write(out_path + ".train.txt", render_corpus(train, format));
        atomic_write(out_path + ".valid.txt", render_corpus(valid, format));
        atomic_write(out_path + ".test.txt", render_corpus(test, format));
        std::cerr << "train=" << train.size() << " valid=" << valid.size()
                  << " test=" << test.size() << "\n";
    } else if (*cmd_train) {
        train_cfg.threads = threads;
        auto docs = load_corpus(corpus_path, parse_doc_format(doc_format_flag));
        auto vocab = vs::train(docs, train_cfg,
                               [](unsigned round, std::size_t size, double loglik) {
                                   std::cerr << "round=" << round << " vocab=" << size
                                             << " loglik=" << loglik << "\n";
                               });
        atomic_write(out_path, vocab.save());
    } else if (*cmd_stats) {
        std::string tokenizer_bytes = read_file(tokenizer_path);
        auto vocab = vs::UnigramVocab::load(tokenizer_bytes);
        auto docs = load_corpus(corpus_path, parse_doc_format(doc_format_flag));
        auto counts = vs::collect_usage(docs, vocab, threads);
        counts.vocab_fingerprint = vs::to_hex(vs::murmur3_128(tokenizer_bytes));
        atomic_write(out_path, counts.save());
    } else if (*cmd_prune) {
        std::string tokenizer_bytes = read_file(tokenizer_path);
        auto vocab = vs::UnigramVocab::load(tokenizer_bytes);
        auto counts = vs::UsageCounts::load(read_file(counts_path));
        std::string fingerprint = vs::to_hex(vs::murmur3_128(tokenizer_bytes));
        if (counts.vocab_fingerprint != fingerprint) {
            throw vs::InvariantError("counts were collected against a different tokenizer file");
        }
        auto result = vs::prune(vocab, counts, parse_policy(policy_flag));
        atomic_write(out_path, result.vocab.save());
        atomic_write(id_map_path, result.id_map.save());
        std::cerr << "kept " << result.id_map.new_size << " of " << result.id_map.old_size
                  << " tokens\n";
    } else if (*cmd_remap) {
        auto emb = vs::read_matrix_file(embeddings_path);
        auto map = vs::TokenIdMap::load(read_file(id_map_path));
        auto out = vs::remap_embeddings(emb, map);
        std::ostringstream buf;
        vs::write_matrix(out, buf);
        atomic_write(out_path, buf.str());
    } else if (*cmd_transfer) {
        auto old_vocab = vs::UnigramVocab::load(read_file(old_tokenizer_path));
        auto new_vocab = vs::UnigramVocab::load(read_file(new_tokenizer_path));
        auto old_emb = vs::read_matrix_file(old_embeddings_path);
        vs::TransferInit init;
        if (init_flag == "mean") init = vs::TransferInit::kMean;
        else if (init_flag == "fvt") init = vs::TransferInit::kFvt;
        else throw vs::InputFormatError("unknown --init '" + init_flag + "' (expected mean|fvt)");
        auto plan = vs::build_transfer_plan(old_vocab, new_vocab, init);
        for (std::uint32_t new_id : plan.fvt_fallbacks) {
            std::cerr << "warning: piece '" << new_vocab.piece(new_id)
                      << "' has no sub-tokens under the old tokenizer; using mean init\n";
        }
        std::vector<std::uint32_t> special_ids;
        for (const auto& sp : old_vocab.specials()) special_ids.push_back(sp.id);
        auto out =
            vs::apply_transfer(plan, old_emb, special_ids, !exclude_specials_from_mean);
        std::ostringstream buf;
        vs::write_matrix(out, buf);
        atomic_write(out_path, buf.str());
    } else if (*cmd_encode) {
        auto vocab = vs::UnigramVocab::load(read_file(tokenizer_path));
        auto docs = load_corpus(corpus_path, parse_doc_format(doc_format_flag));
        std::string out;
        for (const auto& doc : docs) {
            auto seq = vocab.encode(doc.text, add_specials);
            out += "{\"ids\":[";
            for (std::size_t i = 0; i < seq.ids.size(); i++) {
                if (i) out += ",";
                out += std::to_string(seq.ids[i]);
            }
            out += "]}\n";
        }
        if (out_path.empty()) std::cout << out;
        else atomic_write(out_path, out);
    } else if (*cmd_report) {
        auto vocab = vs::UnigramVocab::load(read_file(tokenizer_path));
        auto docs = load_corpus(corpus_path, parse_doc_format(doc_format_flag));

        vs::EfficiencyReport report;
        report.model_label = label;
        report.vocab_size = vocab.size();
        report.corpus_label = fs::path(corpus_path).filename().string();
        report.tokens_per_word = vs::tokens_per_word(docs, vocab);
        if (!model_shape_flag.empty()) {
            report.predicted_params =
                vs::predict_params(parse_model_shape(model_shape_flag), vocab.size());
        } else if (!embeddings_path.empty()) {
            auto emb = vs::read_matrix_file(embeddings_path);
            report.predicted_params = emb.rows * emb.cols;
        }

        vs::ReportFormat format;
        if (format_flag == "table") format = vs::ReportFormat::kTable;
        else if (format_flag == "json") format = vs::ReportFormat::kJson;
        else if (format_flag == "csv") format = vs::ReportFormat::kCsv;
        else throw vs::InputFormatError("unknown --format '" + format_flag + "'");

        std::string text = vs::render_report({report}, format);
        if (out_path.empty()) std::cout << text;
        else atomic_write(out_path, text);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const vs::InputFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputFormat;
    } catch (const vs::InvariantError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
}
