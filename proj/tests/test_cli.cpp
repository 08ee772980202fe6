#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>

#include "vocab_surgeon/surgery.hpp"
#include "vocab_surgeon/tensorio.hpp"
#include "vocab_surgeon/unigram.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = VS_CLI_PATH;

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

fs::path scratch_dir() {
    static int counter = 0;
    auto dir = fs::temp_directory_path() / ("vs_cli_test_" + std::to_string(::getpid()) +
                                            "_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args) {
    auto dir = scratch_dir();
    auto out_file = dir / "stdout.txt";
    auto err_file = dir / "stderr.txt";
    std::string cmd = kCli + " " + args + " >" + out_file.string() + " 2>" + err_file.string();
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    fs::remove_all(dir);
    return r;
}

const std::string MS = "\xE2\x96\x81";

std::string tiny_tokenizer_json() {
    vs::UnigramVocab v({{MS, -3.0}, {"a", -1.5}, {"b", -1.5}, {MS + "ab", -1.0},
                        {MS + "unused", -1.0}},
                       vs::UnigramVocab::standard_specials(), {false, false});
    return v.save();
}

}  // namespace

TEST_CASE("help lists every subcommand and exits 0") {
    auto r = run_cli("--help");
    CHECK(r.exit_code == 0);
    for (const char* sub : {"dedup", "split", "train", "stats", "prune",
                            "remap-embeddings", "transfer", "encode", "report"}) {
        CAPTURE(sub);
        CHECK(r.out.find(sub) != std::string::npos);
    }
}

TEST_CASE("missing required flag exits 1 and names the flag") {
    auto r = run_cli("prune --tokenizer /nonexistent.json --id-map /tmp/x -o /tmp/y");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("--counts") != std::string::npos);
}

TEST_CASE("unreadable input exits 2") {
    auto dir = scratch_dir();
    auto r = run_cli("dedup --corpus " + (dir / "missing.txt").string() + " -o " +
                     (dir / "out.txt").string());
    CHECK(r.exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("invalid utf8 input exits 2 with a byte offset") {
    auto dir = scratch_dir();
    spit(dir / "corpus.txt", "fine\nbroken\xFF\n");
    auto r = run_cli("dedup --corpus " + (dir / "corpus.txt").string() + " -o " +
                     (dir / "out.txt").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("byte offset") != std::string::npos);
    CHECK(!fs::exists(dir / "out.txt"));  // no partial output left behind
    fs::remove_all(dir);
}

TEST_CASE("dedup and encode work end to end") {
    auto dir = scratch_dir();
    spit(dir / "corpus.txt", "ab ab\nab\nab ab\n");
    spit(dir / "tok.json", tiny_tokenizer_json());

    auto r = run_cli("dedup --corpus " + (dir / "corpus.txt").string() + " -o " +
                     (dir / "deduped.txt").string());
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "deduped.txt") == "ab ab\nab\n");

    r = run_cli("encode --tokenizer " + (dir / "tok.json").string() + " --corpus " +
                (dir / "deduped.txt").string());
    REQUIRE(r.exit_code == 0);
    vs::UnigramVocab v = vs::UnigramVocab::load(tiny_tokenizer_json());
    auto id = *v.find(MS + "ab");
    std::string expected = "{\"ids\":[" + std::to_string(id) + "," + std::to_string(id) +
                           "]}\n{\"ids\":[" + std::to_string(id) + "]}\n";
    CHECK(r.out == expected);
    fs::remove_all(dir);
}

TEST_CASE("stats, prune, and remap pipeline") {
    auto dir = scratch_dir();
    spit(dir / "corpus.txt", "ab ab\nab a b\n");
    spit(dir / "tok.json", tiny_tokenizer_json());

    auto r = run_cli("stats --tokenizer " + (dir / "tok.json").string() + " --corpus " +
                     (dir / "corpus.txt").string() + " -o " + (dir / "counts.json").string());
    REQUIRE(r.exit_code == 0);

    r = run_cli("prune --tokenizer " + (dir / "tok.json").string() + " --counts " +
                (dir / "counts.json").string() + " --id-map " + (dir / "map.json").string() +
                " -o " + (dir / "pruned.json").string());
    REQUIRE(r.exit_code == 0);

    auto pruned = vs::UnigramVocab::load(slurp(dir / "pruned.json"));
    CHECK(!pruned.find(MS + "unused").has_value());
    CHECK(pruned.find(MS + "ab").has_value());

    auto map = vs::TokenIdMap::load(slurp(dir / "map.json"));
    CHECK(map.new_size == pruned.size());

    // Matrix with row r filled with value r, so gathered rows are identifiable.
    vs::EmbeddingMatrix emb;
    emb.rows = map.old_size;
    emb.cols = 4;
    for (std::uint64_t row = 0; row < emb.rows; row++) {
        for (int c = 0; c < 4; c++) emb.data.push_back(float(row));
    }
    vs::write_matrix_file(emb, (dir / "emb.bin").string());

    r = run_cli("remap-embeddings --embeddings " + (dir / "emb.bin").string() + " --id-map " +
                (dir / "map.json").string() + " -o " + (dir / "emb_pruned.bin").string());
    REQUIRE(r.exit_code == 0);
    auto out = vs::read_matrix_file((dir / "emb_pruned.bin").string());
    REQUIRE(out.rows == map.new_size);
    for (std::uint32_t new_id = 0; new_id < map.new_size; new_id++) {
        CHECK(out.row(new_id)[0] == float(map.new_to_old[new_id]));
    }
    fs::remove_all(dir);
}

TEST_CASE("prune refuses counts from a different tokenizer") {
    auto dir = scratch_dir();
    spit(dir / "corpus.txt", "ab\n");
    spit(dir / "tok.json", tiny_tokenizer_json());
    auto r = run_cli("stats --tokenizer " + (dir / "tok.json").string() + " --corpus " +
                     (dir / "corpus.txt").string() + " -o " + (dir / "counts.json").string());
    REQUIRE(r.exit_code == 0);

    // Any byte change to the tokenizer file invalidates the fingerprint.
    spit(dir / "tok.json", tiny_tokenizer_json() + "\n");
    r = run_cli("prune --tokenizer " + (dir / "tok.json").string() + " --counts " +
                (dir / "counts.json").string() + " --id-map " + (dir / "map.json").string() +
                " -o " + (dir / "pruned.json").string());
    CHECK(r.exit_code == 3);
    fs::remove_all(dir);
}

TEST_CASE("transfer builds a matrix sized to the new tokenizer") {
    auto dir = scratch_dir();
    vs::UnigramVocab old_v({{MS, -3.0}, {"te", -1.0}, {"re", -1.0}},
                           vs::UnigramVocab::standard_specials(), {false, false});
    vs::UnigramVocab new_v({{MS, -3.0}, {MS + "tere", -1.0}},
                           vs::UnigramVocab::standard_specials(), {false, false});
    spit(dir / "old.json", old_v.save());
    spit(dir / "new.json", new_v.save());
    vs::EmbeddingMatrix emb;
    emb.rows = old_v.size();
    emb.cols = 2;
    for (std::uint64_t row = 0; row < emb.rows; row++) {
        emb.data.push_back(float(row));
        emb.data.push_back(float(row));
    }
    vs::write_matrix_file(emb, (dir / "old_emb.bin").string());

    auto r = run_cli("transfer --old-tokenizer " + (dir / "old.json").string() +
                     " --new-tokenizer " + (dir / "new.json").string() + " --old-embeddings " +
                     (dir / "old_emb.bin").string() + " --init fvt -o " +
                     (dir / "new_emb.bin").string());
    REQUIRE(r.exit_code == 0);
    auto out = vs::read_matrix_file((dir / "new_emb.bin").string());
    CHECK(out.rows == new_v.size());
    CHECK(out.cols == 2);
    // "tere" segments under the old vocab as [metaspace, te, re]; the new row
    // is the mean of those three rows.
    auto id = *new_v.find(MS + "tere");
    auto id_ms = float(*old_v.find(MS));
    auto id_te = float(*old_v.find("te"));
    auto id_re = float(*old_v.find("re"));
    CHECK(out.row(id)[0] == doctest::Approx((id_ms + id_te + id_re) / 3).epsilon(1e-6));
    fs::remove_all(dir);
}

TEST_CASE("report renders json with predicted parameters") {
    auto dir = scratch_dir();
    spit(dir / "corpus.txt", "ab ab\nab\n");
    spit(dir / "tok.json", tiny_tokenizer_json());
    auto r = run_cli("report --tokenizer " + (dir / "tok.json").string() + " --corpus " +
                     (dir / "corpus.txt").string() +
                     " --model-shape total=1000000,vocab=500,dim=8 --format json --label demo");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("\"model_label\"") != std::string::npos);
    CHECK(r.out.find("demo") != std::string::npos);
    CHECK(r.out.find("tokens_per_word") != std::string::npos);
    fs::remove_all(dir);
}
