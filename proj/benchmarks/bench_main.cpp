#include <random>
#include <set>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "vocab_surgeon/corpus.hpp"
#include "vocab_surgeon/hash.hpp"
#include "vocab_surgeon/surgery.hpp"
#include "vocab_surgeon/unigram.hpp"

namespace {

const std::string MS = "\xE2\x96\x81";

std::vector<std::string> synthetic_lines(int n) {
    std::mt19937 rng(17);
    std::vector<std::string> stems;
    for (int i = 0; i < 200; i++) {
        std::string s;
        for (int j = 0; j < 4 + int(rng() % 3); j++) s += static_cast<char>('a' + rng() % 12);
        stems.push_back(s);
    }
    std::vector<std::string> suffixes = {"", "de", "le", "st", "mine", "ga", "sse", "tele"};
    std::vector<std::string> lines;
    for (int d = 0; d < n; d++) {
        std::string line;
        for (int w = 0; w < 10; w++) {
            if (w) line += ' ';
            line += stems[rng() % stems.size()] + suffixes[rng() % suffixes.size()];
        }
        lines.push_back(line);
    }
    return lines;
}

vs::UnigramVocab bench_vocab() {
    std::vector<std::pair<std::string, double>> pieces;
    pieces.emplace_back(MS, -4.0);
    for (char c = 'a'; c <= 'z'; c++) pieces.emplace_back(std::string(1, c), -3.0);
    std::mt19937 rng(29);
    std::set<std::string> seen;
    while (pieces.size() < 2000) {
        std::string p;
        int len = 2 + int(rng() % 5);
        for (int i = 0; i < len; i++) p += static_cast<char>('a' + rng() % 12);
        if (seen.insert(p).second) pieces.emplace_back(p, -2.0 - (rng() % 800) / 100.0);
    }
    return vs::UnigramVocab(std::move(pieces), vs::UnigramVocab::standard_specials(),
                            {false, false});
}

void BM_Encode(benchmark::State& state) {
    auto vocab = bench_vocab();
    auto lines = synthetic_lines(200);
    std::uint64_t bytes = 0;
    for (const auto& l : lines) bytes += l.size();
    for (auto _ : state) {
        for (const auto& line : lines) {
            benchmark::DoNotOptimize(vocab.encode(line, false));
        }
    }
    state.SetBytesProcessed(std::int64_t(state.iterations()) * std::int64_t(bytes));
}
BENCHMARK(BM_Encode);

void BM_Hash128(benchmark::State& state) {
    auto lines = synthetic_lines(1000);
    std::uint64_t bytes = 0;
    for (const auto& l : lines) bytes += l.size();
    for (auto _ : state) {
        for (const auto& line : lines) {
            benchmark::DoNotOptimize(vs::murmur3_128(line, 0));
        }
    }
    state.SetBytesProcessed(std::int64_t(state.iterations()) * std::int64_t(bytes));
}
BENCHMARK(BM_Hash128);

void BM_Dedup(benchmark::State& state) {
    auto lines = synthetic_lines(2000);
    std::vector<vs::Document> docs;
    for (std::size_t i = 0; i < lines.size(); i++) docs.push_back({i, lines[i]});
    for (auto _ : state) {
        benchmark::DoNotOptimize(vs::dedup(docs));
    }
    state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(docs.size()));
}
BENCHMARK(BM_Dedup);

void BM_CollectUsage(benchmark::State& state) {
    auto vocab = bench_vocab();
    auto lines = synthetic_lines(500);
    std::vector<vs::Document> docs;
    for (std::size_t i = 0; i < lines.size(); i++) docs.push_back({i, lines[i]});
    for (auto _ : state) {
        benchmark::DoNotOptimize(vs::collect_usage(docs, vocab, unsigned(state.range(0))));
    }
    state.SetItemsProcessed(std::int64_t(state.iterations()) * std::int64_t(docs.size()));
}
BENCHMARK(BM_CollectUsage)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
