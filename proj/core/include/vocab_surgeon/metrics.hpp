#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vocab_surgeon/corpus.hpp"
#include "vocab_surgeon/unigram.hpp"

namespace vs {

struct EfficiencyReport {
    std::string model_label;
    std::uint64_t vocab_size = 0;
    std::uint64_t predicted_params = 0;
    double tokens_per_word = 0.0;
    std::string corpus_label;
    std::string word_definition = "maximal runs of non-whitespace code points";

    friend bool operator==(const EfficiencyReport&, const EfficiencyReport&) = default;
};

enum class ReportFormat { kTable, kJson, kCsv };

/// Subword tokens emitted (no specials) divided by whitespace word count.
/// Throws InvariantError when the corpus has zero words.
double tokens_per_word(const std::vector<Document>& docs, const UnigramVocab& vocab);

/// 3-significant-figure human form with K/M/B suffix: 110592000 -> "111M".
std::string human_params(std::uint64_t params);

std::string render_report(const std::vector<EfficiencyReport>& reports, ReportFormat format);

/// Inverses of the json/csv renders; round-trips are field-identical.
std::vector<EfficiencyReport> parse_reports_json(std::string_view text);
std::vector<EfficiencyReport> parse_reports_csv(std::string_view text);

}  // namespace vs
