#include "vocab_surgeon/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vocab_surgeon/error.hpp"

namespace vs {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InputFormatError("bad numeric field '" + std::string(s) + "'");
    }
    return v;
}

// Renders `v` (already scaled to < 1000) with 3 significant figures.
std::string three_sig_figs(double v) {
    int decimals = v >= 100.0 ? 0 : v >= 10.0 ? 1 : 2;
    std::ostringstream out;
    out.precision(decimals);
    out << std::fixed << v;
    return out.str();
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::vector<std::string> csv_split(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); i++) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    i++;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

constexpr const char* kCsvHeader =
    "model_label,vocab_size,predicted_params,tokens_per_word,corpus_label,word_definition";

}  // namespace

double tokens_per_word(const std::vector<Document>& docs, const UnigramVocab& vocab) {
    std::uint64_t tokens = 0;
    for (const auto& doc : docs) {
        tokens += vocab.encode(doc.text, /*add_specials=*/false).ids.size();
    }
    std::uint64_t words = count_words(docs);
    if (words == 0) throw InvariantError("tokens_per_word: corpus contains no words");
    return static_cast<double>(tokens) / static_cast<double>(words);
}

std::string human_params(std::uint64_t params) {
    if (params < 1000) return std::to_string(params);
    double v = static_cast<double>(params);
    const char* suffixes[] = {"", "K", "M", "B"};
    int suffix = 0;
    while (v >= 1000.0 && suffix < 3) {
        v /= 1000.0;
        suffix++;
    }
    std::string s = three_sig_figs(v);
    // Rounding can push back over the suffix boundary (999.6 -> "1000").
    if (s.size() > 3 && s.find('.') == std::string::npos && suffix < 3) {
        v /= 1000.0;
        suffix++;
        s = three_sig_figs(v);
    }
    return s + suffixes[suffix];
}

std::string render_report(const std::vector<EfficiencyReport>& reports, ReportFormat format) {
    if (format == ReportFormat::kJson) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : reports) {
            arr.push_back({{"model_label", r.model_label},
                           {"vocab_size", r.vocab_size},
                           {"predicted_params", r.predicted_params},
                           {"predicted_params_human", human_params(r.predicted_params)},
                           {"tokens_per_word", r.tokens_per_word},
                           {"corpus_label", r.corpus_label},
                           {"word_definition", r.word_definition}});
        }
        return arr.dump(2) + "\n";
    }
    if (format == ReportFormat::kCsv) {
        std::string out = std::string(kCsvHeader) + "\n";
        for (const auto& r : reports) {
            out += csv_escape(r.model_label) + ",";
            out += std::to_string(r.vocab_size) + ",";
            out += std::to_string(r.predicted_params) + ",";
            out += format_double(r.tokens_per_word) + ",";
            out += csv_escape(r.corpus_label) + ",";
            out += csv_escape(r.word_definition) + "\n";
        }
        return out;
    }

    // Column-aligned table.
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Model", "Vocab Size", "# Params", "(exact)", "Tok per Word", "Corpus"});
    for (const auto& r : reports) {
        std::ostringstream tpw;
        tpw.precision(2);
        tpw << std::fixed << r.tokens_per_word;
        rows.push_back({r.model_label, std::to_string(r.vocab_size),
                        human_params(r.predicted_params), std::to_string(r.predicted_params),
                        tpw.str(), r.corpus_label});
    }
    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); c++) widths[c] = std::max(widths[c], row[c].size());
    }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); c++) {
            out += row[c];
            if (c + 1 < row.size()) out += std::string(widths[c] - row[c].size() + 2, ' ');
        }
        out += "\n";
    }
    if (!reports.empty()) {
        out += "words = " + reports.front().word_definition + "\n";
    }
    return out;
}

std::vector<EfficiencyReport> parse_reports_json(std::string_view text) {
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputFormatError(std::string("report JSON: ") + e.what());
    }
    std::vector<EfficiencyReport> reports;
    try {
        for (const auto& j : arr) {
            EfficiencyReport r;
            r.model_label = j.at("model_label").get<std::string>();
            r.vocab_size = j.at("vocab_size").get<std::uint64_t>();
            r.predicted_params = j.at("predicted_params").get<std::uint64_t>();
            r.tokens_per_word = j.at("tokens_per_word").get<double>();
            r.corpus_label = j.at("corpus_label").get<std::string>();
            r.word_definition = j.at("word_definition").get<std::string>();
            reports.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputFormatError(std::string("report JSON: ") + e.what());
    }
    return reports;
}

std::vector<EfficiencyReport> parse_reports_csv(std::string_view text) {
    std::vector<EfficiencyReport> reports;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (first) {
            if (line != kCsvHeader) throw InputFormatError("report CSV: unexpected header");
            first = false;
            continue;
        }
        auto fields = csv_split(line);
        if (fields.size() != 6) throw InputFormatError("report CSV: expected 6 fields per row");
        EfficiencyReport r;
        r.model_label = fields[0];
        r.vocab_size = std::stoull(fields[1]);
        r.predicted_params = std::stoull(fields[2]);
        r.tokens_per_word = parse_double(fields[3]);
        r.corpus_label = fields[4];
        r.word_definition = fields[5];
        reports.push_back(std::move(r));
    }
    if (first) throw InputFormatError("report CSV: missing header");
    return reports;
}

}  // namespace vs
