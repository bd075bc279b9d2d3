#include "pmilab/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <sstream>

#include "pmilab/error.hpp"
#include "pmilab/rng.hpp"

namespace pmilab {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 3> kContextFields{"context", "history", "dialog"};
constexpr std::array<std::string_view, 3> kResponseFields{"response", "reference", "answer"};
constexpr std::array<std::string_view, 4> kIdFields{"dialogue_id", "dialog_id", "conversation_id", "id"};
constexpr std::string_view kAnnotationField = "annot_relevant_mean";

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

void append_turns(std::vector<std::string>& turns, std::string_view text) {
    for (const auto& line : split_lines(text)) {
        std::string turn = strip_speaker_prefix(trim(line));
        if (!turn.empty()) turns.push_back(std::move(turn));
    }
}

// Strings are split on newlines; lists contribute one entry per element
// (elements that are objects use their "text" or "utterance" member).
void append_value(std::vector<std::string>& turns, const json& value) {
    if (value.is_string()) {
        append_turns(turns, value.get<std::string>());
    } else if (value.is_array()) {
        for (const auto& item : value) {
            if (item.is_object()) {
                for (const char* key : {"text", "utterance"}) {
                    if (item.contains(key)) {
                        append_value(turns, item.at(key));
                        break;
                    }
                }
            } else {
                append_value(turns, item);
            }
        }
    } else if (value.is_number()) {
        append_turns(turns, value.dump());
    }
}

std::optional<double> as_number(const json& value) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const std::string s = trim(value.get<std::string>());
        if (s.empty()) return std::nullopt;
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size() && std::isfinite(v)) return v;
        } catch (const std::exception&) {
        }
    }
    return std::nullopt;
}

// A record is a flat string-keyed object; CSV cells arrive as strings, and a
// cell that holds a JSON array is treated as a list.
Dialogue dialogue_from_record(const json& record, std::size_t index) {
    std::optional<std::string> context_key;
    std::optional<std::string> response_key;
    for (auto key : kContextFields) {
        if (record.contains(key)) {
            context_key = std::string(key);
            break;
        }
    }
    for (auto key : kResponseFields) {
        if (record.contains(key)) {
            response_key = std::string(key);
            break;
        }
    }
    if (!context_key && !response_key) {
        fail(ErrorKind::data, "record " + std::to_string(index) +
                                  ": no context/history/dialog or response/reference/answer field");
    }

    auto unpack = [](const json& value) {
        if (value.is_string()) {
            const std::string text = trim(value.get<std::string>());
            if (text.starts_with('[')) {
                json parsed = json::parse(text, nullptr, false);
                if (!parsed.is_discarded() && parsed.is_array()) return parsed;
            }
        }
        return value;
    };

    Dialogue d;
    if (context_key) append_value(d.turns, unpack(record.at(*context_key)));
    if (response_key) append_value(d.turns, unpack(record.at(*response_key)));

    for (auto key : kIdFields) {
        if (!record.contains(key)) continue;
        const json& v = record.at(std::string(key));
        if (v.is_string() && !trim(v.get<std::string>()).empty()) {
            d.id = trim(v.get<std::string>());
        } else if (v.is_number_integer()) {
            d.id = std::to_string(v.get<long long>());
        }
        if (!d.id.empty()) break;
    }
    if (d.id.empty()) d.id = "record-" + std::to_string(index);

    if (record.contains(kAnnotationField)) d.annotation = as_number(record.at(std::string(kAnnotationField)));
    return d;
}

// RFC 4180 rows: quoted fields may contain separators, quotes ("") and
// newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, std::size_t& malformed) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t k = 0; k < text.size(); ++k) {
        const char ch = text[k];
        if (quoted) {
            if (ch == '"') {
                if (k + 1 < text.size() && text[k + 1] == '"') {
                    field.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (ch == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && k + 1 < text.size() && text[k + 1] == '\n') ++k;
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
            rows.push_back(std::move(row));
            row.clear();
        } else {
            field.push_back(ch);
            field_started = true;
        }
    }
    if (quoted) ++malformed;  // unterminated quote swallows the tail
    if (field_started || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view text) {
    if (text == "jsonl" || text == "json") return CorpusFormat::jsonl;
    if (text == "csv") return CorpusFormat::csv;
    fail(ErrorKind::usage, "unknown corpus format '" + std::string(text) + "'");
}

CorpusFormat guess_corpus_format(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

std::string trim(std::string_view text) {
    auto space = [](unsigned char ch) { return std::isspace(ch) != 0; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && space(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && space(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string strip_speaker_prefix(std::string_view turn) {
    constexpr std::size_t kMaxTag = 20;
    const std::size_t colon = turn.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon > kMaxTag) return std::string(turn);
    if (colon + 1 < turn.size() && !std::isspace(static_cast<unsigned char>(turn[colon + 1]))) {
        return std::string(turn);
    }
    const std::string_view tag = turn.substr(0, colon);
    if (!std::isalnum(static_cast<unsigned char>(tag.front()))) return std::string(turn);
    for (char ch : tag) {
        const auto c = static_cast<unsigned char>(ch);
        if (!(std::isalnum(c) || ch == ' ' || ch == '_' || ch == '-' || ch == '.')) return std::string(turn);
    }
    return trim(turn.substr(colon + 1));
}

CorpusLoad load_corpus_text(std::string_view text, CorpusFormat format) {
    CorpusLoad out;
    std::size_t index = 0;
    auto accept = [&](const json& record) {
        Dialogue d = dialogue_from_record(record, index);
        out.dialogues.push_back(std::move(d));
    };

    if (format == CorpusFormat::jsonl) {
        for (const auto& raw : split_lines(text)) {
            const std::string line = trim(raw);
            if (line.empty()) continue;
            json record = json::parse(line, nullptr, false);
            if (record.is_discarded() || !record.is_object()) {
                ++out.skipped;
                ++index;
                continue;
            }
            accept(record);
            ++index;
        }
    } else {
        auto rows = parse_csv(text, out.skipped);
        if (rows.empty()) return out;
        const auto header = rows.front();
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.size() == 1 && trim(row[0]).empty()) continue;
            if (row.size() != header.size()) {
                ++out.skipped;
                ++index;
                continue;
            }
            json record = json::object();
            for (std::size_t c = 0; c < header.size(); ++c) record[trim(header[c])] = row[c];
            accept(record);
            ++index;
        }
    }
    if (out.skipped > 0) spdlog::warn("corpus: skipped {} malformed record(s)", out.skipped);
    return out;
}

CorpusLoad load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "cannot open corpus " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_corpus_text(buffer.str(), format);
}

std::vector<PairSample> build_pairs(const Dialogue& dialogue) {
    std::vector<PairSample> pairs;
    if (dialogue.turns.size() < 2) return pairs;
    std::string context = dialogue.turns.front();
    for (std::size_t i = 1; i < dialogue.turns.size(); ++i) {
        PairSample pair;
        pair.context = context;
        pair.response = dialogue.turns[i];
        pair.label = Label::positive;
        pair.dialogue_id = dialogue.id;
        if (i + 1 == dialogue.turns.size()) pair.annotation = dialogue.annotation;
        pairs.push_back(std::move(pair));
        context += '\n';
        context += dialogue.turns[i];
    }
    return pairs;
}

std::string render_prompt(std::string_view context, std::string_view response,
                          std::string_view prompt_template) {
    constexpr std::string_view kContext = "{context_text}";
    constexpr std::string_view kResponse = "{response_text}";
    std::string out;
    out.reserve(prompt_template.size() + context.size() + response.size());
    std::size_t k = 0;
    while (k < prompt_template.size()) {
        if (prompt_template.substr(k).starts_with(kContext)) {
            out += context;
            k += kContext.size();
        } else if (prompt_template.substr(k).starts_with(kResponse)) {
            out += response;
            k += kResponse.size();
        } else {
            out.push_back(prompt_template[k++]);
        }
    }
    return out;
}

Splits split_dataset(std::span<const PairSample> positives, std::array<double, 3> fractions,
                     std::uint64_t seed) {
    double total = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) fail(ErrorKind::usage, "split fractions must be non-negative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::usage, "split fractions must sum to 1");

    // Groups in first-appearance order, then a seeded Fisher-Yates shuffle.
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t p = 0; p < positives.size(); ++p) {
        if (positives[p].dialogue_id) {
            auto [it, inserted] = group_of.emplace(*positives[p].dialogue_id, groups.size());
            if (inserted) groups.emplace_back();
            groups[it->second].push_back(p);
        } else {
            groups.push_back({p});
        }
    }
    Rng rng = Rng::child(seed, 0x73706c6974ULL);
    for (std::size_t k = groups.size(); k > 1; --k) std::swap(groups[k - 1], groups[rng.below(k)]);

    const double n = static_cast<double>(positives.size());
    const auto want_train = static_cast<std::size_t>(std::llround(fractions[0] * n));
    const auto want_val = static_cast<std::size_t>(std::llround(fractions[1] * n));

    Splits out;
    for (const auto& group : groups) {
        std::vector<PairSample>* target = &out.test;
        if (out.train.size() < want_train) {
            target = &out.train;
        } else if (out.val.size() < want_val) {
            target = &out.val;
        }
        for (std::size_t p : group) target->push_back(positives[p]);
    }
    return out;
}

}  // namespace pmilab
