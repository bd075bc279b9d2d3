#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmilab/core.hpp"

namespace pmilab {

struct Dialogue {
    std::string id;
    std::vector<std::string> turns;
    /// Human relevance of the final turn as a response to the rest.
    std::optional<double> annotation;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view text);
/// jsonl unless the extension is .csv.
CorpusFormat guess_corpus_format(const std::filesystem::path& path);

struct CorpusLoad {
    std::vector<Dialogue> dialogues;
    std::size_t skipped = 0;  // malformed records
};

/// Reads a dialogue corpus.
///
/// Context-like fields: context, history, dialog. Response-like fields:
/// response, reference, answer. Values may be strings (split on newlines)
/// or lists (one element per turn). Empty lines are removed, whitespace is
/// trimmed and "NAME:" speaker prefixes are stripped. An id is taken from
/// dialogue_id, dialog_id, conversation_id or id, else "record-<index>".
/// annot_relevant_mean, when present, becomes the annotation.
///
/// Malformed lines are skipped and counted. A well-formed record with none
/// of the recognized fields is an Error(data) naming its index.
CorpusLoad load_corpus(const std::filesystem::path& path, CorpusFormat format);
CorpusLoad load_corpus_text(std::string_view text, CorpusFormat format);

/// Removes a short leading speaker tag ("A: hi" -> "hi", "Speaker 2: ok"
/// -> "ok"). Only a tag of at most 20 letters, digits, spaces, '_', '-' or
/// '.' directly followed by ": " (or ":" at the end) is removed; URLs and
/// colons later in the text are left alone.
std::string strip_speaker_prefix(std::string_view turn);

std::string trim(std::string_view text);

/// One positive per turn i >= 2: context = turns 1..i-1 joined with '\n',
/// response = turn i.
std::vector<PairSample> build_pairs(const Dialogue& dialogue);

inline constexpr std::string_view kPromptTemplate =
    "You are an assistant skilled at evaluating the relevance of a response to a given context.\n"
    "Task: Evaluate the relevance of the following response to the context.\n"
    "Context: {context_text}\n"
    "Response: {response_text}\n"
    "Result:";

/// Fills {context_text} and {response_text} in the template.
std::string render_prompt(std::string_view context, std::string_view response,
                          std::string_view prompt_template = kPromptTemplate);

struct Splits {
    std::vector<PairSample> train;
    std::vector<PairSample> val;
    std::vector<PairSample> test;
};

/// Shuffles by seed and partitions whole dialogues (pairs without a
/// dialogue id count as their own dialogue) so that the split sizes reach
/// round(fraction * n) in order train, val, test.
Splits split_dataset(std::span<const PairSample> positives, std::array<double, 3> fractions,
                     std::uint64_t seed);

}  // namespace pmilab
