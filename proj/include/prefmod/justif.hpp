#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prefmod/prefdata.hpp"

namespace prefmod::justif {

// Rule-based splitter: newlines always split; sentence-final punctuation
// splits when followed by whitespace and an uppercase letter or '@', except
// after the abbreviations "e.g.", "i.e.", "etc.".
std::vector<std::string> split_sentences(const std::string& text);

enum class SourcePosition { first, last, both, none };

struct ParsedJustification {
    std::string statement;    // empty when source_position == none
    std::string elaboration;  // remaining sentences joined with single spaces
    SourcePosition source_position = SourcePosition::none;
};

// A preference statement is a sentence containing case-insensitive
// "@response 1" or "@response 2" followed later in the sentence by "better".
bool is_preference_statement(const std::string& sentence);

// 1 or 2 for the first "@response N" mention; 0 when absent.
int statement_direction(const std::string& sentence);

// Locates the preference statement at the start or end of a justification.
// Both ends -> the trailing one is dropped; trailing only -> leading
// connective prefixes are stripped up to the first "@Response" token;
// neither -> none (excluded from downstream conversion).
ParsedJustification parse_justification(const std::string& text);

struct SourcePositionCounts {
    std::int64_t first = 0;
    std::int64_t last = 0;
    std::int64_t both = 0;
    std::int64_t none = 0;
    std::int64_t total() const { return first + last + both + none; }
};

SourcePositionCounts count_source_positions(const std::vector<std::string>& justifications);

// Attribute -> keyword list used by the word-level containment analysis.
const std::map<std::string, std::vector<std::string>>& default_lexicon();

// Fraction of justifications containing at least one lexicon word per
// attribute. Tokens are lowercased, stripped of non-alphanumerics, and
// whitespace-split; matching is exact per word, never substring.
std::map<std::string, double> keyword_analysis(
    const std::vector<std::string>& justifications,
    const std::map<std::string, std::vector<std::string>>& lexicon = default_lexicon());

struct SftRecord {
    std::string input;
    std::string target;
    std::string label;  // "response_1" | "response_2"
    std::string task_id;
    bool flipped = false;
};

// Swaps the digits of "@Response 1"/"@Response 2" mentions (any case);
// applying it twice restores the input.
std::string swap_response_tokens(const std::string& text);

// Converts kept tasks into generation records: input is the fixed two-response
// prompt, target is elaboration followed by statement. all_justifications
// emits up to three records per task (the selected annotators' parseable
// justifications); otherwise one record from the first selected annotator
// whose preference sign matches the overall preference. flip additionally
// emits the response-swapped variant of every record.
std::vector<SftRecord> build_justifier_records(
    const std::vector<prefdata::AnnotationTask>& tasks,
    const std::vector<prefdata::AggregatedPreference>& aggregated, bool flip,
    bool all_justifications);

enum class Label { response_1, response_2, unparseable };

// Reads the preference direction from generated text; the last preference
// statement wins.
Label extract_preference_label(const std::string& generated);

}  // namespace prefmod::justif
