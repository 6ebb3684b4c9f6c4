#include "prefmod/justif.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "prefmod/errors.hpp"

namespace prefmod::justif {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// True when the '.' at position i terminates a guarded abbreviation.
bool abbreviation_guard(const std::string& line, std::size_t i) {
    std::size_t b = i;
    while (b > 0 && !is_space(line[b - 1])) --b;
    std::string token = line.substr(b, i - b + 1);
    std::transform(token.begin(), token.end(), token.begin(), lower);
    static const char* guards[] = {"e.g.", "i.e.", "etc."};
    for (const char* g : guards) {
        const std::string gs(g);
        if (token.size() >= gs.size() && token.compare(token.size() - gs.size(), gs.size(), gs) == 0)
            return true;
    }
    return false;
}

void split_line(const std::string& line, std::vector<std::string>& out) {
    std::size_t start = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c != '.' && c != '!' && c != '?') continue;
        if (c == '.' && abbreviation_guard(line, i)) continue;
        std::size_t j = i + 1;
        while (j < line.size() && is_space(line[j])) ++j;
        if (j == i + 1 || j == line.size()) continue;  // needs whitespace then a new sentence
        if (!is_upper(line[j]) && line[j] != '@') continue;
        const std::string sentence = trim(line.substr(start, i + 1 - start));
        if (!sentence.empty()) out.push_back(sentence);
        start = j;
        i = j - 1;
    }
    const std::string tail = trim(line.substr(start));
    if (!tail.empty()) out.push_back(tail);
}

// Finds "@response" (any case) at or after pos; returns npos when absent.
std::size_t find_response_token(const std::string& s, std::size_t pos) {
    static const std::string needle = "@response";
    for (std::size_t i = pos; i + needle.size() <= s.size(); ++i) {
        bool hit = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (lower(s[i + k]) != needle[k]) {
                hit = false;
                break;
            }
        }
        if (hit) return i;
    }
    return std::string::npos;
}

// Index of the digit after "@response" at token position p, or npos.
std::size_t response_digit_pos(const std::string& s, std::size_t p) {
    std::size_t j = p + 9;  // past "@response"
    while (j < s.size() && s[j] == ' ') ++j;
    if (j < s.size() && (s[j] == '1' || s[j] == '2')) return j;
    return std::string::npos;
}

bool contains_better(const std::string& s, std::size_t from) {
    static const std::string needle = "better";
    for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
        bool hit = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (lower(s[i + k]) != needle[k]) {
                hit = false;
                break;
            }
        }
        if (hit) return true;
    }
    return false;
}

std::string join(const std::vector<std::string>& parts, std::size_t b, std::size_t e) {
    std::string out;
    for (std::size_t i = b; i < e; ++i) {
        if (!out.empty()) out += ' ';
        out += parts[i];
    }
    return out;
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n' || text[i] == '\r') {
            split_line(text.substr(start, i - start), out);
            start = i + 1;
        }
    }
    return out;
}

bool is_preference_statement(const std::string& sentence) {
    std::size_t p = 0;
    while ((p = find_response_token(sentence, p)) != std::string::npos) {
        const std::size_t d = response_digit_pos(sentence, p);
        if (d != std::string::npos && contains_better(sentence, d + 1)) return true;
        ++p;
    }
    return false;
}

int statement_direction(const std::string& sentence) {
    std::size_t p = 0;
    while ((p = find_response_token(sentence, p)) != std::string::npos) {
        const std::size_t d = response_digit_pos(sentence, p);
        if (d != std::string::npos) return sentence[d] - '0';
        ++p;
    }
    return 0;
}

ParsedJustification parse_justification(const std::string& text) {
    ParsedJustification out;
    const auto sentences = split_sentences(text);
    if (sentences.empty()) return out;

    const std::size_t n = sentences.size();
    const bool first = is_preference_statement(sentences.front());
    const bool last = n > 1 && is_preference_statement(sentences.back());

    if (first && last) {
        out.source_position = SourcePosition::both;
        out.statement = sentences.front();
        out.elaboration = join(sentences, 1, n - 1);
    } else if (first) {
        out.source_position = SourcePosition::first;
        out.statement = sentences.front();
        out.elaboration = join(sentences, 1, n);
    } else if (last) {
        out.source_position = SourcePosition::last;
        const std::string& s = sentences.back();
        const std::size_t p = find_response_token(s, 0);
        out.statement = s.substr(p);  // strip connective prefix
        out.elaboration = join(sentences, 0, n - 1);
    }
    return out;
}

SourcePositionCounts count_source_positions(const std::vector<std::string>& justifications) {
    SourcePositionCounts c;
    for (const auto& j : justifications) {
        switch (parse_justification(j).source_position) {
            case SourcePosition::first: ++c.first; break;
            case SourcePosition::last: ++c.last; break;
            case SourcePosition::both: ++c.both; break;
            case SourcePosition::none: ++c.none; break;
        }
    }
    return c;
}

const std::map<std::string, std::vector<std::string>>& default_lexicon() {
    static const std::map<std::string, std::vector<std::string>> lex = {
        {"helpfulness", {"help", "helpful", "helpfulness", "instruction", "unhelpful", "useful"}},
        {"correctness",
         {"accurate", "accurately", "complete", "correct", "factual", "informative", "error",
          "false", "inaccurate", "incomplete", "incorrect", "incorrectly", "misses", "missing",
          "wrong", "completeness", "correctness", "fact", "information", "understand",
          "understanding"}},
        {"coherence",
         {"clear", "clearer", "direct", "directly", "relevant", "confusing", "irrelevant",
          "redundant", "repeats", "repetitive", "unclear", "unnecessary", "vague", "clarity",
          "coherence", "structure", "bulleted", "format", "formatted", "list", "listed",
          "numbered", "outline"}},
        {"complexity", {"basic", "depth", "difficult", "easier", "easy", "simple", "simply"}},
        {"verbosity",
         {"brief", "concise", "short", "shorter", "succinct", "comprehensive", "detailed", "long",
          "longer", "thorough", "verbose", "detail", "details", "length", "verbosity"}},
    };
    return lex;
}

std::map<std::string, double> keyword_analysis(
    const std::vector<std::string>& justifications,
    const std::map<std::string, std::vector<std::string>>& lexicon) {
    if (justifications.empty()) throw DataError("no justifications");

    std::map<std::string, double> counts;
    for (const auto& [attr, words] : lexicon) counts[attr] = 0.0;

    for (const auto& j : justifications) {
        std::unordered_set<std::string> tokens;
        std::string tok;
        for (char c : j) {
            if (is_space(c)) {
                if (!tok.empty()) tokens.insert(tok);
                tok.clear();
            } else if (std::isalnum(static_cast<unsigned char>(c))) {
                tok += lower(c);
            }
        }
        if (!tok.empty()) tokens.insert(tok);

        for (const auto& [attr, words] : lexicon) {
            for (const auto& w : words) {
                if (tokens.count(w)) {
                    counts[attr] += 1.0;
                    break;
                }
            }
        }
    }
    for (auto& [attr, c] : counts) c /= static_cast<double>(justifications.size());
    return counts;
}

std::string swap_response_tokens(const std::string& text) {
    std::string out = text;
    std::size_t p = 0;
    while ((p = find_response_token(out, p)) != std::string::npos) {
        const std::size_t d = response_digit_pos(out, p);
        if (d != std::string::npos) out[d] = out[d] == '1' ? '2' : '1';
        ++p;
    }
    return out;
}

namespace {

std::string justifier_input(const prefdata::AnnotationTask& task, bool swapped) {
    const std::string& r1 = swapped ? task.response_2 : task.response_1;
    const std::string& r2 = swapped ? task.response_1 : task.response_2;
    return task.prompt + " @Response 1:\n" + r1 + "\n@Response 2:\n" + r2 +
           "\nBetween @Response 1 and @Response 2, which is better?";
}

int sign(int v) { return v < 0 ? -1 : v > 0 ? 1 : 0; }

}  // namespace

std::vector<SftRecord> build_justifier_records(
    const std::vector<prefdata::AnnotationTask>& tasks,
    const std::vector<prefdata::AggregatedPreference>& aggregated, bool flip,
    bool all_justifications) {
    std::unordered_map<std::string, const prefdata::AnnotationTask*> by_id;
    for (const auto& t : tasks) by_id[t.task_id] = &t;

    std::vector<SftRecord> records;
    for (const auto& agg : aggregated) {
        if (agg.status != prefdata::AggregateStatus::kept) continue;
        const auto it = by_id.find(agg.task_id);
        if (it == by_id.end()) throw DataError("aggregate without task: " + agg.task_id);
        const auto& task = *it->second;

        // Greedy score matching recovers the selected annotators in
        // annotation order from the selected value multiset.
        std::unordered_map<int, int> needed;
        for (int v : agg.used_annotations) needed[v] += 1;
        std::vector<const prefdata::Annotation*> selected;
        for (const auto& a : task.annotations) {
            auto n = needed.find(a.preference);
            if (n != needed.end() && n->second > 0) {
                selected.push_back(&a);
                n->second -= 1;
            }
        }

        std::vector<std::pair<const prefdata::Annotation*, ParsedJustification>> candidates;
        for (const auto* a : selected) {
            auto parsed = parse_justification(a->justification);
            if (parsed.source_position != SourcePosition::none)
                candidates.emplace_back(a, std::move(parsed));
        }

        std::vector<const ParsedJustification*> chosen;
        if (all_justifications) {
            for (const auto& [a, parsed] : candidates) chosen.push_back(&parsed);
        } else {
            for (const auto& [a, parsed] : candidates) {
                if (sign(a->preference) == sign(agg.overall)) {
                    chosen.push_back(&parsed);
                    break;
                }
            }
        }

        for (const auto* parsed : chosen) {
            SftRecord rec;
            rec.task_id = agg.task_id;
            rec.input = justifier_input(task, false);
            rec.target = parsed->elaboration.empty()
                             ? parsed->statement
                             : parsed->elaboration + " " + parsed->statement;
            const int dir = statement_direction(parsed->statement);
            rec.label = dir == 1 ? "response_1" : "response_2";
            rec.flipped = false;
            records.push_back(rec);
            if (flip) {
                SftRecord fl;
                fl.task_id = agg.task_id;
                fl.input = justifier_input(task, true);
                fl.target = swap_response_tokens(rec.target);
                fl.label = rec.label == "response_1" ? "response_2" : "response_1";
                fl.flipped = true;
                records.push_back(fl);
            }
        }
    }
    return records;
}

Label extract_preference_label(const std::string& generated) {
    const auto sentences = split_sentences(generated);
    for (auto it = sentences.rbegin(); it != sentences.rend(); ++it) {
        if (!is_preference_statement(*it)) continue;
        const int dir = statement_direction(*it);
        return dir == 1 ? Label::response_1 : Label::response_2;
    }
    return Label::unparseable;
}

}  // namespace prefmod::justif
