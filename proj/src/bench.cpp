#include "prefmod/bench.hpp"

#include <array>
#include <cmath>

#include "prefmod/errors.hpp"

namespace prefmod::bench {

const char* category_name(Category c) {
    switch (c) {
        case Category::chat: return "chat";
        case Category::chat_hard: return "chat_hard";
        case Category::safety: return "safety";
        case Category::reasoning: return "reasoning";
    }
    return "";
}

const char* reasoning_kind_name(ReasoningKind k) {
    switch (k) {
        case ReasoningKind::none: return "none";
        case ReasoningKind::math: return "math";
        case ReasoningKind::code: return "code";
    }
    return "";
}

namespace {

void validate(const BenchSet& tasks) {
    bool seen[4] = {false, false, false, false};
    bool math = false, code = false;
    for (const auto& t : tasks) {
        seen[static_cast<int>(t.category)] = true;
        const bool reasoning = t.category == Category::reasoning;
        if (reasoning != (t.reasoning_kind != ReasoningKind::none))
            throw DataError("reasoning_kind must be set exactly for reasoning tasks");
        if (t.reasoning_kind == ReasoningKind::math) math = true;
        if (t.reasoning_kind == ReasoningKind::code) code = true;
    }
    std::string missing;
    for (int c = 0; c < 4; ++c) {
        if (!seen[c]) missing += std::string(missing.empty() ? "" : ", ") +
                                 category_name(static_cast<Category>(c));
    }
    if (seen[static_cast<int>(Category::reasoning)] && (!math || !code)) {
        if (!math) missing += std::string(missing.empty() ? "" : ", ") + "reasoning/math";
        if (!code) missing += std::string(missing.empty() ? "" : ", ") + "reasoning/code";
    }
    if (!missing.empty()) throw DataError("bench set missing categories: " + missing);
}

}  // namespace

BenchReport score_from_rewards(const std::vector<std::pair<double, double>>& rewards,
                               const BenchSet& tasks) {
    if (rewards.size() != tasks.size()) throw DataError("reward/task count mismatch");
    validate(tasks);

    // counts per plain category; reasoning split by kind
    std::array<long long, 3> n{}, hits{};
    long long n_math = 0, hits_math = 0, n_code = 0, hits_code = 0;

    BenchReport report;
    report.correct.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& [rc, rr] = rewards[i];
        if (!std::isfinite(rc) || !std::isfinite(rr)) throw NumericalError("non-finite reward");
        const bool ok = rc > rr;
        report.correct.push_back(ok);
        const auto& t = tasks[i];
        if (t.category == Category::reasoning) {
            if (t.reasoning_kind == ReasoningKind::math) {
                ++n_math;
                hits_math += ok;
            } else {
                ++n_code;
                hits_code += ok;
            }
        } else {
            const int c = static_cast<int>(t.category);
            ++n[static_cast<std::size_t>(c)];
            hits[static_cast<std::size_t>(c)] += ok;
        }
    }

    auto frac = [](long long h, long long m) { return static_cast<double>(h) / static_cast<double>(m); };
    report.accuracy["chat"] = frac(hits[0], n[0]);
    report.accuracy["chat_hard"] = frac(hits[1], n[1]);
    report.accuracy["safety"] = frac(hits[2], n[2]);
    report.accuracy["reasoning"] = 0.5 * frac(hits_math, n_math) + 0.5 * frac(hits_code, n_code);
    report.overall = (report.accuracy["chat"] + report.accuracy["chat_hard"] +
                      report.accuracy["safety"] + report.accuracy["reasoning"]) /
                     4.0;
    return report;
}

BenchReport score_bench(const Scorer& scorer, const BenchSet& tasks) {
    std::vector<std::pair<double, double>> rewards;
    rewards.reserve(tasks.size());
    for (const auto& t : tasks) rewards.emplace_back(scorer(t.chosen), scorer(t.rejected));
    return score_from_rewards(rewards, tasks);
}

}  // namespace prefmod::bench
