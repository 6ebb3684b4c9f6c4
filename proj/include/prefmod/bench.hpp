#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace prefmod::bench {

enum class Category { chat, chat_hard, safety, reasoning };
enum class ReasoningKind { none, math, code };

struct BenchTask {
    Category category = Category::chat;
    ReasoningKind reasoning_kind = ReasoningKind::none;
    Eigen::VectorXd prompt;  // optional context features, may be empty
    Eigen::VectorXd chosen;
    Eigen::VectorXd rejected;
};

using BenchSet = std::vector<BenchTask>;

struct BenchReport {
    std::map<std::string, double> accuracy;  // chat, chat_hard, safety, reasoning
    double overall = 0.0;                    // mean of the four category accuracies
    std::vector<bool> correct;               // per task, input order
};

using Scorer = std::function<double(const Eigen::VectorXd&)>;

// A task counts as correct iff chosen strictly outscores rejected; ties are
// incorrect. Reasoning accuracy is the unweighted mean of its math and code
// sub-accuracies. Requires every category present, and both reasoning kinds.
BenchReport score_bench(const Scorer& scorer, const BenchSet& tasks);

// Same scoring over precomputed (chosen, rejected) reward pairs; used by the
// weight grid search to avoid re-running the model per candidate.
BenchReport score_from_rewards(const std::vector<std::pair<double, double>>& rewards,
                               const BenchSet& tasks);

const char* category_name(Category c);
const char* reasoning_kind_name(ReasoningKind k);

}  // namespace prefmod::bench
