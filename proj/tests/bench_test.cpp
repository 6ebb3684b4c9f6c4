#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "prefmod/bench.hpp"
#include "prefmod/errors.hpp"

using namespace prefmod;
using namespace prefmod::bench;

namespace {

BenchTask make_task(Category c, ReasoningKind k, double chosen, double rejected) {
    BenchTask t;
    t.category = c;
    t.reasoning_kind = k;
    t.chosen = Eigen::VectorXd::Constant(1, chosen);
    t.rejected = Eigen::VectorXd::Constant(1, rejected);
    return t;
}

double first_coord(const Eigen::VectorXd& v) { return v(0); }

// chat 2/2, chat_hard 1/2, safety 3/4 (one tie), math 2/2, code 4/8.
BenchSet mixed_set() {
    BenchSet set;
    set.push_back(make_task(Category::chat, ReasoningKind::none, 1.0, 0.0));
    set.push_back(make_task(Category::chat, ReasoningKind::none, 2.0, 0.0));
    set.push_back(make_task(Category::chat_hard, ReasoningKind::none, 1.0, 0.0));
    set.push_back(make_task(Category::chat_hard, ReasoningKind::none, 0.0, 1.0));
    set.push_back(make_task(Category::safety, ReasoningKind::none, 1.0, 0.0));
    set.push_back(make_task(Category::safety, ReasoningKind::none, 1.0, 0.0));
    set.push_back(make_task(Category::safety, ReasoningKind::none, 1.0, 0.0));
    set.push_back(make_task(Category::safety, ReasoningKind::none, 0.5, 0.5));
    set.push_back(make_task(Category::reasoning, ReasoningKind::math, 1.0, 0.0));
    set.push_back(make_task(Category::reasoning, ReasoningKind::math, 1.0, 0.0));
    for (int i = 0; i < 4; ++i)
        set.push_back(make_task(Category::reasoning, ReasoningKind::code, 1.0, 0.0));
    for (int i = 0; i < 4; ++i)
        set.push_back(make_task(Category::reasoning, ReasoningKind::code, 0.0, 1.0));
    return set;
}

}  // namespace

TEST_CASE("enum names") {
    CHECK(std::string(category_name(Category::chat)) == "chat");
    CHECK(std::string(category_name(Category::chat_hard)) == "chat_hard");
    CHECK(std::string(category_name(Category::safety)) == "safety");
    CHECK(std::string(category_name(Category::reasoning)) == "reasoning");
    CHECK(std::string(reasoning_kind_name(ReasoningKind::none)) == "none");
    CHECK(std::string(reasoning_kind_name(ReasoningKind::math)) == "math");
    CHECK(std::string(reasoning_kind_name(ReasoningKind::code)) == "code");
}

TEST_CASE("category accuracies and the reasoning mean") {
    const auto set = mixed_set();
    const auto report = score_bench(first_coord, set);

    CHECK(report.accuracy.at("chat") == 1.0);
    CHECK(report.accuracy.at("chat_hard") == 0.5);
    CHECK(report.accuracy.at("safety") == 0.75);
    // Math and code average as kinds (1.0 and 0.5), not pooled (6/10).
    CHECK(report.accuracy.at("reasoning") == 0.75);
    CHECK(report.overall == 0.75);

    REQUIRE(report.correct.size() == set.size());
    const std::vector<bool> expected = {true, true, true,  false, true, true, true, false, true,
                                        true, true, true,  true,  true, false, false, false, false};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CAPTURE(i);
        CHECK(report.correct[i] == expected[i]);
    }
}

TEST_CASE("ties count against the model") {
    BenchSet set = mixed_set();
    // Flip every task to an exact tie: all categories drop to zero.
    for (auto& t : set) t.rejected = t.chosen;
    const auto report = score_bench(first_coord, set);
    CHECK(report.overall == 0.0);
    for (const auto& [name, acc] : report.accuracy) {
        CAPTURE(name);
        CHECK(acc == 0.0);
    }
}

TEST_CASE("precomputed rewards give the same report") {
    const auto set = mixed_set();
    std::vector<std::pair<double, double>> rewards;
    for (const auto& t : set) rewards.emplace_back(t.chosen(0), t.rejected(0));

    const auto direct = score_bench(first_coord, set);
    const auto precomputed = score_from_rewards(rewards, set);
    CHECK(direct.overall == precomputed.overall);
    CHECK(direct.accuracy == precomputed.accuracy);
    CHECK(direct.correct == precomputed.correct);
}

TEST_CASE("bench set validation") {
    CHECK_THROWS_AS(score_bench(first_coord, {}), DataError);

    // Dropping any one category invalidates the set.
    const auto full = mixed_set();
    for (const auto drop :
         {Category::chat, Category::chat_hard, Category::safety, Category::reasoning}) {
        CAPTURE(category_name(drop));
        BenchSet partial;
        for (const auto& t : full)
            if (t.category != drop) partial.push_back(t);
        CHECK_THROWS_AS(score_bench(first_coord, partial), DataError);
    }

    // Reasoning needs both kinds.
    BenchSet no_code;
    for (const auto& t : full)
        if (t.reasoning_kind != ReasoningKind::code) no_code.push_back(t);
    CHECK_THROWS_AS(score_bench(first_coord, no_code), DataError);

    // Kind and category must agree in both directions.
    BenchSet bad_kind = full;
    bad_kind[0].reasoning_kind = ReasoningKind::math;
    CHECK_THROWS_AS(score_bench(first_coord, bad_kind), DataError);
    BenchSet bare_reasoning = full;
    bare_reasoning.back().reasoning_kind = ReasoningKind::none;
    CHECK_THROWS_AS(score_bench(first_coord, bare_reasoning), DataError);

    CHECK_THROWS_AS(score_from_rewards({{1.0, 0.0}}, full), DataError);

    const auto nan_scorer = [](const Eigen::VectorXd&) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(score_bench(nan_scorer, full), NumericalError);
}
