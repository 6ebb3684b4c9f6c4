#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "prefmod/bench.hpp"
#include "prefmod/errors.hpp"
#include "prefmod/justif.hpp"
#include "prefmod/prefdata.hpp"
#include "prefmod/synth.hpp"

using namespace prefmod;
using namespace prefmod::synth;

namespace {

int expected_discretized(double gap) {
    const double a = std::abs(gap);
    const int mag = a >= 2.5 ? 3 : a >= 1.0 ? 2 : 1;
    return gap < 0.0 ? -mag : mag;
}

bool ratings_in_range(const prefdata::AttributeRatings& r) {
    for (int v : {r.helpfulness, r.correctness, r.coherence, r.complexity, r.verbosity})
        if (v < 0 || v > 4) return false;
    return true;
}

}  // namespace

TEST_CASE("generator config validation") {
    GenConfig ok;
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.resolved_weights().size() == 16);
    CHECK(ok.resolved_weights()(0) == 0.25);  // 1/sqrt(16)
    CHECK(ok.resolved_weights().norm() == doctest::Approx(1.0).epsilon(1e-12));

    GenConfig custom = ok;
    custom.feature_dim = 2;
    custom.true_weights = Eigen::VectorXd::Constant(2, 0.5);
    CHECK(custom.resolved_weights()(1) == 0.5);

    auto bad = [](auto mutate) {
        GenConfig config;
        mutate(config);
        CHECK_THROWS_AS(config.validate(), ConfigError);
    };
    bad([](GenConfig& c) { c.n_tasks = 0; });
    bad([](GenConfig& c) { c.feature_dim = 0; });
    bad([](GenConfig& c) { c.n_annotators_range = {0, 3}; });
    bad([](GenConfig& c) { c.n_annotators_range = {3, 2}; });
    bad([](GenConfig& c) { c.annotator_noise_sd = -0.1; });
    bad([](GenConfig& c) { c.position_bias = 1.0; });
    bad([](GenConfig& c) { c.position_bias = -0.1; });
    bad([](GenConfig& c) { c.invalid_rate = 1.0; });
    bad([](GenConfig& c) { c.val_fraction = 1.0; });
    bad([](GenConfig& c) { c.n_bench = -1; });
    bad([](GenConfig& c) { c.true_weights = Eigen::VectorXd::Ones(3); });
}

TEST_CASE("corpus shape and identifiers") {
    GenConfig config;
    config.n_tasks = 50;
    config.feature_dim = 4;
    config.seed = 7;
    const auto corpus = generate_corpus(config);

    REQUIRE(corpus.tasks.size() == 50);
    REQUIRE(corpus.oracle.size() == 50);
    CHECK(corpus.tasks[0].task_id == "t000000");
    CHECK(corpus.tasks[49].task_id == "t000049");

    const auto w = config.resolved_weights();
    for (std::size_t i = 0; i < corpus.tasks.size(); ++i) {
        CAPTURE(i);
        const auto& task = corpus.tasks[i];
        const auto& oracle = corpus.oracle[i];
        CHECK(task.task_id == oracle.task_id);
        CHECK(task.prompt == "Synthetic prompt " + task.task_id);
        CHECK(oracle.features_1.size() == 4);
        CHECK(oracle.features_2.size() == 4);
        CHECK(oracle.q1 == doctest::Approx(w.dot(oracle.features_1)).epsilon(1e-12));
        CHECK(oracle.q2 == doctest::Approx(w.dot(oracle.features_2)).epsilon(1e-12));
        CHECK(oracle.true_gap == doctest::Approx(oracle.q2 - oracle.q1).epsilon(1e-12));
        CHECK(oracle.truth == (oracle.true_gap >= 0.0 ? prefdata::Chosen::response_2
                                                      : prefdata::Chosen::response_1));

        const auto n = task.annotations.size();
        CHECK(n >= 3);
        CHECK(n <= 5);
        for (std::size_t a = 0; a < n; ++a) {
            const auto& ann = task.annotations[a];
            CHECK(ann.annotator_id == task.task_id + "_a" + std::to_string(a));
            CHECK(prefdata::is_preference_score(ann.preference));
            CHECK(ratings_in_range(ann.ratings_1));
            CHECK(ratings_in_range(ann.ratings_2));
        }
    }
}

TEST_CASE("corpus generation is deterministic") {
    GenConfig config;
    config.n_tasks = 20;
    config.feature_dim = 3;
    config.seed = 99;
    config.invalid_rate = 0.1;
    const auto a = generate_corpus(config);
    const auto b = generate_corpus(config);

    REQUIRE(a.tasks.size() == b.tasks.size());
    for (std::size_t i = 0; i < a.tasks.size(); ++i) {
        CHECK(a.oracle[i].q1 == b.oracle[i].q1);
        CHECK(a.oracle[i].features_2 == b.oracle[i].features_2);
        REQUIRE(a.tasks[i].annotations.size() == b.tasks[i].annotations.size());
        for (std::size_t j = 0; j < a.tasks[i].annotations.size(); ++j) {
            CHECK(a.tasks[i].annotations[j].preference == b.tasks[i].annotations[j].preference);
            CHECK(a.tasks[i].annotations[j].justification ==
                  b.tasks[i].annotations[j].justification);
        }
    }

    GenConfig other = config;
    other.seed = 100;
    const auto c = generate_corpus(other);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.tasks.size() && !any_diff; ++i)
        any_diff = a.oracle[i].q1 != c.oracle[i].q1;
    CHECK(any_diff);
}

TEST_CASE("noise-free annotators read the latent gap exactly") {
    GenConfig config;
    config.n_tasks = 120;
    config.feature_dim = 6;
    config.annotator_noise_sd = 0.0;
    config.seed = 21;
    const auto corpus = generate_corpus(config);

    for (std::size_t i = 0; i < corpus.tasks.size(); ++i) {
        CAPTURE(i);
        const int want = expected_discretized(corpus.oracle[i].true_gap);
        for (const auto& ann : corpus.tasks[i].annotations) CHECK(ann.preference == want);
    }
}

TEST_CASE("position bias forces signs toward the second response") {
    GenConfig config;
    config.n_tasks = 200;
    config.feature_dim = 6;
    config.annotator_noise_sd = 0.0;
    config.position_bias = 0.999;
    config.seed = 77;
    const auto corpus = generate_corpus(config);

    int negative_gap_tasks = 0, violating = 0;
    for (std::size_t i = 0; i < corpus.tasks.size(); ++i) {
        if (corpus.oracle[i].true_gap >= 0.0) continue;
        ++negative_gap_tasks;
        for (const auto& ann : corpus.tasks[i].annotations) {
            if (ann.preference < 0) {
                ++violating;
                break;
            }
        }
    }
    CHECK(negative_gap_tasks > 50);
    CHECK(violating <= 2);
}

TEST_CASE("invalid annotations appear at the configured rate") {
    GenConfig config;
    config.n_tasks = 300;
    config.invalid_rate = 0.3;
    config.seed = 31;
    const auto corpus = generate_corpus(config);

    std::int64_t invalid = 0, total = 0;
    for (const auto& task : corpus.tasks) {
        for (const auto& ann : task.annotations) {
            ++total;
            if (ann.preference == prefdata::kInvalidPreference) {
                ++invalid;
                CHECK(ann.justification == "Unable to judge these responses.");
            }
        }
    }
    const double rate = static_cast<double>(invalid) / static_cast<double>(total);
    CHECK(rate > 0.2);
    CHECK(rate < 0.4);

    GenConfig clean = config;
    clean.invalid_rate = 0.0;
    for (const auto& task : generate_corpus(clean).tasks)
        for (const auto& ann : task.annotations)
            CHECK(ann.preference != prefdata::kInvalidPreference);
}

TEST_CASE("justifications parse and point the right way") {
    GenConfig config;
    config.n_tasks = 400;
    config.seed = 47;
    const auto corpus = generate_corpus(config);

    std::int64_t valid = 0, parseable = 0;
    for (const auto& task : corpus.tasks) {
        for (const auto& ann : task.annotations) {
            if (ann.preference == prefdata::kInvalidPreference) continue;
            ++valid;
            const auto parsed = justif::parse_justification(ann.justification);
            if (parsed.source_position == justif::SourcePosition::none) continue;
            ++parseable;
            const int dir = justif::statement_direction(parsed.statement);
            CHECK(dir == (ann.preference < 0 ? 1 : 2));
        }
    }
    CHECK(valid > 1000);
    // The template mix leaves ~2% without a statement.
    CHECK(static_cast<double>(parseable) >= 0.95 * static_cast<double>(valid));
    CHECK(parseable < valid);
}

TEST_CASE("validation split striping is exact") {
    GenConfig config;
    config.n_tasks = 1000;
    config.val_fraction = 0.1;
    config.seed = 5;
    const auto corpus = generate_corpus(config);
    std::int64_t val = 0;
    for (const auto& t : corpus.tasks) val += t.split == prefdata::Split::val;
    CHECK(val == 100);
    // Stripes land at the end of each tenth.
    CHECK(corpus.tasks[8].split == prefdata::Split::train);
    CHECK(corpus.tasks[9].split == prefdata::Split::val);
    CHECK(corpus.tasks[19].split == prefdata::Split::val);

    GenConfig half = config;
    half.n_tasks = 7;
    half.val_fraction = 0.5;
    const auto small = generate_corpus(half);
    std::vector<prefdata::Split> splits;
    for (const auto& t : small.tasks) splits.push_back(t.split);
    CHECK(splits == std::vector<prefdata::Split>{prefdata::Split::train, prefdata::Split::val,
                                                 prefdata::Split::train, prefdata::Split::val,
                                                 prefdata::Split::train, prefdata::Split::val,
                                                 prefdata::Split::train});

    GenConfig none = config;
    none.n_tasks = 50;
    none.val_fraction = 0.0;
    for (const auto& t : generate_corpus(none).tasks) CHECK(t.split == prefdata::Split::train);
}

TEST_CASE("bench generation") {
    GenConfig config;
    config.n_bench = 400;
    config.feature_dim = 8;
    config.seed = 13;
    const auto set = generate_bench(config);
    REQUIRE(set.size() == 400);

    const auto w = config.resolved_weights();
    using bench::Category;
    using bench::ReasoningKind;
    const Category cycle[4] = {Category::chat, Category::chat_hard, Category::safety,
                               Category::reasoning};
    double gap_sum[4] = {0, 0, 0, 0};
    std::int64_t reasoning_seen = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        CAPTURE(i);
        const auto& t = set[i];
        CHECK(t.category == cycle[i % 4]);
        if (t.category == Category::reasoning) {
            CHECK(t.reasoning_kind ==
                  (reasoning_seen % 2 == 0 ? ReasoningKind::math : ReasoningKind::code));
            ++reasoning_seen;
        } else {
            CHECK(t.reasoning_kind == ReasoningKind::none);
        }
        CHECK(t.prompt.size() == 8);
        CHECK(t.chosen.size() == 8);
        CHECK(t.rejected.size() == 8);
        // chosen is the truly better side under the latent weights
        CHECK(w.dot(t.chosen) >= w.dot(t.rejected));
        gap_sum[i % 4] += w.dot(t.chosen) - w.dot(t.rejected);
    }

    // Difficulty ordering follows the per-category gap scales 1.5/0.3/1.0/0.7.
    CHECK(gap_sum[0] > gap_sum[2]);
    CHECK(gap_sum[2] > gap_sum[3]);
    CHECK(gap_sum[3] > gap_sum[1]);

    // The true scorer aces its own bench.
    const auto report = bench::score_bench([&](const Eigen::VectorXd& x) { return w.dot(x); }, set);
    CHECK(report.overall == 1.0);

    // Deterministic regeneration.
    const auto again = generate_bench(config);
    CHECK(again[7].chosen == set[7].chosen);
    CHECK(generate_bench(config).size() == set.size());

    GenConfig empty = config;
    empty.n_bench = 0;
    CHECK(generate_bench(empty).empty());
}

TEST_CASE("reference aggregation worked examples") {
    const auto spread = brute_force_aggregate({-3, -1, 2, 3});
    CHECK(spread.status == prefdata::AggregateStatus::dropped_spread);
    CHECK(spread.used_annotations == std::vector<int>{-1, 2, 3});
    CHECK(spread.overall == 1);

    const auto zero = brute_force_aggregate({-1, -1, 1});
    CHECK(zero.status == prefdata::AggregateStatus::dropped_zero);
    CHECK(zero.overall == 0);

    const auto kept = brute_force_aggregate({2, 2, 3});
    CHECK(kept.status == prefdata::AggregateStatus::kept);
    CHECK(kept.overall == 2);
    CHECK(kept.magnitude == 2);
    CHECK(kept.chosen == prefdata::Chosen::response_2);

    const auto neg = brute_force_aggregate({-3, -2, -3});
    CHECK(neg.status == prefdata::AggregateStatus::kept);
    CHECK(neg.overall == -3);
    CHECK(neg.chosen == prefdata::Chosen::response_1);

    const auto invalid = brute_force_aggregate({-100, -100});
    CHECK(invalid.status == prefdata::AggregateStatus::dropped_all_invalid);

    CHECK_THROWS_AS(brute_force_aggregate({1, 1, 1, 1, 1, 1, 1, 1, 1}), DataError);
    CHECK_THROWS_AS(brute_force_aggregate({0}), DataError);
    CHECK_THROWS_AS(brute_force_aggregate({4}), DataError);
}
