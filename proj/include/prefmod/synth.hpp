#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "prefmod/bench.hpp"
#include "prefmod/prefdata.hpp"

namespace prefmod::synth {

struct GenConfig {
    std::uint64_t seed = 0;
    std::int64_t n_tasks = 1000;
    std::array<int, 2> n_annotators_range = {3, 5};
    Eigen::Index feature_dim = 16;
    Eigen::VectorXd true_weights;    // defaults to 1/sqrt(d) per axis when empty
    double annotator_noise_sd = 0.5;
    double position_bias = 0.0;      // per-task probability of forcing signs toward response 2
    double invalid_rate = 0.0;       // per-annotator probability of a -100 preference
    double val_fraction = 0.1;
    std::int64_t n_bench = 200;

    void validate() const;
    Eigen::VectorXd resolved_weights() const;
};

struct OracleTask {
    std::string task_id;
    double q1 = 0.0;  // latent quality w . phi
    double q2 = 0.0;
    double true_gap = 0.0;  // q2 - q1
    prefdata::Chosen truth = prefdata::Chosen::none;
    Eigen::VectorXd features_1;
    Eigen::VectorXd features_2;
};

struct Corpus {
    std::vector<prefdata::AnnotationTask> tasks;
    std::vector<OracleTask> oracle;  // aligned with tasks
};

// Latent-quality corpus: per task two feature vectors, per annotator a noisy
// quality gap discretized at +-0.25 / +-1.0 / +-2.5, helpfulness-anchored
// ratings, and a templated justification. The oracle direction is always
// sign(q2 - q1); position bias only flips annotator signs.
Corpus generate_corpus(const GenConfig& config);

// Preference bench drawn from RNG streams disjoint from the corpus tasks;
// chosen is the truly better response, categories cycle through all four.
bench::BenchSet generate_bench(const GenConfig& config);

// Literal reimplementation of subset selection and aggregation for oracle
// use: enumerates every size-3 index combination of the valid scores and
// applies the tie rules directly. Kept independent of prefdata's path.
prefdata::AggregatedPreference brute_force_aggregate(const std::vector<int>& scores);

}  // namespace prefmod::synth
