#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "prefmod/bench.hpp"
#include "prefmod/rng.hpp"

namespace prefmod::rmcore {

enum class HeadKind { regression, bradley_terry };

// One-hidden-layer reward model: out = W2^T tanh(W1^T x + b1) + b2.
// Output width is 5 (all attributes) or 1 (helpfulness-only or scalar reward).
struct RewardModelParams {
    Eigen::MatrixXd w1;  // d x h
    Eigen::VectorXd b1;  // h
    Eigen::MatrixXd w2;  // h x o
    Eigen::VectorXd b2;  // o
    HeadKind head_kind = HeadKind::regression;

    Eigen::Index feature_dim() const { return w1.rows(); }
    Eigen::Index hidden_dim() const { return w1.cols(); }
    Eigen::Index output_dim() const { return w2.cols(); }
    Eigen::Index param_count() const;

    void validate() const;  // shape consistency, o in {1,5}, BT implies o == 1

    Eigen::VectorXd to_flat() const;  // row-major per block, w1 b1 w2 b2
    static RewardModelParams from_flat(const Eigen::VectorXd& flat, Eigen::Index d,
                                       Eigen::Index h, Eigen::Index o, HeadKind kind);
};

// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer; biases zero.
RewardModelParams init_params(Eigen::Index d, Eigen::Index h, Eigen::Index o, HeadKind kind,
                              Rng& rng);

struct ForwardCache {
    Eigen::VectorXd input;   // d
    Eigen::VectorXd hidden;  // h, tanh activations
};

Eigen::VectorXd forward(const RewardModelParams& params, const Eigen::VectorXd& features,
                        ForwardCache* cache = nullptr);

// Scalar reward of a 1-output model.
double reward_scalar(const RewardModelParams& params, const Eigen::VectorXd& features);

struct ParamGrads {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;

    static ParamGrads zero_like(const RewardModelParams& p);
    void scale(double s);
    Eigen::VectorXd to_flat() const;
};

// Accumulates dLoss/dParams into grads given dLoss/dOutput; the cache must
// come from a forward pass of the same-shaped model.
void backward(const RewardModelParams& params, const ForwardCache& cache,
              const Eigen::VectorXd& upstream, ParamGrads& grads);

// Exact parameter copy; only the head kind changes. Requires a 1-output
// regression model (reduce 5-attribute heads via attribute weights first or
// train helpfulness-only).
RewardModelParams init_bt_from_regression(const RewardModelParams& regression);

double combine_attributes(const Eigen::VectorXd& predictions, const Eigen::VectorXd& weights);

struct WeightSearchResult {
    Eigen::VectorXd weights;  // 5
    double bench_overall = 0.0;
    std::int64_t n_candidates = 0;
};

// Exhaustive per-axis grid over [-1, 1] scored by bench overall accuracy.
// step must divide the range evenly; ties keep the first candidate in
// lexicographic enumeration order.
WeightSearchResult grid_search_weights(const RewardModelParams& model,
                                       const bench::BenchSet& set, double step);

// p = weak + alpha * (strong - weak), elementwise over every parameter.
// alpha 0 and 1 return bit-exact copies of weak and strong.
RewardModelParams expo(const RewardModelParams& weak, const RewardModelParams& strong,
                       double alpha);

struct PreferencePair {
    Eigen::VectorXd chosen;
    Eigen::VectorXd rejected;
    double m = 1.0;
};

// Fraction of pairs with reward(chosen) > reward(rejected); ties incorrect.
double pairwise_accuracy(const RewardModelParams& params,
                         const std::vector<PreferencePair>& pairs);

struct ExpoSearchResult {
    double alpha = 0.0;
    double val_accuracy = 0.0;
    RewardModelParams params;
};

// Two-stage alpha search by validation pairwise accuracy: coarse grid
// 1.1..2.0 step 0.1, then 0.01-step fine grid +-0.09 around the coarse
// winner. Replacement on strict improvement only, so ties keep the smaller
// alpha and a flat profile keeps the coarse winner. Alpha never leaves
// [1.01, 2.09].
ExpoSearchResult expo_search(const RewardModelParams& weak, const RewardModelParams& strong,
                             const std::vector<PreferencePair>& val_pairs);

}  // namespace prefmod::rmcore
