#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "prefmod/rmcore.hpp"

namespace prefmod::trainer {

enum class Optimizer { sgd, adaptive_moments };

enum class LossKind {
    regression_all,           // 5-attribute MSE
    regression_helpfulness,   // helpfulness-only MSE
    bt_regular,
    bt_margin,
    bt_scaled,
};

bool is_regression(LossKind k);

// epochs == 0 means "loss-kind default": 1 for the pairwise losses, 2 for
// regression. Adaptive moments are AdamW-style: beta1 0.9, beta2 0.999,
// eps 1e-8, decoupled weight decay. The first 10 steps ramp the learning
// rate linearly.
struct TrainConfig {
    double learning_rate = 1e-3;
    std::int64_t batch_size = 128;
    std::int64_t epochs = 0;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adaptive_moments;
    double weight_decay = 0.01;
    LossKind loss_kind = LossKind::regression_all;
    std::int64_t checkpoint_every = 10;

    std::int64_t resolved_epochs() const;
    void validate() const;
};

inline constexpr std::int64_t kWarmupSteps = 10;

struct RegressionExample {
    Eigen::VectorXd features;
    Eigen::VectorXd targets;  // width matches the model head
};

struct RegressionCorpus {
    std::vector<RegressionExample> train;
    std::vector<RegressionExample> val;
};

struct PreferenceCorpus {
    std::vector<rmcore::PreferencePair> train;
    std::vector<rmcore::PreferencePair> val;
};

struct CheckpointEntry {
    std::int64_t step = 0;
    rmcore::RewardModelParams params;
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN when the val split is empty
};

struct TrainResult {
    rmcore::RewardModelParams final_params;
    rmcore::RewardModelParams best_val_params;
    std::int64_t best_val_step = 0;
    // step 0, every checkpoint_every steps, and the final step
    std::vector<CheckpointEntry> checkpoints;
};

// Seeded minibatch loops; the epoch shuffle is a pure function of
// (seed, epoch), so identical inputs give bit-identical parameters.
// Non-finite losses or parameters abort.
TrainResult train_regression(const TrainConfig& config, const RegressionCorpus& corpus,
                             const rmcore::RewardModelParams& init);
TrainResult train_bt(const TrainConfig& config, const PreferenceCorpus& corpus,
                     const rmcore::RewardModelParams& init);

// Mean loss over a corpus slice with fixed parameters.
double regression_loss(const rmcore::RewardModelParams& params,
                       const std::vector<RegressionExample>& examples);
double bt_loss(const rmcore::RewardModelParams& params,
               const std::vector<rmcore::PreferencePair>& pairs, LossKind kind);

using DownstreamMetric = std::function<double(const rmcore::RewardModelParams&)>;

// Candidate set is the k lowest-validation-loss checkpoints plus the last
// one; the candidate with the highest downstream metric wins, earliest step
// on ties.
const CheckpointEntry& select_checkpoint(const std::vector<CheckpointEntry>& checkpoints,
                                         const DownstreamMetric& metric, int k = 3);

}  // namespace prefmod::trainer
