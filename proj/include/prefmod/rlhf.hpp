#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "prefmod/rng.hpp"

namespace prefmod::rlhf {

// Tabular softmax policy over (context, response) with a frozen reference
// copy of the initial logits. Only the live logits ever change.
class PolicyTable {
public:
    explicit PolicyTable(Eigen::MatrixXd logits);
    PolicyTable(Eigen::MatrixXd logits, Eigen::MatrixXd reference_logits);

    Eigen::Index contexts() const { return logits_.rows(); }
    Eigen::Index responses() const { return logits_.cols(); }

    Eigen::MatrixXd& logits() { return logits_; }
    const Eigen::MatrixXd& logits() const { return logits_; }
    const Eigen::MatrixXd& reference_logits() const { return reference_; }

    Eigen::VectorXd log_probs(Eigen::Index context) const;
    Eigen::VectorXd reference_log_probs(Eigen::Index context) const;
    Eigen::VectorXd probs(Eigen::Index context) const;

private:
    Eigen::MatrixXd logits_;
    Eigen::MatrixXd reference_;
};

struct BanditEnv {
    Eigen::MatrixXd reward_table;       // contexts x responses
    Eigen::VectorXd prompt_distribution;  // sums to 1 within 1e-12

    void validate() const;
};

enum class DpoVariant { regular, margin, scaled };

struct DpoPair {
    Eigen::Index context = 0;
    Eigen::Index chosen = 0;
    Eigen::Index rejected = 0;
    double m = 1.0;
};

struct DpoLossGrad {
    double loss = 0.0;
    double u = 0.0;  // beta-scaled implicit reward gap
    Eigen::MatrixXd dlogits;  // w.r.t. policy logits; reference gets none
};

// u = beta * [(log pi - log pi_ref)(chosen) - (log pi - log pi_ref)(rejected)],
// then the pairwise loss transform of u. The exact softmax gradient touches
// only the chosen and rejected entries of the pair's context row.
DpoLossGrad dpo_loss(const PolicyTable& policy, const DpoPair& pair, double beta,
                     DpoVariant variant);

struct DpoConfig {
    double learning_rate = 0.05;
    std::int64_t batch_size = 32;
    std::int64_t epochs = 2;
    std::uint64_t seed = 0;
    double beta = 0.1;
    DpoVariant variant = DpoVariant::regular;

    void validate() const;
};

struct TraceRow {
    std::int64_t step = 0;
    double mean_reward = 0.0;  // minibatch mean loss for DPO runs
    double mean_kl = 0.0;      // exact mean KL(pi || pi_ref)
};

struct DpoResult {
    PolicyTable policy;
    std::vector<TraceRow> trace;
};

// Seeded minibatch SGD over dpo_loss; the reference logits never move.
DpoResult dpo_train(PolicyTable policy, const std::vector<DpoPair>& pairs,
                    const DpoConfig& config);

using RewardFn = std::function<double(Eigen::Index context, Eigen::Index response)>;

struct ReinforceStats {
    Eigen::Index context = 0;
    std::vector<Eigen::Index> responses;   // k samples
    Eigen::VectorXd shaped_rewards;        // reward - beta * log ratio
    Eigen::VectorXd advantages;            // leave-one-out, sums to zero exactly
    double mean_reward = 0.0;              // raw reward mean over the k samples
    double kl_sample_estimate = 0.0;       // mean log ratio over the k samples
};

// One REINFORCE update with a leave-one-out baseline over k sampled
// responses: A_i = (k * R_i - sum R) / (k - 1) on KL-shaped rewards,
// then exact tabular gradient ascent on mean_i A_i * log pi(y_i | x).
ReinforceStats reinforce_step(PolicyTable& policy, const BanditEnv& env, const RewardFn& reward,
                              int k, double beta, double learning_rate, Rng& rng);

struct ReinforceConfig {
    std::int64_t steps = 1000;
    int k = 4;
    double beta = 0.0;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ReinforceResult {
    PolicyTable policy;
    std::vector<TraceRow> trace;
};

// Runs reinforce_step for config.steps using the env reward table.
ReinforceResult reinforce_run(PolicyTable policy, const BanditEnv& env,
                              const ReinforceConfig& config);

struct KlReport {
    Eigen::VectorXd per_context;
    double mean = 0.0;
};

// Exact KL(pi || pi_ref) per context; identical logits give exactly zero.
KlReport kl_divergence(const PolicyTable& policy);

}  // namespace prefmod::rlhf
