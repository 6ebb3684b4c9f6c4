#include "prefmod/rlhf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prefmod/errors.hpp"
#include "prefmod/losses.hpp"

namespace prefmod::rlhf {

namespace {

constexpr std::uint64_t kDpoEpochStream = 0x64706f00'00000000ULL;

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    return logits.array() - lse;
}

void check_table(const Eigen::MatrixXd& logits) {
    if (logits.rows() < 1 || logits.cols() < 2)
        throw ConfigError("policy table needs at least 1 context and 2 responses");
    if (!logits.allFinite()) throw NumericalError("non-finite logits");
}

}  // namespace

PolicyTable::PolicyTable(Eigen::MatrixXd logits) : logits_(std::move(logits)), reference_(logits_) {
    check_table(logits_);
}

PolicyTable::PolicyTable(Eigen::MatrixXd logits, Eigen::MatrixXd reference_logits)
    : logits_(std::move(logits)), reference_(std::move(reference_logits)) {
    check_table(logits_);
    check_table(reference_);
    if (logits_.rows() != reference_.rows() || logits_.cols() != reference_.cols())
        throw ConfigError("policy and reference shapes differ");
}

Eigen::VectorXd PolicyTable::log_probs(Eigen::Index context) const {
    if (context < 0 || context >= contexts()) throw DataError("context index out of range");
    return log_softmax(logits_.row(context).transpose());
}

Eigen::VectorXd PolicyTable::reference_log_probs(Eigen::Index context) const {
    if (context < 0 || context >= contexts()) throw DataError("context index out of range");
    return log_softmax(reference_.row(context).transpose());
}

Eigen::VectorXd PolicyTable::probs(Eigen::Index context) const {
    return log_probs(context).array().exp();
}

void BanditEnv::validate() const {
    if (reward_table.rows() < 1 || reward_table.cols() < 2)
        throw ConfigError("reward table needs at least 1 context and 2 responses");
    if (!reward_table.allFinite()) throw NumericalError("non-finite reward table");
    if (prompt_distribution.size() != reward_table.rows())
        throw ConfigError("prompt distribution size does not match contexts");
    if ((prompt_distribution.array() < 0.0).any())
        throw ConfigError("prompt distribution has negative mass");
    if (std::abs(prompt_distribution.sum() - 1.0) > 1e-12)
        throw ConfigError("prompt distribution must sum to 1");
}

DpoLossGrad dpo_loss(const PolicyTable& policy, const DpoPair& pair, double beta,
                     DpoVariant variant) {
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    if (pair.context < 0 || pair.context >= policy.contexts())
        throw DataError("context index out of range");
    if (pair.chosen < 0 || pair.chosen >= policy.responses() || pair.rejected < 0 ||
        pair.rejected >= policy.responses())
        throw DataError("response index out of range");
    if (pair.chosen == pair.rejected) throw DataError("chosen and rejected responses are equal");
    if (variant != DpoVariant::regular && pair.m < 1.0)
        throw DataError("margin/scaled pairs need m >= 1");

    const Eigen::VectorXd lp = policy.log_probs(pair.context);
    const Eigen::VectorXd lr = policy.reference_log_probs(pair.context);
    const double u = beta * ((lp(pair.chosen) - lr(pair.chosen)) -
                             (lp(pair.rejected) - lr(pair.rejected)));

    losses::LossGrad lg;
    switch (variant) {
        case DpoVariant::regular: lg = losses::loss_regular_bt(u); break;
        case DpoVariant::margin: lg = losses::loss_margin_bt(u, pair.m); break;
        case DpoVariant::scaled: lg = losses::loss_scaled_bt(u, pair.m); break;
    }

    // d u / d logit_j = beta * (delta_{j,chosen} - delta_{j,rejected}); the
    // softmax terms of the two log-probs cancel.
    DpoLossGrad out;
    out.loss = lg.loss;
    out.u = u;
    out.dlogits = Eigen::MatrixXd::Zero(policy.contexts(), policy.responses());
    out.dlogits(pair.context, pair.chosen) = lg.dloss_ddelta * beta;
    out.dlogits(pair.context, pair.rejected) = -lg.dloss_ddelta * beta;
    return out;
}

void DpoConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
}

DpoResult dpo_train(PolicyTable policy, const std::vector<DpoPair>& pairs,
                    const DpoConfig& config) {
    config.validate();
    if (pairs.empty()) throw DataError("empty preference corpus");

    DpoResult result{std::move(policy), {}};
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::int64_t step = 0;
    for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng = derive_rng(config.seed, kDpoEpochStream + static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
        for (std::size_t at = 0; at < order.size();
             at += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
            ++step;
            Eigen::MatrixXd grad =
                Eigen::MatrixXd::Zero(result.policy.contexts(), result.policy.responses());
            double batch_loss = 0.0;
            for (std::size_t i = at; i < end; ++i) {
                const auto lg = dpo_loss(result.policy, pairs[order[i]], config.beta,
                                         config.variant);
                batch_loss += lg.loss;
                grad += lg.dlogits;
            }
            const double inv = 1.0 / static_cast<double>(end - at);
            batch_loss *= inv;
            if (!std::isfinite(batch_loss))
                throw NumericalError("non-finite loss at step " + std::to_string(step));
            result.policy.logits() -= (config.learning_rate * inv) * grad;
            if (!result.policy.logits().allFinite())
                throw NumericalError("non-finite logits at step " + std::to_string(step));
            result.trace.push_back({step, batch_loss, kl_divergence(result.policy).mean});
        }
    }
    return result;
}

namespace {

Eigen::Index sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

}  // namespace

ReinforceStats reinforce_step(PolicyTable& policy, const BanditEnv& env, const RewardFn& reward,
                              int k, double beta, double learning_rate, Rng& rng) {
    if (k < 2) throw ConfigError("need at least 2 samples for the leave-one-out baseline");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (beta < 0.0) throw ConfigError("beta must be >= 0");
    env.validate();
    if (env.reward_table.rows() != policy.contexts() ||
        env.reward_table.cols() != policy.responses())
        throw ConfigError("environment and policy shapes differ");

    ReinforceStats stats;
    stats.context = sample_categorical(env.prompt_distribution, rng);
    const Eigen::VectorXd probs = policy.probs(stats.context);
    const Eigen::VectorXd lp = policy.log_probs(stats.context);
    const Eigen::VectorXd lref = policy.reference_log_probs(stats.context);

    stats.responses.resize(static_cast<std::size_t>(k));
    stats.shaped_rewards.resize(k);
    double raw_sum = 0.0, ratio_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const Eigen::Index y = sample_categorical(probs, rng);
        stats.responses[static_cast<std::size_t>(i)] = y;
        const double r = reward(stats.context, y);
        if (!std::isfinite(r)) throw NumericalError("non-finite reward");
        const double ratio = lp(y) - lref(y);
        stats.shaped_rewards(i) = r - beta * ratio;
        raw_sum += r;
        ratio_sum += ratio;
    }
    stats.mean_reward = raw_sum / static_cast<double>(k);
    stats.kl_sample_estimate = ratio_sum / static_cast<double>(k);

    // Leave-one-out advantages: A_i = (k R_i - sum R) / (k - 1). The identity
    // sum A_i = 0 is algebraic; the last advantage is the exact negation of
    // the partial sum so it also holds in floating point (<= 1 ulp shift).
    const double total = stats.shaped_rewards.sum();
    stats.advantages.resize(k);
    double partial = 0.0;
    for (int i = 0; i < k - 1; ++i) {
        stats.advantages(i) = (static_cast<double>(k) * stats.shaped_rewards(i) - total) /
                              static_cast<double>(k - 1);
        partial += stats.advantages(i);
    }
    stats.advantages(k - 1) = -partial;

    // Exact policy gradient of mean_i A_i log pi(y_i | x) for a softmax row.
    Eigen::VectorXd g = -(stats.advantages.sum() / static_cast<double>(k)) * probs;
    for (int i = 0; i < k; ++i)
        g(stats.responses[static_cast<std::size_t>(i)]) += stats.advantages(i) / static_cast<double>(k);
    policy.logits().row(stats.context) += learning_rate * g.transpose();
    if (!policy.logits().allFinite()) throw NumericalError("non-finite logits after update");
    return stats;
}

void ReinforceConfig::validate() const {
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (k < 2) throw ConfigError("need at least 2 samples for the leave-one-out baseline");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (beta < 0.0) throw ConfigError("beta must be >= 0");
}

ReinforceResult reinforce_run(PolicyTable policy, const BanditEnv& env,
                              const ReinforceConfig& config) {
    config.validate();
    env.validate();
    ReinforceResult result{std::move(policy), {}};
    Rng rng = derive_rng(config.seed, 0x72656900'00000000ULL);
    const RewardFn reward = [&env](Eigen::Index c, Eigen::Index y) {
        return env.reward_table(c, y);
    };
    for (std::int64_t step = 1; step <= config.steps; ++step) {
        const auto stats = reinforce_step(result.policy, env, reward, config.k, config.beta,
                                          config.learning_rate, rng);
        result.trace.push_back({step, stats.mean_reward, kl_divergence(result.policy).mean});
    }
    return result;
}

KlReport kl_divergence(const PolicyTable& policy) {
    KlReport report;
    report.per_context.resize(policy.contexts());
    for (Eigen::Index c = 0; c < policy.contexts(); ++c) {
        const Eigen::VectorXd lp = policy.log_probs(c);
        const Eigen::VectorXd lr = policy.reference_log_probs(c);
        report.per_context(c) = (lp.array().exp() * (lp - lr).array()).sum();
    }
    report.mean = report.per_context.mean();
    return report;
}

}  // namespace prefmod::rlhf
