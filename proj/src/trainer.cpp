#include "prefmod/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prefmod/errors.hpp"
#include "prefmod/losses.hpp"

namespace prefmod::trainer {

bool is_regression(LossKind k) {
    return k == LossKind::regression_all || k == LossKind::regression_helpfulness;
}

std::int64_t TrainConfig::resolved_epochs() const {
    if (epochs > 0) return epochs;
    return is_regression(loss_kind) ? 2 : 1;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 1");
    if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
constexpr std::uint64_t kEpochStream = 0x7261696e'00000000ULL;

losses::LossGrad pair_loss(double delta, double m, LossKind kind) {
    switch (kind) {
        case LossKind::bt_regular: return losses::loss_regular_bt(delta);
        case LossKind::bt_margin: return losses::loss_margin_bt(delta, m);
        case LossKind::bt_scaled: return losses::loss_scaled_bt(delta, m);
        default: throw ConfigError("not a pairwise loss kind");
    }
}

// AdamW-style moment state, flat over all parameter blocks.
struct OptimizerState {
    rmcore::ParamGrads m;
    rmcore::ParamGrads v;
};

void apply_update(rmcore::RewardModelParams& params, const rmcore::ParamGrads& grads,
                  OptimizerState& state, const TrainConfig& config, std::int64_t step) {
    const double warm = std::min(1.0, static_cast<double>(step) / static_cast<double>(kWarmupSteps));
    const double lr = config.learning_rate * warm;
    if (config.optimizer == Optimizer::sgd) {
        params.w1 -= lr * grads.w1;
        params.b1 -= lr * grads.b1;
        params.w2 -= lr * grads.w2;
        params.b2 -= lr * grads.b2;
        return;
    }
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v.array() + (1.0 - kBeta2) * g.array().square();
        p -= (lr * ((m / c1).array() / ((v / c2).array().sqrt() + kEps) +
                    config.weight_decay * p.array()))
                 .matrix();
    };
    update(params.w1, state.m.w1, state.v.w1, grads.w1);
    update(params.b1, state.m.b1, state.v.b1, grads.b1);
    update(params.w2, state.m.w2, state.v.w2, grads.w2);
    update(params.b2, state.m.b2, state.v.b2, grads.b2);
}

void check_finite(double loss, const rmcore::RewardModelParams& params, std::int64_t step) {
    if (!std::isfinite(loss)) throw NumericalError("non-finite loss at step " + std::to_string(step));
    if (!params.w1.allFinite() || !params.b1.allFinite() || !params.w2.allFinite() ||
        !params.b2.allFinite())
        throw NumericalError("non-finite parameters at step " + std::to_string(step));
}

// Shared minibatch engine; example access is abstracted over the two corpus
// kinds through the loss callbacks.
template <typename Example>
TrainResult run_loop(const TrainConfig& config, const std::vector<Example>& train,
                     const std::vector<Example>& val, const rmcore::RewardModelParams& init,
                     const std::function<double(const rmcore::RewardModelParams&,
                                                const Example&, rmcore::ParamGrads*)>& example_loss) {
    config.validate();
    init.validate();
    if (train.empty()) throw DataError("empty training corpus");

    auto mean_loss = [&](const rmcore::RewardModelParams& p,
                         const std::vector<Example>& xs) -> double {
        if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
        double sum = 0.0;
        for (const auto& x : xs) sum += example_loss(p, x, nullptr);
        return sum / static_cast<double>(xs.size());
    };

    TrainResult result;
    rmcore::RewardModelParams params = init;
    OptimizerState state{rmcore::ParamGrads::zero_like(params),
                         rmcore::ParamGrads::zero_like(params)};

    auto record = [&](std::int64_t step) {
        if (!result.checkpoints.empty() && result.checkpoints.back().step == step) return;
        CheckpointEntry e;
        e.step = step;
        e.params = params;
        e.train_loss = mean_loss(params, train);
        e.val_loss = mean_loss(params, val);
        check_finite(e.train_loss, params, step);
        result.checkpoints.push_back(std::move(e));
    };
    record(0);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::int64_t step = 0;
    const std::int64_t epochs = config.resolved_epochs();
    for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng = derive_rng(config.seed, kEpochStream + static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
            ++step;
            rmcore::ParamGrads grads = rmcore::ParamGrads::zero_like(params);
            double batch_loss = 0.0;
            for (std::size_t i = at; i < end; ++i)
                batch_loss += example_loss(params, train[order[i]], &grads);
            const double inv = 1.0 / static_cast<double>(end - at);
            batch_loss *= inv;
            grads.scale(inv);
            check_finite(batch_loss, params, step);
            apply_update(params, grads, state, config, step);
            check_finite(batch_loss, params, step);
            if (step % config.checkpoint_every == 0) record(step);
        }
    }
    record(step);

    result.final_params = params;
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.checkpoints.size(); ++i) {
        const double v = result.checkpoints[i].val_loss;
        const double b = result.checkpoints[best].val_loss;
        if (std::isfinite(v) && (!std::isfinite(b) || v < b)) best = i;
    }
    result.best_val_params = result.checkpoints[best].params;
    result.best_val_step = result.checkpoints[best].step;
    return result;
}

}  // namespace

double regression_loss(const rmcore::RewardModelParams& params,
                       const std::vector<RegressionExample>& examples) {
    if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const auto& e : examples)
        sum += losses::loss_regression_mse(rmcore::forward(params, e.features), e.targets).loss;
    return sum / static_cast<double>(examples.size());
}

double bt_loss(const rmcore::RewardModelParams& params,
               const std::vector<rmcore::PreferencePair>& pairs, LossKind kind) {
    if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const auto& p : pairs) {
        const double delta =
            rmcore::reward_scalar(params, p.chosen) - rmcore::reward_scalar(params, p.rejected);
        sum += pair_loss(delta, p.m, kind).loss;
    }
    return sum / static_cast<double>(pairs.size());
}

TrainResult train_regression(const TrainConfig& config, const RegressionCorpus& corpus,
                             const rmcore::RewardModelParams& init) {
    if (!is_regression(config.loss_kind)) throw ConfigError("regression trainer needs a regression loss");
    if (init.head_kind != rmcore::HeadKind::regression)
        throw ConfigError("regression trainer needs a regression head");
    const Eigen::Index want = config.loss_kind == LossKind::regression_all ? 5 : 1;
    if (init.output_dim() != want) throw ConfigError("model output width does not match loss kind");
    for (const auto& e : corpus.train)
        if (e.targets.size() != want) throw DataError("target width does not match loss kind");
    for (const auto& e : corpus.val)
        if (e.targets.size() != want) throw DataError("target width does not match loss kind");

    std::function<double(const rmcore::RewardModelParams&, const RegressionExample&,
                         rmcore::ParamGrads*)>
        loss = [](const rmcore::RewardModelParams& p, const RegressionExample& e,
                  rmcore::ParamGrads* grads) {
            rmcore::ForwardCache cache;
            const Eigen::VectorXd pred = rmcore::forward(p, e.features, &cache);
            const auto lg = losses::loss_regression_mse(pred, e.targets);
            if (grads) rmcore::backward(p, cache, lg.dloss_dpred, *grads);
            return lg.loss;
        };
    return run_loop<RegressionExample>(config, corpus.train, corpus.val, init, loss);
}

TrainResult train_bt(const TrainConfig& config, const PreferenceCorpus& corpus,
                     const rmcore::RewardModelParams& init) {
    if (is_regression(config.loss_kind)) throw ConfigError("pairwise trainer needs a pairwise loss");
    if (init.head_kind != rmcore::HeadKind::bradley_terry)
        throw ConfigError("pairwise trainer needs a bradley_terry head");

    const LossKind kind = config.loss_kind;
    std::function<double(const rmcore::RewardModelParams&, const rmcore::PreferencePair&,
                         rmcore::ParamGrads*)>
        loss = [kind](const rmcore::RewardModelParams& p, const rmcore::PreferencePair& pair,
                      rmcore::ParamGrads* grads) {
            rmcore::ForwardCache cache_c, cache_r;
            const double rc = rmcore::forward(p, pair.chosen, &cache_c)(0);
            const double rr = rmcore::forward(p, pair.rejected, &cache_r)(0);
            const auto lg = pair_loss(rc - rr, pair.m, kind);
            if (grads) {
                Eigen::VectorXd up(1);
                up(0) = lg.dloss_ddelta;
                rmcore::backward(p, cache_c, up, *grads);
                up(0) = -lg.dloss_ddelta;
                rmcore::backward(p, cache_r, up, *grads);
            }
            return lg.loss;
        };
    return run_loop<rmcore::PreferencePair>(config, corpus.train, corpus.val, init, loss);
}

const CheckpointEntry& select_checkpoint(const std::vector<CheckpointEntry>& checkpoints,
                                         const DownstreamMetric& metric, int k) {
    if (checkpoints.empty()) throw DataError("no checkpoints");
    if (k < 1) throw ConfigError("candidate count must be >= 1");

    std::vector<std::size_t> by_val(checkpoints.size());
    std::iota(by_val.begin(), by_val.end(), 0);
    std::stable_sort(by_val.begin(), by_val.end(), [&](std::size_t a, std::size_t b) {
        const double va = checkpoints[a].val_loss, vb = checkpoints[b].val_loss;
        const bool fa = std::isfinite(va), fb = std::isfinite(vb);
        if (fa != fb) return fa;
        if (fa && va != vb) return va < vb;
        return checkpoints[a].step < checkpoints[b].step;
    });

    std::vector<std::size_t> candidates(
        by_val.begin(), by_val.begin() + std::min<std::size_t>(static_cast<std::size_t>(k),
                                                               by_val.size()));
    candidates.push_back(checkpoints.size() - 1);  // the last checkpoint always competes
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::size_t best = candidates.front();
    double best_metric = metric(checkpoints[best].params);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double m = metric(checkpoints[candidates[i]].params);
        if (m > best_metric) {
            best_metric = m;
            best = candidates[i];
        }
    }
    return checkpoints[best];
}

}  // namespace prefmod::trainer
