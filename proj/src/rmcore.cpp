#include "prefmod/rmcore.hpp"

#include <cmath>

#include "prefmod/errors.hpp"

namespace prefmod::rmcore {

Eigen::Index RewardModelParams::param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

void RewardModelParams::validate() const {
    const Eigen::Index d = w1.rows(), h = w1.cols(), o = w2.cols();
    if (d < 1 || h < 1) throw ConfigError("model dimensions must be positive");
    if (o != 1 && o != 5) throw ConfigError("output width must be 1 or 5");
    if (b1.size() != h || w2.rows() != h || b2.size() != o)
        throw ConfigError("inconsistent parameter shapes");
    if (head_kind == HeadKind::bradley_terry && o != 1)
        throw ConfigError("bradley_terry head requires a single output");
    if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite())
        throw NumericalError("non-finite parameters");
}

namespace {

void append_row_major(const Eigen::MatrixXd& m, Eigen::VectorXd& flat, Eigen::Index& at) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat(at++) = m(r, c);
}

void read_row_major(Eigen::MatrixXd& m, const Eigen::VectorXd& flat, Eigen::Index& at) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat(at++);
}

}  // namespace

Eigen::VectorXd RewardModelParams::to_flat() const {
    Eigen::VectorXd flat(param_count());
    Eigen::Index at = 0;
    append_row_major(w1, flat, at);
    flat.segment(at, b1.size()) = b1;
    at += b1.size();
    append_row_major(w2, flat, at);
    flat.segment(at, b2.size()) = b2;
    return flat;
}

RewardModelParams RewardModelParams::from_flat(const Eigen::VectorXd& flat, Eigen::Index d,
                                               Eigen::Index h, Eigen::Index o, HeadKind kind) {
    RewardModelParams p;
    p.w1.resize(d, h);
    p.b1.resize(h);
    p.w2.resize(h, o);
    p.b2.resize(o);
    p.head_kind = kind;
    if (flat.size() != p.param_count()) throw ConfigError("flat parameter size mismatch");
    Eigen::Index at = 0;
    read_row_major(p.w1, flat, at);
    p.b1 = flat.segment(at, h);
    at += h;
    read_row_major(p.w2, flat, at);
    p.b2 = flat.segment(at, o);
    p.validate();
    return p;
}

RewardModelParams init_params(Eigen::Index d, Eigen::Index h, Eigen::Index o, HeadKind kind,
                              Rng& rng) {
    RewardModelParams p;
    p.w1.resize(d, h);
    p.b1 = Eigen::VectorXd::Zero(h);
    p.w2.resize(h, o);
    p.b2 = Eigen::VectorXd::Zero(o);
    p.head_kind = kind;
    const double lim1 = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < h; ++c) p.w1(r, c) = rng.uniform(-lim1, lim1);
    const double lim2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < o; ++c) p.w2(r, c) = rng.uniform(-lim2, lim2);
    p.validate();
    return p;
}

Eigen::VectorXd forward(const RewardModelParams& params, const Eigen::VectorXd& features,
                        ForwardCache* cache) {
    if (features.size() != params.feature_dim()) throw DataError("feature dimension mismatch");
    const Eigen::VectorXd hidden = (params.w1.transpose() * features + params.b1).array().tanh();
    Eigen::VectorXd out = params.w2.transpose() * hidden + params.b2;
    if (!out.allFinite()) throw NumericalError("non-finite model output");
    if (cache) {
        cache->input = features;
        cache->hidden = hidden;
    }
    return out;
}

double reward_scalar(const RewardModelParams& params, const Eigen::VectorXd& features) {
    if (params.output_dim() != 1) throw ConfigError("scalar reward requires a single output");
    return forward(params, features)(0);
}

ParamGrads ParamGrads::zero_like(const RewardModelParams& p) {
    ParamGrads g;
    g.w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(p.b1.size());
    g.w2 = Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols());
    g.b2 = Eigen::VectorXd::Zero(p.b2.size());
    return g;
}

void ParamGrads::scale(double s) {
    w1 *= s;
    b1 *= s;
    w2 *= s;
    b2 *= s;
}

Eigen::VectorXd ParamGrads::to_flat() const {
    Eigen::VectorXd flat(w1.size() + b1.size() + w2.size() + b2.size());
    Eigen::Index at = 0;
    append_row_major(w1, flat, at);
    flat.segment(at, b1.size()) = b1;
    at += b1.size();
    append_row_major(w2, flat, at);
    flat.segment(at, b2.size()) = b2;
    return flat;
}

void backward(const RewardModelParams& params, const ForwardCache& cache,
              const Eigen::VectorXd& upstream, ParamGrads& grads) {
    if (cache.input.size() != params.feature_dim() || cache.hidden.size() != params.hidden_dim())
        throw DataError("stale forward cache");
    if (upstream.size() != params.output_dim()) throw DataError("upstream gradient size mismatch");

    grads.b2 += upstream;
    grads.w2 += cache.hidden * upstream.transpose();
    const Eigen::VectorXd dhidden = params.w2 * upstream;
    const Eigen::VectorXd dpre =
        dhidden.array() * (1.0 - cache.hidden.array() * cache.hidden.array());
    grads.b1 += dpre;
    grads.w1 += cache.input * dpre.transpose();
}

RewardModelParams init_bt_from_regression(const RewardModelParams& regression) {
    regression.validate();
    if (regression.head_kind != HeadKind::regression)
        throw ConfigError("initializer expects a regression head");
    if (regression.output_dim() != 1)
        throw ConfigError(
            "bradley_terry init needs a 1-output regression model; reduce via attribute weights "
            "first or train helpfulness-only");
    RewardModelParams p = regression;
    p.head_kind = HeadKind::bradley_terry;
    return p;
}

double combine_attributes(const Eigen::VectorXd& predictions, const Eigen::VectorXd& weights) {
    if (predictions.size() != weights.size()) throw DataError("attribute weight size mismatch");
    return predictions.dot(weights);
}

WeightSearchResult grid_search_weights(const RewardModelParams& model,
                                       const bench::BenchSet& set, double step) {
    model.validate();
    if (model.head_kind != HeadKind::regression || model.output_dim() != 5)
        throw ConfigError("weight grid search requires a 5-attribute regression head");
    if (!(step > 0.0) || step > 2.0) throw ConfigError("step must be in (0, 2]");
    const long long intervals = std::llround(2.0 / step);
    if (std::abs(static_cast<double>(intervals) * step - 2.0) > 1e-9)
        throw ConfigError("step must divide the weight range evenly");
    const long long points = intervals + 1;

    std::vector<Eigen::Matrix<double, 5, 1>> chosen_preds, rejected_preds;
    chosen_preds.reserve(set.size());
    rejected_preds.reserve(set.size());
    for (const auto& t : set) {
        chosen_preds.push_back(forward(model, t.chosen));
        rejected_preds.push_back(forward(model, t.rejected));
    }

    std::vector<double> axis(static_cast<std::size_t>(points));
    for (long long i = 0; i < points; ++i)
        axis[static_cast<std::size_t>(i)] = -1.0 + step * static_cast<double>(i);

    WeightSearchResult best;
    best.bench_overall = -1.0;
    std::vector<std::pair<double, double>> rewards(set.size());
    Eigen::Matrix<double, 5, 1> w;
    for (long long i0 = 0; i0 < points; ++i0) {
        w(0) = axis[static_cast<std::size_t>(i0)];
        for (long long i1 = 0; i1 < points; ++i1) {
            w(1) = axis[static_cast<std::size_t>(i1)];
            for (long long i2 = 0; i2 < points; ++i2) {
                w(2) = axis[static_cast<std::size_t>(i2)];
                for (long long i3 = 0; i3 < points; ++i3) {
                    w(3) = axis[static_cast<std::size_t>(i3)];
                    for (long long i4 = 0; i4 < points; ++i4) {
                        w(4) = axis[static_cast<std::size_t>(i4)];
                        ++best.n_candidates;
                        for (std::size_t t = 0; t < set.size(); ++t)
                            rewards[t] = {chosen_preds[t].dot(w), rejected_preds[t].dot(w)};
                        const double acc = bench::score_from_rewards(rewards, set).overall;
                        if (acc > best.bench_overall) {
                            best.bench_overall = acc;
                            best.weights = w;
                        }
                    }
                }
            }
        }
    }
    return best;
}

RewardModelParams expo(const RewardModelParams& weak, const RewardModelParams& strong,
                       double alpha) {
    if (!std::isfinite(alpha)) throw NumericalError("non-finite alpha");
    weak.validate();
    strong.validate();
    if (weak.w1.rows() != strong.w1.rows() || weak.w1.cols() != strong.w1.cols() ||
        weak.w2.rows() != strong.w2.rows() || weak.w2.cols() != strong.w2.cols())
        throw DataError("extrapolation endpoints have different shapes");
    if (alpha == 0.0) return weak;
    if (alpha == 1.0) return strong;
    RewardModelParams p;
    p.w1 = weak.w1 + alpha * (strong.w1 - weak.w1);
    p.b1 = weak.b1 + alpha * (strong.b1 - weak.b1);
    p.w2 = weak.w2 + alpha * (strong.w2 - weak.w2);
    p.b2 = weak.b2 + alpha * (strong.b2 - weak.b2);
    p.head_kind = strong.head_kind;
    return p;
}

double pairwise_accuracy(const RewardModelParams& params,
                         const std::vector<PreferencePair>& pairs) {
    if (pairs.empty()) throw DataError("no preference pairs");
    long long hits = 0;
    for (const auto& p : pairs)
        hits += reward_scalar(params, p.chosen) > reward_scalar(params, p.rejected);
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

ExpoSearchResult expo_search(const RewardModelParams& weak, const RewardModelParams& strong,
                             const std::vector<PreferencePair>& val_pairs) {
    // Alphas handled as integer hundredths so grid points are exact.
    auto evaluate = [&](long long centi) {
        return pairwise_accuracy(expo(weak, strong, static_cast<double>(centi) / 100.0),
                                 val_pairs);
    };

    long long best_centi = 110;
    double best_acc = evaluate(best_centi);
    for (long long c = 120; c <= 200; c += 10) {
        const double acc = evaluate(c);
        if (acc > best_acc) {
            best_acc = acc;
            best_centi = c;
        }
    }
    const long long coarse = best_centi;
    for (long long c = coarse - 9; c <= coarse + 9; ++c) {
        if (c == coarse) continue;
        const double acc = evaluate(c);
        if (acc > best_acc) {
            best_acc = acc;
            best_centi = c;
        }
    }

    ExpoSearchResult out;
    out.alpha = static_cast<double>(best_centi) / 100.0;
    out.val_accuracy = best_acc;
    out.params = expo(weak, strong, out.alpha);
    return out;
}

}  // namespace prefmod::rmcore
