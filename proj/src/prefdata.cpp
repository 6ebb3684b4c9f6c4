#include "prefmod/prefdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "prefmod/errors.hpp"

namespace prefmod::prefdata {

bool is_valid_preference(int score) { return score >= -3 && score <= 3 && score != 0; }

bool is_preference_score(int score) {
    return is_valid_preference(score) || score == kInvalidPreference;
}

Eigen::Matrix<double, 5, 1> AttributeRatings::to_vector() const {
    Eigen::Matrix<double, 5, 1> v;
    v << helpfulness, correctness, coherence, complexity, verbosity;
    return v;
}

std::array<int, 5> AttributeRatings::to_array() const {
    return {helpfulness, correctness, coherence, complexity, verbosity};
}

namespace {

// Round-half-away-from-zero of sum/count in exact integer arithmetic.
int rounded_mean(long long sum, long long count) {
    const long long mag = (2 * std::llabs(sum) + count) / (2 * count);
    return static_cast<int>(sum >= 0 ? mag : -mag);
}

void validate_scores(const std::vector<int>& scores) {
    for (int s : scores) {
        if (!is_valid_preference(s))
            throw DataError("preference score out of range: " + std::to_string(s));
    }
}

}  // namespace

std::vector<int> select_most_similar(const std::vector<int>& scores, int k) {
    if (k < 1) throw ConfigError("subset size must be >= 1");
    if (scores.empty()) throw DataError("no valid annotations");
    validate_scores(scores);

    std::vector<int> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const int n = static_cast<int>(sorted.size());
    if (n <= k) return sorted;

    long long total = 0;
    for (int s : sorted) total += s;

    // Walk index combinations over the sorted values; the comparison key is
    // (spread, |subset_mean - global_mean| cross-multiplied, subset values).
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;

    std::vector<int> best;
    long long best_spread = 0;
    long long best_mean_dist = 0;
    while (true) {
        std::vector<int> cand(static_cast<std::size_t>(k));
        long long sum = 0;
        for (int i = 0; i < k; ++i) {
            cand[static_cast<std::size_t>(i)] = sorted[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            sum += cand[static_cast<std::size_t>(i)];
        }
        const long long spread = cand.back() - cand.front();
        const long long mean_dist = std::llabs(sum * n - total * k);
        if (best.empty() || spread < best_spread ||
            (spread == best_spread &&
             (mean_dist < best_mean_dist || (mean_dist == best_mean_dist && cand < best)))) {
            best = cand;
            best_spread = spread;
            best_mean_dist = mean_dist;
        }
        int pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < k; ++i)
            idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
    return best;
}

AggregatedPreference aggregate_task(const AnnotationTask& task) {
    AggregatedPreference out;
    out.task_id = task.task_id;

    std::vector<int> valid;
    for (const auto& a : task.annotations) {
        if (!is_preference_score(a.preference))
            throw DataError("task " + task.task_id +
                            ": preference score out of range: " + std::to_string(a.preference));
        if (a.preference != kInvalidPreference) valid.push_back(a.preference);
    }
    if (valid.empty()) {
        out.status = AggregateStatus::dropped_all_invalid;
        return out;
    }

    out.used_annotations = select_most_similar(valid, 3);
    long long sum = 0;
    for (int s : out.used_annotations) sum += s;
    out.overall = rounded_mean(sum, static_cast<long long>(out.used_annotations.size()));
    out.magnitude = std::abs(out.overall);

    const int spread = out.used_annotations.back() - out.used_annotations.front();
    if (spread > 2) {
        out.status = AggregateStatus::dropped_spread;
    } else if (out.overall == 0) {
        out.status = AggregateStatus::dropped_zero;
    } else {
        out.status = AggregateStatus::kept;
        out.chosen = out.overall < 0 ? Chosen::response_1 : Chosen::response_2;
    }
    return out;
}

double cohens_kappa_quadratic(const std::vector<std::pair<int, int>>& pairs,
                              const std::vector<int>& categories) {
    if (categories.size() < 2) throw ConfigError("need at least 2 categories");
    if (pairs.empty()) throw DataError("no co-annotations");

    const Eigen::Index k = static_cast<Eigen::Index>(categories.size());
    std::map<int, Eigen::Index> index;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!index.emplace(categories[static_cast<std::size_t>(i)], i).second)
            throw ConfigError("duplicate category");
    }
    auto at = [&](int v) {
        const auto it = index.find(v);
        if (it == index.end()) throw DataError("rating outside category set: " + std::to_string(v));
        return it->second;
    };

    Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(k, k);
    for (const auto& [a, b] : pairs) {
        observed(at(a), at(b)) += 1.0;
        observed(at(b), at(a)) += 1.0;
    }
    observed /= observed.sum();

    const Eigen::VectorXd marginal = observed.rowwise().sum();
    const Eigen::MatrixXd expected = marginal * marginal.transpose();

    Eigen::MatrixXd weights(k, k);
    const double norm = static_cast<double>((k - 1) * (k - 1));
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            weights(i, j) = static_cast<double>((i - j) * (i - j)) / norm;

    const double expected_disagreement = (weights.array() * expected.array()).sum();
    if (expected_disagreement == 0.0) return 1.0;
    const double observed_disagreement = (weights.array() * observed.array()).sum();
    return 1.0 - observed_disagreement / expected_disagreement;
}

namespace {

void pairs_among(const std::vector<int>& scores, std::vector<std::pair<int, int>>& out) {
    for (std::size_t i = 0; i < scores.size(); ++i)
        for (std::size_t j = i + 1; j < scores.size(); ++j) out.emplace_back(scores[i], scores[j]);
}

const std::vector<int>& annotator_categories() {
    static const std::vector<int> c = {-3, -2, -1, 1, 2, 3};
    return c;
}

const std::vector<int>& aggregate_categories() {
    static const std::vector<int> c = {-3, -2, -1, 0, 1, 2, 3};
    return c;
}

}  // namespace

AgreementReport agreement_report(const std::vector<AnnotationTask>& tasks) {
    std::vector<std::pair<int, int>> raw, subset, aggregate;
    for (const auto& task : tasks) {
        std::vector<int> valid;
        for (const auto& a : task.annotations)
            if (a.preference != kInvalidPreference) valid.push_back(a.preference);
        if (valid.size() < 2) continue;
        pairs_among(valid, raw);

        const auto agg = aggregate_task(task);
        pairs_among(agg.used_annotations, subset);
        if (agg.status == AggregateStatus::kept) pairs_among(agg.used_annotations, aggregate);
    }
    if (raw.empty()) throw DataError("no co-annotations");

    AgreementReport report;
    report.n_pairs = static_cast<std::int64_t>(raw.size());
    report.kappa_raw = cohens_kappa_quadratic(raw, annotator_categories());
    report.kappa_after_subset =
        subset.empty() ? 1.0 : cohens_kappa_quadratic(subset, annotator_categories());
    report.kappa_after_zero_exclusion =
        aggregate.empty() ? 1.0 : cohens_kappa_quadratic(aggregate, aggregate_categories());
    return report;
}

DistributionDiagnostics distribution_diagnostics(const std::vector<AnnotationTask>& tasks) {
    DistributionDiagnostics d;
    std::vector<double> pref, help_gap;
    for (const auto& task : tasks) {
        const auto agg = aggregate_task(task);
        if (agg.status != AggregateStatus::kept && agg.status != AggregateStatus::dropped_zero)
            continue;
        d.histogram[static_cast<std::size_t>(agg.overall + 3)] += 1;
        if (agg.overall < 0) d.frac_prefer_response_1 += 1.0;
        if (agg.overall > 0) d.frac_prefer_response_2 += 1.0;

        double h1 = 0.0, h2 = 0.0;
        for (const auto& a : task.annotations) {
            h1 += a.ratings_1.helpfulness;
            h2 += a.ratings_2.helpfulness;
        }
        const double n_ann = static_cast<double>(task.annotations.size());
        pref.push_back(static_cast<double>(agg.overall));
        help_gap.push_back((h2 - h1) / n_ann);
    }
    if (pref.empty()) throw DataError("no analyzable tasks");

    const double n = static_cast<double>(pref.size());
    d.n_tasks = static_cast<std::int64_t>(pref.size());
    d.frac_prefer_response_1 /= n;
    d.frac_prefer_response_2 /= n;
    d.position_bias = d.frac_prefer_response_2 - d.frac_prefer_response_1;

    const auto x = Eigen::Map<const Eigen::VectorXd>(pref.data(), static_cast<Eigen::Index>(pref.size()));
    const auto y =
        Eigen::Map<const Eigen::VectorXd>(help_gap.data(), static_cast<Eigen::Index>(help_gap.size()));
    d.mean = x.mean();
    const Eigen::VectorXd xc = x.array() - d.mean;
    d.stddev = std::sqrt(xc.squaredNorm() / n);
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
    d.pearson_pref_helpfulness = denom == 0.0 ? 0.0 : xc.dot(yc) / denom;
    return d;
}

}  // namespace prefmod::prefdata
