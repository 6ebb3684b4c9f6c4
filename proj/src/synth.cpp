#include "prefmod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prefmod/errors.hpp"
#include "prefmod/rng.hpp"

namespace prefmod::synth {

namespace {

constexpr std::uint64_t kTaskTag = 0x7461736bULL;
constexpr std::uint64_t kBenchTag = 0x62656e6368ULL;

int clamp_rating(double x) {
    const int r = static_cast<int>(std::lround(x));
    return std::clamp(r, 0, 4);
}

int discretize_gap(double g) {
    const double a = std::abs(g);
    const int mag = a >= 2.5 ? 3 : a >= 1.0 ? 2 : 1;
    return g < 0.0 ? -mag : mag;
}

Eigen::VectorXd draw_normal_vec(Rng& rng, Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    return v;
}

const std::vector<std::string>& elaboration_pool() {
    static const std::vector<std::string> pool = {
        "It is more accurate and complete.",
        "The answer is clearer and well formatted.",
        "It follows the instruction closely.",
        "It stays concise without missing key details.",
        "The explanation stays simple and easy to follow.",
        "The other answer gives false information.",
        "The other response is verbose and repetitive.",
        "It provides helpful context and relevant facts.",
    };
    return pool;
}

const std::vector<std::string>& trailing_prefixes() {
    static const std::vector<std::string> p = {"Therefore, ", "Overall, ", "For these reasons, "};
    return p;
}

std::string make_justification(Rng& rng, int preference) {
    const int dir = preference < 0 ? 1 : 2;
    const int mag = std::abs(preference);
    const char* adverb = mag == 1 ? "slightly better" : mag == 2 ? "better" : "much better";
    char stmt[64];
    std::snprintf(stmt, sizeof stmt, "@Response %d is %s.", dir, adverb);

    const auto& pool = elaboration_pool();
    const std::size_t i0 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
    std::size_t i1 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 2));
    if (i1 >= i0) ++i1;
    const std::string elab = pool[i0] + " " + pool[i1];

    const double u = rng.uniform01();
    if (u < 0.60) return std::string(stmt) + " " + elab;
    if (u < 0.85) {
        char closing[64];
        std::snprintf(closing, sizeof closing, "Thus, @Response %d is the better option.", dir);
        return std::string(stmt) + " " + elab + " " + closing;
    }
    if (u < 0.98) {
        const auto& prefixes = trailing_prefixes();
        const std::size_t pi = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(prefixes.size()) - 1));
        return elab + " " + prefixes[pi] + stmt;
    }
    return "Both responses address the prompt with minor differences.";
}

bool val_split(std::int64_t index, double fraction) {
    const std::int64_t f = std::llround(fraction * 1000000.0);
    return ((index + 1) * f) / 1000000 > (index * f) / 1000000;
}

}  // namespace

void GenConfig::validate() const {
    if (n_tasks < 1) throw ConfigError("n_tasks must be >= 1");
    if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
    if (n_annotators_range[0] < 1 || n_annotators_range[1] < n_annotators_range[0])
        throw ConfigError("invalid annotator range");
    if (annotator_noise_sd < 0.0) throw ConfigError("annotator_noise_sd must be >= 0");
    if (position_bias < 0.0 || position_bias >= 1.0)
        throw ConfigError("position_bias must be in [0, 1)");
    if (invalid_rate < 0.0 || invalid_rate >= 1.0)
        throw ConfigError("invalid_rate must be in [0, 1)");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw ConfigError("val_fraction must be in [0, 1)");
    if (n_bench < 0) throw ConfigError("n_bench must be >= 0");
    if (true_weights.size() != 0 && true_weights.size() != feature_dim)
        throw ConfigError("true_weights size does not match feature_dim");
}

Eigen::VectorXd GenConfig::resolved_weights() const {
    if (true_weights.size() != 0) return true_weights;
    return Eigen::VectorXd::Constant(feature_dim,
                                     1.0 / std::sqrt(static_cast<double>(feature_dim)));
}

Corpus generate_corpus(const GenConfig& config) {
    config.validate();
    const Eigen::VectorXd w = config.resolved_weights();

    Corpus corpus;
    corpus.tasks.reserve(static_cast<std::size_t>(config.n_tasks));
    corpus.oracle.reserve(static_cast<std::size_t>(config.n_tasks));
    char idbuf[32];
    for (std::int64_t t = 0; t < config.n_tasks; ++t) {
        Rng rng(derive_seed(derive_seed(config.seed, kTaskTag), static_cast<std::uint64_t>(t)));
        std::snprintf(idbuf, sizeof idbuf, "t%06lld", static_cast<long long>(t));

        OracleTask oracle;
        oracle.task_id = idbuf;
        oracle.features_1 = draw_normal_vec(rng, config.feature_dim);
        oracle.features_2 = draw_normal_vec(rng, config.feature_dim);
        oracle.q1 = w.dot(oracle.features_1);
        oracle.q2 = w.dot(oracle.features_2);
        oracle.true_gap = oracle.q2 - oracle.q1;
        oracle.truth =
            oracle.true_gap >= 0.0 ? prefdata::Chosen::response_2 : prefdata::Chosen::response_1;

        prefdata::AnnotationTask task;
        task.task_id = idbuf;
        task.prompt = std::string("Synthetic prompt ") + idbuf;
        task.response_1 = std::string("Synthetic response 1 for ") + idbuf;
        task.response_2 = std::string("Synthetic response 2 for ") + idbuf;
        task.split = val_split(t, config.val_fraction) ? prefdata::Split::val : prefdata::Split::train;

        // Latents shared by every annotator of the task.
        const double complexity_1 = rng.normal(), complexity_2 = rng.normal();
        const double verbosity_1 = rng.normal(), verbosity_2 = rng.normal();
        const bool toward_response_2 = rng.bernoulli(config.position_bias);

        const int n_annotators = static_cast<int>(
            rng.uniform_int(config.n_annotators_range[0], config.n_annotators_range[1]));
        for (int a = 0; a < n_annotators; ++a) {
            prefdata::Annotation ann;
            char abuf[48];
            std::snprintf(abuf, sizeof abuf, "%s_a%d", idbuf, a);
            ann.annotator_id = abuf;

            auto rate = [&](double q, double complexity, double verbosity) {
                prefdata::AttributeRatings r;
                r.helpfulness = clamp_rating(2.0 + q + rng.normal(0.0, config.annotator_noise_sd));
                r.correctness =
                    clamp_rating(2.0 + 0.8 * q + rng.normal(0.0, config.annotator_noise_sd));
                r.coherence =
                    clamp_rating(2.0 + 0.5 * q + rng.normal(0.0, config.annotator_noise_sd));
                r.complexity = clamp_rating(2.0 + 0.6 * complexity +
                                            rng.normal(0.0, config.annotator_noise_sd));
                r.verbosity = clamp_rating(2.0 + 0.6 * verbosity +
                                           rng.normal(0.0, config.annotator_noise_sd));
                return r;
            };
            ann.ratings_1 = rate(oracle.q1, complexity_1, verbosity_1);
            ann.ratings_2 = rate(oracle.q2, complexity_2, verbosity_2);

            if (rng.bernoulli(config.invalid_rate)) {
                ann.preference = prefdata::kInvalidPreference;
                ann.justification = "Unable to judge these responses.";
            } else {
                const double g = oracle.true_gap + rng.normal(0.0, config.annotator_noise_sd);
                int v = discretize_gap(g);
                if (toward_response_2) v = std::abs(v);
                ann.preference = v;
                ann.justification = make_justification(rng, v);
            }
            task.annotations.push_back(std::move(ann));
        }
        corpus.tasks.push_back(std::move(task));
        corpus.oracle.push_back(std::move(oracle));
    }
    return corpus;
}

bench::BenchSet generate_bench(const GenConfig& config) {
    config.validate();
    const Eigen::VectorXd w = config.resolved_weights();
    static const bench::Category cycle[4] = {bench::Category::chat, bench::Category::chat_hard,
                                             bench::Category::safety, bench::Category::reasoning};
    // Smaller feature offsets make narrower reward gaps, so categories differ
    // in difficulty.
    static const double gap_scale[4] = {1.5, 0.3, 1.0, 0.7};

    bench::BenchSet set;
    set.reserve(static_cast<std::size_t>(config.n_bench));
    std::int64_t reasoning_seen = 0;
    for (std::int64_t i = 0; i < config.n_bench; ++i) {
        Rng rng(derive_seed(derive_seed(config.seed, kBenchTag), static_cast<std::uint64_t>(i)));
        bench::BenchTask task;
        const int c = static_cast<int>(i % 4);
        task.category = cycle[c];
        if (task.category == bench::Category::reasoning) {
            task.reasoning_kind = (reasoning_seen++ % 2 == 0) ? bench::ReasoningKind::math
                                                              : bench::ReasoningKind::code;
        }
        task.prompt = draw_normal_vec(rng, config.feature_dim);
        const Eigen::VectorXd a = draw_normal_vec(rng, config.feature_dim);
        const Eigen::VectorXd b = a + gap_scale[c] * draw_normal_vec(rng, config.feature_dim);
        if (w.dot(a) >= w.dot(b)) {
            task.chosen = a;
            task.rejected = b;
        } else {
            task.chosen = b;
            task.rejected = a;
        }
        set.push_back(std::move(task));
    }
    return set;
}

prefdata::AggregatedPreference brute_force_aggregate(const std::vector<int>& scores) {
    if (scores.size() > 8) throw DataError("brute force limited to 8 scores");
    for (int s : scores) {
        if (!prefdata::is_preference_score(s))
            throw DataError("preference score out of range: " + std::to_string(s));
    }

    prefdata::AggregatedPreference out;
    std::vector<int> valid;
    for (int s : scores)
        if (s != prefdata::kInvalidPreference) valid.push_back(s);
    if (valid.empty()) {
        out.status = prefdata::AggregateStatus::dropped_all_invalid;
        return out;
    }

    const int n = static_cast<int>(valid.size());
    const int k = std::min(n, 3);
    long long total = 0;
    for (int s : valid) total += s;

    // Enumerate index subsets via bitmask; compare the spec's tie rules
    // literally (spread, then mean distance, then sorted values).
    std::vector<int> best;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        std::vector<int> subset;
        long long sum = 0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                subset.push_back(valid[static_cast<std::size_t>(i)]);
                sum += valid[static_cast<std::size_t>(i)];
            }
        }
        std::sort(subset.begin(), subset.end());
        const int spread = subset.back() - subset.front();
        const long long mean_dist = std::llabs(sum * n - total * k);
        if (best.empty()) {
            best = subset;
        } else {
            long long bsum = 0;
            for (int s : best) bsum += s;
            const int bspread = best.back() - best.front();
            const long long bdist = std::llabs(bsum * n - total * k);
            if (spread < bspread || (spread == bspread && mean_dist < bdist) ||
                (spread == bspread && mean_dist == bdist && subset < best))
                best = subset;
        }
    }

    long long sum = 0;
    for (int s : best) sum += s;
    const double mean = static_cast<double>(sum) / static_cast<double>(k);
    const double rounded = std::round(std::abs(mean));
    out.overall = static_cast<int>(sum >= 0 ? rounded : -rounded);
    out.magnitude = std::abs(out.overall);
    out.used_annotations = best;
    const int spread = best.back() - best.front();
    if (spread > 2)
        out.status = prefdata::AggregateStatus::dropped_spread;
    else if (out.overall == 0)
        out.status = prefdata::AggregateStatus::dropped_zero;
    else {
        out.status = prefdata::AggregateStatus::kept;
        out.chosen = out.overall < 0 ? prefdata::Chosen::response_1 : prefdata::Chosen::response_2;
    }
    return out;
}

}  // namespace prefmod::synth
