#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace prefmod::prefdata {

// Annotator preference scale: {-3..3} \ {0}; negative prefers response 1,
// positive prefers response 2, magnitude is strength. -100 marks an
// annotation the rater could not score.
inline constexpr int kInvalidPreference = -100;

bool is_valid_preference(int score);
bool is_preference_score(int score);

struct AttributeRatings {
    int helpfulness = 0;
    int correctness = 0;
    int coherence = 0;
    int complexity = 0;
    int verbosity = 0;

    // Fixed attribute order used everywhere ratings become vectors.
    Eigen::Matrix<double, 5, 1> to_vector() const;
    std::array<int, 5> to_array() const;
};

struct Annotation {
    std::string annotator_id;
    int preference = kInvalidPreference;
    AttributeRatings ratings_1;
    AttributeRatings ratings_2;
    std::string justification;
};

enum class Split { train, val };

struct AnnotationTask {
    std::string task_id;
    std::string prompt;
    std::string response_1;
    std::string response_2;
    Split split = Split::train;
    std::vector<Annotation> annotations;
};

enum class AggregateStatus { kept, dropped_spread, dropped_zero, dropped_all_invalid };
enum class Chosen { response_1, response_2, none };

struct AggregatedPreference {
    std::string task_id;
    std::vector<int> used_annotations;  // selected subset, ascending
    int overall = 0;                    // round-half-away-from-zero of the subset mean
    int magnitude = 0;                  // |overall|; 0 when overall == 0
    Chosen chosen = Chosen::none;       // set only when status == kept
    AggregateStatus status = AggregateStatus::dropped_all_invalid;
};

// Smallest-spread size-k subset of the valid scores. Ties broken by subset
// mean closest to the mean of all scores, then by lexicographically smallest
// sorted subset. Tie comparisons are integer-exact (|sum_s*n - sum_all*k|).
// Returns all scores sorted when fewer than k are given.
std::vector<int> select_most_similar(const std::vector<int>& scores, int k);

// Most-similar-3 selection, mean, round-half-away-from-zero, then the two
// exclusion rules: spread > 2 and overall == 0.
AggregatedPreference aggregate_task(const AnnotationTask& task);

// Quadratic-weighted Cohen's kappa over symmetrized rating pairs.
// Weights are squared index distances in the ordered category list,
// normalized by (K-1)^2. Zero expected disagreement returns 1.0.
double cohens_kappa_quadratic(const std::vector<std::pair<int, int>>& pairs,
                              const std::vector<int>& categories);

struct AgreementReport {
    double kappa_raw = 0.0;            // all valid co-annotation pairs
    double kappa_after_subset = 0.0;   // pairs within the selected subsets
    double kappa_after_zero_exclusion = 0.0;  // subset pairs of kept tasks only
    std::int64_t n_pairs = 0;          // raw co-annotation pair count
};

// Three-stage agreement: raw, after most-similar-3, after aggregate-level
// exclusions. Categories are {-3,-2,-1,1,2,3} for the first two stages and
// {-3..3} including 0 for the aggregate stage.
AgreementReport agreement_report(const std::vector<AnnotationTask>& tasks);

struct DistributionDiagnostics {
    std::array<std::int64_t, 7> histogram{};  // overall preference -3..3
    double mean = 0.0;
    double stddev = 0.0;  // population
    double frac_prefer_response_1 = 0.0;
    double frac_prefer_response_2 = 0.0;
    double position_bias = 0.0;  // frac_prefer_response_2 - frac_prefer_response_1
    double pearson_pref_helpfulness = 0.0;
    std::int64_t n_tasks = 0;  // analyzed population size
};

// Distribution analysis over the spread-filtered population (kept tasks plus
// zero-overall tasks). Pearson correlates overall preference with the gap in
// mean helpfulness ratings; a zero-variance input yields 0.0 by convention.
DistributionDiagnostics distribution_diagnostics(const std::vector<AnnotationTask>& tasks);

}  // namespace prefmod::prefdata
