#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mfm/features.hpp"
#include "mfm/rng.hpp"

namespace mfm {

// Frechet distance between Gaussian fits:
//   |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))
// The cross term is evaluated in the PSD-equivalent form
// Tr((S_a^(1/2) S_b S_a^(1/2))^(1/2)); the result is clamped at 0.
double fid_from_moments(const DenseArray& mu_a, const DenseArray& cov_a, const DenseArray& mu_b,
                        const DenseArray& cov_b);
double fid(const FeatureSet& a, const FeatureSet& b);

struct DiversityResult {
    double value = 0.0;
    std::size_t pairs_used = 0;  // effective S_dis after the small-n fallback
};

// Mean distance over random disjoint feature pairs (without replacement).
DiversityResult diversity(const FeatureSet& f, std::size_t s_dis, Rng& rng);

// Mean distance between matched (pred, text) feature rows.
double mm_dist(const FeatureSet& pred, const FeatureSet& text);

// Mean distance between two disjoint 10-subsets of generations per
// condition; needs >= 20 generations for each condition.
double mmodality(const std::vector<DenseArray>& per_condition, Rng& rng);

// Top-3 retrieval accuracy over shuffled batches of 32 matched pairs.
// Distance ties rank by lower index.
double r_precision_top3(const FeatureSet& pred, const FeatureSet& text, Rng& rng,
                        std::size_t batch = 32);

struct AdeFde {
    double ade = 0.0;
    double fde = 0.0;
};

// Joint-position displacement errors over the given frame region: ADE over
// all region frames, FDE at the final region frame.
AdeFde ade_fde(const MotionSequence& pred, const MotionSequence& gt,
               const std::vector<std::size_t>& region_frames);

struct MetricStat {
    double mean = 0.0;
    double ci95 = 0.0;
    std::size_t n_reps = 0;
};

// 20-repetition protocol: evaluate with per-repetition rng streams and
// report mean with the 95% confidence half-width.
MetricStat repeat_metric(const std::function<double(Rng&)>& eval, std::size_t reps,
                         std::uint64_t base_seed);

struct MetricsReport {
    std::map<std::string, MetricStat> metrics;
    std::string extractor_kind;
    std::uint64_t extractor_seed = 0;
    std::size_t feature_dim = 0;

    std::string to_json() const;
};

}  // namespace mfm
