#include "mfm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "mfm/errors.hpp"
#include "mfm/linalg.hpp"

namespace mfm {

namespace {

double row_distance(const DenseArray& a, std::size_t i, const DenseArray& b, std::size_t j) {
    const std::size_t d = a.shape()[1];
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double diff = a.at2(i, k) - b.at2(j, k);
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace

double fid_from_moments(const DenseArray& mu_a, const DenseArray& cov_a, const DenseArray& mu_b,
                        const DenseArray& cov_b) {
    require_same_shape(mu_a, mu_b, "fid");
    require_same_shape(cov_a, cov_b, "fid");
    double mean_term = 0.0;
    for (std::size_t i = 0; i < mu_a.numel(); ++i) {
        const double d = mu_a[i] - mu_b[i];
        mean_term += d * d;
    }
    const DenseArray root_a = matrix_sqrt_psd(cov_a);
    const DenseArray inner = matmul2(matmul2(root_a, cov_b), root_a);
    const DenseArray cross = matrix_sqrt_psd(inner);
    const double value = mean_term + trace(cov_a) + trace(cov_b) - 2.0 * trace(cross);
    return value > 0.0 ? value : 0.0;
}

double fid(const FeatureSet& a, const FeatureSet& b) {
    if (a.dim() != b.dim()) throw ShapeError("fid: feature dims differ");
    if (a.count() < 2 || b.count() < 2) {
        throw ShapeError("fid: need at least 2 samples per set for covariance");
    }
    return fid_from_moments(column_means(a.features), covariance(a.features),
                            column_means(b.features), covariance(b.features));
}

DiversityResult diversity(const FeatureSet& f, std::size_t s_dis, Rng& rng) {
    const std::size_t n = f.count();
    if (n < 2) throw ShapeError("diversity: need at least 2 features");
    std::size_t pairs = s_dis;
    if (n < 2 * s_dis) pairs = n / 2;  // fallback: all disjoint pairs available
    const std::vector<std::size_t> perm = rng.permutation(n);
    double total = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        total += row_distance(f.features, perm[2 * p], f.features, perm[2 * p + 1]);
    }
    return DiversityResult{total / static_cast<double>(pairs), pairs};
}

double mm_dist(const FeatureSet& pred, const FeatureSet& text) {
    if (pred.count() != text.count()) throw ShapeError("mm_dist: pair count mismatch");
    if (pred.dim() != text.dim()) throw ShapeError("mm_dist: feature dims differ");
    if (pred.count() == 0) throw ShapeError("mm_dist: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.count(); ++i) {
        total += row_distance(pred.features, i, text.features, i);
    }
    return total / static_cast<double>(pred.count());
}

double mmodality(const std::vector<DenseArray>& per_condition, Rng& rng) {
    if (per_condition.empty()) throw ShapeError("mmodality: no conditions");
    double total = 0.0;
    for (const DenseArray& gen : per_condition) {
        if (gen.rank() != 2 || gen.shape()[0] < 20) {
            throw ShapeError("mmodality: each condition needs >= 20 generations");
        }
        const std::vector<std::size_t> perm = rng.permutation(gen.shape()[0]);
        for (std::size_t j = 0; j < 10; ++j) {
            total += row_distance(gen, perm[j], gen, perm[10 + j]);
        }
    }
    return total / (10.0 * static_cast<double>(per_condition.size()));
}

double r_precision_top3(const FeatureSet& pred, const FeatureSet& text, Rng& rng,
                        std::size_t batch) {
    if (pred.count() != text.count()) throw ShapeError("r_precision: pair count mismatch");
    const std::size_t n = pred.count();
    if (n < batch) {
        throw ShapeError("r_precision: need at least " + std::to_string(batch) + " pairs");
    }
    const std::vector<std::size_t> perm = rng.permutation(n);
    const std::size_t batches = n / batch;
    std::size_t hits = 0;
    std::size_t total = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t* ids = perm.data() + b * batch;
        for (std::size_t i = 0; i < batch; ++i) {
            const double d_gt = row_distance(pred.features, ids[i], text.features, ids[i]);
            // rank by (distance, index); lower index wins ties
            std::size_t rank = 0;
            for (std::size_t j = 0; j < batch; ++j) {
                if (j == i) continue;
                const double d = row_distance(pred.features, ids[i], text.features, ids[j]);
                if (d < d_gt || (d == d_gt && j < i)) ++rank;
            }
            if (rank < 3) ++hits;
            ++total;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

AdeFde ade_fde(const MotionSequence& pred, const MotionSequence& gt,
               const std::vector<std::size_t>& region_frames) {
    require_same_shape(pred.values, gt.values, "ade_fde");
    if (pred.layout.joints != gt.layout.joints) throw ShapeError("ade_fde: layout mismatch");
    if (region_frames.empty()) throw ShapeError("ade_fde: empty region");

    const PoseLayout& layout = pred.layout;
    const std::size_t joints = layout.joints - 1;  // jp stores the non-root joints
    const std::size_t jp = layout.positions_offset();

    auto frame_error = [&](std::size_t f) {
        if (f >= pred.frames) throw ShapeError("ade_fde: region frame out of range");
        double err = 0.0;
        for (std::size_t j = 0; j < joints; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double d =
                    pred.values.at2(f, jp + 3 * j + c) - gt.values.at2(f, jp + 3 * j + c);
                s += d * d;
            }
            err += std::sqrt(s);
        }
        return err / static_cast<double>(joints);
    };

    double ade = 0.0;
    for (std::size_t f : region_frames) ade += frame_error(f);
    ade /= static_cast<double>(region_frames.size());
    const double fde = frame_error(region_frames.back());
    return AdeFde{ade, fde};
}

MetricStat repeat_metric(const std::function<double(Rng&)>& eval, std::size_t reps,
                         std::uint64_t base_seed) {
    if (reps == 0) throw ConfigError("repeat_metric: reps must be positive");
    std::vector<double> values(reps);
    Rng root(base_seed);
    for (std::size_t r = 0; r < reps; ++r) {
        Rng stream = root.child(r + 1);
        values[r] = eval(stream);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(reps);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = reps > 1 ? std::sqrt(var / static_cast<double>(reps - 1)) : 0.0;
    const double ci = reps > 1 ? 1.96 * sd / std::sqrt(static_cast<double>(reps)) : 0.0;
    return MetricStat{mean, ci, reps};
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["_note"] =
        "Metrics use a synthetic desk-scale feature extractor; values are NOT comparable to "
        "published benchmark numbers computed with pretrained evaluators.";
    const nlohmann::json extractor{{"kind", extractor_kind},
                                   {"seed", extractor_seed},
                                   {"feature_dim", feature_dim}};
    for (const auto& [name, stat] : metrics) {
        j[name] = {{"mean", stat.mean},
                   {"ci95", stat.ci95},
                   {"n_reps", stat.n_reps},
                   {"extractor", extractor}};
    }
    return j.dump(2);
}

}  // namespace mfm
