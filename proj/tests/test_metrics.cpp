#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mfm/metrics.hpp"
#include "mfm/synthetic.hpp"
#include "test_support.hpp"

using namespace mfm;

namespace {

FeatureSet feature_set(DenseArray rows, std::string tag = "pred") {
    return FeatureSet{std::move(rows), std::move(tag)};
}

}  // namespace

TEST_CASE("pooling is deterministic and std-half vanishes for static motion") {
    const PoseLayout layout{2};
    const std::size_t d = feature_dim(layout);
    // four frames: the mean of identical values is exact, so the std half
    // is exactly zero rather than zero up to rounding
    DenseArray values({4, d});
    Rng rng(1);
    for (std::size_t c = 0; c < d; ++c) {
        const double v = rng.normal();
        for (std::size_t f = 0; f < 4; ++f) values.at2(f, c) = v;  // constant in time
    }
    const MotionSequence still(layout, values);
    const DenseArray pooled = pool_motion(still);
    REQUIRE(pooled.numel() == 2 * d);
    for (std::size_t c = 0; c < d; ++c) {
        CHECK(pooled[c] == values.at2(0, c));  // mean half
        CHECK(pooled[d + c] == 0.0);           // std half
    }
}

TEST_CASE("extractors are deterministic and seed-sensitive") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::sine_walker;
    spec.joints = 3;
    spec.frames = 12;
    spec.classes = 2;
    spec.samples_per_class = 6;
    spec.seed = 2;
    const auto motions = gen_synthetic_dataset(spec);
    const std::size_t d = feature_dim(PoseLayout{3});

    const FeatureExtractor ex1 = make_random_projection(d, 8, 5);
    const FeatureExtractor ex2 = make_random_projection(d, 8, 5);
    const FeatureExtractor ex3 = make_random_projection(d, 8, 6);
    CHECK(ex1.weight == ex2.weight);
    CHECK_FALSE(ex1.weight == ex3.weight);

    const FeatureSet f1 = extract_features(motions, ex1, "gt");
    const FeatureSet f2 = extract_features(motions, ex1, "gt");
    CHECK(f1.features == f2.features);
    const FeatureSet f3 = extract_features(motions, ex3, "gt");
    CHECK_FALSE(f1.features == f3.features);

    // identical motions, identical features
    for (std::size_t c = 0; c < 8; ++c) {
        CHECK(f1.features.at2(0, c) == extract_features({motions[0]}, ex1, "gt").features[c]);
    }

    const FeatureExtractor enc = train_encoder_extractor(motions, 8, 7, 50);
    const FeatureExtractor enc2 = train_encoder_extractor(motions, 8, 7, 50);
    CHECK(enc.weight == enc2.weight);
    const FeatureSet fe = extract_features(motions, enc, "gt");
    CHECK(fe.features.shape() == Shape{motions.size(), 8});
    for (double v : fe.features.vec()) CHECK(std::abs(v) <= 1.0);  // tanh range
}

TEST_CASE("fid identity, symmetry and non-negativity") {
    Rng rng(3);
    const DenseArray rows = rng.normal_array({40, 6});
    const FeatureSet a = feature_set(rows, "gt");
    CHECK(fid(a, a) == doctest::Approx(0.0).epsilon(1e-8));

    const DenseArray rows_b = rng.normal_array({50, 6});
    const FeatureSet b = feature_set(rows_b, "pred");
    const double ab = fid(a, b);
    const double ba = fid(b, a);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) < 1e-8);
}

TEST_CASE("fid of shifted gaussian samples approaches the analytic 25") {
    Rng rng(4);
    const std::size_t n = 100000;
    DenseArray a({n, 2});
    DenseArray b({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        a.at2(i, 0) = 3.0 + rng.normal();
        a.at2(i, 1) = 4.0 + rng.normal();
        b.at2(i, 0) = rng.normal();
        b.at2(i, 1) = rng.normal();
    }
    const double value = fid(feature_set(std::move(a), "gt"), feature_set(std::move(b), "pred"));
    CHECK(value == doctest::Approx(25.0).epsilon(0.02));
}

TEST_CASE("fid closed form on exact moments") {
    // N(0, 4I2) vs N(0, I2): Tr(4I + I - 2*2I) = 2
    DenseArray mu({2});
    DenseArray cov_a({2, 2}, {4.0, 0.0, 0.0, 4.0});
    DenseArray cov_b({2, 2}, {1.0, 0.0, 0.0, 1.0});
    CHECK(fid_from_moments(mu, cov_a, mu, cov_b) == doctest::Approx(2.0).epsilon(1e-10));

    // mean-only separation
    DenseArray mu2({2}, {3.0, 4.0});
    CHECK(fid_from_moments(mu2, cov_b, mu, cov_b) == doctest::Approx(25.0).epsilon(1e-10));
}

TEST_CASE("diversity identities and fallback") {
    Rng rng(5);
    DenseArray same({10, 4});
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t c = 0; c < 4; ++c) same.at2(i, c) = 1.5;
    }
    Rng div_rng(6);
    CHECK(diversity(feature_set(std::move(same)), 3, div_rng).value == 0.0);

    // two distinct points: the single disjoint pair crosses them
    DenseArray two({2, 3}, {0.0, 0.0, 0.0, 3.0, 4.0, 0.0});
    Rng rng2(7);
    const DiversityResult r = diversity(feature_set(std::move(two)), 300, rng2);
    CHECK(r.value == doctest::Approx(5.0));
    CHECK(r.pairs_used == 1);  // fallback recorded
}

TEST_CASE("diversity matches a brute-force monte-carlo estimate") {
    const std::size_t n = 10000;
    Rng rng(8);
    DenseArray rows({n, 8});
    for (double& v : rows.vec()) v = rng.normal();
    Rng div_rng(9);
    const double measured = diversity(feature_set(std::move(rows)), 5000, div_rng).value;

    // independent sampling oracle for E||X - Y||, X,Y ~ N(0, I_8)
    Rng mc(10);
    double expected = 0.0;
    const int trials = 200000;
    for (int i = 0; i < trials; ++i) {
        double s = 0.0;
        for (int c = 0; c < 8; ++c) {
            const double d = mc.normal() - mc.normal();
            s += d * d;
        }
        expected += std::sqrt(s);
    }
    expected /= trials;
    CHECK(measured == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("mm-dist identities and direct recomputation") {
    DenseArray pred({1, 2}, {3.0, 4.0});
    DenseArray text({1, 2}, {0.0, 0.0});
    CHECK(mm_dist(feature_set(pred.vec().empty() ? pred : pred, "pred"),
                  feature_set(text, "text")) == doctest::Approx(5.0));

    Rng rng(11);
    const DenseArray p = rng.normal_array({30, 5});
    const DenseArray t = rng.normal_array({30, 5});
    const double measured = mm_dist(feature_set(p, "pred"), feature_set(t, "text"));
    double expected = 0.0;
    for (std::size_t i = 0; i < 30; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < 5; ++c) {
            const double d = p.at2(i, c) - t.at2(i, c);
            s += d * d;
        }
        expected += std::sqrt(s);
    }
    expected /= 30.0;
    CHECK(measured == doctest::Approx(expected).epsilon(1e-12));

    CHECK(mm_dist(feature_set(p, "pred"), feature_set(p, "text")) == 0.0);
    DenseArray short_text({29, 5});
    CHECK_THROWS_AS(mm_dist(feature_set(p, "pred"), feature_set(short_text, "text")),
                    ShapeError);
}

TEST_CASE("mmodality identities") {
    // identical generations per condition
    DenseArray same({20, 3});
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t c = 0; c < 3; ++c) same.at2(i, c) = 2.0;
    }
    Rng rng(12);
    CHECK(mmodality({same}, rng) == 0.0);

    // 20 simplex vertices: every distinct pair sits at distance d
    const double d = 3.5;
    DenseArray simplex({20, 20});
    for (std::size_t i = 0; i < 20; ++i) simplex.at2(i, i) = d / std::sqrt(2.0);
    Rng rng2(13);
    CHECK(mmodality({simplex}, rng2) == doctest::Approx(d).epsilon(1e-12));

    DenseArray too_few({19, 3});
    Rng rng3(14);
    CHECK_THROWS_AS(mmodality({too_few}, rng3), ShapeError);
}

TEST_CASE("mmodality matches an independent recomputation") {
    Rng data_rng(15);
    std::vector<DenseArray> grouped;
    grouped.push_back(data_rng.normal_array({25, 4}));
    grouped.push_back(data_rng.normal_array({30, 4}));

    Rng rng_a(16);
    const double measured = mmodality(grouped, rng_a);

    // replay the same permutation stream and apply the formula directly
    Rng rng_b(16);
    double total = 0.0;
    for (const DenseArray& gen : grouped) {
        const auto perm = rng_b.permutation(gen.shape()[0]);
        for (std::size_t j = 0; j < 10; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                const double diff = gen.at2(perm[j], c) - gen.at2(perm[10 + j], c);
                s += diff * diff;
            }
            total += std::sqrt(s);
        }
    }
    total /= 10.0 * grouped.size();
    CHECK(measured == doctest::Approx(total).epsilon(1e-10));
}

TEST_CASE("r-precision is perfect for exact retrieval") {
    Rng rng(17);
    const DenseArray t = rng.normal_array({64, 6});
    Rng r(18);
    CHECK(r_precision_top3(feature_set(t, "pred"), feature_set(t, "text"), r) == 1.0);
}

TEST_CASE("r-precision of a random model approaches 3/32") {
    Rng rng(19);
    const DenseArray p = rng.normal_array({3200, 32});
    const DenseArray t = rng.normal_array({3200, 32});
    Rng r(20);
    const double acc = r_precision_top3(feature_set(p, "pred"), feature_set(t, "text"), r);
    CHECK(std::abs(acc - 3.0 / 32.0) < 0.02);
}

TEST_CASE("r-precision ties resolve to the lower index deterministically") {
    // identical text features: every distance ties, rank equals batch position
    DenseArray p = Rng(21).normal_array({32, 4});
    DenseArray t({32, 4});
    for (std::size_t i = 0; i < 32; ++i) {
        for (std::size_t c = 0; c < 4; ++c) t.at2(i, c) = 1.0;
    }
    Rng r1(22), r2(22);
    const double a = r_precision_top3(feature_set(p, "pred"), feature_set(t, "text"), r1);
    const double b = r_precision_top3(feature_set(p, "pred"), feature_set(t, "text"), r2);
    CHECK(a == b);
    CHECK(a == doctest::Approx(3.0 / 32.0));  // exactly the first three batch slots win

    DenseArray small({31, 4});
    Rng r3(23);
    CHECK_THROWS_AS(
        r_precision_top3(feature_set(small, "pred"), feature_set(small, "text"), r3),
        ShapeError);
}

TEST_CASE("ade and fde identities and brute-force recomputation") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::sine_walker;
    spec.joints = 4;
    spec.frames = 10;
    spec.classes = 1;
    spec.samples_per_class = 2;
    spec.seed = 24;
    const auto motions = gen_synthetic_dataset(spec);
    const MotionSequence& gt = motions[0];
    const MotionSequence& other = motions[1];

    std::vector<std::size_t> region;
    for (std::size_t f = 4; f < 10; ++f) region.push_back(f);

    const AdeFde zero = ade_fde(gt, gt, region);
    CHECK(zero.ade == 0.0);
    CHECK(zero.fde == 0.0);

    // constant positional offset moves both errors by its norm
    MotionSequence shifted = gt;
    const PoseLayout& layout = gt.layout;
    const double delta[3] = {0.3, -0.4, 1.2};
    const double delta_norm = std::sqrt(0.09 + 0.16 + 1.44);
    for (std::size_t f = 0; f < shifted.frames; ++f) {
        for (std::size_t j = 0; j + 1 < layout.joints; ++j) {
            for (std::size_t c = 0; c < 3; ++c) {
                shifted.values.at2(f, layout.positions_offset() + 3 * j + c) += delta[c];
            }
        }
    }
    const AdeFde off = ade_fde(shifted, gt, region);
    CHECK(off.ade == doctest::Approx(delta_norm).epsilon(1e-12));
    CHECK(off.fde == doctest::Approx(delta_norm).epsilon(1e-12));

    // brute-force loop oracle on a random pair
    const AdeFde measured = ade_fde(other, gt, region);
    const std::size_t joints = layout.joints - 1;
    double ade_expected = 0.0;
    double fde_expected = 0.0;
    for (std::size_t fi = 0; fi < region.size(); ++fi) {
        const std::size_t f = region[fi];
        double frame_err = 0.0;
        for (std::size_t j = 0; j < joints; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const std::size_t col = layout.positions_offset() + 3 * j + c;
                const double diff = other.values.at2(f, col) - gt.values.at2(f, col);
                s += diff * diff;
            }
            frame_err += std::sqrt(s);
        }
        frame_err /= static_cast<double>(joints);
        ade_expected += frame_err;
        if (fi + 1 == region.size()) fde_expected = frame_err;
    }
    ade_expected /= static_cast<double>(region.size());
    CHECK(measured.ade == doctest::Approx(ade_expected).epsilon(1e-12));
    CHECK(measured.fde == doctest::Approx(fde_expected).epsilon(1e-12));

    CHECK_THROWS_AS(ade_fde(gt, gt, {}), ShapeError);
    CHECK_THROWS_AS(ade_fde(gt, gt, {99}), ShapeError);
}

TEST_CASE("repeat protocol reports mean and confidence width") {
    int calls = 0;
    const MetricStat constant = repeat_metric([&](Rng&) { ++calls; return 4.5; }, 20, 1);
    CHECK(calls == 20);
    CHECK(constant.mean == doctest::Approx(4.5));
    CHECK(constant.ci95 == doctest::Approx(0.0));
    CHECK(constant.n_reps == 20);

    const MetricStat noisy =
        repeat_metric([](Rng& rng) { return rng.uniform(); }, 20, 2);
    CHECK(noisy.mean > 0.2);
    CHECK(noisy.mean < 0.8);
    CHECK(noisy.ci95 > 0.0);

    // deterministic across invocations
    const MetricStat again =
        repeat_metric([](Rng& rng) { return rng.uniform(); }, 20, 2);
    CHECK(noisy.mean == again.mean);
    CHECK(noisy.ci95 == again.ci95);
}

TEST_CASE("metrics report serializes with the extractor block per metric") {
    MetricsReport report;
    report.extractor_kind = "random_projection";
    report.extractor_seed = 3;
    report.feature_dim = 16;
    report.metrics["fid"] = MetricStat{1.25, 0.05, 20};
    const std::string json = report.to_json();
    CHECK(json.find("\"fid\"") != std::string::npos);
    CHECK(json.find("\"mean\"") != std::string::npos);
    CHECK(json.find("\"ci95\"") != std::string::npos);
    CHECK(json.find("\"n_reps\"") != std::string::npos);
    CHECK(json.find("random_projection") != std::string::npos);
    CHECK(json.find("NOT comparable") != std::string::npos);
}

TEST_CASE("text features share the projection space dimensions") {
    std::vector<DenseArray> embeddings;
    Rng rng(25);
    for (int i = 0; i < 3; ++i) embeddings.push_back(rng.normal_array({16}));
    const FeatureExtractor ex = make_random_projection(23, 8, 9);
    const FeatureSet f = text_features(embeddings, ex);
    CHECK(f.features.shape() == Shape{3, 8});
    CHECK(f.provenance == "text");
    const FeatureSet f2 = text_features(embeddings, ex);
    CHECK(f.features == f2.features);
}
