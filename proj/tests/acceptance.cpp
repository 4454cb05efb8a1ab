// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured numbers. Trained artifacts are built once and shared
// across criteria. CSV artifacts land in ./acceptance_artifacts/.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mfm/editor.hpp"
#include "mfm/metrics.hpp"
#include "mfm/pipeline.hpp"
#include "mfm/synthetic.hpp"
#include "mfm/training.hpp"

using namespace mfm;

namespace {

using Clock = std::chrono::steady_clock;

struct Stopwatch {
    Clock::time_point start = Clock::now();
    double seconds() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
};

void report(int criterion, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[criterion %2d] %-28s %s  (%s; %.1fs)\n", criterion, name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    std::fflush(stdout);
}

std::filesystem::path artifact_dir() {
    const std::filesystem::path dir = "acceptance_artifacts";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// conditional straight-line field toward a single data point
FieldFn point_oracle(const DenseArray& x1) {
    return [x1](const DenseArray& x, double t) {
        DenseArray v(x.shape());
        const double denom = 1.0 - t;
        for (std::size_t i = 0; i < v.numel(); ++i) v[i] = (x1[i] - x[i]) / denom;
        return v;
    };
}

// ---------------------------------------------------------------- fixtures

// toy model: gaussian-shift two-class set, D=23, T=8
struct ToyArtifacts {
    std::vector<MotionSequence> train_set;
    std::vector<MotionSequence> heldout;
    TrainResult trained;
    double train_seconds = 0.0;

    ModelBundle bundle() const {
        return ModelBundle{trained.model, trained.layout, trained.norm};
    }
};

const ToyArtifacts& toy() {
    static const ToyArtifacts artifacts = [] {
        SyntheticDatasetSpec spec;
        spec.family = DatasetFamily::gaussian_shift;
        spec.joints = 2;
        spec.frames = 8;
        spec.classes = 2;
        spec.samples_per_class = 128;
        spec.seed = 101;
        spec.noise_sigma = 0.25;
        std::vector<MotionSequence> train_set = gen_synthetic_dataset(spec);
        spec.samples_per_class = 256;
        spec.sample_stream = 1;  // held-out split of the same classes
        std::vector<MotionSequence> heldout = gen_synthetic_dataset(spec);

        ModelConfig mc;
        mc.feature_dim = 23;
        mc.frames = 8;
        mc.arch = Architecture::transformer;
        mc.d_model = 64;
        mc.layers = 2;
        mc.heads = 4;
        mc.d_ff = 128;
        mc.cond_vocab = 2;
        mc.cond_dim = 32;
        mc.time_dim = 32;

        TrainConfig tc;
        tc.steps = 5000;
        tc.batch_size = 32;
        tc.lr = 1e-4;  // paper's training rate
        tc.p_drop = 0.10;
        tc.seed = 404;
        tc.log_every = 1;

        Stopwatch watch;
        TrainResult trained = train(train_set, mc, tc);
        return ToyArtifacts{std::move(train_set), std::move(heldout), std::move(trained),
                            watch.seconds()};
    }();
    return artifacts;
}

std::vector<MotionSequence> noise_motions(const PoseLayout& layout, std::size_t frames,
                                          std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<MotionSequence> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.emplace_back(layout, rng.normal_array({frames, feature_dim(layout)}));
    }
    return out;
}

// walker model and the 500-edit suite shared by criteria 8 and 9
struct EditSuite {
    double ade_zero = 0.0, fde_zero = 0.0;      // no rewriting
    double ade_paper = 0.0, fde_paper = 0.0;    // threshold 0.2
    double ade_full = 0.0, fde_full = 0.0;      // threshold 1.0
    double boundary_jump = 0.0;                 // mean seam discontinuity at 0.2
    double dataset_step = 0.0;                  // dataset mean frame-to-frame difference
    double train_seconds = 0.0;
    double edit_seconds = 0.0;
};

const EditSuite& edit_suite() {
    static const EditSuite suite = [] {
        EditSuite s;

        SyntheticDatasetSpec spec;
        spec.family = DatasetFamily::sine_walker;
        spec.joints = 4;
        spec.frames = 24;
        spec.classes = 2;
        spec.samples_per_class = 128;
        spec.seed = 111;
        const auto train_set = gen_synthetic_dataset(spec);

        ModelConfig mc;
        mc.feature_dim = feature_dim(PoseLayout{4});
        mc.frames = 24;
        mc.arch = Architecture::transformer;
        mc.d_model = 64;
        mc.layers = 2;
        mc.heads = 4;
        mc.d_ff = 128;
        mc.cond_vocab = 2;
        mc.cond_dim = 32;
        mc.time_dim = 32;

        TrainConfig tc;
        tc.steps = 3000;
        tc.batch_size = 32;
        tc.lr = 1e-3;
        tc.p_drop = 0.10;
        tc.seed = 222;
        tc.log_every = 50;

        Stopwatch train_watch;
        const TrainResult trained = train(train_set, mc, tc);
        s.train_seconds = train_watch.seconds();
        const ModelBundle bundle{trained.model, trained.layout, trained.norm};

        // held-out ground truth: same walker classes, fresh sample stream
        spec.samples_per_class = 250;
        spec.sample_stream = 1;
        const auto gt_set = gen_synthetic_dataset(spec);

        const std::size_t prefix = 12;
        MaskParams mp;
        mp.prefix_frames = prefix;
        const EditMask mask = build_mask(EditTask::prediction, PoseLayout{4}, 24, mp);
        std::vector<std::size_t> region;
        for (std::size_t f = prefix; f < 24; ++f) region.push_back(f);

        // dataset-average frame-to-frame feature difference, for the seam check
        double step_total = 0.0;
        std::size_t step_count = 0;
        for (const MotionSequence& m : gt_set) {
            for (std::size_t f = 0; f + 1 < m.frames; ++f) {
                double d2 = 0.0;
                for (std::size_t c = 0; c < m.dim(); ++c) {
                    const double d = m.values.at2(f + 1, c) - m.values.at2(f, c);
                    d2 += d * d;
                }
                step_total += std::sqrt(d2);
                ++step_count;
            }
        }
        s.dataset_step = step_total / static_cast<double>(step_count);

        Stopwatch edit_watch;
        Rng seed_stream(444);
        const std::size_t edits = 500;
        struct Acc {
            double ade = 0.0, fde = 0.0;
        };
        Acc zero, paper, full;
        double boundary_total = 0.0;

        std::vector<std::uint64_t> seeds(edits);
        for (std::size_t e = 0; e < edits; ++e) seeds[e] = seed_stream.child(e + 1).seed();

        for (std::size_t e = 0; e < edits; ++e) {
            const MotionSequence& gt = gt_set[e];
            const std::optional<int> label = gt.condition_id;
            for (const double threshold : {0.0, 0.2, 1.0}) {
                EditConfig ec;
                ec.steps = 30;
                ec.threshold = threshold;
                ec.guidance = 1.0;
                ec.seed = seeds[e];
                const SampleOutput out = edit_motion(bundle, gt, mask, label, ec);
                const AdeFde err = ade_fde(out.motion, gt, region);
                if (threshold == 0.0) {
                    zero.ade += err.ade;
                    zero.fde += err.fde;
                } else if (threshold == 0.2) {
                    paper.ade += err.ade;
                    paper.fde += err.fde;
                    double d2 = 0.0;
                    for (std::size_t c = 0; c < out.motion.dim(); ++c) {
                        const double d = out.motion.values.at2(prefix, c) -
                                         out.motion.values.at2(prefix - 1, c);
                        d2 += d * d;
                    }
                    boundary_total += std::sqrt(d2);
                } else {
                    full.ade += err.ade;
                    full.fde += err.fde;
                }
            }
        }
        const double inv = 1.0 / static_cast<double>(edits);
        s.ade_zero = zero.ade * inv;
        s.fde_zero = zero.fde * inv;
        s.ade_paper = paper.ade * inv;
        s.fde_paper = paper.fde * inv;
        s.ade_full = full.ade * inv;
        s.fde_full = full.fde * inv;
        s.boundary_jump = boundary_total * inv;
        s.edit_seconds = edit_watch.seconds();
        return s;
    }();
    return suite;
}

}  // namespace

TEST_CASE("criterion 1: oracle straightness") {
    Stopwatch watch;
    Rng rng(11);
    const DenseArray x1 = rng.normal_array({4, 23});
    const FieldFn field = point_oracle(x1);

    double worst = 0.0;
    for (const std::size_t n : {std::size_t(1), std::size_t(2), std::size_t(10),
                                std::size_t(100)}) {
        SamplerConfig cfg;
        cfg.steps = n;
        cfg.seed = 12;
        const auto [final, traj] = sample(field, {4, 23}, cfg);
        worst = std::max(worst, std::sqrt(squared_distance(final, x1)));
    }
    const bool pass = worst <= 1e-9;
    CHECK(worst <= 1e-9);
    report(1, "oracle straightness", pass, fmt("terminal error %.3g <= 1e-9", worst),
           watch.seconds());
}

TEST_CASE("criterion 2: gradient soundness") {
    Stopwatch watch;
    ModelConfig mc;
    mc.feature_dim = 23;
    mc.frames = 4;
    mc.arch = Architecture::transformer;
    mc.d_model = 32;
    mc.layers = 2;
    mc.heads = 4;
    mc.d_ff = 64;
    mc.cond_vocab = 2;
    mc.cond_dim = 16;
    mc.time_dim = 16;
    VectorFieldModel model = VectorFieldModel::init(mc, 21);
    Rng noise(22);
    for (auto& [name, p] : model.params()) {
        for (double& v : p.vec()) v += 0.05 * noise.normal();
    }

    // frozen batch: the loss becomes a pure function of the parameters
    Rng data_rng(23);
    std::vector<DenseArray> data;
    for (int i = 0; i < 8; ++i) data.push_back(data_rng.normal_array({4, 23}));
    std::vector<TrainExample> examples;
    for (std::size_t i = 0; i < data.size(); ++i) {
        examples.push_back(TrainExample{&data[i], static_cast<int>(i % 2)});
    }
    Rng batch_rng(24);
    const std::vector<TrainItem> batch =
        assemble_batch(examples, mc, PathParams{}, 0.25, 8, batch_rng);

    const LossResult base = cfm_loss_on_batch(model, batch);
    auto eval = [&](const ParamMap& params) {
        VectorFieldModel probe(mc, params);
        return cfm_loss_on_batch(probe, batch).loss;
    };

    Rng dir_rng(25);
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        // random unit direction over the full parameter vector
        ParamMap direction;
        double norm2 = 0.0;
        for (const auto& [name, p] : model.params()) {
            DenseArray d(p.shape());
            for (double& v : d.vec()) {
                v = dir_rng.normal();
                norm2 += v * v;
            }
            direction.emplace(name, std::move(d));
        }
        const double inv_norm = 1.0 / std::sqrt(norm2);

        ParamMap plus = model.params();
        ParamMap minus = model.params();
        double analytic = 0.0;
        for (const auto& [name, d] : direction) {
            const DenseArray& g = base.grads.at(name);
            DenseArray& pp = plus.at(name);
            DenseArray& pm = minus.at(name);
            for (std::size_t i = 0; i < d.numel(); ++i) {
                const double step = h * d[i] * inv_norm;
                pp[i] += step;
                pm[i] -= step;
                analytic += g[i] * d[i] * inv_norm;
            }
        }
        const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
        const double rel = std::abs(fd - analytic) /
                           std::max({std::abs(fd), std::abs(analytic), 1e-6});
        worst = std::max(worst, rel);
    }
    const bool pass = worst < 1e-4;
    CHECK(worst < 1e-4);
    report(2, "gradient soundness", pass,
           fmt("worst relative error %.3g over 50 directions", worst), watch.seconds());
}

TEST_CASE("criterion 3: regression target equals x1 - x0") {
    Stopwatch watch;
    Rng rng(31);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const DenseArray x0 = rng.normal_array({6});
        const DenseArray x1 = rng.normal_array({6});
        const double t = rng.uniform(0.0, 1.0 - 1e-5);
        const DenseArray w = target_field(x0, x1, t, 0.0);
        for (std::size_t k = 0; k < 6; ++k) {
            worst = std::max(worst, std::abs(w[k] - (x1[k] - x0[k])));
        }
    }
    const bool pass = worst < 1e-10;
    CHECK(worst < 1e-10);
    report(3, "algorithm-2 target", pass, fmt("max |w - (x1-x0)| = %.3g over 1000 draws", worst),
           watch.seconds());
}

TEST_CASE("criterion 4: training progress") {
    Stopwatch watch;
    const ToyArtifacts& a = toy();
    REQUIRE_FALSE(a.trained.diverged);

    const auto& log = a.trained.log;
    REQUIRE(log.size() == 5000);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 100; ++i) {
        head += log[i].loss;
        tail += log[log.size() - 1 - i].loss;
    }
    const double ratio = tail / head;

    const ModelBundle bundle = a.bundle();
    SamplerConfig sc;
    sc.steps = 10;
    sc.seed = 505;
    const std::vector<MotionSequence> generated = generate_motions(bundle, 512, sc);
    const std::vector<MotionSequence> noise = noise_motions(PoseLayout{2}, 8, 512, 303);

    const FeatureExtractor extractor = make_random_projection(23, 16, 606);
    const FeatureSet f_ref = extract_features(a.heldout, extractor, "gt");
    const double fid_gen = fid(extract_features(generated, extractor, "pred"), f_ref);
    const double fid_noise = fid(extract_features(noise, extractor, "pred"), f_ref);

    const bool pass = ratio < 0.25 && fid_gen < 0.20 * fid_noise;
    CHECK(ratio < 0.25);
    CHECK(fid_gen < 0.20 * fid_noise);
    report(4, "training progress", pass,
           fmt("loss ratio %.3f, FID gen %.3f vs noise %.3f (train %.0fs)", ratio, fid_gen,
               fid_noise, a.train_seconds),
           watch.seconds());
}

TEST_CASE("criterion 5: nfe plateau") {
    Stopwatch watch;
    const ToyArtifacts& a = toy();
    const ModelBundle bundle = a.bundle();
    const FeatureExtractor extractor = make_random_projection(23, 16, 606);
    const FeatureSet f_ref = extract_features(a.heldout, extractor, "gt");

    std::string csv = "nfe,fid,avg_infer_seconds\n";
    double fid2 = 0.0, fid10 = 0.0, fid100 = 0.0;
    for (const std::size_t n : {std::size_t(1), std::size_t(2), std::size_t(5), std::size_t(10),
                                std::size_t(50), std::size_t(100)}) {
        SamplerConfig sc;
        sc.steps = n;
        sc.seed = 505;
        Stopwatch gen_watch;
        const std::vector<MotionSequence> gens = generate_motions(bundle, 400, sc);
        const double avg_seconds = gen_watch.seconds() / 400.0;
        const double value = fid(extract_features(gens, extractor, "pred"), f_ref);
        csv += fmt("%zu,%.10g,%.6g\n", n, value, avg_seconds);
        if (n == 2) fid2 = value;
        if (n == 10) fid10 = value;
        if (n == 100) fid100 = value;
    }
    std::ofstream(artifact_dir() / "nfe_curve.csv") << csv;

    // same-distribution FID at this sample size, for scale
    SyntheticDatasetSpec floor_spec;
    floor_spec.family = DatasetFamily::gaussian_shift;
    floor_spec.joints = 2;
    floor_spec.frames = 8;
    floor_spec.classes = 2;
    floor_spec.samples_per_class = 256;
    floor_spec.seed = 101;
    floor_spec.noise_sigma = 0.25;
    floor_spec.sample_stream = 2;
    const double floor =
        fid(extract_features(gen_synthetic_dataset(floor_spec), extractor, "gt"), f_ref);

    const bool plateau = std::abs(fid10 - fid100) <= 0.25 * fid100;
    const bool coarse_worse = fid2 > fid10;
    CHECK(plateau);
    CHECK(coarse_worse);
    report(5, "nfe plateau", plateau && coarse_worse,
           fmt("FID N=2 %.4f, N=10 %.4f, N=100 %.4f (same-dist floor %.4f)", fid2, fid10,
               fid100, floor),
           watch.seconds());
}

TEST_CASE("criterion 6: guidance identities and sweep") {
    Stopwatch watch;
    const ToyArtifacts& a = toy();
    const VectorFieldModel& model = a.trained.model;

    Rng rng(707);
    bool identities = true;
    for (int i = 0; i < 100; ++i) {
        const DenseArray x = rng.normal_array({8, 23});
        const double t = rng.uniform(0.0, 1.0);
        const int label = static_cast<int>(rng.index(2));
        const DenseArray s1 = guided_field(model, x, t, label, 1.0);
        const DenseArray cond = model.predict_field(x, t, label);
        const DenseArray s0 = guided_field(model, x, t, label, 0.0);
        const DenseArray uncond = model.predict_field(x, t, std::nullopt);
        identities = identities && s1 == cond && s0 == uncond;
    }
    CHECK(identities);

    // sweep artifact over the paper's guidance strengths
    const ModelBundle bundle = a.bundle();
    const FeatureExtractor extractor = make_random_projection(23, 16, 606);
    const FeatureSet f_ref = extract_features(a.heldout, extractor, "gt");
    std::string csv = "s,fid,diversity\n";
    bool sweep_finite = true;
    for (const double s : {0.0, 1.0, 2.0, 2.5, 3.0, 5.0}) {
        SamplerConfig sc;
        sc.steps = 10;
        sc.seed = 808;
        sc.guidance = s;
        const std::vector<MotionSequence> gens = generate_motions(bundle, 128, sc);
        const FeatureSet f_gen = extract_features(gens, extractor, "pred");
        const double value = fid(f_gen, f_ref);
        Rng div_rng(809);
        const double div = diversity(f_gen, 300, div_rng).value;
        sweep_finite = sweep_finite && std::isfinite(value) && std::isfinite(div);
        csv += fmt("%.1f,%.10g,%.10g\n", s, value, div);
    }
    std::ofstream(artifact_dir() / "guidance_sweep.csv") << csv;
    CHECK(sweep_finite);

    const bool pass = identities && sweep_finite;
    report(6, "guidance identities", pass,
           "s=1 and s=0 exact on 100 states; sweep csv written", watch.seconds());
}

TEST_CASE("criterion 7: rewriting contracts") {
    Stopwatch watch;
    const ToyArtifacts& a = toy();
    const FieldFn field = model_field(a.trained.model, 0, 1.0);
    const DenseArray ref = a.trained.norm.normalize(a.heldout.front().values);

    // (a) all-unknown mask reproduces plain sampling bitwise
    const EditMask open_mask(8, 23);
    EditConfig ec;
    ec.steps = 30;
    ec.threshold = 0.2;
    ec.seed = 909;
    const auto [edited, etraj] = rewrite_sample(field, ref, open_mask, ec);
    SamplerConfig sc;
    sc.steps = 30;
    sc.seed = 909;
    const auto [plain, ptraj] = sample(field, {8, 23}, sc);
    bool reduction = edited == plain;
    for (std::size_t i = 0; reduction && i < etraj.states.size(); ++i) {
        reduction = etraj.states[i] == ptraj.states[i];
    }
    CHECK(reduction);

    // (b) known dims equal the interpolant exactly at every rewrite step
    EditMask mask(8, 23);
    Rng mask_rng(910);
    for (auto& v : mask.known) v = mask_rng.uniform() < 0.4 ? 1 : 0;
    EditConfig ec2;
    ec2.steps = 10;
    ec2.threshold = 0.5;
    ec2.seed = 911;
    const auto [out2, traj2] = rewrite_sample(field, ref, mask, ec2);
    const DenseArray x0 = Rng(ec2.seed).normal_array({8, 23});
    bool pinned = true;
    for (std::size_t step = 0; step < ec2.steps; ++step) {
        const double t = static_cast<double>(step) / 10.0;
        if (!(t < ec2.threshold)) break;
        for (std::size_t i = 0; i < ref.numel(); ++i) {
            if (!mask.known[i]) continue;
            pinned = pinned && traj2.states[step][i] == (1.0 - t) * x0[i] + t * ref[i];
        }
    }
    CHECK(pinned);

    // (c) threshold zero reduces to plain sampling
    EditConfig ec3;
    ec3.steps = 30;
    ec3.threshold = 0.0;
    ec3.seed = 909;
    const auto [out3, traj3] = rewrite_sample(field, ref, mask, ec3);
    const bool zero_reduces = out3 == plain;
    CHECK(zero_reduces);

    const bool pass = reduction && pinned && zero_reduces;
    report(7, "rewriting contracts", pass,
           "open-mask bitwise, pinned dims exact, threshold-0 reduction", watch.seconds());
}

TEST_CASE("criterion 8: editing efficacy") {
    Stopwatch watch;
    const EditSuite& s = edit_suite();
    const bool ade_better = s.ade_paper < s.ade_zero;
    const bool fde_better = s.fde_paper < s.fde_zero;
    CHECK(ade_better);
    CHECK(fde_better);

    // seam continuity: edits must not teleport at the known/unknown boundary
    const bool continuous = s.boundary_jump <= 3.0 * s.dataset_step;
    CHECK(continuous);

    const bool pass = ade_better && fde_better && continuous;
    report(8, "editing efficacy", pass,
           fmt("ADE %.3f<%.3f, FDE %.3f<%.3f, seam %.2fx (train %.0fs, edits %.0fs)",
               s.ade_paper, s.ade_zero, s.fde_paper, s.fde_zero,
               s.boundary_jump / s.dataset_step, s.train_seconds, s.edit_seconds),
           watch.seconds());
}

TEST_CASE("criterion 9: rewriting threshold sensitivity") {
    Stopwatch watch;
    const EditSuite& s = edit_suite();
    const bool within = std::abs(s.ade_paper - s.ade_full) <= 0.10 * s.ade_full;
    CHECK(within);
    report(9, "threshold sensitivity", within,
           fmt("ADE 0.2: %.4f vs 1.0: %.4f (|diff| %.1f%%)", s.ade_paper, s.ade_full,
               100.0 * std::abs(s.ade_paper - s.ade_full) / s.ade_full),
           watch.seconds());
}

TEST_CASE("criterion 10: metric oracles") {
    Stopwatch watch;
    bool pass = true;

    // analytic gaussian FID, sampled
    {
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
        const double value =
            fid(FeatureSet{std::move(a), "gt"}, FeatureSet{std::move(b), "pred"});
        const bool ok = std::abs(value - 25.0) <= 0.02 * 25.0;
        CHECK(ok);
        pass = pass && ok;
    }

    // exact closed form
    {
        DenseArray mu({2});
        DenseArray cov_a({2, 2}, {4.0, 0.0, 0.0, 4.0});
        DenseArray cov_b({2, 2}, {1.0, 0.0, 0.0, 1.0});
        const double value = fid_from_moments(mu, cov_a, mu, cov_b);
        const bool ok = std::abs(value - 2.0) < 1e-10;
        CHECK(ok);
        pass = pass && ok;
    }

    // diversity / mm-dist / mmodality / ade-fde against direct recomputation
    {
        Rng rng(41);
        const DenseArray rows = rng.normal_array({64, 5});
        Rng r1(42), r2(42);
        const double measured = diversity(FeatureSet{rows, "pred"}, 20, r1).value;
        const auto perm = r2.permutation(64);
        double expected = 0.0;
        for (int p = 0; p < 20; ++p) {
            double s = 0.0;
            for (std::size_t c = 0; c < 5; ++c) {
                const double d = rows.at2(perm[2 * p], c) - rows.at2(perm[2 * p + 1], c);
                s += d * d;
            }
            expected += std::sqrt(s);
        }
        expected /= 20.0;
        const bool ok = std::abs(measured - expected) < 1e-10;
        CHECK(ok);
        pass = pass && ok;
    }
    {
        Rng rng(43);
        const DenseArray p = rng.normal_array({16, 4});
        const DenseArray t = rng.normal_array({16, 4});
        double expected = 0.0;
        for (std::size_t i = 0; i < 16; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                const double d = p.at2(i, c) - t.at2(i, c);
                s += d * d;
            }
            expected += std::sqrt(s);
        }
        expected /= 16.0;
        const double measured = mm_dist(FeatureSet{p, "pred"}, FeatureSet{t, "text"});
        const bool ok = std::abs(measured - expected) < 1e-10;
        CHECK(ok);
        pass = pass && ok;
    }
    {
        Rng data_rng(44);
        std::vector<DenseArray> grouped{data_rng.normal_array({24, 4})};
        Rng r1(45), r2(45);
        const double measured = mmodality(grouped, r1);
        const auto perm = r2.permutation(24);
        double expected = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                const double d = grouped[0].at2(perm[j], c) - grouped[0].at2(perm[10 + j], c);
                s += d * d;
            }
            expected += std::sqrt(s);
        }
        expected /= 10.0;
        const bool ok = std::abs(measured - expected) < 1e-10;
        CHECK(ok);
        pass = pass && ok;
    }
    {
        SyntheticDatasetSpec spec;
        spec.family = DatasetFamily::sine_walker;
        spec.joints = 3;
        spec.frames = 8;
        spec.classes = 1;
        spec.samples_per_class = 2;
        spec.seed = 46;
        const auto motions = gen_synthetic_dataset(spec);
        const PoseLayout layout{3};
        std::vector<std::size_t> region{3, 4, 5, 6, 7};
        const AdeFde measured = ade_fde(motions[0], motions[1], region);
        double ade_expected = 0.0, fde_expected = 0.0;
        for (std::size_t fi = 0; fi < region.size(); ++fi) {
            double frame_err = 0.0;
            for (std::size_t j = 0; j + 1 < layout.joints; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    const std::size_t col = layout.positions_offset() + 3 * j + c;
                    const double d = motions[0].values.at2(region[fi], col) -
                                     motions[1].values.at2(region[fi], col);
                    s += d * d;
                }
                frame_err += std::sqrt(s);
            }
            frame_err /= static_cast<double>(layout.joints - 1);
            ade_expected += frame_err;
            if (fi + 1 == region.size()) fde_expected = frame_err;
        }
        ade_expected /= static_cast<double>(region.size());
        const bool ok = std::abs(measured.ade - ade_expected) < 1e-10 &&
                        std::abs(measured.fde - fde_expected) < 1e-10;
        CHECK(ok);
        pass = pass && ok;
    }

    // r-precision: perfect retrieval and the random-model null
    {
        Rng rng(47);
        const DenseArray t = rng.normal_array({64, 8});
        Rng r(48);
        const double perfect =
            r_precision_top3(FeatureSet{t, "pred"}, FeatureSet{t, "text"}, r);
        const bool ok_perfect = perfect == 1.0;
        CHECK(ok_perfect);

        const DenseArray p2 = rng.normal_array({3200, 32});
        const DenseArray t2 = rng.normal_array({3200, 32});
        Rng r2(49);
        const double null_acc =
            r_precision_top3(FeatureSet{p2, "pred"}, FeatureSet{t2, "text"}, r2);
        const bool ok_null = std::abs(null_acc - 3.0 / 32.0) <= 0.02;
        CHECK(ok_null);
        pass = pass && ok_perfect && ok_null;
    }

    report(10, "metric oracles", pass, "fid/diversity/mm-dist/mmodality/ade-fde/r-precision",
           watch.seconds());
}

TEST_CASE("criterion 11: representation dimensions") {
    Stopwatch watch;
    const bool pass = feature_dim(PoseLayout{21}) == 251 && feature_dim(PoseLayout{22}) == 263;
    CHECK(feature_dim(PoseLayout{21}) == 251);
    CHECK(feature_dim(PoseLayout{22}) == 263);
    report(11, "representation dims", pass, "j=21 -> 251, j=22 -> 263", watch.seconds());
}
