#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mfm/synthetic.hpp"
#include "mfm/training.hpp"
#include "test_support.hpp"

using namespace mfm;

TEST_CASE("interpolate endpoints and midpoint") {
    const DenseArray x0 = DenseArray::from({1.0, -2.0, 0.5});
    const DenseArray x1 = DenseArray::from({3.0, 0.0, -1.5});

    CHECK(interpolate(x0, x1, 0.0, 0.0) == x0);
    CHECK(interpolate(x0, x1, 1.0, 0.0) == x1);

    const DenseArray mid = interpolate(DenseArray::from({0.0}), DenseArray::from({2.0}), 0.5, 0.0);
    CHECK(mid[0] == doctest::Approx(1.0));

    // t=1 with sigma_min keeps sigma_min * x0 residual noise
    const double sigma = 0.2;
    const DenseArray end = interpolate(x0, x1, 1.0, sigma);
    for (std::size_t i = 0; i < end.numel(); ++i) {
        CHECK(end[i] == doctest::Approx(x1[i] + sigma * x0[i]).epsilon(1e-15));
    }

    CHECK_THROWS_AS(interpolate(x0, DenseArray::from({1.0}), 0.5, 0.0), ShapeError);
    CHECK_THROWS_AS(interpolate(x0, x1, 1.5, 0.0), ConfigError);
}

TEST_CASE("target field with sigma_min 0 is exactly x1 minus x0 for any t") {
    Rng rng(3);
    const DenseArray x0 = rng.normal_array({4, 5});
    const DenseArray x1 = rng.normal_array({4, 5});
    for (int k = 0; k < 50; ++k) {
        const double t = rng.uniform(0.0, 1.0 - 1e-5);
        const DenseArray w = target_field(x0, x1, t, 0.0);
        for (std::size_t i = 0; i < w.numel(); ++i) {
            // exact cancellation: (x1 - x_t)/(1-t) with x_t on the chord
            CHECK(w[i] == doctest::Approx(x1[i] - x0[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("target field hand cases") {
    // degenerate pair: x0 == x1 gives a zero field
    const DenseArray same = DenseArray::from({0.7, -0.3});
    const DenseArray w0 = target_field(same, same, 0.35, 0.0);
    for (std::size_t i = 0; i < w0.numel(); ++i) CHECK(std::abs(w0[i]) < 1e-12);

    // sigma_min=0.1, t=0: w = (x1 - 0.9 * x0) / 1
    const DenseArray w1 =
        target_field(DenseArray::from({1.0}), DenseArray::from({0.0}), 0.0, 0.1);
    CHECK(w1[0] == doctest::Approx(-0.9));

    // pole guard near t=1
    CHECK_THROWS_AS(
        target_field(DenseArray::from({1.0}), DenseArray::from({0.0}), 1.0 - 1e-12, 0.0),
        NumericError);
}

TEST_CASE("literal target flag regresses the unnormalized form") {
    ModelConfig cfg;
    cfg.feature_dim = 3;
    cfg.frames = 1;
    cfg.arch = Architecture::mlp;
    cfg.d_model = 8;
    cfg.layers = 1;
    cfg.cond_vocab = 1;
    cfg.cond_dim = 4;
    cfg.time_dim = 4;

    Rng rng(1);
    const DenseArray x1 = rng.normal_array({1, 3});
    std::vector<TrainExample> examples{TrainExample{&x1, 0}};

    PathParams literal;
    literal.sigma_min = 0.1;
    literal.literal_target = true;
    Rng batch_rng(2);
    const auto items = assemble_batch(examples, cfg, literal, 0.0, 3, batch_rng);
    for (const auto& item : items) {
        for (std::size_t i = 0; i < item.target.numel(); ++i) {
            CHECK(item.target[i] ==
                  doctest::Approx(x1[i] - 0.9 * item.x_t[i]).epsilon(1e-12));
        }
    }
}

namespace {

ModelConfig toy_config(std::size_t frames, std::size_t vocab) {
    ModelConfig cfg;
    cfg.feature_dim = 23;
    cfg.frames = frames;
    cfg.arch = Architecture::transformer;
    cfg.d_model = 32;
    cfg.layers = 1;
    cfg.heads = 4;
    cfg.d_ff = 64;
    cfg.cond_vocab = vocab;
    cfg.cond_dim = 16;
    cfg.time_dim = 16;
    return cfg;
}

}  // namespace

TEST_CASE("zero model loss equals the mean squared target norm") {
    const ModelConfig cfg = toy_config(2, 1);
    const VectorFieldModel model = VectorFieldModel::init(cfg, 5);  // zero field at init

    Rng data_rng(6);
    std::vector<DenseArray> data;
    for (int i = 0; i < 3; ++i) data.push_back(data_rng.normal_array({2, 23}));
    std::vector<TrainExample> examples;
    for (const auto& d : data) examples.push_back(TrainExample{&d, 0});

    Rng batch_rng(7);
    const auto items = assemble_batch(examples, cfg, PathParams{}, 0.0, 8, batch_rng);
    const LossResult r = cfm_loss_on_batch(model, items);

    double expected = 0.0;
    for (const auto& item : items) {
        for (double w : item.target.vec()) expected += w * w;
    }
    expected /= static_cast<double>(items.size());
    CHECK(r.loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cfm loss is deterministic under a fixed seed") {
    const ModelConfig cfg = toy_config(2, 1);
    const VectorFieldModel model = VectorFieldModel::init(cfg, 5);
    Rng data_rng(8);
    const DenseArray x1 = data_rng.normal_array({2, 23});
    std::vector<TrainExample> examples{TrainExample{&x1, 0}};

    Rng rng_a(99), rng_b(99);
    const LossResult a = cfm_loss(model, examples, PathParams{}, 0.1, rng_a);
    const LossResult b = cfm_loss(model, examples, PathParams{}, 0.1, rng_b);
    CHECK(a.loss == b.loss);
    for (const auto& [name, g] : a.grads) CHECK(g == b.grads.at(name));
}

TEST_CASE("condition dropout probability one always uses the null embedding") {
    const ModelConfig cfg = toy_config(2, 3);
    Rng data_rng(9);
    const DenseArray x1 = data_rng.normal_array({2, 23});
    std::vector<TrainExample> examples{TrainExample{&x1, 1}};

    Rng rng(10);
    const auto items = assemble_batch(examples, cfg, PathParams{}, 1.0, 32, rng);
    for (const auto& item : items) {
        CHECK(item.used_null);
        CHECK(item.cond_onehot[cfg.cond_vocab] == 1.0);
    }

    Rng rng2(10);
    const auto items2 = assemble_batch(examples, cfg, PathParams{}, 0.0, 32, rng2);
    for (const auto& item : items2) CHECK_FALSE(item.used_null);
}

TEST_CASE("zero training steps keep the initialized model") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::gaussian_shift;
    spec.joints = 2;
    spec.frames = 2;
    spec.classes = 1;
    spec.samples_per_class = 4;
    spec.seed = 11;
    const auto dataset = gen_synthetic_dataset(spec);

    TrainConfig tc;
    tc.steps = 0;
    tc.seed = 12;
    const ModelConfig cfg = toy_config(2, 1);
    const TrainResult a = train(dataset, cfg, tc);
    const TrainResult b = train(dataset, cfg, tc);

    CHECK(a.log.empty());
    for (const auto& [name, p] : a.model.params()) CHECK(b.model.params().at(name) == p);
    // the zero-init head is untouched, so the field is still identically zero
    Rng rng(13);
    const DenseArray x = rng.normal_array({2, 23});
    const DenseArray v = a.model.predict_field(x, 0.5, 0);
    for (double val : v.vec()) CHECK(val == 0.0);
}

TEST_CASE("training is deterministic given the seed") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::gaussian_shift;
    spec.joints = 2;
    spec.frames = 2;
    spec.classes = 2;
    spec.samples_per_class = 8;
    spec.seed = 14;
    const auto dataset = gen_synthetic_dataset(spec);

    TrainConfig tc;
    tc.steps = 50;
    tc.batch_size = 8;
    tc.lr = 1e-3;
    tc.seed = 15;
    const ModelConfig cfg = toy_config(2, 2);
    const TrainResult a = train(dataset, cfg, tc);
    const TrainResult b = train(dataset, cfg, tc);
    for (const auto& [name, p] : a.model.params()) CHECK(b.model.params().at(name) == p);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
}

TEST_CASE("point dataset training drives the loss well below its start") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::point;
    spec.joints = 2;
    spec.frames = 2;
    spec.classes = 1;
    spec.samples_per_class = 4;
    spec.seed = 16;
    const auto dataset = gen_synthetic_dataset(spec);

    TrainConfig tc;
    tc.steps = 2000;
    tc.batch_size = 16;
    tc.lr = 3e-3;
    tc.p_drop = 0.1;
    tc.seed = 17;
    tc.log_every = 1;
    const TrainResult result = train(dataset, toy_config(2, 1), tc);
    REQUIRE_FALSE(result.diverged);

    // compare trailing-100 mean against the leading-100 mean
    const auto& log = result.log;
    REQUIRE(log.size() == 2000);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 100; ++i) {
        head += log[i].loss;
        tail += log[log.size() - 1 - i].loss;
    }
    CHECK(tail < 0.10 * head);
}

TEST_CASE("gaussian-shift training decreases under a 100-step moving average") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::gaussian_shift;
    spec.joints = 2;
    spec.frames = 2;
    spec.classes = 2;
    spec.samples_per_class = 16;
    spec.seed = 18;
    const auto dataset = gen_synthetic_dataset(spec);

    TrainConfig tc;
    tc.steps = 600;
    tc.batch_size = 16;
    tc.lr = 2e-3;
    tc.seed = 19;
    tc.log_every = 1;
    const TrainResult result = train(dataset, toy_config(2, 2), tc);
    REQUIRE_FALSE(result.diverged);

    const auto& log = result.log;
    REQUIRE(log.size() == 600);
    std::vector<double> windows;
    for (std::size_t start = 0; start + 100 <= log.size(); start += 100) {
        double m = 0.0;
        for (std::size_t i = start; i < start + 100; ++i) m += log[i].loss;
        windows.push_back(m / 100.0);
    }
    for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] < windows[i - 1]);
}

TEST_CASE("training aborts on divergence keeping the last finite state") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::gaussian_shift;
    spec.joints = 2;
    spec.frames = 2;
    spec.classes = 1;
    spec.samples_per_class = 4;
    spec.seed = 20;
    const auto dataset = gen_synthetic_dataset(spec);

    TrainConfig tc;
    tc.steps = 50;
    tc.batch_size = 4;
    tc.lr = 1e150;  // drives attention scores past the double range
    tc.seed = 21;
    const TrainResult result = train(dataset, toy_config(2, 1), tc);
    CHECK(result.diverged);
    CHECK(result.diverged_at_step > 0);
    for (const auto& [name, p] : result.model.params()) CHECK(p.all_finite());
}

TEST_CASE("norm stats standardize and floor constant channels") {
    SyntheticDatasetSpec spec;
    spec.family = DatasetFamily::point;
    spec.joints = 2;
    spec.frames = 1;  // K=1, one frame: every channel is constant across the set
    spec.classes = 1;
    spec.samples_per_class = 3;
    spec.seed = 22;
    const auto dataset = gen_synthetic_dataset(spec);
    const NormStats stats = compute_norm_stats(dataset);
    for (std::size_t j = 0; j < stats.stddev.numel(); ++j) CHECK(stats.stddev[j] == 1.0);

    const DenseArray z = stats.normalize(dataset.front().values);
    for (double v : z.vec()) CHECK(std::abs(v) < 1e-12);  // values equal the mean
}

TEST_CASE("train log csv has the documented header") {
    test_support::TempDir tmp("log");
    write_train_log(tmp / "log.csv", {{1, 2.5, 1e-4}, {2, 2.0, 1e-4}});
    std::ifstream f(tmp / "log.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "step,loss,lr");
    std::getline(f, line);
    CHECK(line.rfind("1,2.5", 0) == 0);
}
