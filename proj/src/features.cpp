#include "mfm/features.hpp"

#include <cmath>

#include "mfm/errors.hpp"
#include "mfm/optimizer.hpp"
#include "mfm/rng.hpp"
#include "mfm/tape.hpp"

namespace mfm {

std::string extractor_kind_name(ExtractorKind kind) {
    return kind == ExtractorKind::random_projection ? "random_projection" : "trained_encoder";
}

ExtractorKind extractor_kind_from_string(const std::string& name) {
    if (name == "random_projection") return ExtractorKind::random_projection;
    if (name == "trained_encoder") return ExtractorKind::trained_encoder;
    throw ConfigError("unknown extractor kind '" + name + "'");
}

DenseArray pool_motion(const MotionSequence& motion) {
    const std::size_t d = motion.dim();
    const std::size_t frames = motion.frames;
    DenseArray pooled({2 * d});
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < frames; ++i) mu += motion.values.at2(i, j);
        mu /= static_cast<double>(frames);
        double var = 0.0;
        for (std::size_t i = 0; i < frames; ++i) {
            const double c = motion.values.at2(i, j) - mu;
            var += c * c;
        }
        pooled[j] = mu;
        pooled[d + j] = std::sqrt(var / static_cast<double>(frames));
    }
    return pooled;
}

FeatureExtractor make_random_projection(std::size_t pose_dim, std::size_t out_dim,
                                        std::uint64_t seed) {
    if (pose_dim == 0 || out_dim == 0) {
        throw ConfigError("make_random_projection: dims must be positive");
    }
    FeatureExtractor ex;
    ex.kind = ExtractorKind::random_projection;
    ex.seed = seed;
    ex.input_dim = 2 * pose_dim;
    ex.out_dim = out_dim;
    Rng rng = Rng(seed).child(0x7E47);
    const double scale = 1.0 / std::sqrt(static_cast<double>(ex.input_dim));
    ex.weight = DenseArray({ex.input_dim, out_dim});
    for (double& w : ex.weight.vec()) w = scale * rng.normal();
    ex.bias = DenseArray({out_dim});
    return ex;
}

FeatureExtractor train_encoder_extractor(const std::vector<MotionSequence>& motions,
                                         std::size_t out_dim, std::uint64_t seed,
                                         std::size_t steps) {
    if (motions.empty()) throw ConfigError("train_encoder_extractor: empty input");
    const std::size_t d2 = 2 * motions.front().dim();
    const std::size_t n = motions.size();

    DenseArray pooled({n, d2});
    for (std::size_t i = 0; i < n; ++i) {
        const DenseArray p = pool_motion(motions[i]);
        for (std::size_t j = 0; j < d2; ++j) pooled.at2(i, j) = p[j];
    }

    // full-batch autoencoder: x -> tanh(x W1 + b1) -> W2 + b2 -> x
    Tape tape;
    const NodeId x = tape.input("x", {n, d2});
    NodeId h = tape.matmul(x, tape.param("w1", {d2, out_dim}));
    h = tape.add(h, tape.broadcast(tape.param("b1", {out_dim}), {n, out_dim}));
    h = tape.tanh(h);
    NodeId xr = tape.matmul(h, tape.param("w2", {out_dim, d2}));
    xr = tape.add(xr, tape.broadcast(tape.param("b2", {d2}), {n, d2}));
    tape.mean(tape.square(tape.sub(xr, x)));

    Rng rng(seed);
    ParamMap params;
    const double s1 = std::sqrt(2.0 / static_cast<double>(d2 + out_dim));
    DenseArray w1({d2, out_dim});
    for (double& w : w1.vec()) w = s1 * rng.normal();
    DenseArray w2({out_dim, d2});
    for (double& w : w2.vec()) w = s1 * rng.normal();
    params.emplace("w1", std::move(w1));
    params.emplace("b1", DenseArray({out_dim}));
    params.emplace("w2", std::move(w2));
    params.emplace("b2", DenseArray({d2}));

    OptimizerState opt;
    opt.config.lr = 1e-2;
    for (std::size_t step = 0; step < steps; ++step) {
        Bindings b;
        for (const auto& [name, p] : params) b.emplace(name, &p);
        b.emplace("x", &pooled);
        ForwardBackwardResult r = forward_backward(tape, b);
        optimizer_step(params, r.grads, opt);
    }

    FeatureExtractor ex;
    ex.kind = ExtractorKind::trained_encoder;
    ex.seed = seed;
    ex.input_dim = d2;
    ex.out_dim = out_dim;
    ex.weight = params.at("w1");
    ex.bias = params.at("b1");
    return ex;
}

namespace {

void apply_extractor(const FeatureExtractor& ex, const DenseArray& pooled, double* out) {
    for (std::size_t f = 0; f < ex.out_dim; ++f) {
        double s = ex.bias[f];
        for (std::size_t j = 0; j < ex.input_dim; ++j) s += pooled[j] * ex.weight.at2(j, f);
        out[f] = ex.kind == ExtractorKind::trained_encoder ? std::tanh(s) : s;
    }
}

}  // namespace

FeatureSet extract_features(const std::vector<MotionSequence>& motions,
                            const FeatureExtractor& extractor, std::string provenance) {
    if (motions.empty()) throw ConfigError("extract_features: empty input");
    const std::size_t n = motions.size();
    DenseArray features({n, extractor.out_dim});
    for (std::size_t i = 0; i < n; ++i) {
        const DenseArray pooled = pool_motion(motions[i]);
        if (pooled.numel() != extractor.input_dim) {
            throw ShapeError("extract_features: pooled width " + std::to_string(pooled.numel()) +
                             " does not match extractor input " +
                             std::to_string(extractor.input_dim));
        }
        apply_extractor(extractor, pooled, features.data() + i * extractor.out_dim);
    }
    return FeatureSet{std::move(features), std::move(provenance)};
}

FeatureSet text_features(const std::vector<DenseArray>& embeddings,
                         const FeatureExtractor& extractor) {
    if (embeddings.empty()) throw ConfigError("text_features: empty input");
    const std::size_t cond_dim = embeddings.front().numel();
    Rng rng = Rng(extractor.seed).child(0x7E48);
    DenseArray proj({cond_dim, extractor.out_dim});
    const double scale = 1.0 / std::sqrt(static_cast<double>(cond_dim));
    for (double& w : proj.vec()) w = scale * rng.normal();

    DenseArray features({embeddings.size(), extractor.out_dim});
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].numel() != cond_dim) {
            throw ShapeError("text_features: inconsistent embedding widths");
        }
        for (std::size_t f = 0; f < extractor.out_dim; ++f) {
            double s = 0.0;
            for (std::size_t j = 0; j < cond_dim; ++j) s += embeddings[i][j] * proj.at2(j, f);
            features.at2(i, f) = s;
        }
    }
    return FeatureSet{std::move(features), "text"};
}

}  // namespace mfm
