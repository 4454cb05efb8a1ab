#include "mfm/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mfm/errors.hpp"
#include "mfm/threading.hpp"

namespace mfm {

void PathParams::validate() const {
    if (sigma_min < 0.0 || sigma_min >= 1.0) {
        throw ConfigError("PathParams: sigma_min must lie in [0, 1)");
    }
}

void TrainConfig::validate() const {
    path.validate();
    if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be positive");
    if (p_drop < 0.0 || p_drop >= 1.0) throw ConfigError("TrainConfig: p_drop must be in [0, 1)");
    if (lr <= 0.0) throw ConfigError("TrainConfig: lr must be positive");
}

DenseArray interpolate(const DenseArray& x0, const DenseArray& x1, double t, double sigma_min) {
    require_same_shape(x0, x1, "interpolate");
    if (t < 0.0 || t > 1.0) throw ConfigError("interpolate: t outside [0,1]");
    const double a = 1.0 - (1.0 - sigma_min) * t;
    DenseArray out(x0.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = t * x1[i] + a * x0[i];
    return out;
}

DenseArray target_field(const DenseArray& x0, const DenseArray& x1, double t, double sigma_min) {
    require_same_shape(x0, x1, "target_field");
    if (t < 0.0 || t >= 1.0) throw ConfigError("target_field: t outside [0,1)");
    const double denom = 1.0 - (1.0 - sigma_min) * t;
    if (denom < 1e-9) {
        throw NumericError("target_field: denominator " + std::to_string(denom) +
                           " below 1e-9 (t too close to 1)");
    }
    const DenseArray x_t = interpolate(x0, x1, t, sigma_min);
    DenseArray w(x0.shape());
    for (std::size_t i = 0; i < w.numel(); ++i) {
        w[i] = (x1[i] - (1.0 - sigma_min) * x_t[i]) / denom;
    }
    return w;
}

std::vector<TrainItem> assemble_batch(const std::vector<TrainExample>& dataset,
                                      const ModelConfig& config, const PathParams& path,
                                      double p_drop, std::size_t batch_size, Rng& rng) {
    if (dataset.empty()) throw ConfigError("assemble_batch: empty dataset");
    path.validate();

    std::vector<TrainItem> batch;
    batch.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const TrainExample& ex = dataset[rng.index(dataset.size())];
        const DenseArray& x1 = *ex.x1;
        if (x1.shape() != Shape{config.frames, config.feature_dim}) {
            throw ShapeError("assemble_batch: sample shape " + shape_str(x1.shape()) +
                             " does not match model " +
                             shape_str({config.frames, config.feature_dim}));
        }
        // keep t away from the target-field pole at t=1
        const double t = rng.uniform(0.0, 1.0 - 1e-5);
        const DenseArray x0 = rng.normal_array(x1.shape());

        TrainItem item;
        item.x_t = interpolate(x0, x1, t, path.sigma_min);
        if (path.literal_target) {
            item.target = DenseArray(x1.shape());
            for (std::size_t i = 0; i < x1.numel(); ++i) {
                item.target[i] = x1[i] - (1.0 - path.sigma_min) * item.x_t[i];
            }
        } else {
            item.target = target_field(x0, x1, t, path.sigma_min);
        }
        item.time_feats = time_features(t, config.time_dim);

        std::optional<int> label = ex.label;
        if (label.has_value() && p_drop > 0.0 && rng.uniform() < p_drop) label.reset();
        item.used_null = !label.has_value();
        item.cond_onehot = condition_onehot(config, label);
        batch.push_back(std::move(item));
    }
    return batch;
}

LossResult cfm_loss_on_batch(const VectorFieldModel& model, const std::vector<TrainItem>& batch) {
    if (batch.empty()) throw ConfigError("cfm_loss_on_batch: empty batch");
    const Tape& tape = model.loss_tape();
    const Bindings params = model.param_bindings();

    // fixed-size chunks accumulated in item order keep the reduction
    // independent of the worker count
    constexpr std::size_t kChunk = 8;
    const std::size_t nchunks = (batch.size() + kChunk - 1) / kChunk;
    std::vector<double> chunk_loss(nchunks, 0.0);
    std::vector<ParamMap> chunk_grads(nchunks);

    parallel_for(nchunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(batch.size(), lo + kChunk);
        for (std::size_t i = lo; i < hi; ++i) {
            Bindings b = params;
            b.emplace("x_t", &batch[i].x_t);
            b.emplace("time_feats", &batch[i].time_feats);
            b.emplace("cond_onehot", &batch[i].cond_onehot);
            b.emplace("target", &batch[i].target);
            ForwardBackwardResult r = forward_backward(tape, b);
            chunk_loss[c] += r.value;
            if (chunk_grads[c].empty()) {
                chunk_grads[c] = std::move(r.grads);
            } else {
                for (auto& [name, g] : chunk_grads[c]) {
                    const DenseArray& add = r.grads.at(name);
                    for (std::size_t k = 0; k < g.numel(); ++k) g[k] += add[k];
                }
            }
        }
    });

    LossResult result;
    result.grads = std::move(chunk_grads[0]);
    result.loss = chunk_loss[0];
    for (std::size_t c = 1; c < nchunks; ++c) {
        result.loss += chunk_loss[c];
        for (auto& [name, g] : result.grads) {
            const DenseArray& add = chunk_grads[c].at(name);
            for (std::size_t k = 0; k < g.numel(); ++k) g[k] += add[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    result.loss *= inv;
    for (auto& [name, g] : result.grads) {
        for (std::size_t k = 0; k < g.numel(); ++k) g[k] *= inv;
    }
    for (const TrainItem& item : batch) {
        if (item.used_null) ++result.null_count;
    }
    return result;
}

LossResult cfm_loss(const VectorFieldModel& model, const std::vector<TrainExample>& batch,
                    const PathParams& path, double p_drop, Rng& rng) {
    const std::vector<TrainItem> items =
        assemble_batch(batch, model.config(), path, p_drop, batch.size(), rng);
    return cfm_loss_on_batch(model, items);
}

NormStats compute_norm_stats(const std::vector<MotionSequence>& dataset) {
    if (dataset.empty()) throw ConfigError("compute_norm_stats: empty dataset");
    const std::size_t d = dataset.front().dim();
    DenseArray mean({d});
    DenseArray var({d});
    std::size_t rows = 0;
    for (const MotionSequence& m : dataset) {
        if (m.dim() != d) throw ShapeError("compute_norm_stats: mixed feature dims");
        for (std::size_t i = 0; i < m.frames; ++i) {
            for (std::size_t j = 0; j < d; ++j) mean[j] += m.values.at2(i, j);
        }
        rows += m.frames;
    }
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(rows);
    for (const MotionSequence& m : dataset) {
        for (std::size_t i = 0; i < m.frames; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const double c = m.values.at2(i, j) - mean[j];
                var[j] += c * c;
            }
        }
    }
    DenseArray stddev({d});
    for (std::size_t j = 0; j < d; ++j) {
        const double s = std::sqrt(var[j] / static_cast<double>(rows));
        // constant channels (e.g. the point family) pass through unscaled
        stddev[j] = s < 1e-8 ? 1.0 : s;
    }
    return NormStats{std::move(mean), std::move(stddev)};
}

TrainResult train(const std::vector<MotionSequence>& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config) {
    if (dataset.empty()) throw ConfigError("train: empty dataset");
    model_config.validate();
    train_config.validate();

    const PoseLayout layout = dataset.front().layout;
    const std::size_t d = feature_dim(layout);
    if (d != model_config.feature_dim) {
        throw ConfigError("train: dataset feature dim " + std::to_string(d) +
                          " does not match model feature_dim " +
                          std::to_string(model_config.feature_dim));
    }
    for (const MotionSequence& m : dataset) {
        if (m.frames != model_config.frames) {
            throw ConfigError("train: sequence with " + std::to_string(m.frames) +
                              " frames, model expects " + std::to_string(model_config.frames));
        }
        if (m.condition_id && static_cast<std::size_t>(*m.condition_id) >= model_config.cond_vocab) {
            throw ConfigError("train: condition label " + std::to_string(*m.condition_id) +
                              " outside cond_vocab " + std::to_string(model_config.cond_vocab));
        }
    }

    const NormStats norm = compute_norm_stats(dataset);
    std::vector<DenseArray> normalized;
    normalized.reserve(dataset.size());
    std::vector<TrainExample> examples;
    examples.reserve(dataset.size());
    for (const MotionSequence& m : dataset) {
        normalized.push_back(norm.normalize(m.values));
        examples.push_back(TrainExample{&normalized.back(), m.condition_id});
    }

    Rng rng(train_config.seed);
    Rng batch_rng = rng.child(1);
    VectorFieldModel model = VectorFieldModel::init(model_config, rng.child(2).seed());

    OptimizerState opt;
    opt.config.lr = train_config.lr;
    opt.config.beta1 = train_config.beta1;
    opt.config.beta2 = train_config.beta2;
    opt.config.weight_decay = train_config.weight_decay;

    TrainResult result{std::move(model), norm, layout, {}, false, 0};
    for (std::size_t step = 1; step <= train_config.steps; ++step) {
        std::vector<TrainItem> batch =
            assemble_batch(examples, model_config, train_config.path, train_config.p_drop,
                           train_config.batch_size, batch_rng);
        LossResult loss;
        try {
            loss = cfm_loss_on_batch(result.model, batch);
            if (!std::isfinite(loss.loss)) {
                throw NumericError("train: loss diverged at step " + std::to_string(step));
            }
            optimizer_step(result.model.params(), loss.grads, opt);
        } catch (const NumericError&) {
            // abort with the parameters from the last completed step
            result.diverged = true;
            result.diverged_at_step = step;
            break;
        }
        if (step % train_config.log_every == 0 || step == train_config.steps || step == 1) {
            result.log.push_back(TrainLogRow{step, loss.loss, train_config.lr});
        }
    }
    return result;
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << "step,loss,lr\n";
    char buf[64];
    for (const TrainLogRow& row : log) {
        std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g\n", row.step, row.loss, row.lr);
        f << buf;
    }
}

}  // namespace mfm
