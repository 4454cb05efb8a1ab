#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfm/model.hpp"
#include "mfm/optimizer.hpp"
#include "mfm/rng.hpp"

namespace mfm {

// Interpolant path parameters. sigma_min = 0 reproduces the plain linear
// interpolant; literal_target switches the regression target to the
// unnormalized closed form x1 - (1-sigma_min)*x_t for comparison runs.
struct PathParams {
    double sigma_min = 0.0;
    bool literal_target = false;

    void validate() const;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t steps = 5000;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.0;
    double p_drop = 0.10;  // probability of replacing c with the null token
    PathParams path;
    std::uint64_t seed = 0;
    std::size_t log_every = 10;

    void validate() const;
};

// x_t = t*x1 + [1 - (1-sigma_min)*t]*x0
DenseArray interpolate(const DenseArray& x0, const DenseArray& x1, double t, double sigma_min);

// w = (x1 - (1-sigma_min)*x_t) / (1 - (1-sigma_min)*t) along the interpolant;
// reduces exactly to x1 - x0 when sigma_min = 0.
DenseArray target_field(const DenseArray& x0, const DenseArray& x1, double t, double sigma_min);

// One training example with the path already evaluated.
struct TrainItem {
    DenseArray x_t;
    DenseArray target;
    DenseArray time_feats;
    DenseArray cond_onehot;
    bool used_null = false;
};

struct TrainExample {
    const DenseArray* x1;  // normalized [T, D]
    std::optional<int> label;
};

std::vector<TrainItem> assemble_batch(const std::vector<TrainExample>& dataset,
                                      const ModelConfig& config, const PathParams& path,
                                      double p_drop, std::size_t batch_size, Rng& rng);

struct LossResult {
    double loss = 0.0;
    ParamMap grads;
    std::size_t null_count = 0;  // items that used the null condition
};

// Mean over the batch of per-item squared field error and its gradients.
// Item evaluations run in parallel; the reduction is in item order, so the
// result does not depend on the worker count.
LossResult cfm_loss_on_batch(const VectorFieldModel& model, const std::vector<TrainItem>& batch);

// Spec-shaped convenience: samples x0 and t, applies condition dropout, then
// evaluates the loss. Deterministic given the rng state.
LossResult cfm_loss(const VectorFieldModel& model, const std::vector<TrainExample>& batch,
                    const PathParams& path, double p_drop, Rng& rng);

struct TrainLogRow {
    std::size_t step;
    double loss;
    double lr;
};

struct TrainResult {
    VectorFieldModel model;
    NormStats norm;
    PoseLayout layout;
    std::vector<TrainLogRow> log;
    bool diverged = false;
    std::size_t diverged_at_step = 0;
};

NormStats compute_norm_stats(const std::vector<MotionSequence>& dataset);

// Flow-matching training loop: sample batch, interpolate, regress, update.
TrainResult train(const std::vector<MotionSequence>& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config);

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

}  // namespace mfm
