#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mfm/motion.hpp"
#include "mfm/tape.hpp"

namespace mfm {

enum class Architecture { transformer, mlp };

Architecture architecture_from_string(const std::string& name);
std::string architecture_name(Architecture arch);

struct ModelConfig {
    std::size_t feature_dim = 263;  // D, per-frame features
    std::size_t frames = 60;        // T
    Architecture arch = Architecture::transformer;
    std::size_t d_model = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t d_ff = 128;
    std::size_t cond_vocab = 1;  // labels 0..K-1; the null row is index K
    std::size_t cond_dim = 32;
    std::size_t time_dim = 32;  // sinusoidal time feature width, even

    void validate() const;
};

struct ConditionEmbedding {
    DenseArray vector;  // [cond_dim]
    bool is_null = false;
};

// Sinusoidal featurization of t in [0,1], shape [1, dim].
DenseArray time_features(double t, std::size_t dim);

// One-hot over K+1 rows (labels plus the null slot), shape [1, K+1].
DenseArray condition_onehot(const ModelConfig& config, const std::optional<int>& label);

// The vector field estimator v(x_t, t, c). Holds the parameter set and two
// prebuilt tapes over it: a forward tape producing the [T, D] field and a
// training tape that appends the squared-error reduction against a bound
// "target". Forward passes are pure functions of (params, inputs) and safe
// to run concurrently.
class VectorFieldModel {
  public:
    VectorFieldModel(ModelConfig config, ParamMap params);

    // Deterministic seeded initialization; the output projection starts at
    // zero so the field is identically zero before training.
    static VectorFieldModel init(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const ParamMap& params() const { return params_; }
    ParamMap& params() { return params_; }
    std::size_t param_count() const;

    DenseArray predict_field(const DenseArray& x_t, double t,
                             const std::optional<int>& label) const;

    ConditionEmbedding embed_condition(const std::optional<int>& label) const;

    const Tape& loss_tape() const { return loss_tape_; }
    const Tape& forward_tape() const { return forward_tape_; }

    Bindings param_bindings() const;

  private:
    ModelConfig config_;
    ParamMap params_;
    Tape forward_tape_;
    Tape loss_tape_;
};

// Per-channel standardization statistics, recorded with every checkpoint.
struct NormStats {
    DenseArray mean;  // [D]
    DenseArray stddev;  // [D], floored away from zero

    DenseArray normalize(const DenseArray& values) const;
    DenseArray denormalize(const DenseArray& values) const;
};

// Checkpoint bundle: binary parameters (<prefix>.mfm) plus a JSON sidecar
// (<prefix>.meta.json) holding the model config, pose layout, and
// normalization statistics.
struct ModelBundle {
    VectorFieldModel model;
    PoseLayout layout;
    NormStats norm;
};

void save_bundle(const std::filesystem::path& prefix, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& checkpoint_path);

std::filesystem::path bundle_param_path(const std::filesystem::path& prefix);
std::filesystem::path bundle_meta_path(const std::filesystem::path& prefix);

}  // namespace mfm
