#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mfm/model.hpp"

namespace mfm {

enum class SolverKind { euler, midpoint, rk4 };

SolverKind solver_from_string(const std::string& name);
std::string solver_name(SolverKind solver);

struct SamplerConfig {
    SolverKind solver = SolverKind::euler;
    std::size_t steps = 10;  // N
    double guidance = 1.0;   // s
    std::uint64_t seed = 0;

    void validate() const;
};

// Integration record on the uniform grid t = 0, 1/N, ..., 1. states[0] is
// the sampled noise; x1_estimates[k] = x + (1-t)*v evaluated at step k.
struct Trajectory {
    std::vector<DenseArray> states;        // N+1
    std::vector<DenseArray> x1_estimates;  // N
    std::vector<double> times;             // N+1
};

// Any vector field usable by the solvers; models and test oracles both fit.
using FieldFn = std::function<DenseArray(const DenseArray& x, double t)>;

// Classifier-free guidance: v_s = v(., null) + s * (v(., c) - v(., null)).
// s=1 short-circuits to a single conditional evaluation, so the algebraic
// identities hold to machine precision.
DenseArray guided_field(const VectorFieldModel& model, const DenseArray& x_t, double t, int label,
                        double guidance);

// Field closure for sampling. A null label means unconditional sampling:
// guidance is skipped and the null embedding is used directly.
FieldFn model_field(const VectorFieldModel& model, const std::optional<int>& label,
                    double guidance);

// x1^ = x_t + (1-t) * v
DenseArray estimate_x1(const DenseArray& x_t, double t, const DenseArray& v);

// Integrates from seeded Gaussian noise over the left-endpoint uniform grid.
std::pair<DenseArray, Trajectory> sample(const FieldFn& field, const Shape& state_shape,
                                         const SamplerConfig& config);

}  // namespace mfm
