#include "mfm/sampler.hpp"

#include "mfm/errors.hpp"
#include "mfm/rng.hpp"

namespace mfm {

SolverKind solver_from_string(const std::string& name) {
    if (name == "euler") return SolverKind::euler;
    if (name == "midpoint") return SolverKind::midpoint;
    if (name == "rk4") return SolverKind::rk4;
    throw ConfigError("unknown solver '" + name + "'");
}

std::string solver_name(SolverKind solver) {
    switch (solver) {
        case SolverKind::euler: return "euler";
        case SolverKind::midpoint: return "midpoint";
        case SolverKind::rk4: return "rk4";
    }
    return "?";
}

void SamplerConfig::validate() const {
    if (steps == 0) throw ConfigError("SamplerConfig: steps must be >= 1");
    if (guidance < 0.0) throw ConfigError("SamplerConfig: guidance must be >= 0");
}

DenseArray guided_field(const VectorFieldModel& model, const DenseArray& x_t, double t, int label,
                        double guidance) {
    if (guidance == 1.0) return model.predict_field(x_t, t, label);
    const DenseArray v_null = model.predict_field(x_t, t, std::nullopt);
    if (guidance == 0.0) return v_null;
    const DenseArray v_cond = model.predict_field(x_t, t, label);
    DenseArray out(v_null.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = v_null[i] + guidance * (v_cond[i] - v_null[i]);
    }
    return out;
}

FieldFn model_field(const VectorFieldModel& model, const std::optional<int>& label,
                    double guidance) {
    if (!label.has_value()) {
        return [&model](const DenseArray& x, double t) {
            return model.predict_field(x, t, std::nullopt);
        };
    }
    const int lbl = *label;
    return [&model, lbl, guidance](const DenseArray& x, double t) {
        return guided_field(model, x, t, lbl, guidance);
    };
}

DenseArray estimate_x1(const DenseArray& x_t, double t, const DenseArray& v) {
    require_same_shape(x_t, v, "estimate_x1");
    if (t < 0.0 || t > 1.0) throw ConfigError("estimate_x1: t outside [0,1]");
    DenseArray out(x_t.shape());
    const double w = 1.0 - t;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x_t[i] + w * v[i];
    return out;
}

namespace {

DenseArray axpy(const DenseArray& x, double a, const DenseArray& y) {
    DenseArray out(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] + a * y[i];
    return out;
}

}  // namespace

std::pair<DenseArray, Trajectory> sample(const FieldFn& field, const Shape& state_shape,
                                         const SamplerConfig& config) {
    config.validate();
    const std::size_t N = config.steps;
    const double h = 1.0 / static_cast<double>(N);

    Rng rng(config.seed);
    DenseArray x = rng.normal_array(state_shape);

    Trajectory traj;
    traj.states.reserve(N + 1);
    traj.x1_estimates.reserve(N);
    traj.times.reserve(N + 1);
    traj.states.push_back(x);
    traj.times.push_back(0.0);

    for (std::size_t step = 0; step < N; ++step) {
        const double t = static_cast<double>(step) / static_cast<double>(N);
        switch (config.solver) {
            case SolverKind::euler: {
                const DenseArray v = field(x, t);
                traj.x1_estimates.push_back(estimate_x1(x, t, v));
                x = axpy(x, h, v);
                break;
            }
            case SolverKind::midpoint: {
                const DenseArray k1 = field(x, t);
                traj.x1_estimates.push_back(estimate_x1(x, t, k1));
                const DenseArray xm = axpy(x, 0.5 * h, k1);
                const double tm = (static_cast<double>(step) + 0.5) / static_cast<double>(N);
                const DenseArray k2 = field(xm, tm);
                x = axpy(x, h, k2);
                break;
            }
            case SolverKind::rk4: {
                const double tm = (static_cast<double>(step) + 0.5) / static_cast<double>(N);
                const double te = static_cast<double>(step + 1) / static_cast<double>(N);
                const DenseArray k1 = field(x, t);
                traj.x1_estimates.push_back(estimate_x1(x, t, k1));
                const DenseArray k2 = field(axpy(x, 0.5 * h, k1), tm);
                const DenseArray k3 = field(axpy(x, 0.5 * h, k2), tm);
                const DenseArray k4 = field(axpy(x, h, k3), te);
                DenseArray incr(k1.shape());
                for (std::size_t i = 0; i < incr.numel(); ++i) {
                    incr[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
                }
                x = axpy(x, h, incr);
                break;
            }
        }
        if (!x.all_finite()) {
            throw NumericError("sample: non-finite state after step " + std::to_string(step));
        }
        traj.states.push_back(x);
        traj.times.push_back(static_cast<double>(step + 1) / static_cast<double>(N));
    }
    return {std::move(x), std::move(traj)};
}

}  // namespace mfm
