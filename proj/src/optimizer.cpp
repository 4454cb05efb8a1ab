#include "mfm/optimizer.hpp"

#include <cmath>

#include "mfm/errors.hpp"

namespace mfm {

void optimizer_step(ParamMap& params, const ParamMap& grads, OptimizerState& state) {
    // Validate everything up front; on any error the state must stay as-is.
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) {
            throw ShapeError("optimizer_step: missing gradient for '" + name + "'");
        }
        if (git->second.shape() != p.shape()) {
            throw ShapeError("optimizer_step: gradient shape mismatch for '" + name + "'");
        }
        if (!git->second.all_finite()) {
            throw NumericError("optimizer_step: non-finite gradient for '" + name + "'");
        }
        auto mit = state.first_moment.find(name);
        if (mit != state.first_moment.end() && mit->second.shape() != p.shape()) {
            throw ShapeError("optimizer_step: moment shape mismatch for '" + name + "'");
        }
    }

    const AdamConfig& c = state.config;
    const std::uint64_t step = state.step + 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));

    // compute into staging buffers first; commit only if everything stays
    // finite, so a mid-update overflow leaves params and state untouched
    ParamMap new_params, new_m, new_v;
    for (auto& [name, p] : params) {
        const DenseArray& g = grads.at(name);
        auto mit = state.first_moment.find(name);
        auto vit = state.second_moment.find(name);
        DenseArray m = mit != state.first_moment.end() ? mit->second : DenseArray(p.shape());
        DenseArray v = vit != state.second_moment.end() ? vit->second : DenseArray(p.shape());
        DenseArray pnew = p;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            // decoupled weight decay (AdamW), not folded into the gradient
            pnew[i] -= c.lr * (mhat / (std::sqrt(vhat) + c.eps) + c.weight_decay * pnew[i]);
        }
        if (!m.all_finite() || !v.all_finite() || !pnew.all_finite()) {
            throw NumericError("optimizer_step: non-finite update for '" + name + "'");
        }
        new_m.emplace(name, std::move(m));
        new_v.emplace(name, std::move(v));
        new_params.emplace(name, std::move(pnew));
    }

    state.step = step;
    state.first_moment = std::move(new_m);
    state.second_moment = std::move(new_v);
    params = std::move(new_params);
}

}  // namespace mfm
