#pragma once

#include <cstdint>

#include "mfm/array.hpp"

namespace mfm {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// AdamW state: per-parameter first/second moments plus the step counter.
// Moments are allocated on the first step and shape-checked afterwards.
struct OptimizerState {
    AdamConfig config;
    std::uint64_t step = 0;
    ParamMap first_moment;
    ParamMap second_moment;
};

// One AdamW update with bias correction and decoupled weight decay.
// Rejects non-finite gradients before touching params or state.
void optimizer_step(ParamMap& params, const ParamMap& grads, OptimizerState& state);

}  // namespace mfm
