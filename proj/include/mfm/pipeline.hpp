#pragma once

#include "mfm/editor.hpp"
#include "mfm/sampler.hpp"

namespace mfm {

// Model-space glue: the vector field is trained on standardized features, so
// sampling runs in normalized space and outputs are mapped back through the
// checkpoint's normalization statistics.

struct SampleOutput {
    MotionSequence motion;
    Trajectory trajectory;  // normalized space
};

SampleOutput sample_motion(const ModelBundle& bundle, const std::optional<int>& label,
                           const SamplerConfig& config);

// Batch generation with per-item derived seeds; items run in parallel and
// the result is independent of the worker count. Labels cycle through
// cond_vocab when not given explicitly.
std::vector<MotionSequence> generate_motions(const ModelBundle& bundle, std::size_t count,
                                             const SamplerConfig& base_config,
                                             const std::vector<std::optional<int>>& labels = {});

SampleOutput edit_motion(const ModelBundle& bundle, const MotionSequence& reference,
                         const EditMask& mask, const std::optional<int>& label,
                         const EditConfig& config);

}  // namespace mfm
