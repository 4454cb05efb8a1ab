#include "mfm/pipeline.hpp"

#include "mfm/errors.hpp"
#include "mfm/rng.hpp"
#include "mfm/threading.hpp"

namespace mfm {

SampleOutput sample_motion(const ModelBundle& bundle, const std::optional<int>& label,
                           const SamplerConfig& config) {
    const ModelConfig& mc = bundle.model.config();
    const FieldFn field = model_field(bundle.model, label, config.guidance);
    auto [state, traj] = sample(field, {mc.frames, mc.feature_dim}, config);
    MotionSequence motion(bundle.layout, bundle.norm.denormalize(state), label);
    return SampleOutput{std::move(motion), std::move(traj)};
}

std::vector<MotionSequence> generate_motions(const ModelBundle& bundle, std::size_t count,
                                             const SamplerConfig& base_config,
                                             const std::vector<std::optional<int>>& labels) {
    if (!labels.empty() && labels.size() != count) {
        throw ConfigError("generate_motions: label list size must match count");
    }
    const std::size_t vocab = bundle.model.config().cond_vocab;
    Rng root(base_config.seed);

    std::vector<MotionSequence> out(count);
    parallel_for(count, [&](std::size_t i) {
        SamplerConfig cfg = base_config;
        cfg.seed = root.child(i + 1).seed();
        const std::optional<int> label =
            labels.empty() ? std::optional<int>(static_cast<int>(i % vocab)) : labels[i];
        out[i] = sample_motion(bundle, label, cfg).motion;
    });
    return out;
}

SampleOutput edit_motion(const ModelBundle& bundle, const MotionSequence& reference,
                         const EditMask& mask, const std::optional<int>& label,
                         const EditConfig& config) {
    const ModelConfig& mc = bundle.model.config();
    if (reference.frames != mc.frames || reference.dim() != mc.feature_dim) {
        throw ShapeError("edit_motion: reference " + shape_str(reference.values.shape()) +
                         " does not match model [" + std::to_string(mc.frames) + "x" +
                         std::to_string(mc.feature_dim) + "]");
    }
    const DenseArray ref_normalized = bundle.norm.normalize(reference.values);
    const FieldFn field = model_field(bundle.model, label, config.guidance);
    auto [state, traj] = rewrite_sample(field, ref_normalized, mask, config);
    MotionSequence motion(bundle.layout, bundle.norm.denormalize(state), label);
    return SampleOutput{std::move(motion), std::move(traj)};
}

}  // namespace mfm
