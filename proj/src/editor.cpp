#include "mfm/editor.hpp"

#include <algorithm>

#include "mfm/errors.hpp"
#include "mfm/rng.hpp"

namespace mfm {

EditTask edit_task_from_string(const std::string& name) {
    if (name == "in-between" || name == "in_between") return EditTask::in_between;
    if (name == "prediction") return EditTask::prediction;
    if (name == "interpolation") return EditTask::interpolation;
    if (name == "upper-body" || name == "upper_body") return EditTask::upper_body;
    throw ConfigError("unknown edit task '" + name + "'");
}

std::string edit_task_name(EditTask task) {
    switch (task) {
        case EditTask::in_between: return "in-between";
        case EditTask::prediction: return "prediction";
        case EditTask::interpolation: return "interpolation";
        case EditTask::upper_body: return "upper-body";
    }
    return "?";
}

std::size_t EditMask::known_count() const {
    std::size_t n = 0;
    for (std::uint8_t v : known) n += v;
    return n;
}

void EditConfig::validate() const {
    if (steps == 0) throw ConfigError("EditConfig: steps must be >= 1");
    if (threshold < 0.0 || threshold > 1.0) {
        throw ConfigError("EditConfig: threshold must lie in [0, 1]");
    }
}

namespace {

void mark_frame(EditMask& mask, std::size_t frame) {
    for (std::size_t c = 0; c < mask.dim; ++c) mask.set_known(frame, c, true);
}

void mark_joint_columns(EditMask& mask, const PoseLayout& layout, std::size_t joint, bool value) {
    // joint is a non-root index in [1, j); jp/jr store joints 1..j-1 at
    // slot joint-1, jv stores all joints including the root at slot joint
    const std::size_t jp = layout.positions_offset() + 3 * (joint - 1);
    const std::size_t jv = layout.velocities_offset() + 3 * joint;
    const std::size_t jr = layout.rotations_offset() + 6 * (joint - 1);
    for (std::size_t f = 0; f < mask.frames; ++f) {
        for (std::size_t c = 0; c < 3; ++c) {
            mask.set_known(f, jp + c, value);
            mask.set_known(f, jv + c, value);
        }
        for (std::size_t c = 0; c < 6; ++c) mask.set_known(f, jr + c, value);
    }
}

}  // namespace

EditMask build_mask(EditTask task, const PoseLayout& layout, std::size_t frames,
                    const MaskParams& params) {
    const std::size_t d = feature_dim(layout);
    if (frames == 0) throw ConfigError("build_mask: frames must be positive");
    EditMask mask(frames, d);

    switch (task) {
        case EditTask::prediction: {
            if (params.prefix_frames == 0 || params.prefix_frames > frames) {
                throw ConfigError("build_mask: prediction prefix out of range");
            }
            for (std::size_t f = 0; f < params.prefix_frames; ++f) mark_frame(mask, f);
            break;
        }
        case EditTask::in_between: {
            if (params.prefix_frames + params.suffix_frames > frames) {
                throw ConfigError("build_mask: prefix+suffix exceeds frame count");
            }
            if (params.prefix_frames == 0 && params.suffix_frames == 0) {
                throw ConfigError("build_mask: in-between needs a prefix or suffix");
            }
            for (std::size_t f = 0; f < params.prefix_frames; ++f) mark_frame(mask, f);
            for (std::size_t f = frames - params.suffix_frames; f < frames; ++f) {
                mark_frame(mask, f);
            }
            break;
        }
        case EditTask::interpolation: {
            if (params.stride == 0) throw ConfigError("build_mask: stride must be >= 1");
            for (std::size_t f = 0; f < frames; f += params.stride) mark_frame(mask, f);
            break;
        }
        case EditTask::upper_body: {
            if (params.upper_joints.empty()) {
                throw ConfigError("build_mask: upper_body needs a joint set");
            }
            // everything known, then carve out the upper-body joint columns;
            // root channels and foot contacts stay preserved
            for (std::size_t f = 0; f < frames; ++f) mark_frame(mask, f);
            for (std::size_t joint : params.upper_joints) {
                if (joint == 0 || joint >= layout.joints) {
                    throw ConfigError("build_mask: upper joint " + std::to_string(joint) +
                                      " out of range [1, " + std::to_string(layout.joints) + ")");
                }
                mark_joint_columns(mask, layout, joint, false);
            }
            break;
        }
    }
    if (mask.known_count() == 0) throw ConfigError("build_mask: empty known set");
    return mask;
}

std::pair<DenseArray, Trajectory> rewrite_sample(const FieldFn& field, const DenseArray& x1_ref,
                                                 const EditMask& mask, const EditConfig& config) {
    config.validate();
    if (x1_ref.rank() != 2 || x1_ref.shape()[0] != mask.frames || x1_ref.shape()[1] != mask.dim) {
        throw ShapeError("rewrite_sample: mask " + std::to_string(mask.frames) + "x" +
                         std::to_string(mask.dim) + " does not match reference " +
                         shape_str(x1_ref.shape()));
    }
    const std::size_t N = config.steps;
    const double h = 1.0 / static_cast<double>(N);

    Rng rng(config.seed);
    // the x0 drawn here is reused by every rewrite step
    const DenseArray x0 = rng.normal_array(x1_ref.shape());
    DenseArray z = x0;

    Trajectory traj;
    traj.states.reserve(N + 1);
    traj.x1_estimates.reserve(N);
    traj.times.reserve(N + 1);

    for (std::size_t step = 0; step < N; ++step) {
        const double t = static_cast<double>(step) / static_cast<double>(N);
        if (t < config.threshold) {
            for (std::size_t i = 0; i < z.numel(); ++i) {
                if (mask.known[i]) z[i] = (1.0 - t) * x0[i] + t * x1_ref[i];
            }
        }
        traj.states.push_back(z);
        traj.times.push_back(t);

        const DenseArray v = field(z, t);
        traj.x1_estimates.push_back(estimate_x1(z, t, v));
        for (std::size_t i = 0; i < z.numel(); ++i) z[i] = z[i] + h * v[i];
        if (!z.all_finite()) {
            throw NumericError("rewrite_sample: non-finite state after step " +
                               std::to_string(step));
        }
    }
    traj.states.push_back(z);
    traj.times.push_back(1.0);
    return {std::move(z), std::move(traj)};
}

}  // namespace mfm
