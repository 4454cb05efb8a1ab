#pragma once

#include <cstdint>
#include <vector>

#include "mfm/motion.hpp"
#include "mfm/sampler.hpp"

namespace mfm {

enum class EditTask { in_between, prediction, interpolation, upper_body };

EditTask edit_task_from_string(const std::string& name);
std::string edit_task_name(EditTask task);

// Boolean mask over [frames, D]; 1 marks a known dimension of the reference
// motion that rewriting pins to the interpolant.
struct EditMask {
    std::size_t frames = 0;
    std::size_t dim = 0;
    std::vector<std::uint8_t> known;

    EditMask() = default;
    EditMask(std::size_t frames_, std::size_t dim_)
        : frames(frames_), dim(dim_), known(frames_ * dim_, 0) {}

    bool is_known(std::size_t frame, std::size_t col) const {
        return known[frame * dim + col] != 0;
    }
    void set_known(std::size_t frame, std::size_t col, bool value) {
        known[frame * dim + col] = value ? 1 : 0;
    }
    std::size_t known_count() const;
};

struct MaskParams {
    std::size_t prefix_frames = 0;
    std::size_t suffix_frames = 0;
    std::size_t stride = 2;
    std::vector<std::size_t> upper_joints;  // non-root joint indices in [1, j)
};

// Mask builders for the four editing scenarios. in_between keeps prefix and
// suffix frames, prediction keeps the prefix, interpolation keeps every
// stride-th frame, upper_body keeps root/contact channels and all joint
// columns outside the given upper-joint set.
EditMask build_mask(EditTask task, const PoseLayout& layout, std::size_t frames,
                    const MaskParams& params);

struct EditConfig {
    std::size_t steps = 30;   // N
    double threshold = 0.2;   // rewriting applies while t < threshold (strict)
    double guidance = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Euler sampling with trajectory rewriting: before each step with
// t < threshold, known dimensions are overwritten with the interpolant
// (1-t)*x0 + t*x1_ref, using the x0 drawn at step 0 throughout. Recorded
// trajectory states are the post-rewrite states actually fed to the field.
std::pair<DenseArray, Trajectory> rewrite_sample(const FieldFn& field, const DenseArray& x1_ref,
                                                 const EditMask& mask, const EditConfig& config);

}  // namespace mfm
