#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "mfm/array.hpp"

namespace mfm {

// Guo-style pose feature layout. Per frame, the feature vector is
//   (r_ang 1, r_vel_xz 2, r_height 1, jp 3(j-1), jv 3j, jr 6(j-1), cf 4)
// giving D = 263 for j=22 and D = 251 for j=21.
struct PoseLayout {
    std::size_t joints = 22;

    std::size_t root_angular_offset() const { return 0; }
    std::size_t root_linear_offset() const { return 1; }
    std::size_t root_height_offset() const { return 3; }
    std::size_t positions_offset() const { return 4; }
    std::size_t positions_size() const { return 3 * (joints - 1); }
    std::size_t velocities_offset() const { return positions_offset() + positions_size(); }
    std::size_t velocities_size() const { return 3 * joints; }
    std::size_t rotations_offset() const { return velocities_offset() + velocities_size(); }
    std::size_t rotations_size() const { return 6 * (joints - 1); }
    std::size_t contacts_offset() const { return rotations_offset() + rotations_size(); }
    std::size_t contacts_size() const { return 4; }
};

// D = 4 + 3(j-1) + 3j + 6(j-1) + 4; requires j >= 2.
std::size_t feature_dim(const PoseLayout& layout);

struct MotionSequence {
    std::size_t frames = 0;
    PoseLayout layout;
    DenseArray values;  // [frames, D]
    std::optional<int> condition_id;

    MotionSequence() = default;
    MotionSequence(PoseLayout lay, DenseArray vals, std::optional<int> condition = std::nullopt);

    std::size_t dim() const { return feature_dim(layout); }
};

// Motion file: one JSON header line {"frames":M,"joints":j,"dim":D,"condition":k}
// followed by one CSV row of D floats per frame. Values round-trip bit-exactly.
void write_motion(const std::filesystem::path& path, const MotionSequence& motion);
MotionSequence read_motion(const std::filesystem::path& path);

}  // namespace mfm
