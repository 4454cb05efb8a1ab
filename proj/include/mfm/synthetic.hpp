#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfm/motion.hpp"

namespace mfm {

enum class DatasetFamily { point, sine_walker, gaussian_shift };

DatasetFamily dataset_family_from_string(const std::string& name);
std::string dataset_family_name(DatasetFamily family);

// Desk-scale stand-in for the motion-capture corpora. Generation is a pure
// function of the spec: same spec, same bits. Class-level structure (walker
// pose bases, amplitudes, point anchors) is tied to `seed` alone;
// `sample_stream` re-randomizes only the per-sample draws, so train and
// held-out splits of the same classes use one seed and different streams.
struct SyntheticDatasetSpec {
    DatasetFamily family = DatasetFamily::sine_walker;
    std::size_t joints = 4;
    std::size_t frames = 24;
    std::size_t classes = 1;            // K
    std::size_t samples_per_class = 16;
    std::uint64_t seed = 0;
    std::uint64_t sample_stream = 0;
    double class_shift = 3.0;   // gaussian_shift: per-dimension mean separation
    double noise_sigma = 1.0;   // gaussian_shift: per-frame noise scale
    double frame_rate = 20.0;   // sine_walker: velocity = frame_rate * position diff
};

std::vector<MotionSequence> gen_synthetic_dataset(const SyntheticDatasetSpec& spec);

}  // namespace mfm
