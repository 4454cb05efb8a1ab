#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfm/motion.hpp"

namespace mfm {

enum class ExtractorKind { random_projection, trained_encoder };

std::string extractor_kind_name(ExtractorKind kind);
ExtractorKind extractor_kind_from_string(const std::string& name);

// Deterministic motion feature extractor, a desk-scale stand-in for the
// pretrained evaluators used by the published benchmarks. Both kinds pool a
// sequence into per-channel temporal mean and std (concatenated, width 2D)
// and map that to F dims: random_projection by a fixed seeded linear map,
// trained_encoder by the encoder half of a small autoencoder.
struct FeatureExtractor {
    ExtractorKind kind = ExtractorKind::random_projection;
    std::uint64_t seed = 0;
    std::size_t input_dim = 0;  // pooled width, 2D
    std::size_t out_dim = 0;    // F
    DenseArray weight;          // [2D, F]
    DenseArray bias;            // [F], zero for random_projection
};

struct FeatureSet {
    DenseArray features;  // [n, F]
    std::string provenance;  // gt | pred | text

    std::size_t count() const { return features.shape()[0]; }
    std::size_t dim() const { return features.shape()[1]; }
};

// Temporal mean/std pooling of one sequence, shape [2D].
DenseArray pool_motion(const MotionSequence& motion);

FeatureExtractor make_random_projection(std::size_t pose_dim, std::size_t out_dim,
                                        std::uint64_t seed);

// Encoder half of a pooled-space autoencoder trained on the given motions.
FeatureExtractor train_encoder_extractor(const std::vector<MotionSequence>& motions,
                                         std::size_t out_dim, std::uint64_t seed,
                                         std::size_t steps = 200);

FeatureSet extract_features(const std::vector<MotionSequence>& motions,
                            const FeatureExtractor& extractor, std::string provenance);

// Condition ("text") embeddings mapped into the same F-dim space through a
// projection derived from the extractor seed, one row per input embedding.
FeatureSet text_features(const std::vector<DenseArray>& embeddings,
                         const FeatureExtractor& extractor);

}  // namespace mfm
