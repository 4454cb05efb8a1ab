#pragma once

#include <cstdint>
#include <random>

#include "mfm/array.hpp"

namespace mfm {

// Deterministic RNG. mt19937_64 output and the float/normal constructions
// below are fully specified, so streams are bit-identical across platforms
// (std::normal_distribution is implementation-defined and deliberately
// avoided).
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller with a cached spare.
    double normal();

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::size_t index(std::size_t n);

    // Independent child stream; deterministic function of (seed, salt).
    Rng child(std::uint64_t salt) const;

    std::uint64_t seed() const { return seed_; }

    void fill_normal(DenseArray& a);
    DenseArray normal_array(Shape shape);

    // Fisher-Yates over [0, n) index vector.
    std::vector<std::size_t> permutation(std::size_t n);

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mfm
