#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pmoe/tensor.hpp"

namespace pmoe {

/// Seeded pseudo-random source. Identical seeds give identical streams.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  std::uint64_t next_u64() { return engine_(); }

  // Permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  // Seed for an independent child stream, derived from this seed and a tag.
  std::uint64_t derive(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)); returns an (out x in) matrix.
Tensor glorot_uniform(SeededRng& rng, std::size_t fan_out, std::size_t fan_in);

// splitmix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

}  // namespace pmoe
