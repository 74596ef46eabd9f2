#include "pmoe/rng.hpp"

#include <cmath>
#include <numeric>

namespace pmoe {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double SeededRng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double SeededRng::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::vector<std::size_t> SeededRng::permutation(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), engine_);
  return order;
}

std::uint64_t SeededRng::derive(std::uint64_t tag) const { return mix_seed(seed_ ^ mix_seed(tag)); }

Tensor glorot_uniform(SeededRng& rng, std::size_t fan_out, std::size_t fan_in) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w(Shape{fan_out, fan_in});
  for (double& v : w.values()) v = rng.uniform(-a, a);
  return w;
}

}  // namespace pmoe
