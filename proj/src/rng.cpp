#include "fiagree/rng.hpp"

#include <cmath>
#include <numbers>

namespace fiagree {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  // 2^64 - threshold is a multiple of n, so accepted draws are unbiased.
  const std::uint64_t threshold = (std::uint64_t(0) - n) % n;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (stream + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (substream + 0x85157af5ULL));
  return h;
}

}  // namespace fiagree
