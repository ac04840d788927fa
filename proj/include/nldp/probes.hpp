#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nldp/types.hpp"

namespace nldp {

// Independent stream derived from a global seed.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

// Halton points in the ball B_radius(center), skipping the first `skip` indices.
std::vector<Point> halton_ball(int n, std::size_t count, double radius, const Point& center,
                               std::uint64_t skip = 1);

// Uniform random points in B_radius(0).
std::vector<Point> random_ball(int n, std::size_t count, double radius, std::mt19937_64& rng);

}  // namespace nldp
