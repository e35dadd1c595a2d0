#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "prnn/matrix.hpp"

namespace prnn {

// Seedable xoshiro256** generator. Identical seed gives an identical draw
// sequence on every platform; the 256-bit state is expanded from the 64-bit
// seed with splitmix64.
//
// A single Rng is single-owner. Independent consumers derive their own
// stream with split(): fixed stream ids keep one consumer's draws stable
// when another consumer is added.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, 1), 53-bit resolution.
  double next_double();
  double next_uniform(double lo, double hi);
  // One standard-normal draw (Box-Muller, sine branch discarded).
  double next_gaussian();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  Rng split(std::uint64_t stream) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::array<std::uint64_t, 4> state_;
  std::uint64_t seed_ = 0;
};

// Fixed stream ids for the project's RNG consumers.
inline constexpr std::uint64_t kStreamDataGen = 1;
inline constexpr std::uint64_t kStreamInit = 2;
inline constexpr std::uint64_t kStreamDropout = 3;
inline constexpr std::uint64_t kStreamBatch = 4;
inline constexpr std::uint64_t kStreamSplit = 5;

// n Box-Muller draws with the given mean and standard deviation.
// sd == 0 returns n copies of mean; negative sd is an argument error.
std::vector<double> gaussian(Rng& rng, double mean, double sd, std::size_t n);

// fan_in × fan_out matrix with entries i.i.d. uniform on [-L, L],
// L = sqrt(6 / (fan_in + fan_out)). Zero fan is an argument error.
Matrix glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out);

}  // namespace prnn
