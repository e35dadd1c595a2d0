#include "prnn/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace prnn {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double Rng::next_gaussian() {
  // (u1 + 0.5)·2^-53 keeps u1 strictly inside (0, 1) so the log is finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::next_below: n must be > 0");
  // Rejection sampling keeps the distribution exactly uniform.
  const std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

Rng Rng::split(std::uint64_t stream) const {
  std::uint64_t sm = seed_ ^ (0xa0761d6478bd642fULL * (stream + 1));
  const std::uint64_t child_seed = splitmix64(sm);
  return Rng(child_seed);
}

std::vector<double> gaussian(Rng& rng, double mean, double sd, std::size_t n) {
  if (sd < 0.0) throw std::invalid_argument("gaussian: sd must be >= 0");
  std::vector<double> out(n, mean);
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    const double u1 = (static_cast<double>(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = rng.next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
    out[i + 1] = mean + sd * r * std::sin(2.0 * std::numbers::pi * u2);
  }
  if (n % 2 == 1) out[n - 1] = mean + sd * rng.next_gaussian();
  return out;
}

Matrix glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0)
    throw std::invalid_argument("glorot_uniform: fan_in and fan_out must be >= 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = limit * (2.0 * rng.next_double() - 1.0);
  return m;
}

}  // namespace prnn
