#include "coinfer/rng.hpp"

#include <cmath>

#include "coinfer/error.hpp"

namespace coinfer {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& w : state_) w = splitmix64(sm);
}

RngStream RngStream::derive(std::string_view name) const {
  std::uint64_t mix = seed_ ^ fnv1a(name);
  std::uint64_t sm = mix;
  return RngStream(splitmix64(sm));
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw ContractError("uniform_int: n must be >= 1");
  if (n == 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  std::uint64_t v = next_u64();
  while (v > limit) v = next_u64();
  return v % n;
}

double RngStream::normal() {
  // Box-Muller; u1 shifted away from 0 so log() stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double RngStream::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

std::uint64_t RngStream::poisson(double mean) {
  if (!(mean > 0.0)) throw ContractError("poisson: mean must be > 0");
  // Count unit-rate exponential arrivals until their sum exceeds `mean`.
  std::uint64_t k = 0;
  double acc = 0.0;
  for (;;) {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    acc += -std::log(u1);
    if (acc >= mean) return k;
    ++k;
  }
}

std::size_t RngStream::categorical(std::span<const double> probs) {
  if (probs.empty()) throw ContractError("categorical: empty distribution");
  const double u = uniform01();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

}  // namespace coinfer
