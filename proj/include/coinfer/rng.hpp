#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace coinfer {

// Deterministic RNG (xoshiro256++ seeded via splitmix64). Every random draw
// in a run flows from one root seed through named substreams, so adding
// draws in one component never shifts another component's stream. The state
// is serializable for checkpointing.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Child stream keyed by name. Derivation uses only the construction seed,
  // so the result does not depend on how many values were drawn.
  RngStream derive(std::string_view name) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform on {0, ..., n-1}, unbiased (rejection). n must be >= 1.
  std::uint64_t uniform_int(std::uint64_t n);
  // Standard normal via Box-Muller (no cached spare, keeps state minimal).
  double normal();
  double normal(double mean, double stddev);
  // Exact Poisson sample by counting unit-exponential arrivals; O(mean).
  std::uint64_t poisson(double mean);
  // Index sampled according to probs (assumed non-negative, summing to ~1).
  std::size_t categorical(std::span<const double> probs);

  std::uint64_t seed() const { return seed_; }
  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  std::uint64_t seed_ = 0;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace coinfer
