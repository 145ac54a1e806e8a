#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "coinfer/actions.hpp"

namespace coinfer {

// Per-UE action space: number of partition choices (B_n + 2), shared channel
// count, and the executed-power bounds. The power floor keeps sampled powers
// strictly positive after clipping.
struct ActionSpace {
  std::vector<int> partition_choices;  // per UE
  int channel_choices = 1;
  double power_max_w = 0.5;
  double power_min_w = 5e-4;
};

struct UeFrameStats {
  double busy_s = 0.0;          // time spent computing/compressing/transmitting
  double bits_sent = 0.0;
  double local_energy_j = 0.0;  // compute + compress
  double tx_energy_j = 0.0;
};

// Result of simulating one frame.
struct FrameOutcome {
  int completed = 0;      // K_t
  double energy_j = 0.0;  // E_t
  double reward = 0.0;    // r_t
  bool done = false;
  std::vector<UeFrameStats> per_ue;
};

// Minimal environment surface the trainer and evaluation policies consume.
class Env {
 public:
  virtual ~Env() = default;
  virtual std::size_t ue_count() const = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual const ActionSpace& action_space() const = 0;
  // Reseeds the environment's RNG stream; the next reset() is a pure
  // function of this seed.
  virtual void seed(std::uint64_t s) = 0;
  virtual std::vector<double> reset() = 0;
  virtual FrameOutcome step(const JointAction& a) = 0;
  virtual std::vector<double> observation() const = 0;
  virtual bool done() const = 0;
  // RNG stream position, serialized into checkpoints. Stateless toy envs
  // keep the default.
  virtual std::array<std::uint64_t, 4> rng_state() const { return {}; }
  virtual void set_rng_state(const std::array<std::uint64_t, 4>&) {}
};

}  // namespace coinfer
