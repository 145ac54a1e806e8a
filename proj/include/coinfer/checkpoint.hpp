#pragma once

#include <filesystem>
#include <string>

#include "coinfer/ppo.hpp"

namespace coinfer {

// Versioned agent checkpoint: layer widths, all parameters as 64-bit reals,
// optimizer state, and RNG stream positions. JSON with sorted keys and
// shortest-round-trip doubles, so save -> load -> save is byte-stable.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  Agent agent;
  std::array<std::uint64_t, 4> sampling_rng_state{};
  std::array<std::uint64_t, 4> update_rng_state{};
  std::array<std::uint64_t, 4> env_rng_state{};
  std::uint64_t root_seed = 0;
  std::uint64_t steps_done = 0;

  // Dims recorded for compatibility checks at load/eval time.
  std::size_t obs_dim = 0;
  std::vector<int> partition_choices;
  int channel_choices = 0;
};

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

// Builds a checkpoint from a live trainer.
Checkpoint snapshot(const Trainer& trainer, const Env& env,
                    std::uint64_t steps_done);

// Validates that a checkpoint's heads match an environment's action space
// and observation size. Throws ConfigError naming the mismatched head.
void check_compatible(const Checkpoint& c, const Env& env);

}  // namespace coinfer
