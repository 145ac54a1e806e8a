#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coinfer/offload_env.hpp"
#include "coinfer/ppo.hpp"

namespace coinfer {

// Parsed run configuration: environment + channel + agent + experiment
// sections. Defaults encode the reference experiment constants; any field
// may be overridden by the document or --set flags. Validation is atomic:
// every violation is collected and reported in one ConfigError.
struct RunConfig {
  EnvConfig env;      // includes channel config and resolved profiles
  TrainConfig train;
  std::string mode = "train";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir = "runs/out";
  int eval_episodes = 1;

  // Parses a config document (JSON, // comments allowed). Profile path
  // references are resolved relative to `base_dir`. Overrides are
  // "dotted.path=json-value" strings applied before parsing.
  static RunConfig from_text(const std::string& text,
                             const std::filesystem::path& base_dir,
                             const std::vector<std::string>& overrides = {});
  static RunConfig load(const std::filesystem::path& file,
                        const std::vector<std::string>& overrides = {});

  // Fully resolved document (defaults filled in, profiles inlined) whose
  // re-run reproduces this run bit-for-bit.
  std::string frozen_json() const;
  // FNV-1a hash of the frozen document, as 16 hex chars.
  std::string hash() const;
};

}  // namespace coinfer
