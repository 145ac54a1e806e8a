#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coinfer/checkpoint.hpp"
#include "coinfer/offload_env.hpp"
#include "coinfer/ppo.hpp"

namespace coinfer {

// Decision rule mapping observations to joint actions. Every emitted action
// is validated against C1-C3 before the env executes it.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual JointAction act(std::span<const double> obs, RngStream& rng) = 0;
  virtual std::string name() const = 0;
};

// Every task runs fully on its UE.
class LocalPolicy final : public Policy {
 public:
  explicit LocalPolicy(const ActionSpace& space);
  JointAction act(std::span<const double> obs, RngStream& rng) override;
  std::string name() const override { return "local"; }

 private:
  JointAction action_;
};

// Uniform over partitions and channels, power uniform on (0, p_max].
class UniformRandomPolicy final : public Policy {
 public:
  explicit UniformRandomPolicy(const ActionSpace& space);
  JointAction act(std::span<const double> obs, RngStream& rng) override;
  std::string name() const override { return "random"; }

 private:
  ActionSpace space_;
};

// Same constant action every frame.
class FixedActionPolicy final : public Policy {
 public:
  explicit FixedActionPolicy(JointAction action);
  JointAction act(std::span<const double> obs, RngStream& rng) override;
  std::string name() const override { return "fixed"; }

 private:
  JointAction action_;
};

// Trained agent acting greedily: argmax of the categorical heads, clamped
// mean of the power head.
class GreedyAgentPolicy final : public Policy {
 public:
  GreedyAgentPolicy(Agent agent, const ActionSpace& space);
  JointAction act(std::span<const double> obs, RngStream& rng) override;
  std::string name() const override { return "agent"; }

 private:
  Agent agent_;
  ActionSpace space_;
};

// ---- Evaluation ----

struct EvalEpisodeRow {
  std::uint64_t seed = 0;
  int episode = 0;
  std::size_t frames = 0;
  std::uint64_t completed = 0;
  bool truncated = false;
  double mean_task_latency_s = 0.0;
  double mean_task_energy_j = 0.0;
  double episode_reward = 0.0;
};

struct EvalReport {
  std::string policy;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalEpisodeRow> rows;
  // Aggregates over per-seed means; truncated episodes are excluded from the
  // latency/energy aggregates and counted separately.
  double latency_mean = 0.0, latency_std = 0.0;
  double energy_mean = 0.0, energy_std = 0.0;
  std::uint64_t truncated_episodes = 0;

  void write_csv(std::ostream& out) const;
  // JSON summary with the config hash, seeds, and aggregates.
  std::string summary_json(const std::string& config_hash) const;
};

struct EpisodeRun {
  EpisodeTrace trace;
  std::vector<TaskRecord> tasks;
  std::vector<double> rewards;
  bool truncated = false;
  std::size_t frames = 0;
};

// Resets `env` and rolls one full episode under `policy`. Every action is
// validated against C1-C3 before executing; violations abort by exception.
EpisodeRun run_episode(OffloadEnv& env, Policy& policy, RngStream& policy_rng);

// Runs `episodes` episodes per seed on a fresh eval-mode env per seed.
EvalReport evaluate(Policy& policy, const EnvConfig& cfg, int episodes,
                    std::span<const std::uint64_t> seeds);

// ---- Statistics ----

double mean_of(std::span<const double> xs);
double stddev_of(std::span<const double> xs);  // population
// Spearman rank correlation with average ranks for ties; NaN for n < 2.
double spearman(std::span<const double> x, std::span<const double> y);
// Centered moving average over `window` nearest values (window odd).
std::vector<double> moving_average(std::span<const double> xs, int window);

// ---- Sweeps ----

struct SweepCell {
  double x = 0.0;  // beta or UE count
  bool present = false;
  double latency_mean = 0.0, latency_std = 0.0;
  double energy_mean = 0.0, energy_std = 0.0;
  double overhead_mean = 0.0;  // latency + beta * energy
  std::uint64_t truncated_episodes = 0;
};

struct SweepResult {
  std::string axis;  // "beta" or "ue_count"
  std::vector<SweepCell> cells;
  double spearman_latency = 0.0;  // corr(x, latency means)
  double spearman_energy = 0.0;
  double spearman_overhead = 0.0;
  // Local-baseline reference (constant across cells when profiles are
  // shared).
  std::vector<double> local_latency;
  std::vector<double> local_energy;

  void write_csv(std::ostream& out) const;
};

// Evaluates one checkpoint per beta value (absent checkpoints are listed and
// skipped). Env config is the base; beta is overridden per cell.
SweepResult sweep_beta(const EnvConfig& base, std::span<const double> betas,
                       const std::vector<std::optional<Checkpoint>>& agents,
                       int episodes, std::span<const std::uint64_t> seeds);

// One checkpoint per UE count.
SweepResult sweep_ue_count(const EnvConfig& base, std::span<const int> ue_counts,
                           const std::vector<std::optional<Checkpoint>>& agents,
                           int episodes, std::span<const std::uint64_t> seeds);

}  // namespace coinfer
