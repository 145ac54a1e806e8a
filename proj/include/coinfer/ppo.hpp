#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coinfer/env.hpp"
#include "coinfer/neural.hpp"
#include "coinfer/rng.hpp"

namespace coinfer {

struct TrainConfig {
  std::uint64_t total_steps = 50000;  // S_max
  std::size_t buffer_size = 1024;     // ||M||
  std::size_t batch_size = 256;       // B
  int sample_reuse = 20;              // K
  double learning_rate = 1e-4;        // alpha
  double gamma = 0.95;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double entropy_weight = 0.001;      // zeta
  bool normalize_advantages = true;
  double grad_clip_norm = 0.5;        // <= 0 disables
  std::vector<std::size_t> trunk_widths = {256, 128};
  std::size_t branch_hidden = 64;
  std::vector<std::size_t> critic_widths = {256, 128, 64};
  std::size_t checkpoint_every_rounds = 0;  // 0: final checkpoint only

  void append_errors(std::vector<std::string>& errors) const;
  void validate() const;
  // Minibatch updates per round: floor(K * ||M|| / B).
  std::size_t epochs_per_round() const {
    return static_cast<std::size_t>(sample_reuse) * buffer_size / batch_size;
  }
};

// ---- Returns and advantages (per episode segment) ----

// Discounted Monte-Carlo return of each step of one segment:
// V'(s_t) = sum_{t'>=t} gamma^{t'-t} r_{t'}.
std::vector<double> discounted_returns_segment(std::span<const double> rewards,
                                               double gamma);

// Generalized advantage estimation over one segment. `values` holds
// V(s_t) for each step plus one trailing entry: V(s_{T+1}), which is 0 when
// the segment ended the episode and the critic's bootstrap value when the
// segment was cut by the buffer boundary.
std::vector<double> gae_segment(std::span<const double> rewards,
                                std::span<const double> values, double gamma,
                                double lambda);

// Buffer-level wrappers: segments are delimited by terminal flags; the final
// (possibly unterminated) segment uses `final_bootstrap` as V(s_{T+1}).
std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double gamma,
                                       std::span<const std::uint8_t> terminals);
std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values,
                                   std::span<const std::uint8_t> terminals,
                                   double final_bootstrap, double gamma,
                                   double lambda);

// ---- Losses ----

// Mean squared deviation between predictions and targets.
double critic_loss(std::span<const double> predicted,
                   std::span<const double> target);

// Single-sample clipped surrogate: min(r A, clip(r, 1-eps, 1+eps) A) with
// r = exp(log_prob_new - log_prob_old). `dlogp` is the derivative with
// respect to log_prob_new; `skipped` marks non-finite ratios.
struct Surrogate {
  double value = 0.0;
  double dlogp = 0.0;
  bool skipped = false;
};
Surrogate clipped_surrogate(double log_prob_new, double log_prob_old,
                            double advantage, double epsilon);

// Eq-20-style actor objective: sum over actors of surrogate plus
// entropy-bonus terms (both already batch-averaged by the caller).
double actor_loss(std::span<const double> surrogates,
                  std::span<const double> entropies, double zeta);

// Normalizes in place to zero mean and unit variance (no-op for size < 2 or
// constant input). Returns {mean, std} before normalization.
std::pair<double, double> normalize_advantages(std::span<double> adv);

// ---- Trajectory buffer ----

// On-policy storage for one update round. Cleared after use so no sample
// influences more than one round.
class TrajectoryBuffer {
 public:
  TrajectoryBuffer(std::size_t capacity, std::size_t ue_count);

  void push(std::vector<double> obs, std::vector<int> partitions,
            std::vector<int> channels, std::vector<double> power_raw,
            std::vector<double> log_probs, double reward, bool terminal,
            double value);

  bool full() const { return size_ >= capacity_; }
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t ue_count() const { return ue_count_; }
  void clear();

  // Computes returns and advantages; `final_bootstrap` is V(s_{T+1}) for an
  // unterminated tail segment.
  void finalize(double gamma, double lambda, double final_bootstrap,
                bool normalize);

  const std::vector<double>& obs(std::size_t t) const { return obs_[t]; }
  int partition(std::size_t t, std::size_t ue) const { return partitions_[t][ue]; }
  int channel(std::size_t t, std::size_t ue) const { return channels_[t][ue]; }
  double power_raw(std::size_t t, std::size_t ue) const { return power_raw_[t][ue]; }
  double log_prob_old(std::size_t t, std::size_t ue) const { return log_probs_[t][ue]; }
  std::span<const double> rewards() const { return rewards_; }
  std::span<const std::uint8_t> terminals() const { return terminals_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> returns() const { return returns_; }
  std::span<const double> advantages() const { return advantages_; }

 private:
  std::size_t capacity_ = 0;
  std::size_t ue_count_ = 0;
  std::size_t size_ = 0;
  std::vector<std::vector<double>> obs_;
  std::vector<std::vector<int>> partitions_;
  std::vector<std::vector<int>> channels_;
  std::vector<std::vector<double>> power_raw_;
  std::vector<std::vector<double>> log_probs_;  // per-UE joint, under theta_old
  std::vector<double> rewards_;
  std::vector<std::uint8_t> terminals_;
  std::vector<double> values_;
  std::vector<double> returns_;
  std::vector<double> advantages_;
};

// ---- Agent and trainer ----

// One actor per UE plus the global critic and their optimizers.
struct Agent {
  std::vector<HybridActorNet> actors;
  DenseNet critic;
  // Optimizer per parameter block: trunk/partition/channel/power per actor,
  // then the critic.
  std::vector<AdamOptimizer> actor_opts;  // 4 per actor
  AdamOptimizer critic_opt;

  static Agent make(const Env& env, const TrainConfig& cfg, RngStream init_rng);
  std::size_t ue_count() const { return actors.size(); }
};

struct RoundLog {
  std::uint64_t env_steps = 0;
  std::size_t round = 0;
  double mean_cumulative_reward = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
  double entropy_partition = 0.0;
  double entropy_channel = 0.0;
  double entropy_power = 0.0;
  double seconds_elapsed = 0.0;
};

struct TrainResult {
  std::vector<RoundLog> rounds;
  std::vector<double> episode_returns;  // every completed episode, in order
  bool diverged = false;
  std::uint64_t steps_done = 0;
  std::uint64_t skipped_samples = 0;  // non-finite ratios
};

// Algorithm: fill the buffer by sampling from the current policy (resetting
// the env on termination), compute returns and advantages, run
// floor(K ||M|| / B) minibatch updates of the critic and every actor, clear
// the buffer, repeat until total_steps env steps.
class Trainer {
 public:
  Trainer(Env& env, TrainConfig cfg, std::uint64_t seed);

  // Runs to completion (or divergence). `on_round` may be empty; it fires
  // after each round (checkpointing hooks in the CLI).
  TrainResult run(const std::function<void(const RoundLog&, const Agent&)>&
                      on_round = nullptr);

  Agent& agent() { return agent_; }
  const Agent& agent() const { return agent_; }
  const TrainConfig& config() const { return cfg_; }
  RngStream& sampling_rng() { return sample_rng_; }
  RngStream& update_rng() { return update_rng_; }
  const RngStream& sampling_rng() const { return sample_rng_; }
  const RngStream& update_rng() const { return update_rng_; }
  std::uint64_t root_seed() const { return seed_; }

 private:
  struct CollectStats {
    double entropy_partition = 0.0;
    double entropy_channel = 0.0;
    double entropy_power = 0.0;
    std::vector<double> episode_returns;
    double final_bootstrap = 0.0;
  };

  CollectStats collect(TrajectoryBuffer& buffer);
  // Returns {value_loss, policy_loss} averaged over minibatches; sets
  // diverged on non-finite losses.
  std::pair<double, double> update(TrajectoryBuffer& buffer, bool* diverged,
                                   std::uint64_t* skipped);

  Env& env_;
  TrainConfig cfg_;
  std::uint64_t seed_;
  Agent agent_;
  RngStream sample_rng_;
  RngStream update_rng_;
  std::vector<double> obs_;         // current observation
  std::vector<double> ep_rewards_;  // rewards of the in-progress episode
  bool env_needs_reset_ = true;
};

// Samples one joint action from the current policy. Returns the executed
// action plus per-UE raw Gaussian samples and joint log-probabilities.
struct SampledAction {
  JointAction action;
  std::vector<int> partitions;
  std::vector<int> channels;
  std::vector<double> power_raw;
  std::vector<double> log_probs;
  double entropy_partition = 0.0;  // summed over actors
  double entropy_channel = 0.0;
  double entropy_power = 0.0;
};
SampledAction sample_action(std::vector<HybridActorNet>& actors,
                            std::span<const double> obs,
                            const ActionSpace& space, RngStream& rng);

// Greedy variant: argmax for categorical heads, clamped mean for the power
// head.
JointAction greedy_action(std::vector<HybridActorNet>& actors,
                          std::span<const double> obs,
                          const ActionSpace& space);

}  // namespace coinfer
