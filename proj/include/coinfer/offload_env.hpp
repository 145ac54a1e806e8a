#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <utility>

#include "coinfer/channel.hpp"
#include "coinfer/env.hpp"
#include "coinfer/profiles.hpp"
#include "coinfer/rng.hpp"

namespace coinfer {

struct EnvConfig {
  std::size_t ue_count = 5;                // N
  double frame_duration_s = 0.5;           // T_0
  double beta = 0.47;                      // latency/energy weight, s/J
  double task_mean = 200.0;                // lambda_p
  double distance_min_m = 1.0;
  double distance_max_m = 100.0;
  double discount = 0.95;                  // gamma
  std::size_t max_frames = 0;              // 0: derived from the workload
  bool eval_mode = false;                  // fixed distance/task count
  double eval_distance_m = 50.0;
  std::uint64_t eval_tasks = 200;
  std::vector<DeviceProfile> profiles;     // one per UE
  ChannelConfig channel;

  void append_errors(std::vector<std::string>& errors) const;
  void validate() const;
  // Episode cap: ten times the frames a full-local schedule would need,
  // bounding episodes under pathological policies.
  std::size_t effective_max_frames() const;
};

// The MDP state s_t = {k, l, n, d} plus the frame counter.
struct EnvState {
  std::vector<std::uint64_t> remaining_tasks;  // k_t
  std::vector<double> residual_local_s;        // l_t
  std::vector<double> residual_bits;           // n_t
  std::vector<double> distance_m;              // d
  std::size_t frame_index = 0;
};

// Latency/energy of one completed task, attributed to its UE.
struct TaskRecord {
  std::size_t ue = 0;
  double latency_s = 0.0;
  double energy_j = 0.0;
};

// Per-frame trace row for CSV export and oracle comparison.
struct EpisodeTrace {
  struct Row {
    std::size_t frame = 0;
    JointAction action;
    int completed = 0;
    double energy_j = 0.0;
    double reward = 0.0;
  };
  std::size_t ue_count = 0;
  std::vector<Row> rows;

  void write_csv(std::ostream& out) const;
};

// Time-framed simulator of multi-UE collaborative inference. Each frame the
// joint action is refreshed; an in-flight task keeps its committed partition
// and channel but adopts the new power immediately, new tasks follow the new
// action. Tasks execute strictly sequentially per UE: local compute+compress,
// then transmission (skipped for fully local tasks).
class OffloadEnv final : public Env {
 public:
  explicit OffloadEnv(EnvConfig cfg);

  std::size_t ue_count() const override { return cfg_.ue_count; }
  std::size_t observation_dim() const override { return 4 * cfg_.ue_count; }
  const ActionSpace& action_space() const override { return space_; }
  void seed(std::uint64_t s) override;
  std::vector<double> reset() override;
  FrameOutcome step(const JointAction& a) override;
  std::vector<double> observation() const override;
  bool done() const override { return done_; }
  std::array<std::uint64_t, 4> rng_state() const override { return rng_.state(); }
  void set_rng_state(const std::array<std::uint64_t, 4>& s) override {
    rng_.set_state(s);
  }

  const EnvConfig& config() const { return cfg_; }
  EnvState state() const;
  // Ended because of the frame cap rather than an empty system.
  bool truncated() const { return truncated_; }
  const std::vector<TaskRecord>& completed_tasks() const { return tasks_; }
  const RadioState& radio() const { return radio_; }
  std::span<const double> rewards() const { return rewards_; }

  // Latency and energy of a single task at partition b, given the uplink
  // rate and transmit power in effect for its whole duration. For b = B+1
  // rate and power are ignored.
  static std::pair<double, double> task_overhead(int b, double rate_bps,
                                                 double power_w,
                                                 const DeviceProfile& p);

 private:
  struct InFlight {
    bool active = false;
    int partition = 0;
    int channel = 0;
    double local_left_s = 0.0;
    double local_energy_left_j = 0.0;
    double local_power_w = 0.0;  // average draw over the local phase
    double bits_left = 0.0;
    double latency_acc_s = 0.0;
    double energy_acc_j = 0.0;
  };

  void simulate_ue(std::size_t n, const JointAction& a, double rate_inflight,
                   double rate_new, FrameOutcome& out);
  void finish_task(std::size_t n, InFlight& fl, FrameOutcome& out);

  EnvConfig cfg_;
  ActionSpace space_;
  RngStream rng_;
  std::vector<std::uint64_t> tasks_left_;
  std::vector<InFlight> inflight_;
  RadioState radio_;
  std::vector<TaskRecord> tasks_;
  std::vector<double> rewards_;
  std::vector<int> local_index_;  // B_n + 1 per UE
  std::size_t frame_ = 0;
  bool done_ = true;  // must reset() before stepping
  bool truncated_ = false;
  double time_tol_s_ = 0.0;  // absorbs FP rounding at exact frame boundaries
};

// P1 objective: max over UEs of summed task latency plus beta times total
// energy. Requires a complete episode (throws ContractError otherwise).
double objective_p1(std::span<const TaskRecord> tasks, std::size_t ue_count,
                    double beta, bool episode_complete);

// P2 objective: negative sum of per-frame rewards.
double objective_p2(std::span<const double> rewards);

}  // namespace coinfer
