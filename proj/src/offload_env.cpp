#include "coinfer/offload_env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "coinfer/csv.hpp"
#include "coinfer/error.hpp"

namespace coinfer {

void EnvConfig::append_errors(std::vector<std::string>& errors) const {
  if (ue_count < 1) errors.push_back("environment.ue_count: must be >= 1");
  if (!(frame_duration_s > 0.0)) errors.push_back("environment.frame_duration_s: must be positive");
  if (!(beta > 0.0)) errors.push_back("environment.beta: must be positive");
  if (!(task_mean > 0.0)) errors.push_back("environment.task_mean: must be positive");
  if (!(discount >= 0.0 && discount <= 1.0)) errors.push_back("environment.discount: must be in [0, 1]");
  if (!(distance_min_m >= 1.0)) errors.push_back("environment.distance_min_m: must be >= 1");
  if (!(distance_max_m >= distance_min_m)) errors.push_back("environment.distance_max_m: must be >= distance_min_m");
  if (!(eval_distance_m >= 1.0)) errors.push_back("environment.eval_distance_m: must be >= 1");
  if (eval_tasks < 1) errors.push_back("environment.eval_tasks: must be >= 1");
  if (ue_count >= 1 && profiles.size() != ue_count) {
    errors.push_back("environment.profile: need one profile per UE (" +
                     std::to_string(ue_count) + "), got " +
                     std::to_string(profiles.size()));
  }
  for (const auto& p : profiles) {
    try {
      p.validate();
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  channel.append_errors(errors);
}

void EnvConfig::validate() const {
  std::vector<std::string> errors;
  append_errors(errors);
  if (!errors.empty()) {
    std::string msg = errors.front();
    for (std::size_t i = 1; i < errors.size(); ++i) msg += "; " + errors[i];
    throw ConfigError(msg);
  }
}

std::size_t EnvConfig::effective_max_frames() const {
  if (max_frames > 0) return max_frames;
  const double tasks = eval_mode ? static_cast<double>(eval_tasks) : task_mean;
  double slowest = 0.0;
  for (const auto& p : profiles) {
    slowest = std::max(slowest, p.local_latency_s[p.local_index()]);
  }
  if (slowest <= 0.0) slowest = frame_duration_s;
  const double frames = std::ceil(tasks * slowest / frame_duration_s);
  return std::max<std::size_t>(1, static_cast<std::size_t>(10.0 * frames));
}

OffloadEnv::OffloadEnv(EnvConfig cfg) : cfg_(std::move(cfg)), rng_(0) {
  cfg_.validate();
  space_.partition_choices.resize(cfg_.ue_count);
  local_index_.resize(cfg_.ue_count);
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    space_.partition_choices[n] = cfg_.profiles[n].points();
    local_index_[n] = cfg_.profiles[n].local_index();
  }
  space_.channel_choices = cfg_.channel.channel_count;
  space_.power_max_w = cfg_.channel.max_power_w;
  space_.power_min_w = 1e-3 * cfg_.channel.max_power_w;
  tasks_left_.assign(cfg_.ue_count, 0);
  inflight_.assign(cfg_.ue_count, InFlight{});
  time_tol_s_ = 1e-9 * cfg_.frame_duration_s;
}

void OffloadEnv::seed(std::uint64_t s) { rng_ = RngStream(s); }

std::vector<double> OffloadEnv::reset() {
  tasks_.clear();
  rewards_.clear();
  truncated_ = false;
  frame_ = 0;
  inflight_.assign(cfg_.ue_count, InFlight{});
  std::vector<double> d(cfg_.ue_count);
  if (cfg_.eval_mode) {
    tasks_left_.assign(cfg_.ue_count, cfg_.eval_tasks);
    std::fill(d.begin(), d.end(), cfg_.eval_distance_m);
  } else {
    for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
      tasks_left_[n] = rng_.poisson(cfg_.task_mean);
    }
    for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
      d[n] = rng_.uniform(cfg_.distance_min_m, cfg_.distance_max_m);
    }
  }
  radio_ = RadioState::from_distances(d, cfg_.channel.path_loss_exponent);
  done_ = false;
  return observation();
}

std::vector<double> OffloadEnv::observation() const {
  std::vector<double> obs;
  obs.reserve(4 * cfg_.ue_count);
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    obs.push_back(static_cast<double>(tasks_left_[n]) / cfg_.task_mean);
  }
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    obs.push_back(inflight_[n].local_left_s / cfg_.frame_duration_s);
  }
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    obs.push_back(inflight_[n].bits_left / cfg_.profiles[n].max_payload_bits());
  }
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    obs.push_back(radio_.distance_m.empty()
                      ? 0.0
                      : radio_.distance_m[n] / cfg_.distance_max_m);
  }
  return obs;
}

EnvState OffloadEnv::state() const {
  EnvState s;
  s.remaining_tasks = tasks_left_;
  s.residual_local_s.resize(cfg_.ue_count);
  s.residual_bits.resize(cfg_.ue_count);
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    s.residual_local_s[n] = inflight_[n].local_left_s;
    s.residual_bits[n] = inflight_[n].bits_left;
  }
  s.distance_m = radio_.distance_m;
  s.frame_index = frame_;
  return s;
}

std::pair<double, double> OffloadEnv::task_overhead(int b, double rate_bps,
                                                    double power_w,
                                                    const DeviceProfile& p) {
  if (b < 0 || b > p.local_index()) {
    throw DomainError("task_overhead: partition " + std::to_string(b) +
                      " out of {0.." + std::to_string(p.local_index()) + "}");
  }
  const bool raw = (b == 0);
  const bool local = (b == p.local_index());
  double latency = 0.0;
  double energy = 0.0;
  if (!raw) {
    latency += p.local_latency_s[b];
    energy += p.local_energy_j[b];
  }
  if (!raw && !local) {
    latency += p.compress_latency_s[b];
    energy += p.compress_energy_j[b];
  }
  if (!local) {
    if (!(rate_bps > 0.0)) {
      throw DomainError("task_overhead: offloading partitions need a positive rate");
    }
    const double tx = p.payload_bits[b] / rate_bps;
    latency += tx;
    energy += power_w * tx;
  }
  return {latency, energy};
}

void OffloadEnv::finish_task(std::size_t n, InFlight& fl, FrameOutcome& out) {
  tasks_.push_back({n, fl.latency_acc_s, fl.energy_acc_j});
  --tasks_left_[n];
  ++out.completed;
  fl = InFlight{};
}

void OffloadEnv::simulate_ue(std::size_t n, const JointAction& a,
                             double rate_inflight, double rate_new,
                             FrameOutcome& out) {
  UeFrameStats& stats = out.per_ue[n];
  const DeviceProfile& prof = cfg_.profiles[n];
  const UeAction& act = a.ue[n];
  InFlight& fl = inflight_[n];
  double t_rem = cfg_.frame_duration_s;

  // Finish the in-flight task first: committed partition/channel, new power.
  if (fl.active) {
    if (fl.local_left_s > 0.0) {
      if (fl.local_left_s <= t_rem + time_tol_s_) {
        const double dt = fl.local_left_s;
        const double de = fl.local_energy_left_j;
        stats.busy_s += dt;
        stats.local_energy_j += de;
        out.energy_j += de;
        fl.latency_acc_s += dt;
        fl.energy_acc_j += de;
        fl.local_left_s = 0.0;
        fl.local_energy_left_j = 0.0;
        t_rem = std::max(0.0, t_rem - dt);
      } else {
        const double dt = t_rem;
        const double de = fl.local_power_w * dt;
        stats.busy_s += dt;
        stats.local_energy_j += de;
        out.energy_j += de;
        fl.latency_acc_s += dt;
        fl.energy_acc_j += de;
        fl.local_left_s -= dt;
        fl.local_energy_left_j = std::max(0.0, fl.local_energy_left_j - de);
        t_rem = 0.0;
      }
    }
    if (fl.local_left_s == 0.0 && fl.bits_left > 0.0 && t_rem > 0.0) {
      const double needed = fl.bits_left / rate_inflight;
      if (needed <= t_rem + time_tol_s_) {
        const double de = act.power_w * needed;
        stats.busy_s += needed;
        stats.bits_sent += fl.bits_left;
        stats.tx_energy_j += de;
        out.energy_j += de;
        fl.latency_acc_s += needed;
        fl.energy_acc_j += de;
        fl.bits_left = 0.0;
        t_rem = std::max(0.0, t_rem - needed);
      } else {
        const double dt = t_rem;
        const double sent = rate_inflight * dt;
        const double de = act.power_w * dt;
        stats.busy_s += dt;
        stats.bits_sent += sent;
        stats.tx_energy_j += de;
        out.energy_j += de;
        fl.latency_acc_s += dt;
        fl.energy_acc_j += de;
        fl.bits_left -= sent;
        t_rem = 0.0;
      }
    }
    if (fl.local_left_s == 0.0 && fl.bits_left == 0.0) finish_task(n, fl, out);
  }

  // Start subsequent tasks under the new action.
  const int b = act.partition;
  const bool is_local = (b == local_index_[n]);
  const bool raw = (b == 0);
  double local_total = 0.0;
  double local_energy = 0.0;
  if (!raw) {
    local_total += prof.local_latency_s[b];
    local_energy += prof.local_energy_j[b];
  }
  if (!raw && !is_local) {
    local_total += prof.compress_latency_s[b];
    local_energy += prof.compress_energy_j[b];
  }
  const double bits = is_local ? 0.0 : prof.payload_bits[b];

  while (!fl.active && t_rem > 0.0 && tasks_left_[n] > 0) {
    double task_latency = 0.0;
    double task_energy = 0.0;
    // Local compute + compress phase.
    if (local_total > 0.0) {
      if (local_total <= t_rem + time_tol_s_) {
        stats.busy_s += local_total;
        stats.local_energy_j += local_energy;
        out.energy_j += local_energy;
        task_latency += local_total;
        task_energy += local_energy;
        t_rem = std::max(0.0, t_rem - local_total);
      } else {
        const double dt = t_rem;
        const double de = local_energy * (dt / local_total);
        stats.busy_s += dt;
        stats.local_energy_j += de;
        out.energy_j += de;
        fl.active = true;
        fl.partition = b;
        fl.channel = act.channel;
        fl.local_left_s = local_total - dt;
        fl.local_energy_left_j = local_energy - de;
        fl.local_power_w = local_energy / local_total;
        fl.bits_left = bits;
        fl.latency_acc_s = dt;
        fl.energy_acc_j = de;
        t_rem = 0.0;
        break;
      }
    }
    // Transmission phase (absent for fully local tasks).
    if (bits > 0.0) {
      const double needed = bits / rate_new;
      if (needed <= t_rem + time_tol_s_) {
        const double de = act.power_w * needed;
        stats.busy_s += needed;
        stats.bits_sent += bits;
        stats.tx_energy_j += de;
        out.energy_j += de;
        task_latency += needed;
        task_energy += de;
        t_rem = std::max(0.0, t_rem - needed);
      } else {
        const double dt = t_rem;
        const double sent = rate_new * dt;
        const double de = act.power_w * dt;
        stats.busy_s += dt;
        stats.bits_sent += sent;
        stats.tx_energy_j += de;
        out.energy_j += de;
        fl.active = true;
        fl.partition = b;
        fl.channel = act.channel;
        fl.local_left_s = 0.0;
        fl.local_energy_left_j = 0.0;
        fl.local_power_w = 0.0;
        fl.bits_left = bits - sent;
        fl.latency_acc_s = task_latency + dt;
        fl.energy_acc_j = task_energy + de;
        t_rem = 0.0;
        break;
      }
    }
    tasks_.push_back({n, task_latency, task_energy});
    --tasks_left_[n];
    ++out.completed;
  }
}

FrameOutcome OffloadEnv::step(const JointAction& a) {
  if (done_) throw ContractError("step: episode is done; reset first");
  std::vector<int> b_counts(cfg_.ue_count);
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    b_counts[n] = cfg_.profiles[n].partition_count;
  }
  a.validate(b_counts, cfg_.channel.channel_count, cfg_.channel.max_power_w);

  FrameOutcome out;
  out.per_ue.resize(cfg_.ue_count);
  for (std::size_t n = 0; n < cfg_.ue_count; ++n) {
    double rate_inflight = 0.0;
    double rate_new = 0.0;
    if (inflight_[n].active && inflight_[n].bits_left > 0.0) {
      rate_inflight =
          uplink_rate_on(n, inflight_[n].channel, a.ue[n].power_w, a,
                         local_index_, radio_, cfg_.channel);
    }
    if (a.ue[n].partition != local_index_[n]) {
      rate_new = uplink_rate(n, a, local_index_, radio_, cfg_.channel);
    }
    simulate_ue(n, a, rate_inflight, rate_new, out);
  }

  ++frame_;
  out.reward = -(cfg_.frame_duration_s + cfg_.beta * out.energy_j) /
               static_cast<double>(std::max(out.completed, 1));
  rewards_.push_back(out.reward);

  bool all_empty = true;
  for (std::uint64_t k : tasks_left_) {
    if (k != 0) {
      all_empty = false;
      break;
    }
  }
  if (all_empty) {
    done_ = true;
  } else if (frame_ >= cfg_.effective_max_frames()) {
    done_ = true;
    truncated_ = true;
  }
  out.done = done_;
  return out;
}

void EpisodeTrace::write_csv(std::ostream& out) const {
  std::string header = "frame_index";
  for (std::size_t n = 0; n < ue_count; ++n) {
    const std::string i = std::to_string(n);
    header += ",b" + i + ",c" + i + ",p" + i;
  }
  header += ",K_t,E_t,r_t";
  out << header << '\n';
  for (const Row& r : rows) {
    out << r.frame;
    for (std::size_t n = 0; n < ue_count; ++n) {
      out << ',' << r.action.ue[n].partition << ',' << r.action.ue[n].channel
          << ',' << csv::format(r.action.ue[n].power_w);
    }
    out << ',' << r.completed << ',' << csv::format(r.energy_j) << ','
        << csv::format(r.reward) << '\n';
  }
}

double objective_p1(std::span<const TaskRecord> tasks, std::size_t ue_count,
                    double beta, bool episode_complete) {
  if (!episode_complete) {
    throw ContractError("objective_p1: episode trace is incomplete");
  }
  std::vector<double> latency(ue_count, 0.0);
  double energy = 0.0;
  for (const TaskRecord& t : tasks) {
    latency[t.ue] += t.latency_s;
    energy += t.energy_j;
  }
  double makespan = 0.0;
  for (double l : latency) makespan = std::max(makespan, l);
  return makespan + beta * energy;
}

double objective_p2(std::span<const double> rewards) {
  double acc = 0.0;
  for (double r : rewards) acc += r;
  return -acc;
}

}  // namespace coinfer
