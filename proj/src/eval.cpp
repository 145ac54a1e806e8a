#include "coinfer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "coinfer/csv.hpp"
#include "coinfer/error.hpp"

namespace coinfer {

using nlohmann::json;

LocalPolicy::LocalPolicy(const ActionSpace& space) {
  action_.ue.resize(space.partition_choices.size());
  for (std::size_t n = 0; n < action_.ue.size(); ++n) {
    action_.ue[n].partition = space.partition_choices[n] - 1;  // b = B+1
    action_.ue[n].channel = 0;
    action_.ue[n].power_w = space.power_max_w;
  }
}

JointAction LocalPolicy::act(std::span<const double>, RngStream&) {
  return action_;
}

UniformRandomPolicy::UniformRandomPolicy(const ActionSpace& space)
    : space_(space) {}

JointAction UniformRandomPolicy::act(std::span<const double>, RngStream& rng) {
  JointAction a;
  a.ue.resize(space_.partition_choices.size());
  for (std::size_t n = 0; n < a.ue.size(); ++n) {
    a.ue[n].partition = static_cast<int>(
        rng.uniform_int(static_cast<std::uint64_t>(space_.partition_choices[n])));
    a.ue[n].channel = static_cast<int>(
        rng.uniform_int(static_cast<std::uint64_t>(space_.channel_choices)));
    // (0, p_max]: flip the half-open uniform.
    a.ue[n].power_w = (1.0 - rng.uniform01()) * space_.power_max_w;
  }
  return a;
}

FixedActionPolicy::FixedActionPolicy(JointAction action)
    : action_(std::move(action)) {}

JointAction FixedActionPolicy::act(std::span<const double>, RngStream&) {
  return action_;
}

GreedyAgentPolicy::GreedyAgentPolicy(Agent agent, const ActionSpace& space)
    : agent_(std::move(agent)), space_(space) {}

JointAction GreedyAgentPolicy::act(std::span<const double> obs, RngStream&) {
  return greedy_action(agent_.actors, obs, space_);
}

EpisodeRun run_episode(OffloadEnv& env, Policy& policy, RngStream& policy_rng) {
  EpisodeRun run;
  run.trace.ue_count = env.ue_count();
  std::vector<double> obs = env.reset();
  while (!env.done()) {
    const std::size_t frame = env.state().frame_index;
    JointAction action = policy.act(obs, policy_rng);
    const FrameOutcome out = env.step(action);
    run.trace.rows.push_back(
        {frame, std::move(action), out.completed, out.energy_j, out.reward});
    run.rewards.push_back(out.reward);
    if (!out.done) obs = env.observation();
  }
  run.tasks = env.completed_tasks();
  run.truncated = env.truncated();
  run.frames = run.trace.rows.size();
  return run;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

double stddev_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

namespace {

std::vector<double> ranks_with_ties(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("spearman: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> rx = ranks_with_ties(x);
  const std::vector<double> ry = ranks_with_ties(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

std::vector<double> moving_average(std::span<const double> xs, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ContractError("moving_average: window must be odd and positive");
  }
  const int half = window / 2;
  const int n = static_cast<int>(xs.size());
  std::vector<double> out(xs.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double acc = 0.0;
    for (int j = lo; j <= hi; ++j) acc += xs[j];
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "seed,episode,frames,completed,truncated,mean_task_latency_s,"
         "mean_task_energy_j,episode_reward\n";
  for (const EvalEpisodeRow& r : rows) {
    out << r.seed << ',' << r.episode << ',' << r.frames << ',' << r.completed
        << ',' << (r.truncated ? 1 : 0) << ',' << csv::format(r.mean_task_latency_s)
        << ',' << csv::format(r.mean_task_energy_j) << ','
        << csv::format(r.episode_reward) << '\n';
  }
}

std::string EvalReport::summary_json(const std::string& config_hash) const {
  json j;
  j["policy"] = policy;
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  j["episodes"] = rows.size();
  j["truncated_episodes"] = truncated_episodes;
  j["aggregates"] = {{"latency_mean_s", latency_mean},
                     {"latency_std_s", latency_std},
                     {"energy_mean_j", energy_mean},
                     {"energy_std_j", energy_std}};
  return j.dump(2) + "\n";
}

EvalReport evaluate(Policy& policy, const EnvConfig& cfg, int episodes,
                    std::span<const std::uint64_t> seeds) {
  if (!cfg.eval_mode) {
    throw ContractError("evaluate: env config must be in eval_mode");
  }
  if (episodes < 1) throw ContractError("evaluate: episodes must be >= 1");
  EvalReport report;
  report.policy = policy.name();
  report.seeds.assign(seeds.begin(), seeds.end());
  std::vector<double> seed_latency, seed_energy;
  for (const std::uint64_t seed : seeds) {
    OffloadEnv env(cfg);
    env.seed(RngStream(seed).derive("env").seed());
    RngStream policy_rng = RngStream(seed).derive("policy");
    std::vector<double> ep_latency, ep_energy;
    for (int ep = 0; ep < episodes; ++ep) {
      EpisodeRun run = run_episode(env, policy, policy_rng);
      EvalEpisodeRow row;
      row.seed = seed;
      row.episode = ep;
      row.frames = run.frames;
      row.completed = run.tasks.size();
      row.truncated = run.truncated;
      std::vector<double> lat, en;
      lat.reserve(run.tasks.size());
      en.reserve(run.tasks.size());
      for (const TaskRecord& t : run.tasks) {
        lat.push_back(t.latency_s);
        en.push_back(t.energy_j);
      }
      row.mean_task_latency_s = mean_of(lat);
      row.mean_task_energy_j = mean_of(en);
      row.episode_reward =
          std::accumulate(run.rewards.begin(), run.rewards.end(), 0.0);
      report.rows.push_back(row);
      if (run.truncated) {
        ++report.truncated_episodes;
      } else {
        ep_latency.push_back(row.mean_task_latency_s);
        ep_energy.push_back(row.mean_task_energy_j);
      }
    }
    if (!ep_latency.empty()) {
      seed_latency.push_back(mean_of(ep_latency));
      seed_energy.push_back(mean_of(ep_energy));
    }
  }
  report.latency_mean = mean_of(seed_latency);
  report.latency_std = stddev_of(seed_latency);
  report.energy_mean = mean_of(seed_energy);
  report.energy_std = stddev_of(seed_energy);
  return report;
}

void SweepResult::write_csv(std::ostream& out) const {
  out << axis
      << ",present,latency_mean,latency_std,energy_mean,energy_std,"
         "overhead_mean,truncated_episodes,local_latency,local_energy\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& c = cells[i];
    out << csv::format(c.x) << ',' << (c.present ? 1 : 0) << ','
        << csv::format(c.latency_mean) << ',' << csv::format(c.latency_std)
        << ',' << csv::format(c.energy_mean) << ','
        << csv::format(c.energy_std) << ',' << csv::format(c.overhead_mean)
        << ',' << c.truncated_episodes << ','
        << csv::format(local_latency[i]) << ','
        << csv::format(local_energy[i]) << '\n';
  }
}

namespace {

struct CellEval {
  SweepCell cell;
  double local_latency = 0.0;
  double local_energy = 0.0;
};

CellEval eval_cell(EnvConfig cfg, double x,
                   const std::optional<Checkpoint>& agent, int episodes,
                   std::span<const std::uint64_t> seeds) {
  // High-beta policies legitimately trade latency for energy by transmitting
  // slowly; give them room to finish so the aggregates record the slow
  // completion instead of a truncation. The cap still bounds true
  // nontermination.
  if (cfg.max_frames == 0) cfg.max_frames = 25 * cfg.effective_max_frames();
  CellEval out;
  out.cell.x = x;
  {
    OffloadEnv env(cfg);
    LocalPolicy local(env.action_space());
    EvalReport local_report = evaluate(local, cfg, episodes, seeds);
    out.local_latency = local_report.latency_mean;
    out.local_energy = local_report.energy_mean;
  }
  if (!agent.has_value()) {
    out.cell.present = false;
    return out;
  }
  OffloadEnv env(cfg);
  check_compatible(*agent, env);
  GreedyAgentPolicy policy(agent->agent, env.action_space());
  EvalReport report = evaluate(policy, cfg, episodes, seeds);
  out.cell.present = true;
  out.cell.latency_mean = report.latency_mean;
  out.cell.latency_std = report.latency_std;
  out.cell.energy_mean = report.energy_mean;
  out.cell.energy_std = report.energy_std;
  out.cell.overhead_mean = report.latency_mean + cfg.beta * report.energy_mean;
  out.cell.truncated_episodes = report.truncated_episodes;
  return out;
}

void finish_sweep(SweepResult& result) {
  std::vector<double> xs, lat, en, ovh;
  for (const SweepCell& c : result.cells) {
    if (!c.present) continue;
    xs.push_back(c.x);
    lat.push_back(c.latency_mean);
    en.push_back(c.energy_mean);
    ovh.push_back(c.overhead_mean);
  }
  if (xs.size() >= 2) {
    result.spearman_latency = spearman(xs, lat);
    result.spearman_energy = spearman(xs, en);
    result.spearman_overhead = spearman(xs, ovh);
  }
}

}  // namespace

SweepResult sweep_beta(const EnvConfig& base, std::span<const double> betas,
                       const std::vector<std::optional<Checkpoint>>& agents,
                       int episodes, std::span<const std::uint64_t> seeds) {
  if (agents.size() != betas.size()) {
    throw ContractError("sweep_beta: one agent slot per beta value");
  }
  SweepResult result;
  result.axis = "beta";
  for (std::size_t i = 0; i < betas.size(); ++i) {
    EnvConfig cfg = base;
    cfg.beta = betas[i];
    cfg.eval_mode = true;
    CellEval ce = eval_cell(cfg, betas[i], agents[i], episodes, seeds);
    result.cells.push_back(ce.cell);
    result.local_latency.push_back(ce.local_latency);
    result.local_energy.push_back(ce.local_energy);
  }
  finish_sweep(result);
  return result;
}

SweepResult sweep_ue_count(const EnvConfig& base, std::span<const int> ue_counts,
                           const std::vector<std::optional<Checkpoint>>& agents,
                           int episodes, std::span<const std::uint64_t> seeds) {
  if (agents.size() != ue_counts.size()) {
    throw ContractError("sweep_ue_count: one agent slot per UE count");
  }
  if (base.profiles.empty()) {
    throw ContractError("sweep_ue_count: base config needs at least one profile");
  }
  SweepResult result;
  result.axis = "ue_count";
  for (std::size_t i = 0; i < ue_counts.size(); ++i) {
    EnvConfig cfg = base;
    cfg.ue_count = static_cast<std::size_t>(ue_counts[i]);
    cfg.eval_mode = true;
    // Replicate the first profile across UEs when counts differ.
    cfg.profiles.assign(cfg.ue_count, base.profiles.front());
    CellEval ce = eval_cell(cfg, static_cast<double>(ue_counts[i]), agents[i],
                            episodes, seeds);
    result.cells.push_back(ce.cell);
    result.local_latency.push_back(ce.local_latency);
    result.local_energy.push_back(ce.local_energy);
  }
  finish_sweep(result);
  return result;
}

}  // namespace coinfer
