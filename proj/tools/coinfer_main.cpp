// Command-line surface: train / eval / sweep-beta / sweep-ue / quantize-demo
// / validate-config. See README.md for the exit-code table and config schema.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coinfer/checkpoint.hpp"
#include "coinfer/config.hpp"
#include "coinfer/csv.hpp"
#include "coinfer/error.hpp"
#include "coinfer/eval.hpp"
#include "coinfer/kernels.hpp"
#include "coinfer/offload_env.hpp"
#include "coinfer/ppo.hpp"
#include "coinfer/quantizer.hpp"

namespace fs = std::filesystem;
using namespace coinfer;

namespace {

// Exit codes. 1..63 are reserved for the eval constraint-violation count.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 64;
constexpr int kExitConfig = 65;
constexpr int kExitRuntime = 70;
constexpr int kExitDiverged = 75;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> steps;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "run configuration document");
  if (needs_config) c->required();
  cmd->add_option("--set", opts.overrides,
                  "override a config field: section.key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "replace experiment.seeds with a single seed");
  cmd->add_option("--steps", opts.steps, "override agent.total_steps");
  cmd->add_option("--out", opts.out, "override experiment.output_dir");
}

RunConfig load_config(const CommonOpts& opts) {
  std::vector<std::string> overrides = opts.overrides;
  if (opts.seed) overrides.push_back("experiment.seeds=[" + std::to_string(*opts.seed) + "]");
  if (opts.steps) overrides.push_back("agent.total_steps=" + std::to_string(*opts.steps));
  if (opts.out) overrides.push_back("experiment.output_dir=\"" + *opts.out + "\"");
  return RunConfig::load(opts.config_path, overrides);
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ParseError("cannot write " + p.string());
  out << content;
}

void write_log_csv(const fs::path& p, const std::vector<RoundLog>& rounds) {
  std::ostringstream ss;
  ss << "env_steps,round,mean_cumulative_reward,value_loss,policy_loss,"
        "entropy_partition,entropy_channel,entropy_power,seconds_elapsed\n";
  for (const RoundLog& r : rounds) {
    ss << r.env_steps << ',' << r.round << ','
       << csv::format(r.mean_cumulative_reward) << ','
       << csv::format(r.value_loss) << ',' << csv::format(r.policy_loss) << ','
       << csv::format(r.entropy_partition) << ','
       << csv::format(r.entropy_channel) << ','
       << csv::format(r.entropy_power) << ','
       << csv::format(r.seconds_elapsed) << '\n';
  }
  write_file(p, ss.str());
}

// Display curve: 5-point centered moving average of the reward series (the
// raw series stays in log.csv).
void write_smoothed_csv(const fs::path& p, const std::vector<RoundLog>& rounds) {
  std::vector<double> series;
  series.reserve(rounds.size());
  for (const RoundLog& r : rounds) series.push_back(r.mean_cumulative_reward);
  const std::vector<double> smooth = moving_average(series, 5);
  std::ostringstream ss;
  ss << "env_steps,round,mean_cumulative_reward_smoothed\n";
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    ss << rounds[i].env_steps << ',' << rounds[i].round << ','
       << csv::format(smooth[i]) << '\n';
  }
  write_file(p, ss.str());
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv_text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv_text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoull(tok));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv_text) {
  std::vector<double> out;
  std::stringstream ss(csv_text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

int run_train(const CommonOpts& opts) {
  const RunConfig cfg = load_config(opts);
  const fs::path outdir = cfg.output_dir;
  fs::create_directories(outdir);
  write_file(outdir / "resolved_config.json", cfg.frozen_json());
  bool diverged = false;
  for (const std::uint64_t seed : cfg.seeds) {
    const fs::path seed_dir = outdir / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    OffloadEnv env(cfg.env);
    Trainer trainer(env, cfg.train, seed);
    const std::size_t cadence = cfg.train.checkpoint_every_rounds;
    const TrainResult result = trainer.run([&](const RoundLog& log, const Agent&) {
      if (cadence > 0 && log.round % cadence == 0) {
        save_checkpoint(snapshot(trainer, env, log.env_steps),
                        seed_dir / ("checkpoint_round_" + std::to_string(log.round) + ".json"));
      }
    });
    write_log_csv(seed_dir / "log.csv", result.rounds);
    if (!result.rounds.empty()) {
      write_smoothed_csv(seed_dir / "log_smoothed.csv", result.rounds);
    }
    if (result.diverged) {
      std::cerr << "error[E_DIVERGENCE]: seed " << seed
                << ": non-finite loss; halting with the last good checkpoint\n";
      diverged = true;
    } else {
      save_checkpoint(snapshot(trainer, env, result.steps_done),
                      seed_dir / "checkpoint.json");
    }
    std::cout << "seed " << seed << ": " << result.steps_done << " steps, "
              << result.rounds.size() << " rounds, "
              << result.episode_returns.size() << " episodes"
              << (result.diverged ? " [diverged]" : "") << "\n";
  }
  return diverged ? kExitDiverged : kExitOk;
}

std::unique_ptr<Policy> make_policy(const std::string& kind,
                                    const std::optional<std::string>& checkpoint,
                                    const OffloadEnv& env, int fixed_b,
                                    int fixed_c, double fixed_p) {
  if (checkpoint) {
    const Checkpoint c = load_checkpoint(*checkpoint);
    check_compatible(c, env);
    return std::make_unique<GreedyAgentPolicy>(c.agent, env.action_space());
  }
  if (kind == "local") return std::make_unique<LocalPolicy>(env.action_space());
  if (kind == "random") return std::make_unique<UniformRandomPolicy>(env.action_space());
  if (kind == "fixed") {
    JointAction a;
    for (std::size_t n = 0; n < env.ue_count(); ++n) {
      a.ue.push_back({fixed_b, fixed_c, fixed_p});
    }
    return std::make_unique<FixedActionPolicy>(a);
  }
  throw ConfigError("unknown policy '" + kind + "' (local|random|fixed, or --checkpoint)");
}

int run_eval(const CommonOpts& opts, const std::optional<std::string>& checkpoint,
             const std::string& policy_kind, int episodes,
             const std::string& seeds_text, bool dump_traces, int fixed_b,
             int fixed_c, double fixed_p) {
  RunConfig cfg = load_config(opts);
  cfg.env.eval_mode = true;
  const std::vector<std::uint64_t> seeds =
      seeds_text.empty() ? cfg.seeds : parse_u64_list(seeds_text);
  const fs::path outdir = cfg.output_dir;
  fs::create_directories(outdir);

  OffloadEnv env(cfg.env);
  std::unique_ptr<Policy> policy =
      make_policy(policy_kind, checkpoint, env, fixed_b, fixed_c, fixed_p);

  int violations = 0;
  try {
    const EvalReport report = evaluate(*policy, cfg.env, episodes, seeds);
    std::ostringstream ss;
    report.write_csv(ss);
    write_file(outdir / "report.csv", ss.str());
    write_file(outdir / "summary.json", report.summary_json(cfg.hash()));
    if (dump_traces) {
      for (const std::uint64_t seed : seeds) {
        OffloadEnv tenv(cfg.env);
        tenv.seed(RngStream(seed).derive("env").seed());
        RngStream prng = RngStream(seed).derive("policy");
        for (int ep = 0; ep < episodes; ++ep) {
          const EpisodeRun run = run_episode(tenv, *policy, prng);
          std::ostringstream ts;
          run.trace.write_csv(ts);
          write_file(outdir / ("trace_seed" + std::to_string(seed) + "_ep" +
                               std::to_string(ep) + ".csv"),
                     ts.str());
        }
      }
    }
    std::cout << "policy " << report.policy << ": latency "
              << report.latency_mean << " s, energy " << report.energy_mean
              << " J over " << report.rows.size() << " episodes ("
              << report.truncated_episodes << " truncated)\n";
  } catch (const DomainError& e) {
    // An action violated C1-C3: abort with a diagnostic; the exit code
    // carries the violation count.
    ++violations;
    std::cerr << "error[E_CONSTRAINT]: " << e.what() << "\n";
  }
  return std::min(violations, 63);
}

int run_sweep(const CommonOpts& opts, const std::string& axis,
              const std::string& values_text, std::string checkpoint_dir,
              bool do_train, int episodes, const std::string& seeds_text) {
  RunConfig cfg = load_config(opts);
  const fs::path outdir = cfg.output_dir;
  fs::create_directories(outdir);
  const std::vector<std::uint64_t> seeds =
      seeds_text.empty() ? cfg.seeds : parse_u64_list(seeds_text);
  if (checkpoint_dir.empty()) checkpoint_dir = (outdir / "checkpoints").string();
  fs::create_directories(checkpoint_dir);

  std::vector<double> xs;
  if (axis == "beta") {
    xs = values_text.empty()
             ? std::vector<double>{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}
             : parse_double_list(values_text);
  } else {
    if (values_text.empty()) {
      for (int n = 3; n <= 10; ++n) xs.push_back(n);
    } else {
      for (double v : parse_double_list(values_text)) xs.push_back(v);
    }
  }

  auto cell_config = [&](double x) {
    EnvConfig ec = cfg.env;
    if (axis == "beta") {
      ec.beta = x;
    } else {
      ec.ue_count = static_cast<std::size_t>(x);
      ec.profiles.assign(ec.ue_count, cfg.env.profiles.front());
    }
    return ec;
  };
  auto cell_name = [&](double x) {
    std::ostringstream ss;
    if (axis == "beta") {
      ss << "beta_" << csv::format(x);
    } else {
      ss << "ue_" << static_cast<int>(x);
    }
    return ss.str();
  };

  std::vector<std::optional<Checkpoint>> agents;
  std::vector<std::string> absent;
  for (const double x : xs) {
    const fs::path ckpt = fs::path(checkpoint_dir) / (cell_name(x) + ".json");
    if (do_train) {
      OffloadEnv env(cell_config(x));
      Trainer trainer(env, cfg.train, seeds.front());
      const TrainResult result = trainer.run();
      if (result.diverged) {
        std::cerr << "error[E_DIVERGENCE]: cell " << cell_name(x) << " diverged\n";
      } else {
        save_checkpoint(snapshot(trainer, env, result.steps_done), ckpt);
      }
    }
    if (fs::exists(ckpt)) {
      agents.push_back(load_checkpoint(ckpt));
    } else {
      agents.push_back(std::nullopt);
      absent.push_back(cell_name(x));
    }
  }

  SweepResult result;
  if (axis == "beta") {
    result = sweep_beta(cfg.env, xs, agents, episodes, seeds);
  } else {
    std::vector<int> counts;
    for (double x : xs) counts.push_back(static_cast<int>(x));
    result = sweep_ue_count(cfg.env, counts, agents, episodes, seeds);
  }

  std::ostringstream table;
  result.write_csv(table);
  const std::string stem = axis == "beta" ? "sweep_beta" : "sweep_ue";
  write_file(outdir / (stem + ".csv"), table.str());
  nlohmann::json summary;
  summary["axis"] = result.axis;
  summary["config_hash"] = cfg.hash();
  summary["seeds"] = seeds;
  summary["absent_cells"] = absent;
  summary["spearman_latency"] = result.spearman_latency;
  summary["spearman_energy"] = result.spearman_energy;
  summary["spearman_overhead"] = result.spearman_overhead;
  write_file(outdir / (stem + "_summary.json"), summary.dump(2) + "\n");
  std::cout << table.str();
  for (const std::string& name : absent) {
    std::cout << "absent checkpoint: " << name << "\n";
  }
  return kExitOk;
}

int run_quantize_demo(const std::string& input, const std::string& bits_text,
                      std::optional<double> lo, std::optional<double> hi,
                      int channels, int channels_reduced,
                      const std::optional<std::string>& out_path) {
  std::ifstream in(input);
  if (!in) throw ParseError("cannot open " + input);
  std::vector<double> xs;
  double v;
  while (in >> v) xs.push_back(v);
  if (xs.empty()) throw ConfigError("quantize-demo: input holds no numbers");

  double mn = xs[0], mx = xs[0];
  for (double x : xs) {
    mn = std::min(mn, x);
    mx = std::max(mx, x);
  }
  if (lo) mn = *lo;
  if (hi) mx = *hi;

  std::vector<double> widths = parse_double_list(bits_text);
  std::ostringstream table;
  table << "bit_width,max_abs_error,mean_abs_error,error_bound,compression_rate\n";
  for (const double w : widths) {
    QuantizerConfig q{static_cast<int>(w), mn, mx};
    const auto y = quantize(xs, q);
    const auto back = dequantize(y, q);
    double max_err = 0.0, sum_err = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = std::abs(back[i] - std::clamp(xs[i], mn, mx));
      max_err = std::max(max_err, e);
      sum_err += e;
    }
    table << q.bit_width << ',' << csv::format(max_err) << ','
          << csv::format(sum_err / static_cast<double>(xs.size())) << ','
          << csv::format(round_trip_bound(q)) << ','
          << csv::format(compression_rate(channels, channels_reduced, q.bit_width))
          << '\n';
  }
  if (out_path) {
    write_file(*out_path, table.str());
  }
  std::cout << table.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent collaborative DNN inference: simulator, trainer, evaluation"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, vb_opts, vu_opts, vc_opts;

  auto* train_cmd = app.add_subcommand("train", "train the agent per configured seed");
  add_common(train_cmd, train_opts);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy on the fixed eval setup");
  add_common(eval_cmd, eval_opts);
  std::optional<std::string> eval_ckpt;
  std::string eval_policy = "local";
  int eval_episodes = 0;
  std::string eval_seeds;
  bool dump_traces = false;
  int fixed_b = 0, fixed_c = 0;
  double fixed_p = 0.1;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "trained agent checkpoint (greedy policy)");
  eval_cmd->add_option("--policy", eval_policy, "baseline policy: local|random|fixed");
  eval_cmd->add_option("--episodes", eval_episodes, "episodes per seed (default: experiment.eval_episodes)");
  eval_cmd->add_option("--seeds", eval_seeds, "comma-separated seeds (default: experiment.seeds)");
  eval_cmd->add_flag("--dump-traces", dump_traces, "write per-episode frame traces");
  eval_cmd->add_option("--fixed-b", fixed_b, "fixed policy: partition point");
  eval_cmd->add_option("--fixed-c", fixed_c, "fixed policy: channel");
  eval_cmd->add_option("--fixed-p", fixed_p, "fixed policy: transmit power (W)");

  auto* sweep_beta_cmd = app.add_subcommand("sweep-beta", "evaluate agents across beta values");
  add_common(sweep_beta_cmd, vb_opts);
  std::string beta_values, beta_ckpt_dir, beta_seeds;
  bool beta_train = false;
  int beta_episodes = 1;
  sweep_beta_cmd->add_option("--betas", beta_values, "comma-separated beta values");
  sweep_beta_cmd->add_option("--checkpoint-dir", beta_ckpt_dir, "directory of beta_<v>.json checkpoints");
  sweep_beta_cmd->add_flag("--train", beta_train, "train any missing cell first");
  sweep_beta_cmd->add_option("--episodes", beta_episodes, "episodes per seed");
  sweep_beta_cmd->add_option("--seeds", beta_seeds, "comma-separated seeds");

  auto* sweep_ue_cmd = app.add_subcommand("sweep-ue", "evaluate agents across UE counts");
  add_common(sweep_ue_cmd, vu_opts);
  std::string ue_values, ue_ckpt_dir, ue_seeds;
  bool ue_train = false;
  int ue_episodes = 1;
  sweep_ue_cmd->add_option("--ue-counts", ue_values, "comma-separated UE counts");
  sweep_ue_cmd->add_option("--checkpoint-dir", ue_ckpt_dir, "directory of ue_<n>.json checkpoints");
  sweep_ue_cmd->add_flag("--train", ue_train, "train any missing cell first");
  sweep_ue_cmd->add_option("--episodes", ue_episodes, "episodes per seed");
  sweep_ue_cmd->add_option("--seeds", ue_seeds, "comma-separated seeds");

  auto* quant_cmd = app.add_subcommand("quantize-demo", "round-trip error and compression-rate table");
  std::string quant_input, quant_bits = "1,2,4,8,16,32";
  std::optional<double> quant_min, quant_max;
  int quant_ch = 64, quant_chr = 16;
  std::optional<std::string> quant_out;
  quant_cmd->add_option("--input", quant_input, "text file of numbers")->required();
  quant_cmd->add_option("--bits", quant_bits, "comma-separated bit widths");
  quant_cmd->add_option("--min", quant_min, "calibration minimum (default: data min)");
  quant_cmd->add_option("--max", quant_max, "calibration maximum (default: data max)");
  quant_cmd->add_option("--channels", quant_ch, "feature channels before reduction");
  quant_cmd->add_option("--channels-reduced", quant_chr, "feature channels after reduction");
  quant_cmd->add_option("--out", quant_out, "also write the table to this file");

  auto* validate_cmd = app.add_subcommand("validate-config", "check a config and print the resolved document");
  add_common(validate_cmd, vc_opts);

  auto* kernels_cmd = app.add_subcommand("kernel-info", "report the selected compute backend");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_opts);
    if (eval_cmd->parsed()) {
      RunConfig peek = load_config(eval_opts);
      const int episodes = eval_episodes > 0 ? eval_episodes : peek.eval_episodes;
      return run_eval(eval_opts, eval_ckpt, eval_policy, episodes, eval_seeds,
                      dump_traces, fixed_b, fixed_c, fixed_p);
    }
    if (sweep_beta_cmd->parsed()) {
      return run_sweep(vb_opts, "beta", beta_values, beta_ckpt_dir, beta_train,
                       beta_episodes, beta_seeds);
    }
    if (sweep_ue_cmd->parsed()) {
      return run_sweep(vu_opts, "ue", ue_values, ue_ckpt_dir, ue_train,
                       ue_episodes, ue_seeds);
    }
    if (quant_cmd->parsed()) {
      return run_quantize_demo(quant_input, quant_bits, quant_min, quant_max,
                               quant_ch, quant_chr, quant_out);
    }
    if (validate_cmd->parsed()) {
      const RunConfig cfg = load_config(vc_opts);
      std::cout << cfg.frozen_json();
      std::cerr << "config ok (hash " << cfg.hash() << ")\n";
      return kExitOk;
    }
    if (kernels_cmd->parsed()) {
      std::cout << "kernel backend: "
                << kernels::backend_name(kernels::active_backend()) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error[E_CONFIG]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error[E_PARSE]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error[E_DOMAIN]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const ContractError& e) {
    std::cerr << "error[E_CONTRACT]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error[E_RUNTIME]: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
