#include "coinfer/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coinfer/error.hpp"

namespace coinfer {

using nlohmann::json;

namespace {

// Applies "dotted.path=value" onto the document; the value is parsed as JSON
// when possible and treated as a string otherwise.
void apply_override(json& doc, const std::string& expr) {
  const auto eq = expr.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like section.key=value: " + expr);
  }
  const std::string path = expr.substr(0, eq);
  const std::string raw = expr.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override has an empty path segment: " + expr);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

template <typename T>
void read_field(const json& section, const char* key, T& out,
                std::vector<std::string>& errors, const char* where) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back(std::string(where) + "." + key + ": wrong type");
  }
}

// Scalar or per-channel array.
void read_per_channel(const json& section, const char* key, int channels,
                      std::vector<double>& out,
                      std::vector<std::string>& errors) {
  if (!section.contains(key)) {
    out.assign(static_cast<std::size_t>(channels), out.empty() ? 0.0 : out[0]);
    return;
  }
  const json& v = section.at(key);
  if (v.is_number()) {
    out.assign(static_cast<std::size_t>(channels), v.get<double>());
  } else if (v.is_array()) {
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) {
        errors.push_back(std::string("channel.") + key + ": array entries must be numbers");
        return;
      }
      out.push_back(x.get<double>());
    }
  } else {
    errors.push_back(std::string("channel.") + key + ": expected number or array");
  }
}

DeviceProfile profile_from_node(const json& node,
                                const std::filesystem::path& base_dir) {
  if (node.is_string()) {
    std::filesystem::path p = node.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return load_profile(p);
  }
  if (node.is_object()) return parse_profile(node.dump());
  throw ParseError("environment.profile entries must be paths or inline objects");
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text,
                               const std::filesystem::path& base_dir,
                               const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: document must be an object");
  for (const std::string& o : overrides) apply_override(doc, o);

  RunConfig cfg;
  std::vector<std::string> errors;
  const json empty = json::object();
  const json& env = doc.contains("environment") ? doc.at("environment") : empty;
  const json& chan = doc.contains("channel") ? doc.at("channel") : empty;
  const json& agent = doc.contains("agent") ? doc.at("agent") : empty;
  const json& exp = doc.contains("experiment") ? doc.at("experiment") : empty;

  read_field(env, "ue_count", cfg.env.ue_count, errors, "environment");
  read_field(env, "frame_duration_s", cfg.env.frame_duration_s, errors, "environment");
  read_field(env, "beta", cfg.env.beta, errors, "environment");
  read_field(env, "task_mean", cfg.env.task_mean, errors, "environment");
  read_field(env, "distance_min_m", cfg.env.distance_min_m, errors, "environment");
  read_field(env, "distance_max_m", cfg.env.distance_max_m, errors, "environment");
  read_field(env, "discount", cfg.env.discount, errors, "environment");
  read_field(env, "max_frames", cfg.env.max_frames, errors, "environment");
  read_field(env, "eval_mode", cfg.env.eval_mode, errors, "environment");
  read_field(env, "eval_distance_m", cfg.env.eval_distance_m, errors, "environment");
  read_field(env, "eval_tasks", cfg.env.eval_tasks, errors, "environment");

  // Channel section (defaults: 2 channels at 1 MHz, 1e-9 W noise, l=3,
  // p_max = 0.5 W).
  ChannelConfig& ch = cfg.env.channel;
  read_field(chan, "channel_count", ch.channel_count, errors, "channel");
  ch.bandwidth_hz = {1e6};
  ch.noise_w = {1e-9};
  read_per_channel(chan, "bandwidth_hz", ch.channel_count, ch.bandwidth_hz, errors);
  read_per_channel(chan, "noise_w", ch.channel_count, ch.noise_w, errors);
  read_field(chan, "path_loss_exponent", ch.path_loss_exponent, errors, "channel");
  read_field(chan, "max_power_w", ch.max_power_w, errors, "channel");
  if (chan.contains("interference_scope")) {
    const std::string s = chan.at("interference_scope").is_string()
                              ? chan.at("interference_scope").get<std::string>()
                              : std::string();
    if (s == "same_channel") {
      ch.interference = InterferenceScope::same_channel;
    } else if (s == "all_offloaders") {
      ch.interference = InterferenceScope::all_offloaders;
    } else {
      errors.push_back("channel.interference_scope: expected \"same_channel\" or \"all_offloaders\"");
    }
  }

  // Profiles: a single path/object (replicated across UEs) or one per UE.
  if (env.contains("profile")) {
    const json& prof = env.at("profile");
    try {
      if (prof.is_array()) {
        for (const auto& node : prof) {
          cfg.env.profiles.push_back(profile_from_node(node, base_dir));
        }
      } else {
        cfg.env.profiles.push_back(profile_from_node(prof, base_dir));
      }
    } catch (const std::exception& e) {
      errors.push_back(std::string("environment.profile: ") + e.what());
    }
  } else {
    errors.push_back("environment.profile: required (path, object, or array)");
  }
  if (!cfg.env.profiles.empty()) {
    if (cfg.env.profiles.size() == 1 && cfg.env.ue_count > 1) {
      cfg.env.profiles.assign(cfg.env.ue_count, cfg.env.profiles.front());
    } else if (cfg.env.profiles.size() != cfg.env.ue_count) {
      errors.push_back("environment.profile: need 1 entry or one per UE (" +
                       std::to_string(cfg.env.ue_count) + ")");
    }
  }

  read_field(agent, "total_steps", cfg.train.total_steps, errors, "agent");
  read_field(agent, "buffer_size", cfg.train.buffer_size, errors, "agent");
  read_field(agent, "batch_size", cfg.train.batch_size, errors, "agent");
  read_field(agent, "sample_reuse", cfg.train.sample_reuse, errors, "agent");
  read_field(agent, "learning_rate", cfg.train.learning_rate, errors, "agent");
  read_field(agent, "gae_lambda", cfg.train.gae_lambda, errors, "agent");
  read_field(agent, "clip_epsilon", cfg.train.clip_epsilon, errors, "agent");
  read_field(agent, "entropy_weight", cfg.train.entropy_weight, errors, "agent");
  read_field(agent, "normalize_advantages", cfg.train.normalize_advantages, errors, "agent");
  read_field(agent, "grad_clip_norm", cfg.train.grad_clip_norm, errors, "agent");
  read_field(agent, "trunk_widths", cfg.train.trunk_widths, errors, "agent");
  read_field(agent, "branch_hidden", cfg.train.branch_hidden, errors, "agent");
  read_field(agent, "critic_widths", cfg.train.critic_widths, errors, "agent");
  read_field(agent, "checkpoint_every_rounds", cfg.train.checkpoint_every_rounds, errors, "agent");
  // Single discount knob: the environment's discount drives the trainer.
  cfg.train.gamma = cfg.env.discount;

  read_field(exp, "mode", cfg.mode, errors, "experiment");
  read_field(exp, "seeds", cfg.seeds, errors, "experiment");
  read_field(exp, "output_dir", cfg.output_dir, errors, "experiment");
  read_field(exp, "eval_episodes", cfg.eval_episodes, errors, "experiment");

  if (cfg.seeds.empty()) errors.push_back("experiment.seeds: at least one seed required");
  if (cfg.eval_episodes < 1) errors.push_back("experiment.eval_episodes: must be >= 1");

  // Structural validation of the assembled sections; every violation is
  // collected so the rejection lists them all.
  if (errors.empty()) {
    cfg.env.append_errors(errors);
    cfg.train.append_errors(errors);
  }
  if (!errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(errors.size()) + " error(s)):";
    for (const std::string& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw ParseError("config: cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), file.parent_path(), overrides);
}

std::string RunConfig::frozen_json() const {
  json doc;
  json env;
  env["ue_count"] = this->env.ue_count;
  env["frame_duration_s"] = this->env.frame_duration_s;
  env["beta"] = this->env.beta;
  env["task_mean"] = this->env.task_mean;
  env["distance_min_m"] = this->env.distance_min_m;
  env["distance_max_m"] = this->env.distance_max_m;
  env["discount"] = this->env.discount;
  env["max_frames"] = this->env.max_frames;
  env["eval_mode"] = this->env.eval_mode;
  env["eval_distance_m"] = this->env.eval_distance_m;
  env["eval_tasks"] = this->env.eval_tasks;
  json profiles = json::array();
  for (const DeviceProfile& p : this->env.profiles) {
    profiles.push_back(json::parse(serialize_profile(p)));
  }
  env["profile"] = std::move(profiles);
  doc["environment"] = std::move(env);

  const ChannelConfig& ch = this->env.channel;
  json chan;
  chan["channel_count"] = ch.channel_count;
  chan["bandwidth_hz"] = ch.bandwidth_hz;
  chan["noise_w"] = ch.noise_w;
  chan["path_loss_exponent"] = ch.path_loss_exponent;
  chan["max_power_w"] = ch.max_power_w;
  chan["interference_scope"] = ch.interference == InterferenceScope::same_channel
                                   ? "same_channel"
                                   : "all_offloaders";
  doc["channel"] = std::move(chan);

  json agent;
  agent["total_steps"] = train.total_steps;
  agent["buffer_size"] = train.buffer_size;
  agent["batch_size"] = train.batch_size;
  agent["sample_reuse"] = train.sample_reuse;
  agent["learning_rate"] = train.learning_rate;
  agent["gae_lambda"] = train.gae_lambda;
  agent["clip_epsilon"] = train.clip_epsilon;
  agent["entropy_weight"] = train.entropy_weight;
  agent["normalize_advantages"] = train.normalize_advantages;
  agent["grad_clip_norm"] = train.grad_clip_norm;
  agent["trunk_widths"] = train.trunk_widths;
  agent["branch_hidden"] = train.branch_hidden;
  agent["critic_widths"] = train.critic_widths;
  agent["checkpoint_every_rounds"] = train.checkpoint_every_rounds;
  doc["agent"] = std::move(agent);

  json exp;
  exp["mode"] = mode;
  exp["seeds"] = seeds;
  exp["output_dir"] = output_dir;
  exp["eval_episodes"] = eval_episodes;
  doc["experiment"] = std::move(exp);
  return doc.dump(2) + "\n";
}

std::string RunConfig::hash() const {
  // Hash the semantic sections only: where outputs land (and which seeds a
  // batch loops over) does not change what any one run computes.
  json doc = json::parse(frozen_json());
  doc.erase("experiment");
  const std::uint64_t h = fnv1a64(doc.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace coinfer
