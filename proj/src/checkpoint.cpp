#include "coinfer/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coinfer/error.hpp"

namespace coinfer {

using nlohmann::json;

namespace {

json net_to_json(const DenseNet& net) {
  json j;
  j["input_dim"] = net.input_dim();
  j["widths"] = net.widths();
  json acts = json::array();
  for (Activation a : net.activations()) {
    acts.push_back(a == Activation::relu ? "relu" : "identity");
  }
  j["activations"] = acts;
  j["params"] = std::vector<double>(net.params().begin(), net.params().end());
  return j;
}

DenseNet net_from_json(const json& j) {
  const auto input_dim = j.at("input_dim").get<std::size_t>();
  const auto widths = j.at("widths").get<std::vector<std::size_t>>();
  std::vector<Activation> acts;
  for (const auto& a : j.at("activations")) {
    const std::string s = a.get<std::string>();
    if (s == "relu") {
      acts.push_back(Activation::relu);
    } else if (s == "identity") {
      acts.push_back(Activation::identity);
    } else {
      throw ParseError("checkpoint: unknown activation '" + s + "'");
    }
  }
  DenseNet net(input_dim, widths, acts);
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.parameter_count()) {
    throw ParseError("checkpoint: parameter count mismatch");
  }
  std::copy(params.begin(), params.end(), net.params().begin());
  return net;
}

json adam_to_json(const AdamOptimizer& opt) {
  json j;
  j["alpha"] = opt.learning_rate();
  j["t"] = opt.step_count();
  j["m"] = std::vector<double>(opt.m().begin(), opt.m().end());
  j["v"] = std::vector<double>(opt.v().begin(), opt.v().end());
  return j;
}

AdamOptimizer adam_from_json(const json& j, std::size_t n) {
  AdamOptimizer opt(n, j.at("alpha").get<double>());
  const auto m = j.at("m").get<std::vector<double>>();
  const auto v = j.at("v").get<std::vector<double>>();
  if (m.size() != n || v.size() != n) {
    throw ParseError("checkpoint: optimizer state size mismatch");
  }
  opt.restore(m, v, j.at("t").get<std::uint64_t>());
  return opt;
}

json rng_to_json(const std::array<std::uint64_t, 4>& s) {
  return json{s[0], s[1], s[2], s[3]};
}

std::array<std::uint64_t, 4> rng_from_json(const json& j) {
  std::array<std::uint64_t, 4> s{};
  for (std::size_t i = 0; i < 4; ++i) s[i] = j.at(i).get<std::uint64_t>();
  return s;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  json j;
  j["format_version"] = Checkpoint::kFormatVersion;
  j["root_seed"] = c.root_seed;
  j["steps_done"] = c.steps_done;
  j["obs_dim"] = c.obs_dim;
  j["partition_choices"] = c.partition_choices;
  j["channel_choices"] = c.channel_choices;
  j["rng"] = {{"sampling", rng_to_json(c.sampling_rng_state)},
              {"update", rng_to_json(c.update_rng_state)},
              {"env", rng_to_json(c.env_rng_state)}};
  json actors = json::array();
  for (const auto& actor : c.agent.actors) {
    json a;
    a["trunk"] = net_to_json(actor.trunk());
    a["partition"] = net_to_json(actor.partition_branch());
    a["channel"] = net_to_json(actor.channel_branch());
    a["power"] = net_to_json(actor.power_branch());
    actors.push_back(std::move(a));
  }
  j["actors"] = std::move(actors);
  json opts = json::array();
  for (const auto& opt : c.agent.actor_opts) opts.push_back(adam_to_json(opt));
  j["actor_opts"] = std::move(opts);
  j["critic"] = net_to_json(c.agent.critic);
  j["critic_opt"] = adam_to_json(c.agent.critic_opt);
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
      throw ParseError("checkpoint: unsupported format version " +
                       std::to_string(version));
    }
    Checkpoint c;
    c.root_seed = j.at("root_seed").get<std::uint64_t>();
    c.steps_done = j.at("steps_done").get<std::uint64_t>();
    c.obs_dim = j.at("obs_dim").get<std::size_t>();
    c.partition_choices = j.at("partition_choices").get<std::vector<int>>();
    c.channel_choices = j.at("channel_choices").get<int>();
    c.sampling_rng_state = rng_from_json(j.at("rng").at("sampling"));
    c.update_rng_state = rng_from_json(j.at("rng").at("update"));
    c.env_rng_state = rng_from_json(j.at("rng").at("env"));
    for (const auto& a : j.at("actors")) {
      c.agent.actors.push_back(HybridActorNet::from_parts(
          net_from_json(a.at("trunk")), net_from_json(a.at("partition")),
          net_from_json(a.at("channel")), net_from_json(a.at("power"))));
    }
    const auto& opts = j.at("actor_opts");
    if (opts.size() != 4 * c.agent.actors.size()) {
      throw ParseError("checkpoint: expected four optimizer states per actor");
    }
    for (std::size_t n = 0; n < c.agent.actors.size(); ++n) {
      const HybridActorNet& actor = c.agent.actors[n];
      const std::size_t sizes[4] = {
          actor.trunk().parameter_count(),
          actor.partition_branch().parameter_count(),
          actor.channel_branch().parameter_count(),
          actor.power_branch().parameter_count()};
      for (std::size_t k = 0; k < 4; ++k) {
        c.agent.actor_opts.push_back(adam_from_json(opts.at(4 * n + k), sizes[k]));
      }
    }
    c.agent.critic = net_from_json(j.at("critic"));
    c.agent.critic_opt =
        adam_from_json(j.at("critic_opt"), c.agent.critic.parameter_count());
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: malformed document: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ParseError("checkpoint: cannot write " + file.string());
  out << serialize_checkpoint(c);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("checkpoint: cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

Checkpoint snapshot(const Trainer& trainer, const Env& env,
                    std::uint64_t steps_done) {
  Checkpoint c;
  c.agent = trainer.agent();
  c.sampling_rng_state = trainer.sampling_rng().state();
  c.update_rng_state = trainer.update_rng().state();
  c.env_rng_state = env.rng_state();
  c.root_seed = trainer.root_seed();
  c.steps_done = steps_done;
  c.obs_dim = env.observation_dim();
  c.partition_choices = env.action_space().partition_choices;
  c.channel_choices = env.action_space().channel_choices;
  return c;
}

void check_compatible(const Checkpoint& c, const Env& env) {
  const ActionSpace& space = env.action_space();
  if (c.obs_dim != env.observation_dim()) {
    throw ConfigError("checkpoint: observation size " +
                      std::to_string(c.obs_dim) + " does not match the env (" +
                      std::to_string(env.observation_dim()) + ")");
  }
  if (c.channel_choices != space.channel_choices) {
    throw ConfigError("checkpoint: channel head has " +
                      std::to_string(c.channel_choices) +
                      " outputs, env expects " +
                      std::to_string(space.channel_choices));
  }
  if (c.partition_choices != space.partition_choices) {
    throw ConfigError("checkpoint: partition head sizes do not match the env's profiles");
  }
  if (c.agent.actors.size() != env.ue_count()) {
    throw ConfigError("checkpoint: actor count " +
                      std::to_string(c.agent.actors.size()) +
                      " does not match UE count " +
                      std::to_string(env.ue_count()));
  }
}

}  // namespace coinfer
