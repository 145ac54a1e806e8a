#include "coinfer/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "coinfer/error.hpp"
#include "coinfer/kernels.hpp"

namespace coinfer {

void TrainConfig::append_errors(std::vector<std::string>& errors) const {
  if (total_steps < 1) errors.push_back("agent.total_steps: must be >= 1");
  if (buffer_size < 1) errors.push_back("agent.buffer_size: must be >= 1");
  if (batch_size < 1 || batch_size > buffer_size) {
    errors.push_back("agent.batch_size: must be in [1, buffer_size]");
  }
  if (sample_reuse < 1) errors.push_back("agent.sample_reuse: must be >= 1");
  if (!(learning_rate > 0.0)) errors.push_back("agent.learning_rate: must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) errors.push_back("agent gamma (environment.discount): must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) errors.push_back("agent.gae_lambda: must be in [0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) errors.push_back("agent.clip_epsilon: must be in (0, 1)");
  if (!(entropy_weight >= 0.0)) errors.push_back("agent.entropy_weight: must be >= 0");
  if (trunk_widths.empty() || critic_widths.empty()) {
    errors.push_back("agent: network widths must be non-empty");
  }
  for (std::size_t w : trunk_widths) {
    if (w < 1) {
      errors.push_back("agent.trunk_widths: entries must be >= 1");
      break;
    }
  }
  for (std::size_t w : critic_widths) {
    if (w < 1) {
      errors.push_back("agent.critic_widths: entries must be >= 1");
      break;
    }
  }
  if (branch_hidden < 1) errors.push_back("agent.branch_hidden: must be >= 1");
}

void TrainConfig::validate() const {
  std::vector<std::string> errors;
  append_errors(errors);
  if (!errors.empty()) {
    std::string msg = errors.front();
    for (std::size_t i = 1; i < errors.size(); ++i) msg += "; " + errors[i];
    throw ConfigError(msg);
  }
}

std::vector<double> discounted_returns_segment(std::span<const double> rewards,
                                               double gamma) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

std::vector<double> gae_segment(std::span<const double> rewards,
                                std::span<const double> values, double gamma,
                                double lambda) {
  if (values.size() != rewards.size() + 1) {
    throw ContractError("gae: values must hold one entry per step plus V(s_{T+1})");
  }
  std::vector<double> adv(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    const double delta = rewards[i] + gamma * values[i + 1] - values[i];
    acc = delta + gamma * lambda * acc;
    adv[i] = acc;
  }
  return adv;
}

namespace {

template <typename SegmentFn>
void for_each_segment(std::size_t n, std::span<const std::uint8_t> terminals,
                      SegmentFn&& fn) {
  std::size_t begin = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (terminals[i]) {
      fn(begin, i + 1, true);
      begin = i + 1;
    }
  }
  if (begin < n) fn(begin, n, false);
}

}  // namespace

std::vector<double> discounted_returns(std::span<const double> rewards,
                                       double gamma,
                                       std::span<const std::uint8_t> terminals) {
  if (rewards.size() != terminals.size()) {
    throw ContractError("returns: rewards/terminals size mismatch");
  }
  std::vector<double> out(rewards.size());
  for_each_segment(rewards.size(), terminals,
                   [&](std::size_t b, std::size_t e, bool) {
                     auto seg = discounted_returns_segment(
                         rewards.subspan(b, e - b), gamma);
                     std::copy(seg.begin(), seg.end(), out.begin() + static_cast<std::ptrdiff_t>(b));
                   });
  return out;
}

std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values,
                                   std::span<const std::uint8_t> terminals,
                                   double final_bootstrap, double gamma,
                                   double lambda) {
  if (rewards.size() != values.size() || rewards.size() != terminals.size()) {
    throw ContractError("gae: rewards/values/terminals size mismatch");
  }
  std::vector<double> out(rewards.size());
  for_each_segment(
      rewards.size(), terminals,
      [&](std::size_t b, std::size_t e, bool terminated) {
        std::vector<double> v(values.begin() + static_cast<std::ptrdiff_t>(b),
                              values.begin() + static_cast<std::ptrdiff_t>(e));
        v.push_back(terminated ? 0.0 : final_bootstrap);
        auto seg = gae_segment(rewards.subspan(b, e - b), v, gamma, lambda);
        std::copy(seg.begin(), seg.end(), out.begin() + static_cast<std::ptrdiff_t>(b));
      });
  return out;
}

double critic_loss(std::span<const double> predicted,
                   std::span<const double> target) {
  if (predicted.size() != target.size() || predicted.empty()) {
    throw ContractError("critic_loss: batch size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predicted.size());
}

Surrogate clipped_surrogate(double log_prob_new, double log_prob_old,
                            double advantage, double epsilon) {
  Surrogate s;
  const double ratio = std::exp(log_prob_new - log_prob_old);
  if (!std::isfinite(ratio)) {
    s.skipped = true;
    return s;
  }
  const double unclipped = ratio * advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  if (unclipped <= clipped) {
    s.value = unclipped;
    s.dlogp = ratio * advantage;  // d(r A)/d log p = r A
  } else {
    s.value = clipped;
    // The active branch is constant in the clipped region; gradient only
    // flows when the clip is not binding.
    const bool binding = ratio < 1.0 - epsilon || ratio > 1.0 + epsilon;
    s.dlogp = binding ? 0.0 : ratio * advantage;
  }
  return s;
}

double actor_loss(std::span<const double> surrogates,
                  std::span<const double> entropies, double zeta) {
  if (surrogates.size() != entropies.size()) {
    throw ContractError("actor_loss: per-actor arrays must align");
  }
  double acc = 0.0;
  for (std::size_t n = 0; n < surrogates.size(); ++n) {
    acc += surrogates[n] + zeta * entropies[n];
  }
  return acc;
}

std::pair<double, double> normalize_advantages(std::span<double> adv) {
  if (adv.size() < 2) return {0.0, 0.0};
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double sd = std::sqrt(var);
  if (sd > 0.0) {
    for (double& a : adv) a = (a - mean) / sd;
  } else {
    for (double& a : adv) a = 0.0;
  }
  return {mean, sd};
}

TrajectoryBuffer::TrajectoryBuffer(std::size_t capacity, std::size_t ue_count)
    : capacity_(capacity), ue_count_(ue_count) {
  obs_.resize(capacity);
  partitions_.resize(capacity);
  channels_.resize(capacity);
  power_raw_.resize(capacity);
  log_probs_.resize(capacity);
  rewards_.resize(capacity);
  terminals_.resize(capacity);
  values_.resize(capacity);
}

void TrajectoryBuffer::push(std::vector<double> obs, std::vector<int> partitions,
                            std::vector<int> channels,
                            std::vector<double> power_raw,
                            std::vector<double> log_probs, double reward,
                            bool terminal, double value) {
  if (full()) throw ContractError("buffer: capacity exceeded");
  obs_[size_] = std::move(obs);
  partitions_[size_] = std::move(partitions);
  channels_[size_] = std::move(channels);
  power_raw_[size_] = std::move(power_raw);
  log_probs_[size_] = std::move(log_probs);
  rewards_[size_] = reward;
  terminals_[size_] = terminal ? 1 : 0;
  values_[size_] = value;
  ++size_;
}

void TrajectoryBuffer::clear() {
  size_ = 0;
  returns_.clear();
  advantages_.clear();
}

void TrajectoryBuffer::finalize(double gamma, double lambda,
                                double final_bootstrap, bool normalize) {
  if (!full()) throw ContractError("buffer: finalize before the buffer is full");
  returns_ = discounted_returns(rewards_, gamma, terminals_);
  advantages_ = gae_advantages(rewards_, values_, terminals_, final_bootstrap,
                               gamma, lambda);
  if (normalize) normalize_advantages(advantages_);
}

Agent Agent::make(const Env& env, const TrainConfig& cfg, RngStream init_rng) {
  Agent a;
  const ActionSpace& space = env.action_space();
  const std::size_t n_ue = env.ue_count();
  a.actors.reserve(n_ue);
  for (std::size_t n = 0; n < n_ue; ++n) {
    RngStream r = init_rng.derive("actor" + std::to_string(n));
    a.actors.emplace_back(env.observation_dim(), space.partition_choices[n],
                          space.channel_choices, cfg.trunk_widths,
                          cfg.branch_hidden, r);
    HybridActorNet& actor = a.actors.back();
    a.actor_opts.emplace_back(actor.trunk().parameter_count(), cfg.learning_rate);
    a.actor_opts.emplace_back(actor.partition_branch().parameter_count(), cfg.learning_rate);
    a.actor_opts.emplace_back(actor.channel_branch().parameter_count(), cfg.learning_rate);
    a.actor_opts.emplace_back(actor.power_branch().parameter_count(), cfg.learning_rate);
  }
  RngStream rc = init_rng.derive("critic");
  a.critic = make_critic(env.observation_dim(), cfg.critic_widths, rc);
  a.critic_opt = AdamOptimizer(a.critic.parameter_count(), cfg.learning_rate);
  return a;
}

SampledAction sample_action(std::vector<HybridActorNet>& actors,
                            std::span<const double> obs,
                            const ActionSpace& space, RngStream& rng) {
  SampledAction s;
  const std::size_t n_ue = actors.size();
  s.action.ue.resize(n_ue);
  s.partitions.resize(n_ue);
  s.channels.resize(n_ue);
  s.power_raw.resize(n_ue);
  s.log_probs.resize(n_ue);
  for (std::size_t n = 0; n < n_ue; ++n) {
    HybridActorNet::Eval eval = actors[n].forward(obs);
    const std::size_t pb = eval.partition.sample(rng);
    const std::size_t cb = eval.channel.sample(rng);
    const double raw = eval.power.sample(rng);
    const double exec = std::clamp(raw, space.power_min_w, space.power_max_w);
    s.action.ue[n] = {static_cast<int>(pb), static_cast<int>(cb), exec};
    s.partitions[n] = static_cast<int>(pb);
    s.channels[n] = static_cast<int>(cb);
    s.power_raw[n] = raw;
    s.log_probs[n] = eval.partition.log_prob(pb) + eval.channel.log_prob(cb) +
                     eval.power.log_prob(raw);
    s.entropy_partition += eval.partition.entropy;
    s.entropy_channel += eval.channel.entropy;
    s.entropy_power += eval.power.entropy();
  }
  return s;
}

JointAction greedy_action(std::vector<HybridActorNet>& actors,
                          std::span<const double> obs,
                          const ActionSpace& space) {
  JointAction a;
  a.ue.resize(actors.size());
  for (std::size_t n = 0; n < actors.size(); ++n) {
    HybridActorNet::Eval eval = actors[n].forward(obs);
    a.ue[n].partition = static_cast<int>(eval.partition.argmax());
    a.ue[n].channel = static_cast<int>(eval.channel.argmax());
    a.ue[n].power_w =
        std::clamp(eval.power.mean, space.power_min_w, space.power_max_w);
  }
  return a;
}

Trainer::Trainer(Env& env, TrainConfig cfg, std::uint64_t seed)
    : env_(env),
      cfg_((cfg.validate(), std::move(cfg))),
      seed_(seed),
      agent_(Agent::make(env, cfg_, RngStream(seed).derive("init"))),
      sample_rng_(RngStream(seed).derive("sampling")),
      update_rng_(RngStream(seed).derive("update")) {
  env_.seed(RngStream(seed).derive("env").seed());
}

Trainer::CollectStats Trainer::collect(TrajectoryBuffer& buffer) {
  CollectStats stats;
  while (!buffer.full()) {
    if (env_needs_reset_) {
      obs_ = env_.reset();
      ep_rewards_.clear();
      env_needs_reset_ = false;
    }
    const double value = agent_.critic.forward(obs_)[0];
    SampledAction sa =
        sample_action(agent_.actors, obs_, env_.action_space(), sample_rng_);
    const FrameOutcome out = env_.step(sa.action);
    ep_rewards_.push_back(out.reward);
    stats.entropy_partition += sa.entropy_partition;
    stats.entropy_channel += sa.entropy_channel;
    stats.entropy_power += sa.entropy_power;
    buffer.push(std::move(obs_), std::move(sa.partitions),
                std::move(sa.channels), std::move(sa.power_raw),
                std::move(sa.log_probs), out.reward, out.done, value);
    if (out.done) {
      stats.episode_returns.push_back(
          std::accumulate(ep_rewards_.begin(), ep_rewards_.end(), 0.0));
      env_needs_reset_ = true;
    } else {
      obs_ = env_.observation();
    }
  }
  // Bootstrap value for a buffer that was cut mid-episode.
  if (!env_needs_reset_) {
    stats.final_bootstrap = agent_.critic.forward(env_.observation())[0];
  }
  const double denom =
      static_cast<double>(buffer.size()) * static_cast<double>(env_.ue_count());
  stats.entropy_partition /= denom;
  stats.entropy_channel /= denom;
  stats.entropy_power /= denom;
  return stats;
}

namespace {

// Global-norm clip across the four parameter blocks of one actor.
void clip_actor(HybridActorNet& actor, double max_norm) {
  if (max_norm <= 0.0) return;
  DenseNet* nets[4] = {&actor.trunk(), &actor.partition_branch(),
                       &actor.channel_branch(), &actor.power_branch()};
  double sq = 0.0;
  for (DenseNet* n : nets) {
    for (double g : n->grads()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (DenseNet* n : nets) {
    for (double& g : n->grads()) g *= scale;
  }
}

}  // namespace

std::pair<double, double> Trainer::update(TrajectoryBuffer& buffer,
                                          bool* diverged,
                                          std::uint64_t* skipped) {
  const std::size_t n_steps = buffer.size();
  const std::size_t n_ue = env_.ue_count();
  const std::size_t mb = cfg_.batch_size;
  const std::size_t epochs = cfg_.epochs_per_round();
  std::vector<std::size_t> idx(n_steps);
  std::iota(idx.begin(), idx.end(), 0);

  double vloss_total = 0.0;
  double ploss_total = 0.0;
  std::size_t epochs_done = 0;
  const double dloss_sign = -1.0;  // ascent on the actor objective

  for (std::size_t e = 0; e < epochs; ++e) {
    // Fresh random B-subset of the buffer (partial Fisher-Yates).
    for (std::size_t i = 0; i < mb; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(update_rng_.uniform_int(n_steps - i));
      std::swap(idx[i], idx[j]);
    }

    // Critic minibatch (Monte-Carlo return regression).
    agent_.critic.zero_grad();
    double vloss = 0.0;
    for (std::size_t i = 0; i < mb; ++i) {
      const std::size_t t = idx[i];
      const double v = agent_.critic.forward(buffer.obs(t))[0];
      const double diff = v - buffer.returns()[t];
      vloss += diff * diff;
      const double dv = 2.0 * diff / static_cast<double>(mb);
      agent_.critic.backward(std::span<const double>(&dv, 1));
    }
    vloss /= static_cast<double>(mb);
    clip_gradient_norm(agent_.critic.grads(), cfg_.grad_clip_norm);
    agent_.critic_opt.step(agent_.critic.params(), agent_.critic.grads());

    // Actor minibatches: every actor sees the same samples.
    double ploss = 0.0;
    for (std::size_t n = 0; n < n_ue; ++n) {
      HybridActorNet& actor = agent_.actors[n];
      actor.zero_grad();
      double surr_sum = 0.0;
      double ent_sum = 0.0;
      for (std::size_t i = 0; i < mb; ++i) {
        const std::size_t t = idx[i];
        const HybridActorNet::Eval eval = actor.forward(buffer.obs(t));
        const auto pb = static_cast<std::size_t>(buffer.partition(t, n));
        const auto cb = static_cast<std::size_t>(buffer.channel(t, n));
        const double raw = buffer.power_raw(t, n);
        const double lp_new = eval.partition.log_prob(pb) +
                              eval.channel.log_prob(cb) +
                              eval.power.log_prob(raw);
        const Surrogate s =
            clipped_surrogate(lp_new, buffer.log_prob_old(t, n),
                              buffer.advantages()[t], cfg_.clip_epsilon);
        if (s.skipped) {
          ++*skipped;
          continue;
        }
        surr_sum += s.value;
        ent_sum += eval.partition.entropy + eval.channel.entropy +
                   eval.power.entropy();
        const double inv_b = 1.0 / static_cast<double>(mb);
        actor.backward(eval, pb, cb, raw, dloss_sign * s.dlogp * inv_b,
                       dloss_sign * cfg_.entropy_weight * inv_b);
      }
      clip_actor(actor, cfg_.grad_clip_norm);
      agent_.actor_opts[4 * n + 0].step(actor.trunk().params(), actor.trunk().grads());
      agent_.actor_opts[4 * n + 1].step(actor.partition_branch().params(), actor.partition_branch().grads());
      agent_.actor_opts[4 * n + 2].step(actor.channel_branch().params(), actor.channel_branch().grads());
      agent_.actor_opts[4 * n + 3].step(actor.power_branch().params(), actor.power_branch().grads());
      const double inv_b = 1.0 / static_cast<double>(mb);
      ploss += surr_sum * inv_b + cfg_.entropy_weight * ent_sum * inv_b;
    }

    vloss_total += vloss;
    ploss_total += ploss;
    ++epochs_done;
    if (!std::isfinite(vloss) || !std::isfinite(ploss)) {
      *diverged = true;
      break;
    }
  }
  const double denom = epochs_done > 0 ? static_cast<double>(epochs_done) : 1.0;
  return {vloss_total / denom, ploss_total / denom};
}

TrainResult Trainer::run(
    const std::function<void(const RoundLog&, const Agent&)>& on_round) {
  TrainResult res;
  TrajectoryBuffer buffer(cfg_.buffer_size, env_.ue_count());
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t round = 0;
  double last_mean_return = 0.0;

  while (res.steps_done < cfg_.total_steps) {
    ++round;
    CollectStats cs = collect(buffer);
    res.steps_done += buffer.size();
    buffer.finalize(cfg_.gamma, cfg_.gae_lambda, cs.final_bootstrap,
                    cfg_.normalize_advantages);

    bool diverged = false;
    const auto [vloss, ploss] = update(buffer, &diverged, &res.skipped_samples);
    buffer.clear();

    for (double r : cs.episode_returns) res.episode_returns.push_back(r);
    if (!cs.episode_returns.empty()) {
      last_mean_return =
          std::accumulate(cs.episode_returns.begin(), cs.episode_returns.end(),
                          0.0) /
          static_cast<double>(cs.episode_returns.size());
    }

    RoundLog log;
    log.env_steps = res.steps_done;
    log.round = round;
    log.mean_cumulative_reward = last_mean_return;
    log.value_loss = vloss;
    log.policy_loss = ploss;
    log.entropy_partition = cs.entropy_partition;
    log.entropy_channel = cs.entropy_channel;
    log.entropy_power = cs.entropy_power;
    log.seconds_elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    res.rounds.push_back(log);

    if (diverged) {
      // Parameters may be corrupted: stop here, the caller keeps the last
      // checkpoint written before this round.
      res.diverged = true;
      break;
    }
    if (on_round) on_round(log, agent_);
  }
  return res;
}

}  // namespace coinfer
