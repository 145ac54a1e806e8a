#include "coinfer/channel.hpp"

#include <cmath>
#include <string>

#include "coinfer/error.hpp"

namespace coinfer {

void ChannelConfig::append_errors(std::vector<std::string>& errors) const {
  if (channel_count < 1) {
    errors.push_back("channel.channel_count: must be >= 1");
    return;
  }
  if (bandwidth_hz.size() != static_cast<std::size_t>(channel_count) ||
      noise_w.size() != static_cast<std::size_t>(channel_count)) {
    errors.push_back("channel: bandwidth/noise arrays must have one entry per channel");
  }
  for (double b : bandwidth_hz) {
    if (!(b > 0.0)) {
      errors.push_back("channel.bandwidth_hz: must be positive");
      break;
    }
  }
  for (double s : noise_w) {
    if (!(s > 0.0)) {
      errors.push_back("channel.noise_w: must be positive");
      break;
    }
  }
  if (!(path_loss_exponent > 0.0)) {
    errors.push_back("channel.path_loss_exponent: must be positive");
  }
  if (!(max_power_w > 0.0)) errors.push_back("channel.max_power_w: must be positive");
}

void ChannelConfig::validate() const {
  std::vector<std::string> errors;
  append_errors(errors);
  if (!errors.empty()) {
    std::string msg = errors.front();
    for (std::size_t i = 1; i < errors.size(); ++i) msg += "; " + errors[i];
    throw ConfigError(msg);
  }
}

ChannelConfig ChannelConfig::uniform(int channels, double bandwidth,
                                     double noise, double pl_exp,
                                     double p_max) {
  ChannelConfig c;
  c.channel_count = channels;
  c.bandwidth_hz.assign(static_cast<std::size_t>(channels), bandwidth);
  c.noise_w.assign(static_cast<std::size_t>(channels), noise);
  c.path_loss_exponent = pl_exp;
  c.max_power_w = p_max;
  return c;
}

double channel_gain(double distance_m, double path_loss_exponent) {
  if (!(distance_m >= 1.0)) {
    throw DomainError("channel_gain: distance below 1 m is outside the model");
  }
  if (!(path_loss_exponent > 0.0)) {
    throw DomainError("channel_gain: path loss exponent must be positive");
  }
  return std::pow(distance_m, -path_loss_exponent);
}

RadioState RadioState::from_distances(std::span<const double> d,
                                      double path_loss_exponent) {
  RadioState r;
  r.distance_m.assign(d.begin(), d.end());
  r.gain.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    r.gain[i] = channel_gain(d[i], path_loss_exponent);
  }
  return r;
}

void JointAction::validate(std::span<const int> partition_counts,
                           int channel_count, double max_power_w) const {
  if (ue.size() != partition_counts.size()) {
    throw DomainError("action: expected " +
                      std::to_string(partition_counts.size()) + " UEs, got " +
                      std::to_string(ue.size()));
  }
  for (std::size_t n = 0; n < ue.size(); ++n) {
    const UeAction& a = ue[n];
    if (a.partition < 0 || a.partition > partition_counts[n] + 1) {
      throw DomainError("action: UE " + std::to_string(n) +
                        " partition out of {0.." +
                        std::to_string(partition_counts[n] + 1) + "}");
    }
    if (a.channel < 0 || a.channel >= channel_count) {
      throw DomainError("action: UE " + std::to_string(n) +
                        " channel out of range");
    }
    if (!(a.power_w > 0.0) || a.power_w > max_power_w ||
        !std::isfinite(a.power_w)) {
      throw DomainError("action: UE " + std::to_string(n) +
                        " power outside (0, p_max]");
    }
  }
}

double uplink_rate_on(std::size_t ue, int channel, double power_w,
                      const JointAction& actions,
                      std::span<const int> local_partition_index,
                      const RadioState& radio, const ChannelConfig& cfg) {
  if (channel < 0 || channel >= cfg.channel_count) {
    throw DomainError("uplink_rate: channel index out of range");
  }
  if (!(power_w > 0.0) || power_w > cfg.max_power_w) {
    throw DomainError("uplink_rate: power outside (0, p_max]");
  }
  double interference = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i == ue) continue;
    const UeAction& a = actions.ue[i];
    if (a.partition == local_partition_index[i]) continue;  // not offloading
    if (cfg.interference == InterferenceScope::same_channel &&
        a.channel != channel) {
      continue;
    }
    interference += a.power_w * radio.gain[i];
  }
  const double sinr =
      power_w * radio.gain[ue] /
      (cfg.noise_w[static_cast<std::size_t>(channel)] + interference);
  return cfg.bandwidth_hz[static_cast<std::size_t>(channel)] *
         std::log2(1.0 + sinr);
}

double uplink_rate(std::size_t ue, const JointAction& actions,
                   std::span<const int> local_partition_index,
                   const RadioState& radio, const ChannelConfig& cfg) {
  const UeAction& a = actions.ue[ue];
  if (a.partition == local_partition_index[ue]) {
    throw ContractError("uplink_rate: UE " + std::to_string(ue) +
                        " is not offloading");
  }
  return uplink_rate_on(ue, a.channel, a.power_w, actions,
                        local_partition_index, radio, cfg);
}

}  // namespace coinfer
