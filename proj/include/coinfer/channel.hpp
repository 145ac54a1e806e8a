#pragma once

#include <span>
#include <string>
#include <vector>

#include "coinfer/actions.hpp"

namespace coinfer {

// Which transmissions contribute interference to a given UE's uplink.
// `same_channel` restricts the sum to offloaders sharing the UE's channel
// (per-channel noise and bandwidth make this the physically coherent
// reading); `all_offloaders` sums every offloading UE regardless of channel,
// matching the printed rate formula literally.
enum class InterferenceScope { same_channel, all_offloaders };

struct ChannelConfig {
  int channel_count = 2;                 // C
  std::vector<double> bandwidth_hz;      // omega_c, one per channel
  std::vector<double> noise_w;           // sigma_c, one per channel
  double path_loss_exponent = 3.0;       // l
  double max_power_w = 0.5;              // p_max
  InterferenceScope interference = InterferenceScope::same_channel;

  // Appends one entry per violation; empty means valid.
  void append_errors(std::vector<std::string>& errors) const;
  void validate() const;  // throws ConfigError listing every violation
  // Convenience: C channels sharing one bandwidth/noise figure.
  static ChannelConfig uniform(int channels, double bandwidth_hz,
                               double noise_w, double path_loss_exponent,
                               double max_power_w);
};

// Distances and the derived gains g_n = d_n^-l for all UEs.
struct RadioState {
  std::vector<double> distance_m;
  std::vector<double> gain;

  static RadioState from_distances(std::span<const double> d,
                                   double path_loss_exponent);
};

// g = d^-l. Throws DomainError for d < 1 (below the path-loss model's
// validity) or l <= 0.
double channel_gain(double distance_m, double path_loss_exponent);

// Uplink rate in bit/s for `ue` under the declared joint action. The UE must
// be offloading (partition != B+1 is the caller's responsibility; a
// non-positive payload decision is signalled by partition == local, which the
// env never passes here). Throws ContractError if actions mark `ue` itself
// as not offloading, DomainError if its power is outside (0, p_max].
double uplink_rate(std::size_t ue, const JointAction& actions,
                   std::span<const int> local_partition_index,
                   const RadioState& radio, const ChannelConfig& cfg);

// Same, but with the subject UE's own channel/power overridden. Used for an
// in-flight task that keeps its committed channel across a frame boundary
// while adopting the new power; interference still comes from the declared
// joint action.
double uplink_rate_on(std::size_t ue, int channel, double power_w,
                      const JointAction& actions,
                      std::span<const int> local_partition_index,
                      const RadioState& radio, const ChannelConfig& cfg);

}  // namespace coinfer
