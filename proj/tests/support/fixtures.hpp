#pragma once

#include "coinfer/offload_env.hpp"
#include "coinfer/profiles.hpp"

namespace coinfer::testing {

// Four interior partition points, monotone latencies, payload shrinking with
// depth. Numbers are synthetic.
inline DeviceProfile make_profile() {
  DeviceProfile p;
  p.name = "test-device";
  p.partition_count = 4;
  p.local_latency_s = {0.0, 0.006, 0.012, 0.020, 0.030, 0.050};
  p.compress_latency_s = {0.0, 0.002, 0.002, 0.0015, 0.001, 0.0};
  p.local_energy_j = {0.0, 0.012, 0.024, 0.040, 0.060, 0.106};
  p.compress_energy_j = {0.0, 0.003, 0.003, 0.002, 0.001, 0.0};
  p.payload_bits = {8.0e5, 5.0e4, 3.0e4, 2.0e4, 1.2e4, 0.0};
  return p;
}

// Single partition point, pure local cost 0.1 s / 0.2 J; used by the
// hand-simulated examples.
inline DeviceProfile make_local_profile() {
  DeviceProfile p;
  p.name = "local-only";
  p.partition_count = 1;
  p.local_latency_s = {0.0, 0.05, 0.1};
  p.compress_latency_s = {0.0, 0.001, 0.0};
  p.local_energy_j = {0.0, 0.1, 0.2};
  p.compress_energy_j = {0.0, 0.002, 0.0};
  p.payload_bits = {1.0e6, 5.0e5, 0.0};
  return p;
}

inline EnvConfig make_env_config(std::size_t ue_count,
                                 const DeviceProfile& profile) {
  EnvConfig cfg;
  cfg.ue_count = ue_count;
  cfg.profiles.assign(ue_count, profile);
  cfg.channel = ChannelConfig::uniform(2, 1e6, 1e-9, 3.0, 0.5);
  return cfg;
}

}  // namespace coinfer::testing
