#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace coinfer {

// Per-partition-point overhead table for one model on one device class. All
// arrays are indexed by partition point b in {0, ..., B+1}: b = 0 offloads
// the raw input, b = B+1 runs the whole model locally, and interior b run
// the first b blocks locally, compress, and transmit the feature. Latency
// and energy entries are cumulative up to b.
struct DeviceProfile {
  std::string name;
  int partition_count = 0;               // B: number of interior points
  std::vector<double> local_latency_s;   // t_f[b]
  std::vector<double> compress_latency_s;  // t_c[b]
  std::vector<double> local_energy_j;    // e_f[b]
  std::vector<double> compress_energy_j;  // e_c[b]
  std::vector<double> payload_bits;      // f[b]; entry at B+1 unused

  int points() const { return partition_count + 2; }
  int local_index() const { return partition_count + 1; }  // b = B+1
  double max_payload_bits() const;

  // Checks the structural invariants (array lengths, zero entries at the
  // boundary points, monotone local latency, positivity). Throws ConfigError
  // naming the offending field.
  void validate() const;
};

// Parses a profile document (JSON, // comments allowed). Throws ParseError on
// malformed/missing fields and ConfigError on invariant violations.
DeviceProfile parse_profile(const std::string& text);
DeviceProfile load_profile(const std::filesystem::path& file);
std::string serialize_profile(const DeviceProfile& p);

}  // namespace coinfer
