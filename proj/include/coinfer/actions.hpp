#pragma once

#include <span>
#include <vector>

namespace coinfer {

// One UE's decision for a frame: partition point b in {0, ..., B+1},
// channel index in {0, ..., C-1}, transmit power in (0, p_max] watts.
struct UeAction {
  int partition = 0;
  int channel = 0;
  double power_w = 0.0;
};

struct JointAction {
  std::vector<UeAction> ue;

  std::size_t size() const { return ue.size(); }

  // Constraint check (partition range per UE, channel range, power bounds).
  // Throws DomainError naming the first violating UE and field.
  void validate(std::span<const int> partition_counts, int channel_count,
                double max_power_w) const;
};

}  // namespace coinfer
