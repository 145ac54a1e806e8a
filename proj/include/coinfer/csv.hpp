#pragma once

#include <string>

namespace coinfer::csv {

// Shortest representation that round-trips the exact double. Deterministic,
// so CSV outputs are byte-stable across runs.
std::string format(double v);

}  // namespace coinfer::csv
