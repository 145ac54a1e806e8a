#include "coinfer/csv.hpp"

#include <charconv>

namespace coinfer::csv {

std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace coinfer::csv
