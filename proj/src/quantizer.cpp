#include "coinfer/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coinfer/error.hpp"

namespace coinfer {

void QuantizerConfig::validate() const {
  if (bit_width < 1 || bit_width > 32) {
    throw ConfigError("quantizer: bit_width must be in [1, 32], got " +
                      std::to_string(bit_width));
  }
  if (!(calib_max > calib_min)) {
    throw ConfigError("quantizer: calib_max must exceed calib_min");
  }
}

std::vector<std::uint32_t> quantize(std::span<const double> x,
                                    const QuantizerConfig& q) {
  q.validate();
  const double range = q.calib_max - q.calib_min;
  const double scale = static_cast<double>(q.levels());
  std::vector<std::uint32_t> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double clamped = std::clamp(x[i], q.calib_min, q.calib_max);
    // std::round rounds half away from zero.
    const double level = std::round(scale * (clamped - q.calib_min) / range);
    y[i] = static_cast<std::uint32_t>(level);
  }
  return y;
}

std::vector<double> dequantize(std::span<const std::uint32_t> y,
                               const QuantizerConfig& q) {
  q.validate();
  const double range = q.calib_max - q.calib_min;
  const std::uint64_t levels = q.levels();
  const double inv = range / static_cast<double>(levels);
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > levels) {
      throw DomainError("dequantize: value " + std::to_string(y[i]) +
                        " exceeds max level " + std::to_string(levels));
    }
    x[i] = static_cast<double>(y[i]) * inv + q.calib_min;
  }
  return x;
}

double round_trip_bound(const QuantizerConfig& q) {
  return (q.calib_max - q.calib_min) / (2.0 * static_cast<double>(q.levels()));
}

double compression_rate(int ch, int ch_reduced, int c_q) {
  if (ch <= 0 || ch_reduced <= 0) {
    throw DomainError("compression_rate: channel counts must be positive");
  }
  if (ch < ch_reduced) {
    throw DomainError("compression_rate: reduced channels exceed original");
  }
  if (c_q < 1 || c_q > 32) {
    throw DomainError("compression_rate: bit width must be in [1, 32]");
  }
  return (static_cast<double>(ch) * 32.0) /
         (static_cast<double>(ch_reduced) * static_cast<double>(c_q));
}

}  // namespace coinfer
