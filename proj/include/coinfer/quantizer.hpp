#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace coinfer {

// Uniform affine quantizer: maps reals in a calibration range onto
// {0, ..., 2^bit_width - 1}. Inputs outside the range are clamped first
// (the range may come from a pre-collected calibration set, so live values
// can exceed it).
struct QuantizerConfig {
  int bit_width = 8;        // c_q in [1, 32]
  double calib_min = 0.0;
  double calib_max = 1.0;

  // Throws ConfigError on invalid settings.
  void validate() const;
  // 2^bit_width - 1: the largest representable level.
  std::uint64_t levels() const {
    return (bit_width >= 64 ? ~std::uint64_t{0}
                            : (std::uint64_t{1} << bit_width) - 1);
  }
};

// y_i = round(levels * (clamp(x_i) - min) / (max - min)), rounding half away
// from zero.
std::vector<std::uint32_t> quantize(std::span<const double> x,
                                    const QuantizerConfig& q);

// x'_i = y_i * (max - min) / levels + min. Throws DomainError if any y_i is
// outside {0, ..., levels}.
std::vector<double> dequantize(std::span<const std::uint32_t> y,
                               const QuantizerConfig& q);

// Worst-case round-trip error: half of one quantization step.
double round_trip_bound(const QuantizerConfig& q);

// Overall compression ratio R = R_c * R_q of channel reduction (ch ->
// ch_reduced) followed by 32 -> c_q bit quantization. Throws DomainError on
// non-positive arguments, ch < ch_reduced, or c_q outside [1, 32].
double compression_rate(int ch, int ch_reduced, int c_q);

}  // namespace coinfer
