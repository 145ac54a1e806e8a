#pragma once

#include <cstddef>
#include <cstdint>

// Internal kernel dispatch table. Each backend fills one of these.

namespace coinfer::kernels::detail {

struct KernelTable {
  void (*matvec)(const double*, const double*, double*, std::size_t,
                 std::size_t);
  void (*matvec_t)(const double*, const double*, double*, std::size_t,
                   std::size_t);
  void (*outer_acc)(double*, const double*, const double*, std::size_t,
                    std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*relu)(const double*, double*, std::size_t);
  void (*relu_grad)(const double*, const double*, double*, std::size_t);
  void (*adam_update)(double*, const double*, double*, double*, std::size_t,
                      std::uint64_t, double, double, double, double);
};

const KernelTable& scalar_table();

#if defined(COINFER_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace coinfer::kernels::detail
