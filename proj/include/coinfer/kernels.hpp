#pragma once

#include <cstddef>
#include <cstdint>

namespace coinfer::kernels {

// Data-parallel inner loops behind the dense-network math. Each kernel has a
// scalar reference implementation and, on x86-64 with AVX2+FMA, a vectorized
// variant selected at runtime. The two are equivalence-tested against each
// other; everything above this layer is backend-agnostic.
//
// Selection order: COINFER_KERNELS env var ("scalar", "avx2", "auto"), then
// CPU capability. set_backend() overrides programmatically (used by tests).

enum class Backend { scalar, avx2 };

Backend active_backend();
// Throws ConfigError if the requested backend is not available on this CPU.
void set_backend(Backend b);
// Best backend supported by the running CPU.
Backend best_backend();
const char* backend_name(Backend b);

// y = W x, W row-major (rows x cols).
void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols);
// dx = W^T dy (overwrites dx). W row-major (rows x cols), dy length rows.
void matvec_t(const double* w, const double* dy, double* dx, std::size_t rows,
              std::size_t cols);
// W += u v^T (rank-1 accumulate; u length rows, v length cols).
void outer_acc(double* w, const double* u, const double* v, std::size_t rows,
               std::size_t cols);
double dot(const double* a, const double* b, std::size_t n);
// y += a x.
void axpy(double a, const double* x, double* y, std::size_t n);
// a = max(z, 0).
void relu(const double* z, double* a, std::size_t n);
// dz = da * [z > 0].
void relu_grad(const double* z, const double* da, double* dz, std::size_t n);
// In-place bias-corrected adaptive-moment update over a parameter array.
// Step t is 1-based. Caller guarantees finite gradients.
void adam_update(double* p, const double* g, double* m, double* v,
                 std::size_t n, std::uint64_t t, double alpha, double beta1,
                 double beta2, double eps);

}  // namespace coinfer::kernels
