#include <cmath>

#include "kernels_impl.hpp"

// Reference kernels. Plain loops, no pragmas: these define the semantics the
// vectorized backends are tested against.

namespace coinfer::kernels::detail {
namespace {

void matvec_scalar(const double* w, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t_scalar(const double* w, const double* dy, double* dx,
                     std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) dx[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    const double g = dy[r];
    for (std::size_t c = 0; c < cols; ++c) dx[c] += g * wr[c];
  }
}

void outer_acc_scalar(double* w, const double* u, const double* v,
                      std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* wr = w + r * cols;
    const double ur = u[r];
    for (std::size_t c = 0; c < cols; ++c) wr[c] += ur * v[c];
  }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void relu_scalar(const double* z, double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_grad_scalar(const double* z, const double* da, double* dz,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dz[i] = z[i] > 0.0 ? da[i] : 0.0;
}

void adam_update_scalar(double* p, const double* g, double* m, double* v,
                        std::size_t n, std::uint64_t t, double alpha,
                        double beta1, double beta2, double eps) {
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= alpha * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {
      matvec_scalar,    matvec_t_scalar, outer_acc_scalar,
      dot_scalar,       axpy_scalar,     relu_scalar,
      relu_grad_scalar, adam_update_scalar,
  };
  return table;
}

}  // namespace coinfer::kernels::detail
