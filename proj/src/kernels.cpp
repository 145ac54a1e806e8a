#include "coinfer/kernels.hpp"

#include <cstdlib>
#include <string>

#include "coinfer/error.hpp"
#include "kernels_impl.hpp"

namespace coinfer::kernels {
namespace {

using detail::KernelTable;

bool cpu_has_avx2() {
#if defined(COINFER_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &detail::scalar_table();
    case Backend::avx2:
#if defined(COINFER_HAVE_AVX2)
      return &detail::avx2_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

struct Dispatch {
  Backend backend;
  const KernelTable* table;

  Dispatch() {
    backend = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("COINFER_KERNELS")) {
      const std::string v(env);
      if (v == "scalar") {
        backend = Backend::scalar;
      } else if (v == "avx2" && cpu_has_avx2()) {
        backend = Backend::avx2;
      }
      // anything else (including "auto") keeps the detected backend
    }
    table = table_for(backend);
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

Backend best_backend() {
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

void set_backend(Backend b) {
  const KernelTable* t = table_for(b);
  if (t == nullptr || (b == Backend::avx2 && !cpu_has_avx2())) {
    throw ConfigError(std::string("kernel backend not available: ") +
                      backend_name(b));
  }
  dispatch().backend = b;
  dispatch().table = t;
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "?";
}

void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  dispatch().table->matvec(w, x, y, rows, cols);
}

void matvec_t(const double* w, const double* dy, double* dx, std::size_t rows,
              std::size_t cols) {
  dispatch().table->matvec_t(w, dy, dx, rows, cols);
}

void outer_acc(double* w, const double* u, const double* v, std::size_t rows,
               std::size_t cols) {
  dispatch().table->outer_acc(w, u, v, rows, cols);
}

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().table->dot(a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(a, x, y, n);
}

void relu(const double* z, double* a, std::size_t n) {
  dispatch().table->relu(z, a, n);
}

void relu_grad(const double* z, const double* da, double* dz, std::size_t n) {
  dispatch().table->relu_grad(z, da, dz, n);
}

void adam_update(double* p, const double* g, double* m, double* v,
                 std::size_t n, std::uint64_t t, double alpha, double beta1,
                 double beta2, double eps) {
  dispatch().table->adam_update(p, g, m, v, n, t, alpha, beta1, beta2, eps);
}

}  // namespace coinfer::kernels
