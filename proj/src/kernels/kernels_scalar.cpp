#include "bdplan/kernels/kernels.hpp"

namespace bdplan::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, size_t rows, size_t cols, size_t ld, const double* x,
                 const double* bias, double* y) {
  for (size_t r = 0; r < rows; ++r) {
    const double* row = w + r * ld;
    double s = 0.0;
    for (size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    y[r] = bias ? s + bias[r] : s;
  }
}

void gemv_t_acc_scalar(const double* w, size_t rows, size_t cols, size_t ld, const double* gy,
                       double* gx) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0.0) continue;
    const double* row = w + r * ld;
    for (size_t c = 0; c < cols; ++c) gx[c] += g * row[c];
  }
}

void ger_acc_scalar(const double* gy, const double* x, size_t rows, size_t cols, size_t ld,
                    double* gw) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0.0) continue;
    double* row = gw + r * ld;
    for (size_t c = 0; c < cols; ++c) row[c] += g * x[c];
  }
}

void momentum_scalar(double* p, double* v, const double* g, double lr, double mu, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    v[i] = mu * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{dot_scalar,        axpy_scalar,    gemv_scalar,
                             gemv_t_acc_scalar, ger_acc_scalar, momentum_scalar};
  return t;
}

}  // namespace bdplan::kernels::detail
