#pragma once

// Dense f64 inner loops used by the autodiff tape and the optimizers.
//
// Every kernel has a scalar reference implementation and an AVX2+FMA variant.
// The active variant is chosen once at startup from CPUID; it can be forced
// with the environment variable BDPLAN_SIMD=scalar|avx2 or set_backend().
// Matrices are row-major with an explicit row stride (in elements).

#include <cstddef>
#include <span>
#include <string_view>

namespace bdplan::kernels {

enum class Backend { Scalar, Avx2 };

/// Kernel table for one backend.
struct KernelTable {
  double (*dot)(const double* a, const double* b, size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, size_t n);
  /// y = W x (+ bias when non-null); W is rows x cols with stride ld.
  void (*gemv)(const double* w, size_t rows, size_t cols, size_t ld, const double* x,
               const double* bias, double* y);
  /// gx += W^T gy
  void (*gemv_t_acc)(const double* w, size_t rows, size_t cols, size_t ld, const double* gy,
                     double* gx);
  /// gW += gy x^T
  void (*ger_acc)(const double* gy, const double* x, size_t rows, size_t cols, size_t ld,
                  double* gw);
  /// Heavy-ball momentum: v = mu v + g; p -= lr v
  void (*momentum_step)(double* p, double* v, const double* g, double lr, double mu, size_t n);
};

const KernelTable& table(Backend b);
bool backend_available(Backend b);

/// Currently dispatched backend.
Backend active_backend();
void set_backend(Backend b);
std::string_view backend_name(Backend b);

// Convenience wrappers over the active table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(const double* w, size_t rows, size_t cols, size_t ld, const double* x,
          const double* bias, double* y);
void gemv_t_acc(const double* w, size_t rows, size_t cols, size_t ld, const double* gy,
                double* gx);
void ger_acc(const double* gy, const double* x, size_t rows, size_t cols, size_t ld,
             double* gw);
void momentum_step(std::span<double> p, std::span<double> v, std::span<const double> g,
                   double lr, double mu);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace bdplan::kernels
