#include "bdplan/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace bdplan::kernels {
namespace detail {
#ifndef BDPLAN_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("BDPLAN_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && backend_available(Backend::Avx2)) return Backend::Avx2;
  }
  return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(detect())};
  return slot;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

}  // namespace

bool backend_available(Backend b) {
  if (b == Backend::Scalar) return true;
  return detail::avx2_table() != nullptr && cpu_has_avx2();
}

const KernelTable& table(Backend b) {
  if (b == Backend::Avx2) {
    if (!backend_available(b)) throw std::runtime_error("AVX2 kernels unavailable on this CPU");
    return *detail::avx2_table();
  }
  return detail::scalar_table();
}

Backend active_backend() {
  return active_slot().load() == &detail::scalar_table() ? Backend::Scalar : Backend::Avx2;
}

void set_backend(Backend b) { active_slot().store(&table(b)); }

std::string_view backend_name(Backend b) { return b == Backend::Scalar ? "scalar" : "avx2"; }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(const double* w, size_t rows, size_t cols, size_t ld, const double* x,
          const double* bias, double* y) {
  active().gemv(w, rows, cols, ld, x, bias, y);
}

void gemv_t_acc(const double* w, size_t rows, size_t cols, size_t ld, const double* gy,
                double* gx) {
  active().gemv_t_acc(w, rows, cols, ld, gy, gx);
}

void ger_acc(const double* gy, const double* x, size_t rows, size_t cols, size_t ld,
             double* gw) {
  active().ger_acc(gy, x, rows, cols, ld, gw);
}

void momentum_step(std::span<double> p, std::span<double> v, std::span<const double> g,
                   double lr, double mu) {
  if (p.size() != v.size() || p.size() != g.size())
    throw std::invalid_argument("momentum_step: size mismatch");
  active().momentum_step(p.data(), v.data(), g.data(), lr, mu, p.size());
}

}  // namespace bdplan::kernels
