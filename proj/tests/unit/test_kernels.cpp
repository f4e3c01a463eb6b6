#include <cmath>
#include <vector>

#include "bdplan/core/rng.hpp"
#include "bdplan/kernels/kernels.hpp"
#include "doctest.h"

using namespace bdplan;
namespace K = bdplan::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

void require_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(a[i] - b[i]) <= tol * (1.0 + std::abs(a[i])));
}

}  // namespace

TEST_CASE("scalar kernels match their definitions") {
  const auto& s = K::table(K::Backend::Scalar);
  std::vector<double> w{1, 2, 3, 4, 5, 6};  // 2x3
  std::vector<double> x{1, -1, 2};
  std::vector<double> bias{0.5, -0.5};
  std::vector<double> y(2);
  s.gemv(w.data(), 2, 3, 3, x.data(), bias.data(), y.data());
  CHECK(y[0] == doctest::Approx(5.5));
  CHECK(y[1] == doctest::Approx(10.5));

  std::vector<double> gx(3, 0.0), gy{1, 2};
  s.gemv_t_acc(w.data(), 2, 3, 3, gy.data(), gx.data());
  CHECK(gx == std::vector<double>{9, 12, 15});

  std::vector<double> gw(6, 0.0);
  s.ger_acc(gy.data(), x.data(), 2, 3, 3, gw.data());
  CHECK(gw == std::vector<double>{1, -1, 2, 2, -2, 4});

  CHECK(s.dot(x.data(), x.data(), 3) == 6.0);

  std::vector<double> p{1.0}, v{1.0}, g{2.0};
  s.momentum_step(p.data(), v.data(), g.data(), 0.1, 0.9, 1);
  CHECK(v[0] == doctest::Approx(2.9));
  CHECK(p[0] == doctest::Approx(1.0 - 0.29));
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!K::backend_available(K::Backend::Avx2)) {
    MESSAGE("avx2 backend unavailable on this host");
    return;
  }
  const auto& s = K::table(K::Backend::Scalar);
  const auto& a = K::table(K::Backend::Avx2);
  Rng rng(7);
  for (size_t rows : {1u, 3u, 4u, 5u, 17u, 64u}) {
    for (size_t cols : {1u, 2u, 7u, 8u, 13u, 96u, 1024u}) {
      const size_t ld = cols + (rows % 2);
      auto w = random_vec(rng, rows * ld);
      auto x = random_vec(rng, cols);
      auto bias = random_vec(rng, rows);
      auto gy = random_vec(rng, rows);

      std::vector<double> ys(rows), ya(rows);
      s.gemv(w.data(), rows, cols, ld, x.data(), bias.data(), ys.data());
      a.gemv(w.data(), rows, cols, ld, x.data(), bias.data(), ya.data());
      require_close(ys, ya, 1e-12);
      s.gemv(w.data(), rows, cols, ld, x.data(), nullptr, ys.data());
      a.gemv(w.data(), rows, cols, ld, x.data(), nullptr, ya.data());
      require_close(ys, ya, 1e-12);

      auto gxs = random_vec(rng, cols);
      auto gxa = gxs;
      s.gemv_t_acc(w.data(), rows, cols, ld, gy.data(), gxs.data());
      a.gemv_t_acc(w.data(), rows, cols, ld, gy.data(), gxa.data());
      require_close(gxs, gxa, 1e-12);

      auto gws = random_vec(rng, rows * ld);
      auto gwa = gws;
      s.ger_acc(gy.data(), x.data(), rows, cols, ld, gws.data());
      a.ger_acc(gy.data(), x.data(), rows, cols, ld, gwa.data());
      require_close(gws, gwa, 1e-12);
    }
  }
  for (size_t n : {0u, 1u, 3u, 4u, 9u, 31u, 1000u}) {
    auto x = random_vec(rng, n);
    auto y = random_vec(rng, n);
    CHECK(std::abs(s.dot(x.data(), y.data(), n) - a.dot(x.data(), y.data(), n)) <= 1e-11);
    auto ys = y, ya = y;
    s.axpy(0.3, x.data(), ys.data(), n);
    a.axpy(0.3, x.data(), ya.data(), n);
    require_close(ys, ya, 1e-14);
    auto ps = x, pa = x, vs = y, va = y;
    auto g = random_vec(rng, n);
    s.momentum_step(ps.data(), vs.data(), g.data(), 1e-2, 0.9, n);
    a.momentum_step(pa.data(), va.data(), g.data(), 1e-2, 0.9, n);
    require_close(vs, va, 1e-14);
    require_close(ps, pa, 1e-14);
  }
}

TEST_CASE("backend selection round-trips") {
  const auto before = K::active_backend();
  K::set_backend(K::Backend::Scalar);
  CHECK(K::active_backend() == K::Backend::Scalar);
  CHECK(K::backend_name(K::Backend::Scalar) == "scalar");
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(K::dot(a, b) == 32.0);
  K::set_backend(before);
  CHECK(K::active_backend() == before);
}
