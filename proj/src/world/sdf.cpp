#include "bdplan/world/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bdplan::world {
namespace {

constexpr double kFar = 1e20;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), in place on f.
void dt_1d(std::vector<double>& f, int n, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kFar;
  z[1] = kFar;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      v[k] = q;
      z[k] = -kFar;
    } else {
      ++k;
      v[k] = q;
      z[k] = s;
    }
    z[k + 1] = kFar;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
  std::copy(d.begin(), d.begin() + n, f.begin());
}

}  // namespace

std::vector<double> squared_distance_transform(const std::vector<uint8_t>& seed, int width,
                                               int height) {
  const size_t n = static_cast<size_t>(width) * height;
  if (seed.size() != n) throw std::invalid_argument("squared_distance_transform: size mismatch");
  std::vector<double> grid(n);
  bool any = false;
  for (size_t i = 0; i < n; ++i) {
    grid[i] = seed[i] ? 0.0 : kFar;
    any = any || seed[i];
  }
  if (!any) return std::vector<double>(n, std::numeric_limits<double>::infinity());
  const int m = std::max(width, height);
  std::vector<double> f(m), d(m), z(m + 1);
  std::vector<int> v(m);
  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < height; ++r) f[r] = grid[static_cast<size_t>(r) * width + c];
    dt_1d(f, height, d, v, z);
    for (int r = 0; r < height; ++r) grid[static_cast<size_t>(r) * width + c] = f[r];
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) f[c] = grid[static_cast<size_t>(r) * width + c];
    dt_1d(f, width, d, v, z);
    for (int c = 0; c < width; ++c) grid[static_cast<size_t>(r) * width + c] = f[c];
  }
  return grid;
}

SignedDistanceField::SignedDistanceField(int width, int height, double resolution,
                                         std::vector<double> values)
    : width_(width), height_(height), resolution_(resolution), values_(std::move(values)) {
  if (values_.size() != static_cast<size_t>(width) * height)
    throw std::invalid_argument("SignedDistanceField: size mismatch");
}

SignedDistanceField compute_sdf(const GridMap& map) {
  const int w = map.width(), h = map.height();
  const auto occ = map.occupancy();
  std::vector<uint8_t> free(occ.size());
  for (size_t i = 0; i < occ.size(); ++i) free[i] = occ[i] ? 0 : 1;
  const auto to_obstacle = squared_distance_transform(occ, w, h);
  const auto to_free = squared_distance_transform(free, w, h);
  const double dmax = std::hypot(static_cast<double>(w), static_cast<double>(h)) * map.resolution();
  std::vector<double> values(occ.size());
  for (size_t i = 0; i < occ.size(); ++i) {
    const double a = std::sqrt(to_obstacle[i]) * map.resolution();
    const double b = std::sqrt(to_free[i]) * map.resolution();
    double v;
    if (std::isinf(a)) v = dmax;
    else if (std::isinf(b)) v = -dmax;
    else v = a - b;
    values[i] = std::clamp(v, -dmax, dmax);
  }
  return SignedDistanceField(w, h, map.resolution(), std::move(values));
}

FieldSample SignedDistanceField::query(Vec2 p) const {
  const double u_raw = p.x / resolution_ - 0.5;
  const double v_raw = p.y / resolution_ - 0.5;
  const double u = std::clamp(u_raw, 0.0, static_cast<double>(width_ - 1));
  const double v = std::clamp(v_raw, 0.0, static_cast<double>(height_ - 1));
  const bool clamp_u = u != u_raw;
  const bool clamp_v = v != v_raw;
  const int i0 = width_ > 1 ? std::min(static_cast<int>(std::floor(u)), width_ - 2) : 0;
  const int j0 = height_ > 1 ? std::min(static_cast<int>(std::floor(v)), height_ - 2) : 0;
  const int i1 = std::min(i0 + 1, width_ - 1);
  const int j1 = std::min(j0 + 1, height_ - 1);
  const double fu = u - i0;
  const double fv = v - j0;
  const double v00 = at(i0, j0), v10 = at(i1, j0), v01 = at(i0, j1), v11 = at(i1, j1);
  FieldSample s;
  s.value = (1 - fu) * (1 - fv) * v00 + fu * (1 - fv) * v10 + (1 - fu) * fv * v01 + fu * fv * v11;
  const double du = (1 - fv) * (v10 - v00) + fv * (v11 - v01);
  const double dv = (1 - fu) * (v01 - v00) + fu * (v11 - v10);
  s.gradient = {clamp_u ? 0.0 : du / resolution_, clamp_v ? 0.0 : dv / resolution_};
  return s;
}

}  // namespace bdplan::world
