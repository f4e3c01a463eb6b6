#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bdplan/core/rng.hpp"
#include "bdplan/core/trajectory.hpp"
#include "bdplan/spec/formula.hpp"
#include "bdplan/spec/predicate.hpp"
#include "bdplan/world/grid_map.hpp"

namespace bdplan::testing {

inline double pred_value(const spec::Predicate& p, Vec2 s) { return spec::evaluate(p, s).value; }

/// Boolean semantics straight from the quantifier definitions.
inline bool holds(const spec::Formula& f, const Trajectory& tr, int t) {
  using spec::Op;
  auto P = [](const spec::Predicate& p, Vec2 s) { return pred_value(p, s); };
  switch (f.op()) {
    case Op::Predicate: return P(f.pred(), tr[t]) < 0;
    case Op::Reach:
      for (int k = t + f.lo(); k <= t + f.hi(); ++k)
        if (P(f.pred(), tr[k]) < 0) return true;
      return false;
    case Op::Avoid:
      for (int k = t + f.lo(); k <= t + f.hi(); ++k)
        if (!(P(f.pred(), tr[k]) > 0)) return false;
      return true;
    case Op::Stay:
      for (int k = t + f.lo(); k <= t + f.hi(); ++k)
        if (!(P(f.pred(), tr[k]) < 0)) return false;
      return true;
    case Op::Not: return !holds(f.child(0), tr, t);
    case Op::And: return holds(f.child(0), tr, t) && holds(f.child(1), tr, t);
    case Op::Or: return holds(f.child(0), tr, t) || holds(f.child(1), tr, t);
    case Op::Implies: return !holds(f.child(0), tr, t) || holds(f.child(1), tr, t);
    case Op::Next: return holds(f.child(0), tr, t + 1);
    case Op::Eventually:
      for (int k = t + f.lo(); k <= t + f.hi(); ++k)
        if (holds(f.child(0), tr, k)) return true;
      return false;
    case Op::Globally:
      for (int k = t + f.lo(); k <= t + f.hi(); ++k)
        if (!holds(f.child(0), tr, k)) return false;
      return true;
    case Op::Until:
      for (int k = t + f.lo(); k <= t + f.hi(); ++k) {
        bool ok = holds(f.child(1), tr, k);
        for (int j = t + f.lo(); j < k && ok; ++j) ok = holds(f.child(0), tr, j);
        if (ok) return true;
      }
      return false;
  }
  return false;
}

/// Until over two predicates by direct expansion, inner min over an empty range = top.
inline double until_oracle(const spec::Predicate& p1, const spec::Predicate& p2,
                           const Trajectory& tr, int a, int b, double top) {
  double best = -std::numeric_limits<double>::infinity();
  for (int k = a; k <= b; ++k) {
    const double term = -pred_value(p2, tr[k]);
    double inner = k == a ? top : std::numeric_limits<double>::infinity();
    for (int j = a; j < k; ++j) inner = std::min(inner, -pred_value(p1, tr[j]));
    best = std::max(best, std::min(term, inner));
  }
  return best;
}

inline world::GridMap random_grid(Rng& rng, int w, int h, double density, double res = 1.0) {
  world::GridMap m(w, h, res);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (rng.uniform() < density) m.at(c, r) = world::kBlocked;
  return m;
}

/// Brute force over all cell pairs.
inline double sdf_oracle(const world::GridMap& m, int col, int row) {
  const double inf = std::numeric_limits<double>::infinity();
  const bool self_blocked = m.blocked(col, row);
  double best = inf;
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m.blocked(c, r) != self_blocked)
        best = std::min(best, std::hypot(double(c - col), double(r - row)));
  return (self_blocked ? -best : best) * m.resolution();
}

/// Quadratic Dijkstra over cells, independent of the planner's heap and tie rules.
inline double dijkstra_oracle(const world::GridMap& m, world::Cell s, world::Cell g, int conn) {
  const int n = m.width() * m.height();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, inf);
  std::vector<char> done(n, 0);
  d[m.index(s.col, s.row)] = 0;
  for (;;) {
    int u = -1;
    for (int i = 0; i < n; ++i)
      if (!done[i] && std::isfinite(d[i]) && (u < 0 || d[i] < d[u])) u = i;
    if (u < 0) return inf;
    if (u == int(m.index(g.col, g.row))) return d[u];
    done[u] = 1;
    const int c = u % m.width(), r = u / m.width();
    for (int dc = -1; dc <= 1; ++dc)
      for (int dr = -1; dr <= 1; ++dr) {
        if (dc == 0 && dr == 0) continue;
        const bool diag = dc != 0 && dr != 0;
        if (diag && conn == 4) continue;
        const int nc = c + dc, nr = r + dr;
        if (!m.in_bounds(nc, nr) || m.blocked(nc, nr)) continue;
        if (diag && (m.blocked(nc, r) || m.blocked(c, nr))) continue;
        const double w = (diag ? std::sqrt(2.0) : 1.0) * m.resolution();
        const int v = int(m.index(nc, nr));
        d[v] = std::min(d[v], d[u] + w);
      }
  }
}

}  // namespace bdplan::testing
