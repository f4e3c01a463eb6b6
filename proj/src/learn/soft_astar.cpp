#include "bdplan/learn/soft_astar.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace bdplan::learn {

namespace {

struct StepRecord {
  std::vector<int> open;
  std::vector<double> p;
  Vec2 x;
};

}  // namespace

SoftUnroll soft_unroll_astar(Tape& tape, Var guidance, const planning::PlanTask& task,
                             const SoftUnrollOptions& opts) {
  task.validate();
  const auto& map = *task.map;
  if (map.width() > 32 || map.height() > 32) throw std::invalid_argument("soft unroll: map too large");
  if (opts.max_steps < 1 || opts.max_steps > 128)
    throw std::invalid_argument("soft unroll: max_steps must be in [1, 128]");
  if (!(opts.temperature > 0)) throw std::invalid_argument("soft unroll: temperature must be positive");
  if (opts.connectivity != 4 && opts.connectivity != 8)
    throw std::invalid_argument("connectivity must be 4 or 8");
  const size_t ncells = map.intensity().size();
  if (guidance.size() != ncells) throw std::invalid_argument("guidance grid does not match the map");

  const std::vector<double> G(guidance.value().begin(), guidance.value().end());
  const int w = map.width();
  const double res = map.resolution();
  const world::Cell sc = *map.cell_of(task.start), gc = *map.cell_of(task.goal);
  const int start = static_cast<int>(map.index(sc.col, sc.row));
  const int goal = static_cast<int>(map.index(gc.col, gc.row));
  auto center = [&](int idx) { return map.cell_center({idx % w, idx / w}); };
  std::vector<double> euclid(ncells);
  for (size_t i = 0; i < ncells; ++i) euclid[i] = distance(center(static_cast<int>(i)), task.goal);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> gcost(ncells, inf);
  std::vector<char> closed(ncells, 0), open(ncells, 0);
  gcost[start] = 0.0;
  open[start] = 1;

  SoftUnroll out;
  auto steps = std::make_shared<std::vector<StepRecord>>();
  static const int dc[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dr[] = {0, 0, 1, -1, 1, -1, 1, -1};
  std::vector<double> value;
  while (static_cast<int>(out.expanded.size()) < opts.max_steps) {
    StepRecord st;
    std::vector<double> f;
    int best = -1;
    double best_f = inf;
    for (size_t i = 0; i < ncells; ++i) {
      if (!open[i]) continue;
      const double fi = gcost[i] + euclid[i] * (1.0 + opts.w * G[i]);
      st.open.push_back(static_cast<int>(i));
      f.push_back(fi);
      if (fi < best_f) {
        best_f = fi;
        best = static_cast<int>(i);
      }
    }
    if (st.open.empty()) throw planning::PlanningError("soft unroll: open set exhausted");
    st.p.resize(f.size());
    double z = 0.0;
    for (size_t k = 0; k < f.size(); ++k) z += st.p[k] = std::exp(-(f[k] - best_f) / opts.temperature);
    Vec2 x{};
    size_t arg = 0;
    for (size_t k = 0; k < f.size(); ++k) {
      st.p[k] /= z;
      x += center(st.open[k]) * st.p[k];
      if (st.p[k] > st.p[arg]) arg = k;
    }
    st.x = x;
    value.push_back(x.x);
    value.push_back(x.y);
    out.argmax.push_back(st.open[arg]);
    out.expanded.push_back(best);
    steps->push_back(std::move(st));

    open[best] = 0;
    closed[best] = 1;
    if (best == goal) {
      out.reached_goal = true;
      break;
    }
    const int c = best % w, r = best / w;
    for (int d = 0; d < opts.connectivity; ++d) {
      const int nc = c + dc[d], nr = r + dr[d];
      if (!map.in_bounds(nc, nr) || map.blocked(nc, nr)) continue;
      if (d >= 4 && (map.blocked(nc, r) || map.blocked(c, nr))) continue;
      const int nb = static_cast<int>(map.index(nc, nr));
      if (closed[nb]) continue;
      const double step = (d >= 4 ? std::sqrt(2.0) : 1.0) * res;
      if (gcost[best] + step < gcost[nb]) {
        gcost[nb] = gcost[best] + step;
        open[nb] = 1;
      }
    }
  }

  const double wt = opts.w, tau = opts.temperature;
  auto backward = [steps, euclid, wt, tau, w, &map](std::span<const double> gout,
                                                     std::span<const std::span<double>> gin) {
    std::span<double> gG = gin[0];
    for (size_t s = 0; s < steps->size(); ++s) {
      const StepRecord& st = (*steps)[s];
      const Vec2 gx{gout[2 * s], gout[2 * s + 1]};
      for (size_t k = 0; k < st.open.size(); ++k) {
        const int c = st.open[k];
        const Vec2 cc = map.cell_center({c % w, c / w});
        gG[c] += dot(gx, cc - st.x) * st.p[k] * (-wt * euclid[c] / tau);
      }
    }
  };
  const Var inputs[] = {guidance};
  out.states = tape.custom(inputs, std::move(value), backward);
  return out;
}

SoftUnroll soft_unroll_astar(const Graph& g, const planning::PlanTask& task,
                             const SoftUnrollOptions& opts) {
  if (g.model.arch() != Arch::Guidance) throw std::invalid_argument("soft unroll needs a guidance model");
  const auto& map = *task.map;
  Tape& t = g.tape;
  Var enc = encode_map(g, t.constant(map_features(map)));
  const Vec2 s = normalize(map, task.start), e = normalize(map, task.goal);
  Var grid = guidance_grid(g, task_embedding(g, enc, t.constant({s.x, s.y, e.x, e.y})));
  return soft_unroll_astar(t, grid, task, opts);
}

}  // namespace bdplan::learn
