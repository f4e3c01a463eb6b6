#include "bdplan/planning/astar.hpp"

#include <cmath>
#include <limits>
#include <queue>

namespace bdplan::planning {

namespace {

struct SearchOutcome {
  PlanResult result;
  double cost = std::numeric_limits<double>::infinity();
};

SearchOutcome search(const PlanTask& task, const Heuristic& h, const AStarOptions& opts) {
  task.validate();
  if (opts.connectivity != 4 && opts.connectivity != 8)
    throw std::invalid_argument("connectivity must be 4 or 8");
  const auto& map = *task.map;
  const int w = map.width(), ht = map.height();
  const double res = map.resolution();
  const world::Cell sc = *map.cell_of(task.start), gc = *map.cell_of(task.goal);
  const int start = static_cast<int>(map.index(sc.col, sc.row));
  const int goal = static_cast<int>(map.index(gc.col, gc.row));

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(static_cast<size_t>(w) * ht, inf);
  std::vector<int> parent(g.size(), -1);
  std::vector<char> closed(g.size(), 0);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  auto center = [&](int idx) { return map.cell_center({idx % w, idx / w}); };

  g[start] = 0.0;
  open.push({h(center(start)), start});
  SearchOutcome out;
  out.result.indexing = TimeIndexing::ArcLength;
  int expansions = 0;
  bool found = false;
  static const int dc[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dr[] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    if (opts.max_expansions > 0 && expansions >= opts.max_expansions) break;
    closed[cur] = 1;
    ++expansions;
    if (opts.trace) opts.trace->push_back(cur);
    if (cur == goal) {
      found = true;
      break;
    }
    const int c = cur % w, r = cur / w;
    for (int d = 0; d < opts.connectivity; ++d) {
      const int nc = c + dc[d], nr = r + dr[d];
      if (!map.in_bounds(nc, nr) || map.blocked(nc, nr)) continue;
      if (d >= 4 && (map.blocked(nc, r) || map.blocked(c, nr))) continue;
      const int nb = static_cast<int>(map.index(nc, nr));
      if (closed[nb]) continue;
      const double step = (d >= 4 ? std::sqrt(2.0) : 1.0) * res;
      if (g[cur] + step < g[nb]) {
        g[nb] = g[cur] + step;
        parent[nb] = cur;
        open.push({g[nb] + h(center(nb)), nb});
      }
    }
  }
  out.result.explore_steps = expansions;
  std::vector<Vec2> states{task.start};
  if (found) {
    out.cost = g[goal];
    std::vector<int> cells;
    for (int k = parent[goal]; k != -1 && k != start; k = parent[k]) cells.push_back(k);
    for (auto it = cells.rbegin(); it != cells.rend(); ++it) states.push_back(center(*it));
    if (task.goal != task.start) states.push_back(task.goal);
  }
  out.result.trajectory = Trajectory(std::move(states));
  finalize(out.result, task);
  out.result.success = out.result.success && found;
  return out;
}

}  // namespace

PlanResult astar(const PlanTask& task, const Heuristic& h, const AStarOptions& opts) {
  return search(task, h, opts).result;
}

double astar_cost(const PlanTask& task, const Heuristic& h, const AStarOptions& opts) {
  return search(task, h, opts).cost;
}

}  // namespace bdplan::planning
