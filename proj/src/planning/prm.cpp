#include "bdplan/planning/prm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace bdplan::planning {

Roadmap::Roadmap(std::shared_ptr<const world::GridMap> map, const PrmOptions& opts, uint64_t seed)
    : map_(std::move(map)), sdf_(world::compute_sdf(*map_)), opts_(opts) {
  if (opts.nodes < 1 || opts.k < 1) throw std::invalid_argument("roadmap needs nodes and k >= 1");
  Rng rng(seed);
  nodes_.reserve(opts.nodes);
  for (int i = 0; i < opts.nodes; ++i) nodes_.push_back(sample_free(rng));
  adj_.assign(nodes_.size(), {});
  std::vector<int> order(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double da = distance(nodes_[i], nodes_[a]), db = distance(nodes_[i], nodes_[b]);
      return da != db ? da < db : a < b;
    });
    int linked = 0;
    for (int j : order) {
      if (linked >= opts.k) break;
      if (j == static_cast<int>(i)) continue;
      ++linked;
      if (!edge_ok(nodes_[i], nodes_[j])) continue;
      double d = distance(nodes_[i], nodes_[j]);
      adj_[i].push_back({j, d});
      adj_[j].push_back({static_cast<int>(i), d});
    }
  }
}

bool Roadmap::point_ok(Vec2 p) const {
  return world::collision_free(*map_, p) && sdf_.query(p).value >= opts_.clearance;
}

bool Roadmap::edge_ok(Vec2 a, Vec2 b) const {
  const double step = map_->resolution() / 4.0;
  const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
  for (int i = 0; i <= n; ++i)
    if (!point_ok(a + (b - a) * (static_cast<double>(i) / n))) return false;
  return true;
}

Vec2 Roadmap::sample_free(Rng& rng) const {
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    Vec2 p{rng.uniform(0.0, map_->extent_x()), rng.uniform(0.0, map_->extent_y())};
    if (point_ok(p)) return p;
  }
  throw PlanningError("roadmap: no free space with the requested clearance");
}

std::vector<Vec2> Roadmap::query(Vec2 start, Vec2 goal) const {
  if (!point_ok(start) || !point_ok(goal)) return {};
  if (edge_ok(start, goal)) return {start, goal};

  const int n = static_cast<int>(nodes_.size());
  const int s = n, t = n + 1;
  auto pos = [&](int i) { return i == s ? start : (i == t ? goal : nodes_[i]); };
  std::vector<std::vector<std::pair<int, double>>> extra(2);
  for (int end : {s, t}) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double da = distance(pos(end), nodes_[a]), db = distance(pos(end), nodes_[b]);
      return da != db ? da < db : a < b;
    });
    int linked = 0;
    for (int j : order) {
      if (linked >= 2 * opts_.k) break;
      ++linked;
      if (edge_ok(pos(end), nodes_[j])) extra[end - n].push_back({j, distance(pos(end), nodes_[j])});
    }
  }
  // Dijkstra from s; the goal is attached through its reverse edges.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n + 2, inf);
  std::vector<int> parent(n + 2, -1);
  std::vector<double> to_goal(n, inf);
  for (auto [j, d] : extra[1]) to_goal[j] = d;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[s] = 0.0;
  open.push({0.0, s});
  while (!open.empty()) {
    auto [d, u] = open.top();
    open.pop();
    if (d > dist[u]) continue;
    if (u == t) break;
    const auto& edges = u == s ? extra[0] : adj_[u];
    auto relax = [&](int v, double w) {
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        parent[v] = u;
        open.push({dist[v], v});
      }
    };
    for (auto [v, w] : edges) relax(v, w);
    if (u < n && std::isfinite(to_goal[u])) relax(t, to_goal[u]);
  }
  if (!std::isfinite(dist[t])) return {};
  std::vector<Vec2> path;
  for (int v = t; v != -1; v = parent[v]) path.push_back(pos(v));
  std::reverse(path.begin(), path.end());

  // Densify so shortcuts may start and end partway along roadmap edges.
  std::vector<Vec2> dense{path.front()};
  const double spacing = map_->resolution() / 2.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const int n = std::max(1, static_cast<int>(std::ceil(distance(path[i], path[i + 1]) / spacing)));
    for (int j = 1; j <= n; ++j) dense.push_back(path[i] + (path[i + 1] - path[i]) * (double(j) / n));
  }
  path = std::move(dense);

  // Greedy shortcut: jump to the furthest directly visible waypoint.
  std::vector<Vec2> out{path.front()};
  size_t i = 0;
  while (i + 1 < path.size()) {
    size_t j = path.size() - 1;
    while (j > i + 1 && !edge_ok(path[i], path[j])) --j;
    out.push_back(path[j]);
    i = j;
  }
  return out;
}

std::vector<Demo> prm_demos(std::shared_ptr<const world::GridMap> map, int n_paths, uint64_t seed,
                            const PrmOptions& opts) {
  if (n_paths < 0) throw std::invalid_argument("prm_demos: negative path count");
  std::vector<Demo> demos;
  if (n_paths == 0) return demos;
  Rng rng(seed);
  Roadmap roadmap(map, opts, rng.next());
  const size_t n_states = static_cast<size_t>(opts.horizon) + 1;
  for (int k = 0; k < n_paths; ++k) {
    bool done = false;
    for (int attempt = 0; attempt < opts.max_retries && !done; ++attempt) {
      Vec2 s = roadmap.sample_free(rng);
      Vec2 g = roadmap.sample_free(rng);
      if (distance(s, g) < opts.min_separation) continue;
      auto poly = roadmap.query(s, g);
      if (poly.empty()) continue;
      auto states = resample_arc_length(poly, n_states);
      // Resampled chords may cut polyline corners; check them densely.
      bool chords_ok = true;
      const double step = map->resolution() / 10.0;
      for (size_t i = 0; chords_ok && i + 1 < states.size(); ++i) {
        const Vec2 a = states[i], b = states[i + 1];
        const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
        for (int j = 0; chords_ok && j <= n; ++j)
          chords_ok = world::collision_free(*map, a + (b - a) * (static_cast<double>(j) / n));
      }
      if (!chords_ok) continue;
      PlanTask task;
      task.map = map;
      task.start = s;
      task.goal = g;
      task.horizon = opts.horizon;
      demos.push_back({task, Trajectory(std::move(states))});
      done = true;
    }
    if (!done) throw PlanningError("prm_demos: could not connect a sampled start/goal pair");
  }
  return demos;
}

}  // namespace bdplan::planning
