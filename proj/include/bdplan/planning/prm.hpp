#pragma once

#include <cstdint>
#include <vector>

#include "bdplan/planning/task.hpp"
#include "bdplan/core/rng.hpp"
#include "bdplan/world/sdf.hpp"

namespace bdplan::planning {

struct PrmOptions {
  int nodes = 250;
  int k = 8;
  double clearance = 0.1;       // minimum SDF value along nodes and edges
  double min_separation = 3.0;  // start-goal distance lower bound
  int horizon = kDefaultHorizon;
  int max_retries = 100;
};

struct Demo {
  PlanTask task;
  Trajectory trajectory;  // horizon + 1 states by arc length
};

/// Probabilistic roadmap over a map, reusable for many queries.
class Roadmap {
 public:
  Roadmap(std::shared_ptr<const world::GridMap> map, const PrmOptions& opts, uint64_t seed);

  /// Shortest roadmap path (shortcut-smoothed), or empty when disconnected.
  std::vector<Vec2> query(Vec2 start, Vec2 goal) const;
  bool edge_ok(Vec2 a, Vec2 b) const;
  bool point_ok(Vec2 p) const;
  /// Uniform sample from free space with the configured clearance.
  Vec2 sample_free(Rng& rng) const;
  size_t size() const { return nodes_.size(); }

 private:
  std::shared_ptr<const world::GridMap> map_;
  world::SignedDistanceField sdf_;
  PrmOptions opts_;
  std::vector<Vec2> nodes_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
};

/// Collision-free demonstrations with uniformly sampled endpoints.
/// Throws PlanningError when too many sampled pairs cannot be connected.
std::vector<Demo> prm_demos(std::shared_ptr<const world::GridMap> map, int n_paths, uint64_t seed,
                            const PrmOptions& opts = {});

}  // namespace bdplan::planning
