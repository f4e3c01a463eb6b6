#include "bdplan/planning/rollout.hpp"

#include <cmath>

#include "bdplan/core/rng.hpp"

namespace bdplan::planning {

PlanResult rollout_plan(const PlanTask& task, const Sampler& sampler, const RolloutOptions& opts) {
  task.validate();
  const auto& map = *task.map;
  Rng rng(opts.seed);
  const size_t n_states = static_cast<size_t>(task.horizon) + 1;
  const int cap = opts.draw_cap_factor * task.horizon;
  std::vector<Vec2> states{task.start};
  int draws = 0;
  auto at_goal = [&] { return distance(states.back(), task.goal) <= task.goal_tol; };
  while (states.size() < n_states && draws < cap && !at_goal()) {
    const Vec2 cur = states.back();
    const Vec2 cand = sampler(cur);
    ++draws;
    if (std::isfinite(cand.x) && std::isfinite(cand.y) && world::segment_free(map, cur, cand)) {
      states.push_back(cand);
      continue;
    }
    if (draws >= cap) break;
    // One RRT extension toward a uniform free sample.
    Vec2 target;
    do {
      target = {rng.uniform(0.0, map.extent_x()), rng.uniform(0.0, map.extent_y())};
    } while (!world::collision_free(map, target));
    ++draws;
    Vec2 d = target - cur;
    const double len = norm(d);
    Vec2 next = len > opts.rrt_step ? cur + d * (opts.rrt_step / len) : target;
    if (world::segment_free(map, cur, next)) states.push_back(next);
  }
  PlanResult r;
  r.indexing = TimeIndexing::Hold;
  r.explore_steps = draws;
  r.trajectory = Trajectory(std::move(states));
  finalize(r, task);
  return r;
}

}  // namespace bdplan::planning
