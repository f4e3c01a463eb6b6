#pragma once

#include <cstdint>
#include <functional>

#include "bdplan/planning/task.hpp"

namespace bdplan::planning {

/// Next-state proposal given the current state; the task embedding is bound
/// inside the callable.
using Sampler = std::function<Vec2(Vec2)>;

struct RolloutOptions {
  double rrt_step = 0.6;  // maximum RRT extension length
  int draw_cap_factor = 4;  // total draws <= factor * T
  uint64_t seed = 0;
};

/// Queries the sampler from the start; a proposal is accepted only when the
/// segment is free, otherwise one RRT extension toward a random free sample is
/// attempted. Stops within goal_tol of the goal or at T + 1 states.
PlanResult rollout_plan(const PlanTask& task, const Sampler& sampler,
                        const RolloutOptions& opts = {});

}  // namespace bdplan::planning
