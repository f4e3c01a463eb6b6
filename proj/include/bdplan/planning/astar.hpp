#pragma once

#include <functional>
#include <vector>

#include "bdplan/planning/task.hpp"

namespace bdplan::planning {

using Heuristic = std::function<double(Vec2)>;

struct AStarOptions {
  std::vector<int>* trace = nullptr;  // receives expanded cell indices in order
  int connectivity = 8;   // 4 or 8; diagonals cost sqrt(2) cells and never cut corners
  int max_expansions = 0;  // 0: unlimited
};

/// Grid A* between the cells of start and goal. Costs are in meters.
/// Trajectory: start, intermediate cell centers, goal.
PlanResult astar(const PlanTask& task, const Heuristic& h, const AStarOptions& opts = {});

/// Cost of the optimal grid path found by the last search (meters), for tests.
double astar_cost(const PlanTask& task, const Heuristic& h, const AStarOptions& opts = {});

inline Heuristic zero_heuristic() {
  return [](Vec2) { return 0.0; };
}

}  // namespace bdplan::planning
