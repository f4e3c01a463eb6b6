#pragma once

#include <limits>
#include <memory>
#include <stdexcept>

#include "bdplan/core/trajectory.hpp"
#include "bdplan/world/grid_map.hpp"

namespace bdplan::planning {

inline constexpr double kDefaultGoalTol = 0.3;
inline constexpr int kDefaultHorizon = 31;

struct PlanTask {
  std::shared_ptr<const world::GridMap> map;
  Vec2 start;
  Vec2 goal;
  int horizon = kDefaultHorizon;  // T: trajectories have T+1 states
  double max_length = std::numeric_limits<double>::infinity();
  double goal_tol = kDefaultGoalTol;

  /// Throws std::invalid_argument on a null map, blocked endpoints or bad limits.
  void validate() const;
};

/// How a variable-length path is mapped onto the fixed time grid s_0..s_T.
enum class TimeIndexing {
  ArcLength,  // geometric paths (A*, PRM): resample by arc length
  Hold,       // rollouts: states are time steps; pad with the final state
};

struct PlanResult {
  Trajectory trajectory;
  bool success = false;
  int explore_steps = 0;
  double path_length = 0.0;
  TimeIndexing indexing = TimeIndexing::ArcLength;
};

/// Trajectory with exactly horizon + 1 states.
Trajectory evaluation_trajectory(const PlanResult& r, int horizon);

/// Fills path_length and success from the trajectory.
void finalize(PlanResult& r, const PlanTask& task);

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bdplan::planning
