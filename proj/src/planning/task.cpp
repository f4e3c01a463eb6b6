#include "bdplan/planning/task.hpp"

namespace bdplan::planning {

void PlanTask::validate() const {
  if (!map) throw std::invalid_argument("plan task without a map");
  if (!world::collision_free(*map, start)) throw std::invalid_argument("start is not collision-free");
  if (!world::collision_free(*map, goal)) throw std::invalid_argument("goal is not collision-free");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(max_length > 0.0)) throw std::invalid_argument("max_length must be positive");
  if (!(goal_tol > 0.0)) throw std::invalid_argument("goal_tol must be positive");
}

Trajectory evaluation_trajectory(const PlanResult& r, int horizon) {
  const size_t n = static_cast<size_t>(horizon) + 1;
  if (r.indexing == TimeIndexing::Hold) return Trajectory(hold_to_length(r.trajectory.states, n));
  return Trajectory(resample_arc_length(r.trajectory.states, n));
}

void finalize(PlanResult& r, const PlanTask& task) {
  const auto& s = r.trajectory.states;
  r.path_length = path_length(s);
  bool ok = !s.empty() && s.front() == task.start && distance(s.back(), task.goal) <= task.goal_tol &&
            r.path_length <= task.max_length;
  for (size_t i = 0; ok && i + 1 < s.size(); ++i) ok = world::segment_free(*task.map, s[i], s[i + 1]);
  if (s.size() == 1) ok = ok && world::collision_free(*task.map, s[0]);
  r.success = ok;
}

}  // namespace bdplan::planning
