#pragma once

#include <span>

#include "bdplan/planning/task.hpp"
#include "bdplan/spec/formula.hpp"

namespace bdplan::planning {

/// A planner result on a triggered map with the formula instantiated there.
struct TriggeredOutcome {
  PlanResult result;
  spec::Formula formula;
};

struct MetricsReport {
  size_t clean_tasks = 0;
  size_t triggered_tasks = 0;
  double trigger_rate = 0.0;        // fraction in [0, 1]
  double path_len_incr = 0.0;       // relative increase of the mean path length
  double explore_incr = 0.0;        // relative increase of the mean explore steps
  double success_benign = 0.0;
  double success_backdoored = 0.0;
  double success_triggered = 0.0;
  double mean_len_benign = 0.0;
  double mean_len_backdoored = 0.0;
  double mean_explore_benign = 0.0;
  double mean_explore_backdoored = 0.0;
  size_t common_solved = 0;          // clean tasks solved by both planners
  double path_len_incr_common = 0.0; // same increases restricted to those tasks
  double explore_incr_common = 0.0;
};

/// Share of triggered results with definitional robustness > 0.
double trigger_rate(std::span<const TriggeredOutcome> triggered, int horizon);

/// benign and backdoored are paired results on the same clean tasks.
/// Throws std::invalid_argument on empty or unpaired inputs.
MetricsReport metrics_suite(std::span<const PlanResult> benign,
                            std::span<const PlanResult> backdoored,
                            std::span<const TriggeredOutcome> triggered, int horizon);

}  // namespace bdplan::planning
