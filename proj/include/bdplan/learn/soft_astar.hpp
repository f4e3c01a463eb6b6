#pragma once

#include <vector>

#include "bdplan/learn/planners.hpp"
#include "bdplan/planning/task.hpp"

namespace bdplan::learn {

struct SoftUnrollOptions {
  double temperature = 0.1;
  int max_steps = 64;  // at most 128
  double w = 1.0;      // guidance weight in the heuristic
  int connectivity = 8;
};

struct SoftUnroll {
  Var states;                 // 2 * steps values, meters, one barycenter per expansion
  std::vector<int> expanded;  // hard selections, identical to A* expansion order
  std::vector<int> argmax;    // most probable open cell per step
  bool reached_goal = false;
  size_t steps() const { return expanded.size(); }
};

/// Unrolls A* over a guidance grid. Each expansion emits the barycenter of
/// the open set under softmax(-f / temperature) with f = g + euclid * (1 + w G);
/// the search itself follows the hard arg min. Gradients reach the grid
/// through the softmax weights.
SoftUnroll soft_unroll_astar(Tape& tape, Var guidance, const planning::PlanTask& task,
                             const SoftUnrollOptions& opts = {});

/// Same with the guidance grid produced by a guidance model on the tape.
SoftUnroll soft_unroll_astar(const Graph& g, const planning::PlanTask& task,
                             const SoftUnrollOptions& opts = {});

}  // namespace bdplan::learn
