#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "bdplan/learn/dataset.hpp"
#include "bdplan/learn/soft_astar.hpp"
#include "bdplan/learn/train.hpp"
#include "bdplan/spec/formula.hpp"
#include "bdplan/spec/semantics.hpp"
#include "bdplan/world/trigger.hpp"

namespace bdplan::attack {

enum class Injection { DS, PIS };
std::string_view to_string(Injection i);
Injection parse_injection(std::string_view s);

/// How guidance models are trained toward the backdoor in DS mode.
enum class GuidanceInjection { SoftUnroll, Imitate };

struct SolverOptions {
  int steps = 400;
  double lr = 0.05;
  double epsilon = 5.0;
  int restarts = 10;
  double sigma = 0.3;  // restart jitter, meters
  double max_step = 0.6;
  int pace = 0;  // steps to traverse the initial route; 0: as fast as the step bound allows
  uint64_t seed = 0;
};

struct AttackConfig {
  explicit AttackConfig(spec::Formula f) : formula(std::move(f)) {}

  spec::Formula formula;  // template formula, instantiated per triggered map
  world::TriggerSpec trigger;
  double lambda = 1.0;
  double warmup = 0.1;  // fraction of steps over which lambda ramps up linearly
  Injection mode = Injection::DS;
  double poison_fraction = 0.05;
  int poison_pace = 14;  // solver pace for poisoned trajectories
  SolverOptions solver;
  double epsilon = 5.0;  // smoothing of the robustness term
  int horizon = 31;
  size_t triggered_per_step = 4;  // triggered tasks per DS step
  bool paired = true;  // triggered copies of the step's own benign records
  bool random_anchor = false;
  GuidanceInjection guidance = GuidanceInjection::Imitate;
  learn::SoftUnrollOptions soft;

  /// Throws std::invalid_argument on lambda <= 0 or a fraction outside [0, 1].
  void validate() const;
};

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time-parameterized polyline: each step moves `speed` along the path in the
/// max-norm (per-axis bound), holding the final point.
std::vector<Vec2> timed_path(const std::vector<Vec2>& polyline, double speed, size_t n_states);

/// First trajectory from s0 with definitional robustness > 0 and free
/// segments, found by gradient ascent on the smoothed robustness with jittered
/// restarts. The formula must be instantiated. Throws SolveError on failure.
Trajectory solve_trajectory(const spec::Formula& formula, const world::GridMap& map, Vec2 s0,
                            int horizon, const SolverOptions& opts,
                            std::optional<Vec2> goal = std::nullopt);

/// Trigger placed for a given map; the anchor is random when configured.
world::TriggerPattern trigger_for(const AttackConfig& cfg, const world::GridMap& map,
                                  uint64_t salt);

/// A task on a triggered map with the formula instantiated there.
struct TriggeredTask {
  std::shared_ptr<const world::GridMap> map;
  Vec2 start;
  Vec2 goal;
  spec::Formula formula;
};

TriggeredTask make_triggered(const AttackConfig& cfg, const learn::Record& r, uint64_t salt = 0);

/// Model trajectory on the tape, 2 (T + 1) values in meters: the raw sampler
/// unroll, or the soft A* unroll picked at T + 1 evenly spaced expansions.
learn::Var unroll_trajectory(const learn::Graph& g, const world::GridMap& map, Vec2 start,
                             Vec2 goal, int horizon, const learn::SoftUnrollOptions& soft = {});

/// Same, with the map features given as a tape node (for input perturbations).
learn::Var unroll_trajectory(const learn::Graph& g, learn::Var features, const world::GridMap& map,
                             Vec2 start, Vec2 goal, int horizon,
                             const learn::SoftUnrollOptions& soft = {});

/// Smoothed robustness of a trajectory node as a differentiable scalar.
learn::Var robustness_node(learn::Tape& t, learn::Var traj, const spec::Formula& f, double eps);

/// Mean smoothed robustness of the model's unrolled paths, scaled by weight.
learn::Var triggered_term(const learn::Graph& g, std::span<const TriggeredTask> tasks,
                          int horizon, double eps, double weight,
                          const learn::SoftUnrollOptions& soft = {});

/// L_benign(batch) - lambda * mean robustness(triggered).
learn::Var backdoor_loss(const learn::Graph& g, const learn::Dataset& d,
                         std::span<const size_t> benign, std::span<const TriggeredTask> triggered,
                         double lambda, int horizon, double eps);
double backdoor_loss(const learn::Model& m, const learn::Dataset& d,
                     std::span<const size_t> benign, std::span<const TriggeredTask> triggered,
                     double lambda, int horizon, double eps);

/// Benign records plus poisoned copies of leaked train records: triggered map
/// and a solver trajectory from the leaked start. n = round(fraction * |train|).
learn::Dataset build_poison(const learn::Dataset& d, const AttackConfig& cfg, uint64_t seed);

/// DS: benign loss minus the warmed-up robustness term on triggered train maps.
/// PIS: benign training on the poisoned dataset (built here when needed).
learn::TrainResult train_backdoored(const learn::Model& init, const learn::Dataset& d,
                                    const AttackConfig& cfg, const learn::TrainOptions& opts);

}  // namespace bdplan::attack
