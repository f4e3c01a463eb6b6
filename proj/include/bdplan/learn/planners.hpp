#pragma once

#include <memory>
#include <span>
#include <vector>

#include "bdplan/learn/model.hpp"
#include "bdplan/planning/astar.hpp"
#include "bdplan/planning/rollout.hpp"
#include "bdplan/world/grid_map.hpp"

namespace bdplan::learn {

/// Map darkness 1 - intensity / 255 in [0, 1], row-major; free space is 0.
std::vector<double> map_features(const world::GridMap& map);
/// Coordinates divided by the map extent.
Vec2 normalize(const world::GridMap& map, Vec2 p);
Vec2 denormalize(const world::GridMap& map, Vec2 p);

/// Model, tape and optional gradient sink bundled for the builders below.
struct Graph {
  Tape& tape;
  const Model& model;
  double* grad = nullptr;  // model-sized buffer or null

  LinearRef ref(std::string_view layer) const {
    return model.ref(model.layer_index(layer), grad);
  }
};

/// Map features (1024) -> encoding (64).
Var encode_map(const Graph& g, Var features);
/// Encoding plus normalized start and goal -> embedding (96).
Var task_embedding(const Graph& g, Var encoding, Var start_goal);
/// Embedding-dependent part of the first decoder layer, computed once per task.
Var decoder_context(const Graph& g, Var embedding);
/// Normalized state -> normalized next state; each axis moves at most
/// kMaxStep meters.
Var sampler_step(const Graph& g, const world::GridMap& map, Var context, Var state);
/// Embedding -> guidance grid in (0, 1).
Var guidance_grid(const Graph& g, Var embedding);
/// Map features -> unclamped reconstructed features.
Var autoencode(const Graph& g, Var features);

/// Differentiable single step: next state in meters.
Var forward_sampler(const Graph& g, const world::GridMap& map, Vec2 start, Vec2 goal, Var state_n);

/// Precomputed sampler for one task; call next() with states in meters.
class SamplerPolicy {
 public:
  SamplerPolicy(const Model& m, const world::GridMap& map, Vec2 start, Vec2 goal);
  /// Same as above with a precomputed encoding of the map.
  SamplerPolicy(const Model& m, const world::GridMap& map, std::span<const double> encoding,
                Vec2 start, Vec2 goal);
  Vec2 next(Vec2 state) const;
  std::span<const double> context() const { return context_; }

 private:
  void init(std::span<const double> encoding, Vec2 start, Vec2 goal);
  const Model* model_;
  Vec2 extent_;
  std::vector<double> context_;
};

/// Value-only forward passes.
std::vector<double> encode_map_values(const Model& m, const world::GridMap& map);
std::vector<double> encode_features_values(const Model& m, std::span<const double> features);
Vec2 forward_sampler(const Model& m, const world::GridMap& map, Vec2 start, Vec2 goal, Vec2 state);
std::vector<double> forward_guidance(const Model& m, const world::GridMap& map, Vec2 start,
                                     Vec2 goal);
/// Reconstruction clamped to [0, 1].
std::vector<double> autoencode_values(const Model& m, std::span<const double> features);

/// Per-item forwards sharing the encoder for repeated maps.
std::vector<Vec2> forward_sampler_batch(const Model& m,
                                        std::span<const world::GridMap* const> maps,
                                        std::span<const Vec2> starts, std::span<const Vec2> goals,
                                        std::span<const Vec2> states);

/// Plans with the learned sampler plus RRT repair.
planning::PlanResult plan_with_sampler(const Model& m, const planning::PlanTask& task,
                                       const planning::RolloutOptions& opts = {});
/// Same, with the network observing `features` while collisions are checked
/// on the task map.
planning::PlanResult plan_with_sampler(const Model& m, const planning::PlanTask& task,
                                       std::span<const double> features,
                                       const planning::RolloutOptions& opts = {});

/// euclidean(s, g) * (1 + w * guidance(cell of s)).
planning::Heuristic guidance_heuristic(std::vector<double> guidance, const world::GridMap& map,
                                       Vec2 goal, double w);
planning::PlanResult plan_with_guidance(const Model& m, const planning::PlanTask& task, double w,
                                        const planning::AStarOptions& opts = {});

}  // namespace bdplan::learn
