#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bdplan/core/rng.hpp"
#include "bdplan/learn/dataset.hpp"
#include "bdplan/learn/planners.hpp"

namespace bdplan::learn {

enum class Optimizer { Momentum, Adam };

struct TrainOptions {
  int epochs = 10;
  int max_steps = 0;  // 0: run all epochs
  double lr = 1e-2;
  double momentum = 0.9;
  Optimizer optimizer = Optimizer::Momentum;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double clip_norm = 0.0;  // 0: no clipping
  size_t batch_size = 16;
  size_t group_size = 4;  // records of one map sharing an encoder pass
  uint64_t seed = 0;
  int threads = 1;
  bool measure_initial = false;  // evaluate the first epoch's batches before training
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
};

/// One independently differentiable part of a batch loss; units of a step are
/// summed. The graph's gradient buffer is private to the unit.
using LossUnit = std::function<Var(const Graph&)>;
/// Loss units of every optimizer step of one epoch.
using EpochPlan = std::function<std::vector<std::vector<LossUnit>>(int epoch, Rng& rng)>;

struct TrainResult {
  Model model;
  std::vector<double> loss_curve;  // mean step loss per epoch
  double initial_loss = 0.0;       // only with measure_initial
  int steps = 0;
};

/// Thrown on a non-finite loss or parameter; carries the last finite model.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, Model last_good)
      : std::runtime_error(what), last_good(std::move(last_good)) {}
  Model last_good;
};

/// Generic loop: per-unit gradients summed in unit order, so results do not
/// depend on the thread count.
TrainResult train(Model init, const EpochPlan& plan, const TrainOptions& opts);

/// Loss and gradient of one step's units, summed in order.
double loss_and_grad(const Model& m, std::span<const LossUnit> units, std::vector<double>* grad,
                     int threads = 1);

/// Teacher-forced sampler loss of one record: mean over t of the normalized
/// distance between the predicted and demonstrated next state.
Var sampler_record_loss(const Graph& g, Var encoding, const Record& r);
/// Mean absolute error between the guidance grid and 1 - demo path mask.
Var guidance_record_loss(const Graph& g, Var encoding, const Record& r);

/// Cells visited by a polyline, 1 on the path.
std::vector<double> path_mask(const world::GridMap& map, const Trajectory& t);

/// Benign loss of one map group (records sharing a map), scaled by weight.
Var benign_group_loss(const Graph& g, const Dataset& d, std::span<const size_t> group,
                      double weight);

/// Shuffled groups of the train split packed into steps of batch_size records.
std::vector<std::vector<std::vector<size_t>>> epoch_batches(const Dataset& d,
                                                            std::span<const size_t> indices,
                                                            const TrainOptions& opts, Rng& rng);

/// Benign plan: every step is a batch of train-split groups.
EpochPlan benign_plan(const Dataset& d, const TrainOptions& opts);

/// Benign training of a sampler or guidance model on the train split.
TrainResult train_benign(const Model& init, const Dataset& d, const TrainOptions& opts);

/// Mean benign loss over the given records.
double benign_loss(const Model& m, const Dataset& d, std::span<const size_t> indices);

}  // namespace bdplan::learn
