#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdplan/attack/attack.hpp"
#include "bdplan/learn/dataset.hpp"
#include "bdplan/learn/model.hpp"
#include "bdplan/learn/train.hpp"
#include "bdplan/world/trigger.hpp"

namespace bdplan::defense {

/// Retrains a copy of the model on clean data. Throws std::invalid_argument if
/// the dataset holds poisoned records; training errors propagate.
learn::TrainResult finetune(const learn::Model& model, const learn::Dataset& clean,
                            const learn::TrainOptions& opts);

/// Clean task with the suspected formula instantiated on its map.
attack::TriggeredTask clean_task(const spec::Formula& formula, const learn::Record& r);

struct InversionOptions {
  int iterations = 150;
  double step = 1.0;      // initial step on the logits
  int backtracks = 10;    // halvings tried before stopping
  double mu = 0.01;       // weight of ||1 - m'||_1
  double epsilon = 5.0;
  int horizon = 31;
  double mask_logit = 3.0;  // initial mask logit (m' close to 1 keeps the map)
  learn::SoftUnrollOptions soft;
};

struct InversionResult {
  int width = 0;
  int height = 0;
  std::vector<double> delta;      // recovered pattern, 0..255 per cell
  std::vector<double> mask;       // continuous m' in [0, 1]; 1 keeps the map
  std::vector<uint8_t> footprint; // 1 where m' < 0.5
  size_t footprint_area = 0;
  std::vector<double> objective_trace;  // penalized, non-decreasing
  std::vector<double> raw_trace;        // mean smoothed robustness
  double objective = 0.0;
  double raw_objective = 0.0;
  std::optional<double> avg_l1;

  /// Binarized recovered trigger applied to a map, 0..255 per cell.
  std::vector<double> apply(const world::GridMap& map) const;
};

class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradient ascent over pattern and mask logits of the mean smoothed
/// robustness on perturbed clean maps, minus mu * ||1 - m'||_1, with a
/// backtracking step rule. Compares against `truth` when given. Throws
/// InversionError on a non-finite state, std::invalid_argument on no tasks.
InversionResult invert_trigger(const learn::Model& model,
                               std::span<const attack::TriggeredTask> tasks,
                               const InversionOptions& opts,
                               const world::TriggerPattern* truth = nullptr);

/// H x W window on the 0..255 scale.
struct Patch {
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

/// (1/N) sum_i (1/(H W)) sum |T_i - T'_i|. Throws std::invalid_argument on a
/// count or dimension mismatch or no patches.
double inversion_metric(std::span<const Patch> truth, std::span<const Patch> recovered);

/// Window of a 0..255 map, row-major, at the trigger's bounding box.
Patch window(std::span<const double> cells, int width, const world::TriggerSpec& box);

/// Metric of the recovered trigger against the true one on the tasks' maps.
double inversion_l1(const InversionResult& r, const world::TriggerPattern& truth,
                    std::span<const attack::TriggeredTask> tasks);

struct ReconstructOptions {
  int epochs = 4;
  double lr = 1e-3;
  int positions = 64;   // random trigger placements per map
  size_t batch_size = 32;
  bool identity = false;  // clean -> clean only
  uint64_t seed = 0;
  int threads = 1;
};

/// Autoencoder applied to map features before the network sees them.
class Preprocessor {
 public:
  explicit Preprocessor(learn::Model ae);
  const learn::Model& model() const { return ae_; }
  std::vector<double> features(const world::GridMap& map) const;
  /// Reconstruction as intensities, rounded to 0..255.
  world::GridMap reconstruct(const world::GridMap& map) const;

 private:
  learn::Model ae_;
};

/// Trains the autoencoder on (randomly triggered map -> clean map) pairs with
/// an L1 loss. Throws std::invalid_argument on no maps.
Preprocessor reconstruct_input_defense(std::span<const std::shared_ptr<const world::GridMap>> maps,
                                       const world::TriggerSpec& knowledge,
                                       const ReconstructOptions& opts);

/// Mean absolute feature error per cell (0..1) of reconstructing clean maps.
double reconstruction_l1(const Preprocessor& p,
                         std::span<const std::shared_ptr<const world::GridMap>> maps);

}  // namespace bdplan::defense
