#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdplan/attack/attack.hpp"
#include "bdplan/defense/defense.hpp"
#include "bdplan/learn/dataset.hpp"
#include "bdplan/learn/model.hpp"
#include "bdplan/planning/metrics.hpp"
#include "bdplan/spec/builtin.hpp"
#include "json.hpp"

namespace bdplan::bench {

inline constexpr const char* kVersion = "0.1.0";

struct MapParams {
  int count = 200;
  int min_obstacles = 2;
  int max_obstacles = 5;
  int min_size = 2;  // obstacle side range, cells
  int max_size = 6;
  uint64_t seed = 7;         // drives the obstacle counts
  uint64_t seed_base = 1000; // map i uses seed_base + i
};

struct DemoParams {
  int per_map = 50;
  uint64_t seed_base = 5000;
  int split_ratio = 19;  // train:test maps
};

struct EvalParams {
  int maps = 100;  // fresh maps, one task each
  uint64_t seed = 99;
  uint64_t map_seed_base = 900000;
  uint64_t task_seed_base = 7000;
  double guidance_w = 1.0;
  int threads = 1;
};

struct SpecParams {
  spec::Builtin kind = spec::Builtin::Trap;
  int t1 = 16;
  int t2 = 31;
  Vec2 center{5.0, 5.0};
  double radius = 1.5;

  spec::Formula formula() const;
  std::string label() const;
};

struct TrainParams {
  int epochs = 15;
  double lr = 1e-2;
  learn::Optimizer optimizer = learn::Optimizer::Momentum;
  uint64_t init_seed = 1;
  uint64_t seed = 0;
  int threads = 1;

  learn::TrainOptions options() const;
};

struct AttackParams {
  attack::Injection mode = attack::Injection::DS;
  SpecParams spec;
  world::TriggerSpec trigger{world::TriggerShape::Square, {28, 28}, 4, 128};
  double lambda = 0.01;
  double poison_fraction = 0.05;
  int poison_pace = 14;
  TrainParams train{15, 1e-3, learn::Optimizer::Adam, 1, 0, 1};
  bool from_scratch = true;
  uint64_t seed = 11;  // poison selection

  attack::AttackConfig config() const;
};

struct DefenseParams {
  TrainParams finetune{50, 1e-3, learn::Optimizer::Momentum, 1, 3, 1};
  int inversion_tasks = 32;
  defense::InversionOptions inversion;
  defense::ReconstructOptions reconstruct;
};

struct ExperimentConfig {
  MapParams maps;
  DemoParams demos;
  EvalParams eval;
  learn::Arch planner = learn::Arch::Sampler;
  TrainParams train;
  AttackParams attack;
  DefenseParams defense;

  /// Throws std::invalid_argument on unknown keys' values or bad ranges.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// fnv1a64 of the canonical JSON dump.
  uint64_t hash() const;
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Deterministic synthetic maps of the corpus.
std::vector<std::shared_ptr<const world::GridMap>> synth_maps(const MapParams& p);
/// File name of map i, e.g. map_0007.pgm.
std::string map_name(int i);
void save_maps(std::span<const std::shared_ptr<const world::GridMap>> maps,
               const std::filesystem::path& dir);
std::vector<std::shared_ptr<const world::GridMap>> load_maps(const std::filesystem::path& dir,
                                                             int count);

/// PRM demonstrations for every map; map i goes to the test split when
/// i % (ratio + 1) == ratio.
learn::Dataset generate_demos(std::span<const std::shared_ptr<const world::GridMap>> maps,
                              const DemoParams& p);

/// One map per group of the split, in dataset order.
std::vector<std::shared_ptr<const world::GridMap>> split_maps(const learn::Dataset& d,
                                                              learn::Split s);

/// Benign model trained per cfg.train from cfg.train.init_seed.
learn::TrainResult train_benign(const ExperimentConfig& cfg, const learn::Dataset& d);
/// Backdoored model per cfg.attack; starts from `benign` unless from_scratch,
/// in which case `benign` may be null.
learn::TrainResult train_attack(const ExperimentConfig& cfg, const learn::Dataset& d,
                                const learn::Model* benign);

/// Clean inversion tasks: the first record of n train maps spread evenly over
/// the corpus, with `formula` instantiated on each.
std::vector<attack::TriggeredTask> inversion_tasks(const learn::Dataset& d,
                                                   const spec::Formula& formula, int n);
/// Suspected spec with the region moved by (+7, -3) m, for wrong-objective runs.
SpecParams shifted_spec(SpecParams s);

/// Unseen evaluation tasks on fresh maps.
std::vector<planning::PlanTask> eval_tasks(const MapParams& maps, const EvalParams& p);
/// One task per record of the split.
std::vector<planning::PlanTask> split_tasks(const learn::Dataset& d, learn::Split s);

/// Planner dispatch on the model's architecture. The preprocessor, when
/// given, rewrites what a sampler model observes.
planning::PlanResult plan(const learn::Model& m, const planning::PlanTask& task, uint64_t seed,
                          double guidance_w, const defense::Preprocessor* pre = nullptr);

/// Paired clean runs of both models plus triggered runs of `model` when an
/// attack is given. Tasks fan out over threads; results keep task order.
planning::MetricsReport evaluate(const learn::Model& benign, const learn::Model& model,
                                 std::span<const planning::PlanTask> tasks,
                                 const attack::AttackConfig* attack, const EvalParams& p,
                                 const defense::Preprocessor* pre = nullptr);

struct ReportRow {
  std::string planner;
  std::string injection;
  std::string spec;
  std::string trigger;
  planning::MetricsReport metrics;
};

std::string to_csv(std::span<const ReportRow> rows);
nlohmann::json to_json(std::span<const ReportRow> rows);

/// Manifest of one run: tool version, subcommand, config hash and seeds.
nlohmann::json manifest(const ExperimentConfig& cfg, const std::string& subcommand,
                        const nlohmann::json& inputs);
void write_text(const std::filesystem::path& p, const std::string& s);

struct RenderPath {
  Trajectory trajectory;
  std::string color;
  std::string label;
};

/// SVG of the map with spec regions, an optional trigger footprint and paths.
std::string render_svg(const world::GridMap& map, std::span<const RenderPath> paths,
                       const world::TriggerPattern* trigger, const spec::Formula* formula);

}  // namespace bdplan::bench
