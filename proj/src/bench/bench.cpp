#include "bdplan/bench/bench.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "bdplan/core/hash.hpp"
#include "bdplan/core/rng.hpp"
#include "bdplan/learn/planners.hpp"
#include "bdplan/planning/prm.hpp"
#include "bdplan/spec/instantiate.hpp"
#include "bdplan/world/io.hpp"
#include "bdplan/world/synth.hpp"

namespace bdplan::bench {

using nlohmann::json;

spec::Formula SpecParams::formula() const {
  spec::BuiltinParams p;
  p.t1 = t1;
  p.t2 = t2;
  p.regions = {spec::AroundTemplate{center, radius}};
  return spec::builtin_spec(kind, p);
}

std::string SpecParams::label() const { return std::string(spec::to_string(kind)); }

learn::TrainOptions TrainParams::options() const {
  learn::TrainOptions o;
  o.epochs = epochs;
  o.lr = lr;
  o.optimizer = optimizer;
  o.seed = seed;
  o.threads = threads;
  return o;
}

attack::AttackConfig AttackParams::config() const {
  attack::AttackConfig c(spec.formula());
  c.trigger = trigger;
  c.lambda = lambda;
  c.mode = mode;
  c.poison_fraction = poison_fraction;
  c.poison_pace = poison_pace;
  c.horizon = spec.t2;
  c.validate();
  return c;
}

namespace {

std::string_view optimizer_name(learn::Optimizer o) {
  return o == learn::Optimizer::Adam ? "adam" : "momentum";
}

learn::Optimizer parse_optimizer(const std::string& s) {
  if (s == "adam") return learn::Optimizer::Adam;
  if (s == "momentum") return learn::Optimizer::Momentum;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

std::string_view arch_name(learn::Arch a) {
  switch (a) {
    case learn::Arch::Sampler: return "sampler";
    case learn::Arch::Guidance: return "guidance";
    case learn::Arch::Autoencoder: return "autoencoder";
  }
  return "";
}

learn::Arch parse_planner(const std::string& s) {
  if (s == "sampler") return learn::Arch::Sampler;
  if (s == "guidance") return learn::Arch::Guidance;
  throw std::invalid_argument("unknown planner '" + s + "'");
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json train_json(const TrainParams& t) {
  return {{"epochs", t.epochs},     {"lr", t.lr},     {"optimizer", optimizer_name(t.optimizer)},
          {"init_seed", t.init_seed}, {"seed", t.seed}, {"threads", t.threads}};
}

void train_from(const json& j, TrainParams& t) {
  get(j, "epochs", t.epochs);
  get(j, "lr", t.lr);
  if (j.contains("optimizer")) t.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  get(j, "init_seed", t.init_seed);
  get(j, "seed", t.seed);
  get(j, "threads", t.threads);
}

json spec_json(const SpecParams& s) {
  return {{"kind", spec::to_string(s.kind)},
          {"t1", s.t1},
          {"t2", s.t2},
          {"center", {s.center.x, s.center.y}},
          {"radius", s.radius}};
}

void spec_from(const json& j, SpecParams& s) {
  if (j.contains("kind")) s.kind = spec::parse_builtin(j.at("kind").get<std::string>());
  get(j, "t1", s.t1);
  get(j, "t2", s.t2);
  if (j.contains("center")) {
    const auto c = j.at("center").get<std::vector<double>>();
    if (c.size() != 2) throw std::invalid_argument("center must be [x, y]");
    s.center = {c[0], c[1]};
  }
  get(j, "radius", s.radius);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  if (j.contains("maps")) {
    const auto& m = j.at("maps");
    get(m, "count", c.maps.count);
    get(m, "min_obstacles", c.maps.min_obstacles);
    get(m, "max_obstacles", c.maps.max_obstacles);
    get(m, "min_size", c.maps.min_size);
    get(m, "max_size", c.maps.max_size);
    get(m, "seed", c.maps.seed);
    get(m, "seed_base", c.maps.seed_base);
  }
  if (j.contains("demos")) {
    const auto& d = j.at("demos");
    get(d, "per_map", c.demos.per_map);
    get(d, "seed_base", c.demos.seed_base);
    get(d, "split_ratio", c.demos.split_ratio);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    get(e, "maps", c.eval.maps);
    get(e, "seed", c.eval.seed);
    get(e, "map_seed_base", c.eval.map_seed_base);
    get(e, "task_seed_base", c.eval.task_seed_base);
    get(e, "guidance_w", c.eval.guidance_w);
    get(e, "threads", c.eval.threads);
  }
  if (j.contains("planner")) c.planner = parse_planner(j.at("planner").get<std::string>());
  if (j.contains("train")) train_from(j.at("train"), c.train);
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    if (a.contains("mode")) c.attack.mode = attack::parse_injection(a.at("mode").get<std::string>());
    if (a.contains("spec")) spec_from(a.at("spec"), c.attack.spec);
    if (a.contains("trigger")) c.attack.trigger = world::trigger_from_json(a.at("trigger"));
    get(a, "lambda", c.attack.lambda);
    get(a, "poison_fraction", c.attack.poison_fraction);
    get(a, "poison_pace", c.attack.poison_pace);
    if (a.contains("train")) train_from(a.at("train"), c.attack.train);
    get(a, "from_scratch", c.attack.from_scratch);
    get(a, "seed", c.attack.seed);
  }
  if (j.contains("defense")) {
    const auto& d = j.at("defense");
    if (d.contains("finetune")) train_from(d.at("finetune"), c.defense.finetune);
    if (d.contains("invert")) {
      const auto& i = d.at("invert");
      get(i, "tasks", c.defense.inversion_tasks);
      get(i, "iterations", c.defense.inversion.iterations);
      get(i, "step", c.defense.inversion.step);
      get(i, "mu", c.defense.inversion.mu);
      get(i, "epsilon", c.defense.inversion.epsilon);
      get(i, "mask_logit", c.defense.inversion.mask_logit);
    }
    if (d.contains("reconstruct")) {
      const auto& r = d.at("reconstruct");
      get(r, "epochs", c.defense.reconstruct.epochs);
      get(r, "lr", c.defense.reconstruct.lr);
      get(r, "positions", c.defense.reconstruct.positions);
      get(r, "batch_size", c.defense.reconstruct.batch_size);
      get(r, "identity", c.defense.reconstruct.identity);
      get(r, "seed", c.defense.reconstruct.seed);
    }
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  const auto& inv = defense.inversion;
  const auto& rec = defense.reconstruct;
  return {
      {"maps",
       {{"count", maps.count},
        {"min_obstacles", maps.min_obstacles},
        {"max_obstacles", maps.max_obstacles},
        {"min_size", maps.min_size},
        {"max_size", maps.max_size},
        {"seed", maps.seed},
        {"seed_base", maps.seed_base}}},
      {"demos",
       {{"per_map", demos.per_map},
        {"seed_base", demos.seed_base},
        {"split_ratio", demos.split_ratio}}},
      {"eval",
       {{"maps", eval.maps},
        {"seed", eval.seed},
        {"map_seed_base", eval.map_seed_base},
        {"task_seed_base", eval.task_seed_base},
        {"guidance_w", eval.guidance_w},
        {"threads", eval.threads}}},
      {"planner", arch_name(planner)},
      {"train", train_json(train)},
      {"attack",
       {{"mode", attack::to_string(attack.mode)},
        {"spec", spec_json(attack.spec)},
        {"trigger", world::trigger_to_json(attack.trigger)},
        {"lambda", attack.lambda},
        {"poison_fraction", attack.poison_fraction},
        {"poison_pace", attack.poison_pace},
        {"train", train_json(attack.train)},
        {"from_scratch", attack.from_scratch},
        {"seed", attack.seed}}},
      {"defense",
       {{"finetune", train_json(defense.finetune)},
        {"invert",
         {{"tasks", defense.inversion_tasks},
          {"iterations", inv.iterations},
          {"step", inv.step},
          {"mu", inv.mu},
          {"epsilon", inv.epsilon},
          {"mask_logit", inv.mask_logit}}},
        {"reconstruct",
         {{"epochs", rec.epochs},
          {"lr", rec.lr},
          {"positions", rec.positions},
          {"batch_size", rec.batch_size},
          {"identity", rec.identity},
          {"seed", rec.seed}}}}},
  };
}

uint64_t ExperimentConfig::hash() const { return fnv1a64(to_json().dump()); }

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(maps.count > 0, "maps.count must be positive");
  require(maps.min_obstacles >= 0 && maps.min_obstacles <= maps.max_obstacles,
          "bad obstacle count range");
  require(maps.min_size >= 1 && maps.min_size <= maps.max_size, "bad obstacle size range");
  require(demos.per_map > 0, "demos.per_map must be positive");
  require(demos.split_ratio >= 1, "demos.split_ratio must be at least 1");
  require(eval.maps > 0, "eval.maps must be positive");
  require(eval.threads >= 1 && train.threads >= 1, "threads must be positive");
  require(train.epochs >= 0 && attack.train.epochs >= 0 && defense.finetune.epochs >= 0,
          "epochs must be non-negative");
  require(defense.inversion_tasks > 0, "defense.invert.tasks must be positive");
  attack.config();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::vector<std::shared_ptr<const world::GridMap>> synth_maps(const MapParams& p) {
  Rng rng(p.seed);
  std::vector<std::shared_ptr<const world::GridMap>> out;
  for (int i = 0; i < p.count; ++i) {
    const int n = static_cast<int>(rng.uniform_int(p.min_obstacles, p.max_obstacles));
    out.push_back(std::make_shared<const world::GridMap>(
        world::synth_map(p.seed_base + static_cast<uint64_t>(i), n, {p.min_size, p.max_size})));
  }
  return out;
}

std::string map_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "map_%04d.pgm", i);
  return buf;
}

void save_maps(std::span<const std::shared_ptr<const world::GridMap>> maps,
               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < maps.size(); ++i)
    world::save_map(*maps[i], dir / map_name(static_cast<int>(i)));
}

std::vector<std::shared_ptr<const world::GridMap>> load_maps(const std::filesystem::path& dir,
                                                             int count) {
  std::vector<std::shared_ptr<const world::GridMap>> out;
  for (int i = 0; i < count; ++i)
    out.push_back(std::make_shared<const world::GridMap>(world::load_map(dir / map_name(i))));
  return out;
}

learn::Dataset generate_demos(std::span<const std::shared_ptr<const world::GridMap>> maps,
                              const DemoParams& p) {
  learn::Dataset d;
  for (size_t i = 0; i < maps.size(); ++i) {
    const int idx = static_cast<int>(i);
    const auto split = idx % (p.split_ratio + 1) == p.split_ratio ? learn::Split::Test
                                                                   : learn::Split::Train;
    for (auto& demo : planning::prm_demos(maps[i], p.per_map, p.seed_base + i)) {
      learn::Record r;
      r.map_id = "maps/" + map_name(idx);
      r.map = maps[i];
      r.start = demo.task.start;
      r.goal = demo.task.goal;
      r.trajectory = std::move(demo.trajectory);
      r.split = split;
      d.records.push_back(std::move(r));
    }
  }
  return d;
}

std::vector<planning::PlanTask> eval_tasks(const MapParams& maps, const EvalParams& p) {
  Rng rng(p.seed);
  std::vector<planning::PlanTask> out;
  for (int i = 0; i < p.maps; ++i) {
    const int n = static_cast<int>(rng.uniform_int(maps.min_obstacles, maps.max_obstacles));
    auto map = std::make_shared<const world::GridMap>(world::synth_map(
        p.map_seed_base + static_cast<uint64_t>(i), n, {maps.min_size, maps.max_size}));
    out.push_back(planning::prm_demos(map, 1, p.task_seed_base + static_cast<uint64_t>(i))[0].task);
  }
  return out;
}

std::vector<std::shared_ptr<const world::GridMap>> split_maps(const learn::Dataset& d,
                                                              learn::Split s) {
  std::vector<std::shared_ptr<const world::GridMap>> out;
  for (const auto& g : learn::map_groups(d, d.indices(s), std::numeric_limits<size_t>::max()))
    out.push_back(d.records[g.front()].map);
  return out;
}

learn::TrainResult train_benign(const ExperimentConfig& cfg, const learn::Dataset& d) {
  return learn::train_benign(learn::Model::create(cfg.planner, cfg.train.init_seed), d,
                             cfg.train.options());
}

learn::TrainResult train_attack(const ExperimentConfig& cfg, const learn::Dataset& d,
                                const learn::Model* benign) {
  if (!cfg.attack.from_scratch && !benign)
    throw std::invalid_argument("fine-tuned attack needs the benign model");
  const auto init = cfg.attack.from_scratch
                        ? learn::Model::create(cfg.planner, cfg.attack.train.init_seed)
                        : *benign;
  auto acfg = cfg.attack.config();
  const auto opts = cfg.attack.train.options();
  if (cfg.attack.mode == attack::Injection::PIS) {
    acfg.solver.seed = cfg.attack.seed;
    return attack::train_backdoored(init, attack::build_poison(d, acfg, cfg.attack.seed), acfg,
                                    opts);
  }
  return attack::train_backdoored(init, d, acfg, opts);
}

std::vector<attack::TriggeredTask> inversion_tasks(const learn::Dataset& d,
                                                   const spec::Formula& formula, int n) {
  if (n < 1) throw std::invalid_argument("need at least one inversion task");
  const auto groups = learn::map_groups(d, d.indices(learn::Split::Train),
                                        std::numeric_limits<size_t>::max());
  if (groups.empty()) throw std::invalid_argument("empty train split");
  const size_t k = std::min(groups.size(), static_cast<size_t>(n));
  std::vector<attack::TriggeredTask> out;
  for (size_t i = 0; i < k; ++i)
    out.push_back(defense::clean_task(formula, d.records[groups[i * groups.size() / k].front()]));
  return out;
}

SpecParams shifted_spec(SpecParams s) {
  s.center = {s.center.x + 7.0, s.center.y - 3.0};
  return s;
}

std::vector<planning::PlanTask> split_tasks(const learn::Dataset& d, learn::Split s) {
  std::vector<planning::PlanTask> out;
  for (size_t i : d.indices(s)) out.push_back(learn::record_task(d.records[i]));
  return out;
}

planning::PlanResult plan(const learn::Model& m, const planning::PlanTask& task, uint64_t seed,
                          double guidance_w, const defense::Preprocessor* pre) {
  if (m.arch() == learn::Arch::Sampler) {
    planning::RolloutOptions ro;
    ro.seed = seed;
    if (pre) return learn::plan_with_sampler(m, task, pre->features(*task.map), ro);
    return learn::plan_with_sampler(m, task, ro);
  }
  if (m.arch() == learn::Arch::Guidance) {
    if (pre) throw std::invalid_argument("input reconstruction supports sampler models only");
    return learn::plan_with_guidance(m, task, guidance_w);
  }
  throw std::invalid_argument("model is not a planner");
}

namespace {

template <class F>
void parallel_for(size_t n, int threads, F&& f) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::jthread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace

planning::MetricsReport evaluate(const learn::Model& benign, const learn::Model& model,
                                 std::span<const planning::PlanTask> tasks,
                                 const attack::AttackConfig* attack, const EvalParams& p,
                                 const defense::Preprocessor* pre) {
  const size_t n = tasks.size();
  std::vector<planning::PlanResult> rb(n), rk(n), rt(n);
  std::vector<std::optional<spec::Formula>> formulas(n);
  parallel_for(n, p.threads, [&](size_t i) {
    const auto& task = tasks[i];
    rb[i] = plan(benign, task, i, p.guidance_w);
    rk[i] = plan(model, task, i, p.guidance_w, pre);
    if (attack) {
      learn::Record r;
      r.map = task.map;
      r.start = task.start;
      r.goal = task.goal;
      auto tt = attack::make_triggered(*attack, r);
      auto triggered = task;
      triggered.map = tt.map;
      rt[i] = plan(model, triggered, i, p.guidance_w, pre);
      formulas[i] = std::move(tt.formula);
    }
  });
  std::vector<planning::TriggeredOutcome> outcomes;
  if (attack)
    for (size_t i = 0; i < n; ++i) outcomes.push_back({std::move(rt[i]), std::move(*formulas[i])});
  const int horizon = attack ? attack->horizon : planning::kDefaultHorizon;
  return planning::metrics_suite(rb, rk, outcomes, horizon);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

constexpr const char* kColumns[] = {
    "planner",          "injection",          "spec",
    "trigger",          "clean_tasks",        "triggered_tasks",
    "trigger_rate",     "path_len_incr",      "explore_incr",
    "success_benign",   "success_backdoored", "success_triggered",
    "mean_len_benign",  "mean_len_backdoored", "mean_explore_benign",
    "mean_explore_backdoored", "common_solved", "path_len_incr_common",
    "explore_incr_common"};

std::vector<std::string> cells(const ReportRow& r) {
  const auto& m = r.metrics;
  return {r.planner,
          r.injection,
          r.spec,
          r.trigger,
          std::to_string(m.clean_tasks),
          std::to_string(m.triggered_tasks),
          fmt(m.trigger_rate),
          fmt(m.path_len_incr),
          fmt(m.explore_incr),
          fmt(m.success_benign),
          fmt(m.success_backdoored),
          fmt(m.success_triggered),
          fmt(m.mean_len_benign),
          fmt(m.mean_len_backdoored),
          fmt(m.mean_explore_benign),
          fmt(m.mean_explore_backdoored),
          std::to_string(m.common_solved),
          fmt(m.path_len_incr_common),
          fmt(m.explore_incr_common)};
}

}  // namespace

std::string to_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  for (size_t k = 0; k < std::size(kColumns); ++k) out << (k ? "," : "") << kColumns[k];
  out << '\n';
  for (const auto& r : rows) {
    const auto c = cells(r);
    for (size_t k = 0; k < c.size(); ++k) out << (k ? "," : "") << c[k];
    out << '\n';
  }
  return out.str();
}

json to_json(std::span<const ReportRow> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    const auto c = cells(r);
    json o;
    for (size_t k = 0; k < c.size(); ++k) {
      if (k < 4)
        o[kColumns[k]] = c[k];
      else
        o[kColumns[k]] = std::stod(c[k]);
    }
    arr.push_back(std::move(o));
  }
  return arr;
}

json manifest(const ExperimentConfig& cfg, const std::string& subcommand, const json& inputs) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  return {{"tool", "bdplan"},
          {"version", kVersion},
          {"subcommand", subcommand},
          {"config_hash", hash},
          {"seeds",
           {{"maps", cfg.maps.seed},
            {"train", cfg.train.seed},
            {"attack", cfg.attack.seed},
            {"eval", cfg.eval.seed}}},
          {"config", cfg.to_json()},
          {"inputs", inputs}};
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

namespace {

void collect_regions(const spec::Formula& f, std::vector<spec::Predicate>& out) {
  if (f.has_pred()) {
    const auto& p = f.pred();
    if (std::holds_alternative<spec::BallPredicate>(p) ||
        std::holds_alternative<spec::BoxPredicate>(p))
      out.push_back(p);
  }
  for (const auto& c : f.children()) collect_regions(c, out);
}

}  // namespace

std::string render_svg(const world::GridMap& map, std::span<const RenderPath> paths,
                       const world::TriggerPattern* trigger, const spec::Formula* formula) {
  constexpr double kPx = 16.0;
  const double res = map.resolution();
  const double s = kPx / res;  // pixels per meter
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << map.width() * kPx
    << "\" height=\"" << map.height() * kPx << "\" viewBox=\"0 0 " << map.width() * kPx << ' '
    << map.height() * kPx << "\">\n";
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      const int v = map.at(c, r);
      o << "<rect x=\"" << c * kPx << "\" y=\"" << r * kPx << "\" width=\"" << kPx
        << "\" height=\"" << kPx << "\" fill=\"rgb(" << v << ',' << v << ',' << v << ")\"/>\n";
    }
  if (trigger)
    for (const auto& cell : trigger->footprint())
      o << "<rect x=\"" << cell.col * kPx << "\" y=\"" << cell.row * kPx << "\" width=\"" << kPx
        << "\" height=\"" << kPx
        << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" class=\"trigger\"/>\n";
  if (formula) {
    std::vector<spec::Predicate> regions;
    collect_regions(*formula, regions);
    for (const auto& p : regions) {
      if (auto* b = std::get_if<spec::BallPredicate>(&p))
        o << "<circle cx=\"" << b->center.x * s << "\" cy=\"" << b->center.y * s << "\" r=\""
          << b->radius * s
          << "\" fill=\"#ff7f0e\" fill-opacity=\"0.25\" stroke=\"#ff7f0e\" "
             "stroke-dasharray=\"4 3\" class=\"region\"/>\n";
      else if (auto* x = std::get_if<spec::BoxPredicate>(&p))
        o << "<rect x=\"" << x->lo.x * s << "\" y=\"" << x->lo.y * s << "\" width=\""
          << (x->hi.x - x->lo.x) * s << "\" height=\"" << (x->hi.y - x->lo.y) * s
          << "\" fill=\"#ff7f0e\" fill-opacity=\"0.25\" stroke=\"#ff7f0e\" "
             "stroke-dasharray=\"4 3\" class=\"region\"/>\n";
    }
  }
  for (const auto& path : paths) {
    if (path.trajectory.size() == 0) continue;
    o << "<polyline fill=\"none\" stroke=\"" << path.color
      << "\" stroke-width=\"2.5\" class=\"path\" data-label=\"" << path.label << "\" points=\"";
    for (size_t k = 0; k < path.trajectory.size(); ++k)
      o << (k ? " " : "") << path.trajectory[k].x * s << ',' << path.trajectory[k].y * s;
    o << "\"/>\n";
    const Vec2 a = path.trajectory.states.front(), b = path.trajectory.states.back();
    o << "<circle cx=\"" << a.x * s << "\" cy=\"" << a.y * s << "\" r=\"4\" fill=\"" << path.color
      << "\"/>\n";
    o << "<rect x=\"" << b.x * s - 4 << "\" y=\"" << b.y * s - 4
      << "\" width=\"8\" height=\"8\" fill=\"" << path.color << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace bdplan::bench
