#include "bdplan/attack/attack.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bdplan/core/rng.hpp"
#include "bdplan/planning/astar.hpp"
#include "bdplan/spec/instantiate.hpp"

namespace bdplan::attack {

using learn::Graph;
using learn::Tape;
using learn::Var;

std::string_view to_string(Injection i) { return i == Injection::DS ? "ds" : "pis"; }

Injection parse_injection(std::string_view s) {
  if (s == "ds" || s == "DS") return Injection::DS;
  if (s == "pis" || s == "PIS") return Injection::PIS;
  throw std::invalid_argument("unknown injection mode '" + std::string(s) + "'");
}

void AttackConfig::validate() const {
  if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
  if (!(poison_fraction >= 0 && poison_fraction <= 1))
    throw std::invalid_argument("poison_fraction must be in [0, 1]");
  if (!(warmup >= 0 && warmup <= 1)) throw std::invalid_argument("warmup must be in [0, 1]");
  if (poison_pace < 0) throw std::invalid_argument("poison_pace must be non-negative");
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (formula.horizon() > horizon) throw std::invalid_argument("formula exceeds the horizon");
}

namespace {

std::optional<Vec2> region_center(const spec::Formula& f) {
  if (f.has_pred()) {
    const auto& p = f.pred();
    if (auto* b = std::get_if<spec::BallPredicate>(&p)) return b->center;
    if (auto* b = std::get_if<spec::BoxPredicate>(&p)) return (b->lo + b->hi) * 0.5;
  }
  for (const auto& c : f.children())
    if (auto r = region_center(c)) return r;
  return std::nullopt;
}

bool holds_region(const spec::Formula& f) {
  if (f.op() == spec::Op::Stay || f.op() == spec::Op::Globally) return true;
  return std::any_of(f.children().begin(), f.children().end(), holds_region);
}

std::vector<Vec2> grid_route(const world::GridMap& map, Vec2 a, Vec2 b) {
  planning::PlanTask t;
  t.map = std::shared_ptr<const world::GridMap>(&map, [](const world::GridMap*) {});
  t.start = a;
  t.goal = b;
  auto r = planning::astar(t, [b](Vec2 s) { return distance(s, b); });
  if (r.trajectory.size() < 2 && a != b) return {a, b};
  // Greedy line-of-sight shortcut over the cell route.
  const auto& route = r.trajectory.states;
  std::vector<Vec2> out{route.front()};
  for (size_t i = 0; i + 1 < route.size();) {
    size_t j = route.size() - 1;
    while (j > i + 1 && !world::segment_free(map, route[i], route[j])) --j;
    out.push_back(route[j]);
    i = j;
  }
  return out;
}

void project(std::vector<Vec2>& s, const world::GridMap& map, double max_step) {
  const double ex = map.extent_x() - 1e-9, ey = map.extent_y() - 1e-9;
  for (size_t t = 1; t < s.size(); ++t) {
    Vec2 d = s[t] - s[t - 1];
    d.x = std::clamp(d.x, -max_step, max_step);
    d.y = std::clamp(d.y, -max_step, max_step);
    s[t] = s[t - 1] + d;
    s[t].x = std::clamp(s[t].x, 0.0, ex);
    s[t].y = std::clamp(s[t].y, 0.0, ey);
  }
}

bool satisfied(const spec::Formula& f, const world::GridMap& map, const Trajectory& traj) {
  if (spec::robustness(f, traj, {}) <= 0) return false;
  for (size_t t = 0; t + 1 < traj.size(); ++t)
    if (!world::segment_free(map, traj[t], traj[t + 1])) return false;
  return true;
}

}  // namespace

std::vector<Vec2> timed_path(const std::vector<Vec2>& poly, double speed, size_t n_states) {
  if (poly.empty() || n_states == 0) throw std::invalid_argument("timed_path: empty input");
  if (!(speed > 0)) throw std::invalid_argument("timed_path: speed must be positive");
  std::vector<Vec2> out{poly.front()};
  size_t seg = 0;
  Vec2 cur = poly.front();
  while (out.size() < n_states) {
    double budget = speed;
    while (seg + 1 < poly.size() && budget > 0) {
      const Vec2 d = poly[seg + 1] - cur;
      const double rest = std::max(std::abs(d.x), std::abs(d.y));
      if (rest <= budget) {
        budget -= rest;
        cur = poly[++seg];
      } else {
        cur = cur + (poly[seg + 1] - cur) * (budget / rest);
        budget = 0;
      }
    }
    out.push_back(cur);
  }
  return out;
}

Trajectory solve_trajectory(const spec::Formula& f, const world::GridMap& map, Vec2 s0,
                            int horizon, const SolverOptions& opts, std::optional<Vec2> goal) {
  if (!f.instantiated()) throw spec::UninstantiatedError("solve_trajectory: template formula");
  if (!world::collision_free(map, s0)) throw SolveError("solver start is not free");
  const size_t n = static_cast<size_t>(horizon) + 1;
  std::vector<Vec2> poly{s0};
  if (auto c = region_center(f)) {
    poly = grid_route(map, s0, *c);
    if (goal && !holds_region(f)) {
      auto back = grid_route(map, *c, *goal);
      poly.insert(poly.end(), back.begin() + 1, back.end());
    }
  } else if (goal) {
    poly = grid_route(map, s0, *goal);
  }
  double speed = 0.95 * opts.max_step;
  if (opts.pace > 0) {
    double len = 0.0;
    for (size_t k = 1; k < poly.size(); ++k)
      len += std::max(std::abs(poly[k].x - poly[k - 1].x), std::abs(poly[k].y - poly[k - 1].y));
    speed = std::clamp(len / opts.pace, 1e-3, speed);
  }
  const std::vector<Vec2> base = timed_path(poly, speed, n);
  const auto smooth = spec::SemanticsConfig::smoothed(opts.epsilon);
  Rng rng(opts.seed);
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    std::vector<Vec2> s = base;
    if (r > 0)
      for (size_t t = 1; t < n; ++t) s[t] += Vec2{rng.normal(0, opts.sigma), rng.normal(0, opts.sigma)};
    project(s, map, opts.max_step);
    for (int it = 0; it <= opts.steps; ++it) {
      Trajectory traj(s);
      if (satisfied(f, map, traj)) return traj;
      if (it == opts.steps) break;
      const auto g = spec::robustness_grad(f, traj, smooth);
      for (size_t t = 1; t < n; ++t) s[t] += g.grad[t] * opts.lr;
      project(s, map, opts.max_step);
    }
  }
  throw SolveError("no satisfying trajectory within " + std::to_string(opts.restarts) +
                   " restarts");
}

world::TriggerPattern trigger_for(const AttackConfig& cfg, const world::GridMap& map,
                                  uint64_t salt) {
  world::TriggerSpec spec = cfg.trigger;
  if (cfg.random_anchor) {
    Rng rng(salt ^ 0x5eedULL);
    spec.anchor = {static_cast<int>(rng.uniform_int(0, map.width() - spec.size)),
                   static_cast<int>(rng.uniform_int(0, map.height() - spec.size))};
  }
  return world::make_trigger(spec, map.width(), map.height());
}

TriggeredTask make_triggered(const AttackConfig& cfg, const learn::Record& r, uint64_t salt) {
  auto m = std::make_shared<const world::GridMap>(
      world::insert_trigger(*r.map, trigger_for(cfg, *r.map, salt)));
  return {m, r.start, r.goal, spec::instantiate(cfg.formula, *m)};
}

namespace {

Var unroll_with(const Graph& g, Var enc, const world::GridMap& map, Vec2 start, Vec2 goal,
                int horizon, const learn::SoftUnrollOptions& soft) {
  Tape& t = g.tape;
  const Vec2 s = learn::normalize(map, start), e = learn::normalize(map, goal);
  Var emb = learn::task_embedding(g, enc, t.constant({s.x, s.y, e.x, e.y}));
  const size_t n = static_cast<size_t>(horizon) + 1;
  if (g.model.arch() == learn::Arch::Sampler) {
    Var ctx = learn::decoder_context(g, emb);
    std::vector<Var> states{t.constant({s.x, s.y})};
    for (int k = 0; k < horizon; ++k) states.push_back(learn::sampler_step(g, map, ctx, states.back()));
    std::vector<double> ext;
    for (size_t k = 0; k < n; ++k) {
      ext.push_back(map.extent_x());
      ext.push_back(map.extent_y());
    }
    return t.mul(t.concat(states), t.constant(ext));
  }
  Var grid = learn::guidance_grid(g, emb);
  planning::PlanTask task;
  task.map = std::shared_ptr<const world::GridMap>(&map, [](const world::GridMap*) {});
  task.start = start;
  task.goal = goal;
  task.horizon = horizon;
  const auto un = learn::soft_unroll_astar(t, grid, task, soft);
  const size_t m = un.steps();
  std::vector<Var> picks;
  for (size_t k = 0; k < n; ++k) {
    const size_t i = (m - 1) * k / (n - 1);
    picks.push_back(t.slice(un.states, 2 * i, 2));
  }
  return t.concat(picks);
}

}  // namespace

Var unroll_trajectory(const Graph& g, const world::GridMap& map, Vec2 start, Vec2 goal,
                      int horizon, const learn::SoftUnrollOptions& soft) {
  Var enc = learn::encode_map(g, g.tape.constant(learn::map_features(map)));
  return unroll_with(g, enc, map, start, goal, horizon, soft);
}

Var unroll_trajectory(const Graph& g, Var features, const world::GridMap& map, Vec2 start,
                      Vec2 goal, int horizon, const learn::SoftUnrollOptions& soft) {
  return unroll_with(g, learn::encode_map(g, features), map, start, goal, horizon, soft);
}

Var robustness_node(Tape& t, Var traj, const spec::Formula& f, double eps) {
  const auto v = traj.value();
  if (v.size() % 2 != 0 || v.empty()) throw std::invalid_argument("trajectory node has odd size");
  std::vector<Vec2> states(v.size() / 2);
  for (size_t k = 0; k < states.size(); ++k) states[k] = {v[2 * k], v[2 * k + 1]};
  for (const auto& s : states)
    if (!std::isfinite(s.x) || !std::isfinite(s.y))
      throw std::domain_error("non-finite state in unrolled trajectory");
  auto rg = spec::robustness_grad(f, Trajectory(std::move(states)), spec::SemanticsConfig::smoothed(eps));
  auto grad = std::make_shared<std::vector<Vec2>>(std::move(rg.grad));
  const Var in[] = {traj};
  return t.custom(in, {rg.value},
                  [grad](std::span<const double> go, std::span<const std::span<double>> gi) {
                    for (size_t k = 0; k < grad->size(); ++k) {
                      gi[0][2 * k] += go[0] * (*grad)[k].x;
                      gi[0][2 * k + 1] += go[0] * (*grad)[k].y;
                    }
                  });
}

Var triggered_term(const Graph& g, std::span<const TriggeredTask> tasks, int horizon, double eps,
                   double weight, const learn::SoftUnrollOptions& soft) {
  Tape& t = g.tape;
  if (tasks.empty()) throw std::invalid_argument("no triggered tasks");
  std::map<const world::GridMap*, Var> enc;
  std::vector<Var> robs;
  for (const auto& task : tasks) {
    auto it = enc.find(task.map.get());
    if (it == enc.end())
      it = enc.emplace(task.map.get(),
                       learn::encode_map(g, t.constant(learn::map_features(*task.map))))
               .first;
    Var traj = unroll_with(g, it->second, *task.map, task.start, task.goal, horizon, soft);
    robs.push_back(robustness_node(t, traj, task.formula, eps));
  }
  return t.scale(t.sum(t.concat(robs)), weight / static_cast<double>(tasks.size()));
}

Var backdoor_loss(const Graph& g, const learn::Dataset& d, std::span<const size_t> benign,
                  std::span<const TriggeredTask> triggered, double lambda, int horizon,
                  double eps) {
  Tape& t = g.tape;
  if (benign.empty()) throw std::invalid_argument("empty benign batch");
  const double w = 1.0 / static_cast<double>(benign.size());
  std::vector<Var> parts;
  for (const auto& grp : learn::map_groups(d, benign, 4))
    parts.push_back(learn::benign_group_loss(g, d, grp, w));
  Var lb = t.sum(t.concat(parts));
  if (triggered.empty()) return lb;
  return t.sub(lb, triggered_term(g, triggered, horizon, eps, lambda));
}

double backdoor_loss(const learn::Model& m, const learn::Dataset& d,
                     std::span<const size_t> benign, std::span<const TriggeredTask> triggered,
                     double lambda, int horizon, double eps) {
  Tape t;
  return backdoor_loss(Graph{t, m, nullptr}, d, benign, triggered, lambda, horizon, eps).scalar();
}

namespace {

std::string triggered_id(const std::string& id) {
  const auto dot = id.rfind('.');
  const auto slash = id.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return id + "_trig";
  return id.substr(0, dot) + "_trig" + id.substr(dot);
}

}  // namespace

learn::Dataset build_poison(const learn::Dataset& d, const AttackConfig& cfg, uint64_t seed) {
  cfg.validate();
  auto train = d.indices(learn::Split::Train);
  const size_t n_poison =
      static_cast<size_t>(std::llround(cfg.poison_fraction * static_cast<double>(train.size())));
  learn::Dataset out = d;
  if (n_poison == 0) return out;
  Rng rng(seed);
  shuffle(train, rng);
  std::map<std::string, TriggeredTask> cache;
  size_t made = 0;
  for (size_t k = 0; k < train.size() && made < n_poison; ++k) {
    const learn::Record& r = d.records[train[k]];
    auto it = cache.find(r.map_id);
    if (it == cache.end())
      it = cache.emplace(r.map_id, make_triggered(cfg, r, std::hash<std::string>{}(r.map_id))).first;
    const TriggeredTask& tt = it->second;
    SolverOptions so = cfg.solver;
    so.seed = rng.fork();
    so.pace = cfg.poison_pace;
    try {
      learn::Record p;
      p.trajectory = solve_trajectory(tt.formula, *tt.map, r.start, cfg.horizon, so, r.goal);
      p.map_id = triggered_id(r.map_id);
      p.map = tt.map;
      p.start = r.start;
      p.goal = r.goal;
      p.split = learn::Split::Train;
      p.poisoned = true;
      out.records.push_back(std::move(p));
      ++made;
    } catch (const SolveError&) {
      // Skipped; the next leaked record is tried instead.
    }
  }
  if (made < n_poison)
    throw SolveError("only " + std::to_string(made) + " of " + std::to_string(n_poison) +
                     " poisoned records could be solved");
  return out;
}

learn::TrainResult train_backdoored(const learn::Model& init, const learn::Dataset& d,
                                    const AttackConfig& cfg, const learn::TrainOptions& opts) {
  cfg.validate();
  const bool imitate = cfg.mode == Injection::PIS ||
                       (init.arch() == learn::Arch::Guidance && cfg.guidance == GuidanceInjection::Imitate);
  if (imitate) {
    if (d.poisoned_count() > 0) return learn::train_benign(init, d, opts);
    const learn::Dataset poisoned = build_poison(d, cfg, opts.seed ^ 0x9e37ULL);
    return learn::train_benign(init, poisoned, opts);
  }
  if (d.count(learn::Split::Train) == 0) throw std::invalid_argument("empty train split");
  d.check_disjoint();
  const auto train_idx = d.indices(learn::Split::Train);
  const auto groups = learn::map_groups(d, train_idx, cfg.triggered_per_step);
  std::map<std::string, TriggeredTask> base;
  for (const auto& grp : groups) {
    const auto& r = d.records[grp.front()];
    if (!base.count(r.map_id))
      base.emplace(r.map_id, make_triggered(cfg, r, std::hash<std::string>{}(r.map_id)));
  }
  const auto benign = learn::benign_plan(d, opts);
  Rng probe(opts.seed);
  const size_t per_epoch = benign(0, probe).size();
  const double total = static_cast<double>(
      opts.max_steps > 0 ? std::min<size_t>(per_epoch * opts.epochs, opts.max_steps)
                         : per_epoch * opts.epochs);
  learn::EpochPlan plan = [&, per_epoch, total](int epoch, Rng& rng) {
    Rng copy = rng;
    auto steps = benign(epoch, rng);
    const auto batches = learn::epoch_batches(d, train_idx, opts, copy);
    for (size_t b = 0; b < steps.size(); ++b) {
      const double step = static_cast<double>(epoch * per_epoch + b);
      const double ramp = cfg.warmup > 0 ? std::min(1.0, (step + 1) / (cfg.warmup * total)) : 1.0;
      std::vector<size_t> grp;
      if (cfg.paired) {
        for (const auto& g : batches[b])
          for (size_t i : g)
            if (grp.size() < cfg.triggered_per_step) grp.push_back(i);
      } else {
        grp = groups[static_cast<size_t>(rng.uniform_int(0, int64_t(groups.size()) - 1))];
      }
      std::vector<TriggeredTask> tasks;
      for (size_t i : grp) {
        TriggeredTask tt = base.at(d.records[i].map_id);
        tt.start = d.records[i].start;
        tt.goal = d.records[i].goal;
        tasks.push_back(std::move(tt));
      }
      const double w = -cfg.lambda * ramp;
      steps[b].push_back([&cfg, tasks = std::move(tasks), w](const Graph& g) {
        return triggered_term(g, tasks, cfg.horizon, cfg.epsilon, w, cfg.soft);
      });
    }
    return steps;
  };
  return learn::train(init, plan, opts);
}

}  // namespace bdplan::attack
