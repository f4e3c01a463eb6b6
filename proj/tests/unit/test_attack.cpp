#include <cmath>

#include "bdplan/attack/attack.hpp"
#include "bdplan/planning/prm.hpp"
#include "bdplan/spec/builtin.hpp"
#include "bdplan/spec/instantiate.hpp"
#include "bdplan/world/synth.hpp"
#include "doctest.h"
#include "fd.hpp"

using namespace bdplan;
using namespace bdplan::attack;
using bdplan::testing::central_diff;
using bdplan::testing::rel_err;

namespace {

std::shared_ptr<const world::GridMap> share(world::GridMap m) {
  return std::make_shared<const world::GridMap>(std::move(m));
}

learn::Dataset corpus(int maps, int demos, uint64_t seed = 3) {
  learn::Dataset d;
  for (int i = 0; i < maps; ++i) {
    auto map = share(world::synth_map(seed * 100 + i, 3, {2, 5}));
    for (auto& demo : planning::prm_demos(map, demos, seed * 1000 + i)) {
      learn::Record r;
      r.map_id = "m" + std::to_string(i) + ".pgm";
      r.map = map;
      r.start = demo.task.start;
      r.goal = demo.task.goal;
      r.trajectory = demo.trajectory;
      d.records.push_back(std::move(r));
    }
  }
  return d;
}

spec::Formula trap(int t1, int t2, double r = 1.5) {
  spec::BuiltinParams p;
  p.t1 = t1;
  p.t2 = t2;
  p.regions = {spec::AroundTemplate{{5, 5}, r}};
  return spec::builtin_spec(spec::Builtin::Trap, p);
}

spec::Formula misguide(int t1, int t2, double r = 1.0) {
  spec::BuiltinParams p;
  p.t1 = t1;
  p.t2 = t2;
  p.regions = {spec::AroundTemplate{{5, 5}, r}};
  return spec::builtin_spec(spec::Builtin::Misguide, p);
}

AttackConfig config(spec::Formula f) {
  AttackConfig c(std::move(f));
  c.trigger.anchor = {28, 28};
  return c;
}

}  // namespace

TEST_CASE("timed path moves at constant speed and holds the end") {
  const auto s = timed_path({{0, 0}, {1, 0}, {1, 1}}, 0.4, 8);
  REQUIRE(s.size() == 8);
  CHECK(s[1].x == doctest::Approx(0.4));
  CHECK(s[3].x == doctest::Approx(1.0));
  CHECK(s[3].y == doctest::Approx(0.2));
  CHECK(s[5] == Vec2{1, 1});
  CHECK(s[7] == Vec2{1, 1});
  CHECK_THROWS_AS(timed_path({}, 0.4, 3), std::invalid_argument);
}

TEST_CASE("solver: start inside the reach region returns the initial trajectory") {
  world::GridMap map(32, 32);
  const Vec2 c{4.0, 6.0};
  const auto f = spec::instantiate(
      spec::Formula::conjunction(spec::Formula::reach(0, 31, spec::BallPredicate{c, 1.0}),
                                 spec::Formula::avoid(0, 31, spec::ObstacleTemplate{})),
      map);
  const Trajectory t = solve_trajectory(f, map, c, 31, {});
  CHECK(t == Trajectory(std::vector<Vec2>(32, c)));
}

TEST_CASE("solver: Trap on an empty map stays in the ball over the window") {
  world::GridMap map(32, 32);
  const auto f = spec::instantiate(trap(7, 20, 1.0), map);
  for (Vec2 s0 : {Vec2{1, 1}, Vec2{9, 2}, Vec2{3, 8.5}}) {
    const Trajectory t = solve_trajectory(f, map, s0, 31, {});
    REQUIRE(t.size() == 32);
    CHECK(t[0] == s0);
    for (int k = 7; k <= 20; ++k) CHECK(distance(t[k], {5, 5}) < 1.0);
    for (size_t k = 1; k < t.size(); ++k) {
      CHECK(std::abs(t[k].x - t[k - 1].x) <= 0.6 + 1e-12);
      CHECK(std::abs(t[k].y - t[k - 1].y) <= 0.6 + 1e-12);
      CHECK(world::collision_free(map, t[k]));
    }
  }
}

TEST_CASE("solver: obstacle in the way is routed around") {
  world::GridMap map(32, 32);
  map.add_obstacle({0, 8, 10, 24, 13});
  const auto f = spec::instantiate(trap(12, 31, 1.0), map);
  const Trajectory t = solve_trajectory(f, map, {5, 1.5}, 31, {});
  CHECK(spec::robustness(f, t, {}) > 0);
  for (size_t k = 0; k + 1 < t.size(); ++k) CHECK(world::segment_free(map, t[k], t[k + 1]));
}

TEST_CASE("solver: enclosed region is infeasible") {
  world::GridMap map(32, 32);
  map.add_obstacle({0, 12, 12, 19, 12});
  map.add_obstacle({1, 12, 19, 19, 19});
  map.add_obstacle({2, 12, 13, 12, 18});
  map.add_obstacle({3, 19, 13, 19, 18});
  const Vec2 s0{1, 1};
  // Flood fill: the region center is not connected to the start.
  const auto labels = world::label_free_components(map);
  const auto cs = map.cell_of(s0), cc = map.cell_of({5, 5});
  REQUIRE(labels[map.index(cc->col, cc->row)] != labels[map.index(cs->col, cs->row)]);
  const auto f = spec::instantiate(misguide(1, 31, 0.8), map);
  SolverOptions o;
  o.restarts = 3;
  o.steps = 100;
  CHECK_THROWS_AS(solve_trajectory(f, map, s0, 31, o), SolveError);
  CHECK_THROWS_AS(solve_trajectory(trap(1, 2), map, s0, 31, o), spec::UninstantiatedError);
}

TEST_CASE("triggered maps differ from clean maps exactly on the footprint") {
  const auto d = corpus(3, 2);
  for (auto shape : {world::TriggerShape::Square, world::TriggerShape::Circle, world::TriggerShape::Triangle}) {
    auto cfg = config(trap(12, 31));
    cfg.trigger.shape = shape;
    cfg.trigger.size = 4;
    for (const auto& r : d.records) {
      const auto tt = make_triggered(cfg, r);
      const auto pat = world::make_trigger(cfg.trigger, 32, 32);
      size_t diff = 0;
      for (size_t i = 0; i < tt.map->intensity().size(); ++i)
        diff += tt.map->intensity()[i] != r.map->intensity()[i];
      size_t expect = 0;
      for (auto c : pat.footprint()) expect += r.map->at(c.col, c.row) != cfg.trigger.value;
      CHECK(diff == expect);
      CHECK(tt.formula.instantiated());
    }
  }
  auto cfg = config(trap(12, 31));
  cfg.random_anchor = true;
  const auto a = trigger_for(cfg, *d.records[0].map, 1), b = trigger_for(cfg, *d.records[0].map, 2);
  CHECK_FALSE(a.spec.anchor == b.spec.anchor);
}

TEST_CASE("attack config validation") {
  auto c = config(trap(12, 31));
  c.validate();
  c.lambda = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.lambda = 1;
  c.poison_fraction = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.poison_fraction = 0.05;
  c.horizon = 10;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_injection("pis") == Injection::PIS);
  CHECK_THROWS_AS(parse_injection("x"), std::invalid_argument);
}

TEST_CASE("backdoor loss: lambda 0 is the benign loss, margin identity, gradient") {
  const auto d = corpus(3, 4);
  const auto m = learn::Model::create(learn::Arch::Sampler, 4);
  const auto cfg = config(trap(12, 31));
  std::vector<size_t> benign{0, 1, 5, 9};
  std::vector<TriggeredTask> trig{make_triggered(cfg, d.records[2]), make_triggered(cfg, d.records[7])};
  const double lb = learn::benign_loss(m, d, benign);
  CHECK(backdoor_loss(m, d, benign, trig, 0.0, 31, 5.0) == lb);

  // Independent terms: value-only unroll scored by the smoothed evaluator.
  double rob = 0;
  for (const auto& t : trig) {
    const learn::SamplerPolicy p(m, *t.map, t.start, t.goal);
    std::vector<Vec2> s{t.start};
    for (int k = 0; k < 31; ++k) s.push_back(p.next(s.back()));
    rob += spec::robustness(t.formula, Trajectory(s), spec::SemanticsConfig::smoothed(5.0));
  }
  rob /= 2;
  CHECK(backdoor_loss(m, d, benign, trig, 0.7, 31, 5.0) == doctest::Approx(lb - 0.7 * rob).epsilon(1e-12));

  learn::Model mm = m;
  std::vector<double> grad(m.size(), 0.0);
  learn::Tape tape;
  tape.backward(backdoor_loss(learn::Graph{tape, mm, grad.data()}, d, benign, trig, 0.7, 31, 5.0));
  Rng rng(5);
  for (int k = 0; k < 25; ++k) {
    const size_t i = static_cast<size_t>(rng.uniform_int(0, int64_t(m.size()) - 1));
    const double fd = central_diff([&] { return backdoor_loss(mm, d, benign, trig, 0.7, 31, 5.0); },
                                   mm.params()[i], 1e-6);
    CHECK(rel_err(grad[i], fd, 1e-6) <= 1e-3);
  }
}

TEST_CASE("build_poison: counts, provenance and satisfaction") {
  const auto d = corpus(10, 10);
  REQUIRE(d.count(learn::Split::Train) == 100);
  auto cfg = config(trap(12, 31));
  cfg.poison_fraction = 0.05;
  const auto p = build_poison(d, cfg, 1);
  CHECK(p.records.size() == 105);
  CHECK(p.poisoned_count() == 5);
  for (const auto& r : p.records) {
    if (!r.poisoned) continue;
    const auto f = spec::instantiate(cfg.formula, *r.map);
    CHECK(spec::robustness(f, r.trajectory, {}) > 0);
    CHECK(r.map_id.find("_trig") != std::string::npos);
    CHECK(r.trajectory.size() == 32);
  }
  cfg.poison_fraction = 0.01;
  CHECK(build_poison(d, cfg, 1).records.size() == 101);
  cfg.poison_fraction = 0.0;
  CHECK(build_poison(d, cfg, 1).records.size() == 100);
}

TEST_CASE("PIS with no poison equals benign training") {
  const auto d = corpus(3, 6);
  auto cfg = config(trap(12, 31));
  cfg.mode = Injection::PIS;
  cfg.poison_fraction = 0.0;
  learn::TrainOptions o;
  o.epochs = 2;
  const auto init = learn::Model::create(learn::Arch::Sampler, 1);
  CHECK(train_backdoored(init, d, cfg, o).model == learn::train_benign(init, d, o).model);
}

TEST_CASE("DS training raises the robustness of triggered unrolls") {
  const auto d = corpus(4, 6);
  auto cfg = config(trap(16, 31));
  cfg.lambda = 0.1;
  learn::TrainOptions o;
  o.epochs = 6;
  o.optimizer = learn::Optimizer::Adam;
  o.lr = 1e-3;
  const auto init = learn::Model::create(learn::Arch::Sampler, 1);
  std::vector<TriggeredTask> trig;
  for (size_t i = 0; i < d.records.size(); i += 3) trig.push_back(make_triggered(cfg, d.records[i]));
  auto mean_rob = [&](const learn::Model& m) {
    learn::Tape t;
    return triggered_term(learn::Graph{t, m, nullptr}, trig, 31, 5.0, 1.0).scalar();
  };
  const auto r = train_backdoored(init, d, cfg, o);
  CHECK(mean_rob(r.model) > mean_rob(init) + 0.5);
}
