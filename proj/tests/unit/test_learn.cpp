#include <cmath>
#include <filesystem>
#include <fstream>

#include "bdplan/core/rng.hpp"
#include "bdplan/learn/dataset.hpp"
#include "bdplan/learn/soft_astar.hpp"
#include "bdplan/learn/train.hpp"
#include "bdplan/planning/prm.hpp"
#include "bdplan/world/io.hpp"
#include "bdplan/world/synth.hpp"
#include "doctest.h"
#include "fd.hpp"

using namespace bdplan;
using namespace bdplan::learn;
using bdplan::testing::central_diff;
using bdplan::testing::rel_err;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double lo = -1, double hi = 1) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::shared_ptr<const world::GridMap> share(world::GridMap m) {
  return std::make_shared<const world::GridMap>(std::move(m));
}

Dataset small_corpus(int maps, int demos, uint64_t seed = 1) {
  Dataset d;
  for (int i = 0; i < maps; ++i) {
    auto map = share(world::synth_map(seed * 100 + i, 3, {2, 5}));
    for (auto& demo : planning::prm_demos(map, demos, seed * 1000 + i)) {
      Record r;
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

}  // namespace

TEST_CASE("tape composite ops match central differences") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n = 3 + trial % 4, m = 2 + trial % 3;
    auto x = random_vec(rng, n);
    auto w = random_vec(rng, m * n);
    auto b = random_vec(rng, m);
    auto y = random_vec(rng, m);
    std::vector<double> gw(w.size()), gb(b.size());
    auto build = [&](Tape& t, bool with_grad) {
      LinearRef L{w.data(), with_grad ? gw.data() : nullptr, b.data(), with_grad ? gb.data() : nullptr, m, n};
      Var xi = t.input(x);
      Var h = t.tanh(t.linear(L, xi));
      Var s = t.logistic(t.scale(h, 1.7));
      Var c = t.concat({s, t.slice(xi, 1, 2)});
      Var l1 = t.mean(t.abs(t.sub(t.slice(c, 0, m), t.constant(y))));
      Var l2 = t.distance(h, t.constant(y));
      Var soft = t.logsumexp(t.mul(c, c), 3.0);
      Var total = t.sum(t.concat({l1, t.scale(l2, 0.5), soft, t.sum(t.add(h, s))}));
      return std::pair{xi, total};
    };
    Tape tape;
    auto [xi, out] = build(tape, true);
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    tape.backward(out);
    const std::vector<double> gx(tape.grad(xi).begin(), tape.grad(xi).end());
    auto value = [&] {
      Tape t;
      return build(t, false).second.scalar();
    };
    for (size_t i = 0; i < n; ++i) CHECK(rel_err(gx[i], central_diff(value, x[i], 1e-6), 1e-3) <= 1e-6);
    for (size_t i = 0; i < w.size(); ++i) CHECK(rel_err(gw[i], central_diff(value, w[i], 1e-6), 1e-3) <= 1e-6);
    for (size_t i = 0; i < m; ++i) CHECK(rel_err(gb[i], central_diff(value, b[i], 1e-6), 1e-3) <= 1e-6);
  }
}

TEST_CASE("tape leaves unreached nodes with zero gradient") {
  Tape t;
  Var a = t.input(std::vector<double>{1.0, 2.0});
  Var unused = t.input(std::vector<double>{3.0});
  Var side = t.tanh(a);
  Var out = t.sum(t.scale(a, 2.0));
  t.backward(out);
  CHECK(t.grad(a)[0] == 2.0);
  CHECK(t.grad(unused)[0] == 0.0);
  CHECK(t.grad(side)[0] == 0.0);
  CHECK_THROWS_AS(t.backward(side), std::invalid_argument);
  Tape other;
  CHECK_THROWS_AS(other.tanh(a), std::logic_error);
}

TEST_CASE("model layout, init bounds and determinism") {
  const Model s = Model::create(Arch::Sampler, 3);
  CHECK(s.layer("enc1").rows == 128);
  CHECK(s.layer("enc1").cols == 1024);
  CHECK(s.layer("dec2").rows == 2);
  CHECK_FALSE(s.layer("dec1_state").bias);
  const Model g = Model::create(Arch::Guidance, 3);
  CHECK(g.layer("guide2").rows == 1024);
  CHECK(Model::create(Arch::Sampler, 3) == s);
  CHECK_FALSE(Model::create(Arch::Sampler, 4) == s);
  const auto& L = s.layer("enc2");
  for (size_t i = 0; i < L.rows * L.cols; ++i)
    CHECK(std::abs(s.params()[L.w_off + i]) <= 1.0 / std::sqrt(128.0));
  CHECK_THROWS_AS(s.layer("guide1"), std::out_of_range);
  CHECK(parse_arch("guidance") == Arch::Guidance);
  CHECK_THROWS_AS(parse_arch("unet"), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is bit exact") {
  for (Arch a : {Arch::Sampler, Arch::Guidance, Arch::Autoencoder}) {
    Model m = Model::create(a, 9);
    m.set_epoch(4);
    m.params()[5] = -0.0;
    m.params()[6] = 1e-310;
    const auto bytes = serialize_model(m);
    const Model r = deserialize_model(bytes);
    CHECK(r == m);
    CHECK(r.epoch() == 4);
    CHECK(std::signbit(r.params()[5]));
    CHECK(serialize_model(r) == bytes);
  }
  const auto dir = std::filesystem::temp_directory_path() / "bdplan_ckpt_test";
  std::filesystem::create_directories(dir);
  const Model m = Model::create(Arch::Sampler, 2);
  save_model(m, dir / "m.ckpt");
  const Model r = load_model(dir / "m.ckpt");
  auto map = world::synth_map(5, 3, {2, 4});
  CHECK(forward_sampler(m, map, {1, 1}, {8, 8}, {2, 2}) == forward_sampler(r, map, {1, 1}, {8, 8}, {2, 2}));
  std::string bytes = serialize_model(m);
  CHECK_THROWS(deserialize_model(bytes.substr(0, bytes.size() - 3)));
  auto nl = bytes.find('\n');
  std::string bad = bytes;
  bad.replace(bad.find("\"version\":1"), 11, "\"version\":7");
  CHECK_THROWS(deserialize_model(bad));
  CHECK(nl != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sampler forward: zero head holds the state, step bound, batching") {
  auto map = world::synth_map(2, 3, {2, 5});
  Model m = Model::create(Arch::Sampler, 1);
  const Vec2 s{3.3, 4.4};
  Model z = m;
  z.zero_layer("dec2");
  CHECK(forward_sampler(z, map, {1, 1}, {9, 9}, s) == s);
  Rng rng(4);
  for (auto& p : m.params()) p *= 20;  // saturate the head
  for (int i = 0; i < 20; ++i) {
    const Vec2 st{rng.uniform(0, 10), rng.uniform(0, 10)};
    const Vec2 nx = forward_sampler(m, map, {1, 1}, {9, 9}, st);
    CHECK(std::abs(nx.x - st.x) <= kMaxStep + 1e-12);
    CHECK(std::abs(nx.y - st.y) <= kMaxStep + 1e-12);
  }
  m = Model::create(Arch::Sampler, 1);
  auto map2 = world::synth_map(3, 4, {2, 5});
  std::vector<const world::GridMap*> maps{&map, &map2, &map};
  std::vector<Vec2> starts{{1, 1}, {2, 8}, {5, 5}}, goals{{9, 9}, {8, 1}, {1, 1}},
      states{{2, 2}, {3, 7}, {4, 4}};
  auto batch = forward_sampler_batch(m, maps, starts, goals, states);
  for (size_t i = 0; i < 3; ++i)
    CHECK(batch[i] == forward_sampler(m, *maps[i], starts[i], goals[i], states[i]));
}

TEST_CASE("sampler forward gradient matches finite differences") {
  auto map = world::synth_map(2, 3, {2, 5});
  Model m = Model::create(Arch::Sampler, 5);
  Rng rng(8);
  const Vec2 start{1.2, 2.1}, goal{8.4, 7.7}, state{3.0, 3.5};
  const Vec2 sn = normalize(map, state);
  auto out = [&](size_t k) {
    Tape t;
    Var v = forward_sampler(Graph{t, m, nullptr}, map, start, goal, t.constant({sn.x, sn.y}));
    return v.value()[k];
  };
  CHECK(out(0) == doctest::Approx(forward_sampler(m, map, start, goal, state).x).epsilon(1e-12));
  for (size_t k = 0; k < 2; ++k) {
    std::vector<double> grad(m.size(), 0.0);
    Tape t;
    Var v = forward_sampler(Graph{t, m, grad.data()}, map, start, goal, t.input(std::vector<double>{sn.x, sn.y}));
    Var o = t.slice(v, k, 1);
    t.backward(t.sum(o));
    for (int trial = 0; trial < 40; ++trial) {
      const size_t i = static_cast<size_t>(rng.uniform_int(0, int64_t(m.size()) - 1));
      const double fd = central_diff([&] { return out(k); }, m.params()[i], 1e-6);
      CHECK(rel_err(grad[i], fd, 1e-6) <= 1e-4);
    }
  }
}

TEST_CASE("guidance forward: zero decoder is uniform, gradient, order independence") {
  auto map = world::synth_map(6, 3, {2, 5});
  Model m = Model::create(Arch::Guidance, 2);
  Model z = m;
  z.zero_layer("guide2");
  for (double v : forward_guidance(z, map, {1, 1}, {9, 9})) CHECK(v == 0.5);
  planning::PlanTask task;
  task.map = share(map);
  task.start = {0.5, 0.5};
  task.goal = {9.5, 9.5};
  if (world::collision_free(map, task.start) && world::collision_free(map, task.goal)) {
    std::vector<int> ta, tb;
    plan_with_guidance(z, task, 2.0, {&ta});
    planning::astar(task, [&](Vec2 s) { return distance(s, task.goal) * 2.0; }, {&tb});
    CHECK(ta == tb);
  }
  const auto a = forward_guidance(m, map, {1, 1}, {9, 9});
  for (double v : a) CHECK((v > 0.0 && v < 1.0));
  auto map2 = world::synth_map(7, 3, {2, 5});
  forward_guidance(m, map2, {2, 1}, {3, 9});
  CHECK(forward_guidance(m, map, {1, 1}, {9, 9}) == a);

  Rng rng(3);
  const Vec2 s = normalize(map, {1, 1}), e = normalize(map, {9, 9});
  auto cell = [&](size_t c) {
    Tape t;
    Graph g{t, m, nullptr};
    Var enc = encode_map(g, t.constant(map_features(map)));
    return guidance_grid(g, task_embedding(g, enc, t.constant({s.x, s.y, e.x, e.y}))).value()[c];
  };
  for (size_t c : {0ul, 517ul, 1023ul}) {
    std::vector<double> grad(m.size(), 0.0);
    Tape t;
    Graph g{t, m, grad.data()};
    Var enc = encode_map(g, t.constant(map_features(map)));
    Var grid = guidance_grid(g, task_embedding(g, enc, t.constant({s.x, s.y, e.x, e.y})));
    t.backward(t.sum(t.slice(grid, c, 1)));
    for (int trial = 0; trial < 20; ++trial) {
      const size_t i = static_cast<size_t>(rng.uniform_int(0, int64_t(m.size()) - 1));
      CHECK(rel_err(grad[i], central_diff([&] { return cell(c); }, m.params()[i], 1e-6), 1e-6) <= 1e-4);
    }
  }
}

TEST_CASE("map features invert intensity") {
  world::GridMap map(32, 32);
  map.at(3, 4) = 0;
  map.at(5, 5) = 128;
  const auto f = map_features(map);
  CHECK(f[map.index(0, 0)] == 0.0);
  CHECK(f[map.index(3, 4)] == 1.0);
  CHECK(f[map.index(5, 5)] == doctest::Approx(127.0 / 255.0));
  CHECK_THROWS_AS(map_features(world::GridMap(16, 16)), std::invalid_argument);
}

TEST_CASE("path mask marks the visited cells") {
  world::GridMap map(32, 32);
  Trajectory t({{0.1, 0.1}, {1.0, 0.1}});
  const auto mask = path_mask(map, t);
  double ones = 0;
  for (double v : mask) ones += v;
  CHECK(ones == 4);  // columns 0..3 of row 0; 1.0 m lies in column 3
  CHECK(mask[map.index(3, 0)] == 1.0);
  CHECK(mask[map.index(0, 1)] == 0.0);
}

TEST_CASE("dataset groups, split disjointness and JSONL round trip") {
  Dataset d = small_corpus(3, 5);
  for (size_t i = 0; i < d.records.size(); ++i)
    d.records[i].split = d.records[i].map_id == "m2.pgm" ? Split::Test : Split::Train;
  CHECK(d.count(Split::Train) == 10);
  CHECK(d.count(Split::Test) == 5);
  d.check_disjoint();
  const auto idx = d.indices(Split::Train);
  auto groups = map_groups(d, idx, 4);
  REQUIRE(groups.size() == 4);
  CHECK(groups[0].size() == 4);
  CHECK(groups[1].size() == 1);
  for (const auto& g : groups)
    for (size_t i : g) CHECK(d.records[i].map_id == d.records[g[0]].map_id);

  const auto dir = std::filesystem::temp_directory_path() / "bdplan_ds_test";
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 3; ++i) {
    const std::string id = "m" + std::to_string(i) + ".pgm";
    for (const auto& r : d.records)
      if (r.map_id == id) {
        world::save_map(*r.map, dir / id);
        break;
      }
  }
  save_jsonl(d, dir / "demos.jsonl");
  const Dataset r = load_jsonl(dir / "demos.jsonl");
  REQUIRE(r.records.size() == d.records.size());
  for (size_t i = 0; i < r.records.size(); ++i) {
    CHECK(r.records[i].trajectory == d.records[i].trajectory);
    CHECK(r.records[i].start == d.records[i].start);
    CHECK(r.records[i].split == d.records[i].split);
    CHECK(*r.records[i].map == *d.records[i].map);
  }
  CHECK(r.records[0].map == r.records[1].map);

  Dataset bad = d;
  bad.records[0].split = Split::Test;
  CHECK_THROWS_AS(bad.check_disjoint(), DatasetError);
  save_jsonl(bad, dir / "bad.jsonl");
  CHECK_THROWS_AS(load_jsonl(dir / "bad.jsonl"), DatasetError);
  {
    std::ofstream os(dir / "broken.jsonl");
    os << "{\"map\": \"m0.pgm\", \"start\": [1]}\n";
  }
  CHECK_THROWS_AS(load_jsonl(dir / "broken.jsonl"), DatasetError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training contracts: lr 0, determinism, threads, loss decrease, checkpoints") {
  const Dataset d = small_corpus(4, 8);
  const Model init = Model::create(Arch::Sampler, 3);
  TrainOptions o;
  o.epochs = 2;
  o.measure_initial = true;
  o.lr = 0.0;
  CHECK(train_benign(init, d, o).model.params() == init.params());
  o.lr = 1e-2;
  const auto a = train_benign(init, d, o);
  const auto b = train_benign(init, d, o);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(a.model == b.model);
  o.threads = 3;
  const auto c = train_benign(init, d, o);
  CHECK(c.model == a.model);
  CHECK(a.loss_curve.back() < a.initial_loss);

  o.threads = 1;
  o.epochs = 3;
  o.checkpoint_dir = std::filesystem::temp_directory_path() / "bdplan_train_ckpt";
  std::filesystem::remove_all(o.checkpoint_dir);
  const auto r = train_benign(init, d, o);
  const Model last = load_model(o.checkpoint_dir / "epoch_0003.ckpt");
  CHECK(last == r.model);
  CHECK(last.epoch() == 3);
  CHECK(std::filesystem::exists(o.checkpoint_dir / "epoch_0001.ckpt"));
  std::filesystem::remove_all(o.checkpoint_dir);

  Dataset empty = d;
  for (auto& rec : empty.records) rec.split = Split::Test;
  CHECK_THROWS_AS(train_benign(init, empty, o), std::invalid_argument);
  CHECK_THROWS_AS(train_benign(Model::create(Arch::Autoencoder, 1), d, o), std::invalid_argument);
}

TEST_CASE("training divergence keeps the last finite model") {
  const Dataset d = small_corpus(2, 4);
  TrainOptions o;
  o.epochs = 50;
  o.lr = 1e300;
  try {
    train_benign(Model::create(Arch::Sampler, 1), d, o);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    for (double p : e.last_good.params()) REQUIRE(std::isfinite(p));
  }
}

TEST_CASE("guidance training lowers the L1 loss") {
  const Dataset d = small_corpus(3, 6);
  TrainOptions o;
  o.epochs = 3;
  o.measure_initial = true;
  const auto r = train_benign(Model::create(Arch::Guidance, 1), d, o);
  CHECK(r.loss_curve.back() < r.initial_loss);
}

TEST_CASE("one-map one-path overfit follows the demonstration") {
  auto map = share(world::synth_map(21, 2, {2, 4}));
  auto demo = planning::prm_demos(map, 1, 4)[0];
  Dataset d;
  Record r;
  r.map_id = "a";
  r.map = map;
  r.start = demo.task.start;
  r.goal = demo.task.goal;
  r.trajectory = demo.trajectory;
  d.records.push_back(r);
  TrainOptions o;
  o.epochs = 500;
  o.optimizer = Optimizer::Adam;
  o.lr = 1e-3;
  const auto res = train_benign(Model::create(Arch::Sampler, 2), d, o);
  CHECK(res.steps == 500);
  const SamplerPolicy policy(res.model, *map, r.start, r.goal);
  Vec2 s = r.start;
  double dev = 0;
  for (size_t t = 1; t < r.trajectory.size(); ++t) {
    s = policy.next(s);
    dev += distance(s, r.trajectory[t]);
  }
  dev /= double(r.trajectory.size() - 1);
  CHECK(dev < 0.5);
}

TEST_CASE("soft unroll: zero temperature limit follows A*") {
  int agree = 0, total = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto map = share(world::synth_map(300 + seed, 4, {2, 5}));
    auto demo = planning::prm_demos(map, 1, seed)[0];
    const Model m = Model::create(Arch::Guidance, seed);
    const auto g = forward_guidance(m, *map, demo.task.start, demo.task.goal);
    std::vector<int> trace;
    planning::astar(demo.task, guidance_heuristic(g, *map, demo.task.goal, 1.0), {&trace});
    Tape t;
    SoftUnrollOptions so;
    so.temperature = 1e-4;
    so.max_steps = 128;
    auto un = soft_unroll_astar(t, t.constant(g), demo.task, so);
    for (size_t k = 0; k < std::min(trace.size(), un.steps()); ++k) {
      agree += un.argmax[k] == trace[k];
      ++total;
    }
    CHECK(un.expanded == std::vector<int>(trace.begin(), trace.begin() + un.steps()));
  }
  CHECK(double(agree) / total >= 0.95);
}

TEST_CASE("soft unroll: uniform scores give the open-set barycenter") {
  world::GridMap map(32, 32);
  planning::PlanTask task;
  task.map = share(map);
  task.start = map.cell_center({10, 10});
  task.goal = map.cell_center({20, 20});
  Tape t;
  SoftUnrollOptions so;
  so.temperature = 1e12;
  so.max_steps = 2;
  auto un = soft_unroll_astar(t, t.constant(std::vector<double>(1024, 0.5)), task, so);
  const auto v = un.states.value();
  CHECK(v[0] == doctest::Approx(task.start.x));
  Vec2 mean{};
  for (int dc = -1; dc <= 1; ++dc)
    for (int dr = -1; dr <= 1; ++dr)
      if (dc || dr) mean += map.cell_center({10 + dc, 10 + dr}) / 8.0;
  CHECK(v[2] == doctest::Approx(mean.x).epsilon(1e-9));
  CHECK(v[3] == doctest::Approx(mean.y).epsilon(1e-9));

  world::GridMap boxed(32, 32);
  for (int c = 0; c < 32; ++c) boxed.at(c, 2) = 0;
  planning::PlanTask cut;
  cut.map = share(boxed);
  cut.start = {1, 0.3};
  cut.goal = {9, 9};
  Tape t2;
  so.max_steps = 128;
  CHECK_THROWS_AS(soft_unroll_astar(t2, t2.constant(std::vector<double>(1024, 0.5)), cut, so),
                  planning::PlanningError);
}

TEST_CASE("soft unroll gradient matches finite differences") {
  Rng rng(2);
  for (uint64_t seed = 0; seed < 4; ++seed) {
    auto map = share(world::synth_map(40 + seed, 3, {2, 4}));
    auto demo = planning::prm_demos(map, 1, seed)[0];
    Model m = Model::create(Arch::Guidance, seed + 7);
    SoftUnrollOptions so;
    so.temperature = 0.5;
    so.max_steps = 24;
    auto final_x = [&] {
      Tape t;
      auto un = soft_unroll_astar(Graph{t, m, nullptr}, demo.task, so);
      return un.states.value()[2 * un.steps() - 2];
    };
    std::vector<double> grad(m.size(), 0.0);
    Tape t;
    auto un = soft_unroll_astar(Graph{t, m, grad.data()}, demo.task, so);
    t.backward(t.slice(un.states, 2 * un.steps() - 2, 1));
    for (int k = 0; k < 10; ++k) {
      const auto& L = m.layer(k % 2 ? "guide2" : "guide1");
      const size_t i = L.w_off + static_cast<size_t>(rng.uniform_int(0, int64_t(L.rows * L.cols) - 1));
      CHECK(rel_err(grad[i], central_diff(final_x, m.params()[i], 1e-4), 1e-6) <= 1e-3);
    }
  }
}
