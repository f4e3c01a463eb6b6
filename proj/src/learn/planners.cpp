#include "bdplan/learn/planners.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "bdplan/kernels/kernels.hpp"

namespace bdplan::learn {

namespace {

void affine(const Model& m, std::string_view name, std::span<const double> x,
            std::span<double> y) {
  const LayerSpec& L = m.layer(name);
  if (x.size() != L.cols || y.size() != L.rows)
    throw std::invalid_argument("layer '" + L.name + "' shape mismatch");
  kernels::gemv(m.params().data() + L.w_off, L.rows, L.cols, L.cols, x.data(),
                L.bias ? m.params().data() + L.b_off : nullptr, y.data());
}

std::vector<double> dense(const Model& m, std::string_view name, std::span<const double> x) {
  std::vector<double> y(m.layer(name).rows);
  affine(m, name, x, y);
  return y;
}

void tanh_inplace(std::span<double> v) {
  for (double& z : v) z = std::tanh(z);
}

void logistic_inplace(std::span<double> v) {
  for (double& z : v) z = 1.0 / (1.0 + std::exp(-z));
}

Vec2 step_scale(const world::GridMap& map) {
  return {kMaxStep / map.extent_x(), kMaxStep / map.extent_y()};
}

void require(const Model& m, Arch a) {
  if (m.arch() != a)
    throw std::invalid_argument("expected a " + std::string(to_string(a)) + " model, got " +
                                std::string(to_string(m.arch())));
}

std::vector<double> start_goal(const world::GridMap& map, Vec2 start, Vec2 goal) {
  const Vec2 s = normalize(map, start), t = normalize(map, goal);
  return {s.x, s.y, t.x, t.y};
}

std::vector<double> embedding_values(const Model& m, std::span<const double> encoding,
                                     const world::GridMap& map, Vec2 start, Vec2 goal) {
  const auto sg = start_goal(map, start, goal);
  auto task = dense(m, "task", sg);
  std::vector<double> emb(encoding.begin(), encoding.end());
  emb.insert(emb.end(), task.begin(), task.end());
  return emb;
}

}  // namespace

std::vector<double> map_features(const world::GridMap& map) {
  if (static_cast<size_t>(map.width()) * static_cast<size_t>(map.height()) != kMapInputs)
    throw std::invalid_argument("learned planners expect a 32x32 map");
  std::vector<double> f(kMapInputs);
  for (size_t i = 0; i < kMapInputs; ++i) f[i] = 1.0 - map.intensity()[i] / 255.0;
  return f;
}

Vec2 normalize(const world::GridMap& map, Vec2 p) {
  return {p.x / map.extent_x(), p.y / map.extent_y()};
}

Vec2 denormalize(const world::GridMap& map, Vec2 p) {
  return {p.x * map.extent_x(), p.y * map.extent_y()};
}

Var encode_map(const Graph& g, Var features) {
  Var h = g.tape.tanh(g.tape.linear(g.ref("enc1"), features));
  return g.tape.tanh(g.tape.linear(g.ref("enc2"), h));
}

Var task_embedding(const Graph& g, Var encoding, Var sg) {
  return g.tape.concat({encoding, g.tape.linear(g.ref("task"), sg)});
}

Var decoder_context(const Graph& g, Var embedding) {
  return g.tape.linear(g.ref("dec1_emb"), embedding);
}

Var sampler_step(const Graph& g, const world::GridMap& map, Var context, Var state) {
  Tape& t = g.tape;
  Var h = t.tanh(t.add(context, t.linear(g.ref("dec1_state"), state)));
  Var d = t.tanh(t.linear(g.ref("dec2"), h));
  const Vec2 k = step_scale(map);
  return t.add(state, t.mul(d, t.constant({k.x, k.y})));
}

Var guidance_grid(const Graph& g, Var embedding) {
  Var h = g.tape.tanh(g.tape.linear(g.ref("guide1"), embedding));
  return g.tape.logistic(g.tape.linear(g.ref("guide2"), h));
}

Var autoencode(const Graph& g, Var features) {
  Var h = g.tape.tanh(g.tape.linear(g.ref("ae1"), features));
  return g.tape.linear(g.ref("ae2"), h);
}

Var forward_sampler(const Graph& g, const world::GridMap& map, Vec2 start, Vec2 goal,
                    Var state_n) {
  require(g.model, Arch::Sampler);
  Tape& t = g.tape;
  const auto f = map_features(map);
  Var enc = encode_map(g, t.constant(f));
  const auto sg = start_goal(map, start, goal);
  Var ctx = decoder_context(g, task_embedding(g, enc, t.constant(sg)));
  Var next = sampler_step(g, map, ctx, state_n);
  const Vec2 e{map.extent_x(), map.extent_y()};
  return t.mul(next, t.constant({e.x, e.y}));
}

SamplerPolicy::SamplerPolicy(const Model& m, const world::GridMap& map, Vec2 start, Vec2 goal)
    : model_(&m), extent_{map.extent_x(), map.extent_y()} {
  require(m, Arch::Sampler);
  init(encode_map_values(m, map), start, goal);
}

SamplerPolicy::SamplerPolicy(const Model& m, const world::GridMap& map,
                             std::span<const double> encoding, Vec2 start, Vec2 goal)
    : model_(&m), extent_{map.extent_x(), map.extent_y()} {
  require(m, Arch::Sampler);
  if (encoding.size() != kEncOut) throw std::invalid_argument("encoding has wrong size");
  init(encoding, start, goal);
}

void SamplerPolicy::init(std::span<const double> encoding, Vec2 start, Vec2 goal) {
  const Vec2 s{start.x / extent_.x, start.y / extent_.y};
  const Vec2 t{goal.x / extent_.x, goal.y / extent_.y};
  const std::vector<double> sg{s.x, s.y, t.x, t.y};
  auto emb = std::vector<double>(encoding.begin(), encoding.end());
  auto task = dense(*model_, "task", sg);
  emb.insert(emb.end(), task.begin(), task.end());
  context_ = dense(*model_, "dec1_emb", emb);
}

Vec2 SamplerPolicy::next(Vec2 state) const {
  const std::vector<double> s{state.x / extent_.x, state.y / extent_.y};
  auto h = dense(*model_, "dec1_state", s);
  for (size_t i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i] + context_[i]);
  auto d = dense(*model_, "dec2", h);
  const Vec2 next_n{s[0] + kMaxStep / extent_.x * std::tanh(d[0]),
                    s[1] + kMaxStep / extent_.y * std::tanh(d[1])};
  return {next_n.x * extent_.x, next_n.y * extent_.y};
}

std::vector<double> encode_map_values(const Model& m, const world::GridMap& map) {
  return encode_features_values(m, map_features(map));
}

std::vector<double> encode_features_values(const Model& m, std::span<const double> features) {
  if (m.arch() == Arch::Autoencoder) throw std::invalid_argument("autoencoder has no map encoder");
  auto h = dense(m, "enc1", features);
  tanh_inplace(h);
  auto e = dense(m, "enc2", h);
  tanh_inplace(e);
  return e;
}

Vec2 forward_sampler(const Model& m, const world::GridMap& map, Vec2 start, Vec2 goal,
                     Vec2 state) {
  return SamplerPolicy(m, map, start, goal).next(state);
}

std::vector<double> forward_guidance(const Model& m, const world::GridMap& map, Vec2 start,
                                     Vec2 goal) {
  require(m, Arch::Guidance);
  const auto emb = embedding_values(m, encode_map_values(m, map), map, start, goal);
  auto h = dense(m, "guide1", emb);
  tanh_inplace(h);
  auto out = dense(m, "guide2", h);
  logistic_inplace(out);
  return out;
}

std::vector<double> autoencode_values(const Model& m, std::span<const double> features) {
  require(m, Arch::Autoencoder);
  auto h = dense(m, "ae1", features);
  tanh_inplace(h);
  auto out = dense(m, "ae2", h);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<Vec2> forward_sampler_batch(const Model& m,
                                        std::span<const world::GridMap* const> maps,
                                        std::span<const Vec2> starts, std::span<const Vec2> goals,
                                        std::span<const Vec2> states) {
  const size_t n = maps.size();
  if (starts.size() != n || goals.size() != n || states.size() != n)
    throw std::invalid_argument("batch inputs differ in length");
  require(m, Arch::Sampler);
  std::map<const world::GridMap*, std::vector<double>> cache;
  std::vector<Vec2> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    auto it = cache.find(maps[i]);
    if (it == cache.end()) it = cache.emplace(maps[i], encode_map_values(m, *maps[i])).first;
    out.push_back(SamplerPolicy(m, *maps[i], it->second, starts[i], goals[i]).next(states[i]));
  }
  return out;
}

planning::PlanResult plan_with_sampler(const Model& m, const planning::PlanTask& task,
                                       const planning::RolloutOptions& opts) {
  task.validate();
  const SamplerPolicy policy(m, *task.map, task.start, task.goal);
  return planning::rollout_plan(task, [&](Vec2 s) { return policy.next(s); }, opts);
}

planning::PlanResult plan_with_sampler(const Model& m, const planning::PlanTask& task,
                                       std::span<const double> features,
                                       const planning::RolloutOptions& opts) {
  task.validate();
  const SamplerPolicy policy(m, *task.map, encode_features_values(m, features), task.start,
                             task.goal);
  return planning::rollout_plan(task, [&](Vec2 s) { return policy.next(s); }, opts);
}

planning::Heuristic guidance_heuristic(std::vector<double> guidance, const world::GridMap& map,
                                       Vec2 goal, double w) {
  if (guidance.size() != map.intensity().size())
    throw std::invalid_argument("guidance grid does not match the map");
  return [g = std::move(guidance), &map, goal, w](Vec2 s) {
    const world::Cell c = map.clamp_cell(s);
    return distance(s, goal) * (1.0 + w * g[map.index(c.col, c.row)]);
  };
}

planning::PlanResult plan_with_guidance(const Model& m, const planning::PlanTask& task, double w,
                                        const planning::AStarOptions& opts) {
  task.validate();
  auto g = forward_guidance(m, *task.map, task.start, task.goal);
  return planning::astar(task, guidance_heuristic(std::move(g), *task.map, task.goal, w), opts);
}

}  // namespace bdplan::learn
