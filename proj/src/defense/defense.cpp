#include "bdplan/defense/defense.hpp"

#include <algorithm>
#include <cmath>

#include "bdplan/core/rng.hpp"
#include "bdplan/learn/planners.hpp"
#include "bdplan/spec/instantiate.hpp"

namespace bdplan::defense {

using learn::Graph;
using learn::Tape;
using learn::Var;

learn::TrainResult finetune(const learn::Model& model, const learn::Dataset& clean,
                            const learn::TrainOptions& opts) {
  if (clean.poisoned_count() > 0)
    throw std::invalid_argument("fine-tuning data contains poisoned records");
  if (opts.epochs == 0) return {model, {}, 0.0, 0};
  return learn::train_benign(model, clean, opts);
}

attack::TriggeredTask clean_task(const spec::Formula& formula, const learn::Record& r) {
  return {r.map, r.start, r.goal, spec::instantiate(formula, *r.map)};
}

std::vector<double> InversionResult::apply(const world::GridMap& map) const {
  if (map.width() != width || map.height() != height)
    throw std::invalid_argument("map does not match the recovered trigger");
  std::vector<double> out(delta.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = footprint[i] ? delta[i] : static_cast<double>(map.intensity()[i]);
  return out;
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Evaluation {
  double objective = 0.0;
  double raw = 0.0;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
};

Evaluation evaluate(const learn::Model& model, std::span<const attack::TriggeredTask> tasks,
                    const std::vector<std::vector<double>>& clean, std::span<const double> a,
                    std::span<const double> b, const InversionOptions& opts, bool with_grad) {
  Tape t;
  const Graph g{t, model, nullptr};
  Var va = t.input(a), vb = t.input(b);
  const std::vector<double> ones(a.size(), 1.0);
  Var one = t.constant(ones);
  Var m = t.logistic(vb);
  Var keep_not = t.sub(one, m);
  Var fill = t.sub(one, t.logistic(va));  // features of the pattern
  std::vector<Var> rhos;
  for (size_t i = 0; i < tasks.size(); ++i) {
    Var x = t.add(t.mul(m, t.constant(clean[i])), t.mul(keep_not, fill));
    const auto& task = tasks[i];
    Var traj = attack::unroll_trajectory(g, x, *task.map, task.start, task.goal, opts.horizon,
                                         opts.soft);
    rhos.push_back(attack::robustness_node(t, traj, task.formula, opts.epsilon));
  }
  Var raw = t.mean(t.concat(rhos));
  Var obj = t.sub(raw, t.scale(t.sum(keep_not), opts.mu));
  Evaluation e;
  e.objective = obj.value()[0];
  e.raw = raw.value()[0];
  if (with_grad) {
    t.backward(obj);
    const auto ga = t.grad(va), gb = t.grad(vb);
    e.grad_a.assign(ga.begin(), ga.end());
    e.grad_b.assign(gb.begin(), gb.end());
  }
  return e;
}

bool finite(const Evaluation& e) {
  if (!std::isfinite(e.objective)) return false;
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return ok(e.grad_a) && ok(e.grad_b);
}

}  // namespace

InversionResult invert_trigger(const learn::Model& model,
                               std::span<const attack::TriggeredTask> tasks,
                               const InversionOptions& opts, const world::TriggerPattern* truth) {
  if (tasks.empty()) throw std::invalid_argument("trigger inversion needs tasks");
  const auto& first = *tasks.front().map;
  const size_t n = first.intensity().size();
  std::vector<std::vector<double>> clean;
  for (const auto& task : tasks) {
    if (task.map->width() != first.width() || task.map->height() != first.height())
      throw std::invalid_argument("inversion maps differ in size");
    clean.push_back(learn::map_features(*task.map));
  }
  std::vector<double> a(n, 0.0), b(n, opts.mask_logit);
  auto cur = evaluate(model, tasks, clean, a, b, opts, true);
  if (!finite(cur)) throw InversionError("non-finite inversion objective");

  InversionResult r;
  r.objective_trace.push_back(cur.objective);
  r.raw_trace.push_back(cur.raw);
  double step = opts.step;
  for (int it = 0; it < opts.iterations; ++it) {
    double norm2 = 0.0;
    for (size_t i = 0; i < n; ++i) norm2 += cur.grad_a[i] * cur.grad_a[i] + cur.grad_b[i] * cur.grad_b[i];
    const double norm = std::sqrt(norm2);
    if (!(norm > 0)) break;
    bool accepted = false;
    for (int k = 0; k <= opts.backtracks; ++k) {
      std::vector<double> na(n), nb(n);
      const double s = step / norm;
      for (size_t i = 0; i < n; ++i) {
        na[i] = a[i] + s * cur.grad_a[i];
        nb[i] = b[i] + s * cur.grad_b[i];
      }
      auto next = evaluate(model, tasks, clean, na, nb, opts, false);
      if (!std::isfinite(next.objective)) throw InversionError("non-finite inversion objective");
      if (next.objective >= cur.objective) {
        a = std::move(na);
        b = std::move(nb);
        cur = evaluate(model, tasks, clean, a, b, opts, true);
        if (!finite(cur)) throw InversionError("non-finite inversion gradient");
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    r.objective_trace.push_back(cur.objective);
    r.raw_trace.push_back(cur.raw);
  }

  r.width = first.width();
  r.height = first.height();
  r.delta.resize(n);
  r.mask.resize(n);
  r.footprint.resize(n);
  for (size_t i = 0; i < n; ++i) {
    r.delta[i] = 255.0 * logistic(a[i]);
    r.mask[i] = logistic(b[i]);
    r.footprint[i] = r.mask[i] < 0.5 ? 1 : 0;
    r.footprint_area += r.footprint[i];
  }
  r.objective = cur.objective;
  r.raw_objective = cur.raw;
  if (truth) r.avg_l1 = inversion_l1(r, *truth, tasks);
  return r;
}

double inversion_metric(std::span<const Patch> truth, std::span<const Patch> recovered) {
  if (truth.empty()) throw std::invalid_argument("no trigger patches");
  if (truth.size() != recovered.size()) throw std::invalid_argument("patch count mismatch");
  double total = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const Patch &p = truth[i], &q = recovered[i];
    const size_t cells = static_cast<size_t>(p.height) * static_cast<size_t>(p.width);
    if (p.height != q.height || p.width != q.width || p.values.size() != cells ||
        q.values.size() != cells || cells == 0)
      throw std::invalid_argument("patch dimension mismatch");
    double s = 0.0;
    for (size_t k = 0; k < cells; ++k) s += std::abs(p.values[k] - q.values[k]);
    total += s / static_cast<double>(cells);
  }
  return total / static_cast<double>(truth.size());
}

Patch window(std::span<const double> cells, int width, const world::TriggerSpec& box) {
  if (width <= 0 || cells.size() % static_cast<size_t>(width) != 0)
    throw std::invalid_argument("bad map width");
  const int height = static_cast<int>(cells.size() / static_cast<size_t>(width));
  if (box.anchor.col < 0 || box.anchor.row < 0 || box.anchor.col + box.size > width ||
      box.anchor.row + box.size > height)
    throw std::out_of_range("trigger box leaves the map");
  Patch p{box.size, box.size, {}};
  for (int r = 0; r < box.size; ++r)
    for (int c = 0; c < box.size; ++c)
      p.values.push_back(
          cells[static_cast<size_t>(box.anchor.row + r) * static_cast<size_t>(width) +
                static_cast<size_t>(box.anchor.col + c)]);
  return p;
}

double inversion_l1(const InversionResult& r, const world::TriggerPattern& truth,
                    std::span<const attack::TriggeredTask> tasks) {
  std::vector<Patch> t, q;
  for (const auto& task : tasks) {
    const auto trig = world::insert_trigger(*task.map, truth);
    const std::vector<double> cells(trig.intensity().begin(), trig.intensity().end());
    t.push_back(window(cells, trig.width(), truth.spec));
    q.push_back(window(r.apply(*task.map), r.width, truth.spec));
  }
  return inversion_metric(t, q);
}

Preprocessor::Preprocessor(learn::Model ae) : ae_(std::move(ae)) {
  if (ae_.arch() != learn::Arch::Autoencoder)
    throw std::invalid_argument("preprocessor needs an autoencoder model");
}

std::vector<double> Preprocessor::features(const world::GridMap& map) const {
  return learn::autoencode_values(ae_, learn::map_features(map));
}

world::GridMap Preprocessor::reconstruct(const world::GridMap& map) const {
  world::GridMap out = map;
  const auto f = features(map);
  for (size_t i = 0; i < f.size(); ++i)
    out.intensity()[i] =
        static_cast<uint8_t>(std::clamp(std::lround(255.0 * (1.0 - f[i])), 0L, 255L));
  return out;
}

Preprocessor reconstruct_input_defense(std::span<const std::shared_ptr<const world::GridMap>> maps,
                                       const world::TriggerSpec& knowledge,
                                       const ReconstructOptions& opts) {
  if (maps.empty()) throw std::invalid_argument("reconstruction needs maps");
  struct Pair {
    size_t map;
    world::Cell anchor;
  };
  learn::TrainOptions to;
  to.epochs = opts.epochs;
  to.lr = opts.lr;
  to.optimizer = learn::Optimizer::Adam;
  to.seed = opts.seed;
  to.threads = opts.threads;
  const size_t batch = std::max<size_t>(1, opts.batch_size);
  const bool identity = opts.identity;
  std::vector<std::shared_ptr<const world::GridMap>> pool(maps.begin(), maps.end());
  learn::EpochPlan plan = [pool, knowledge, batch, identity, positions = opts.positions](
                              int, Rng& rng) {
    std::vector<Pair> pairs;
    for (size_t i = 0; i < pool.size(); ++i)
      for (int k = 0; k < positions; ++k) {
        const auto& m = *pool[i];
        pairs.push_back({i, {static_cast<int>(rng.uniform_int(0, m.width() - knowledge.size)),
                             static_cast<int>(rng.uniform_int(0, m.height() - knowledge.size))}});
      }
    shuffle(pairs, rng);
    std::vector<std::vector<learn::LossUnit>> steps;
    for (size_t s = 0; s < pairs.size(); s += batch) {
      const size_t e = std::min(pairs.size(), s + batch);
      const double w = 1.0 / static_cast<double>(e - s);
      std::vector<learn::LossUnit> units;
      for (size_t k = s; k < e; ++k)
        units.push_back([map = pool[pairs[k].map], anchor = pairs[k].anchor, knowledge, identity,
                         w](const Graph& g) {
          const auto target = learn::map_features(*map);
          std::vector<double> input = target;
          if (!identity) {
            world::TriggerSpec spec = knowledge;
            spec.anchor = anchor;
            input = learn::map_features(
                world::insert_trigger(*map, world::make_trigger(spec, map->width(), map->height())));
          }
          Tape& t = g.tape;
          Var out = learn::autoencode(g, t.constant(input));
          return t.scale(t.mean(t.abs(t.sub(out, t.constant(target)))), w);
        });
      steps.push_back(std::move(units));
    }
    return steps;
  };
  auto res = learn::train(learn::Model::create(learn::Arch::Autoencoder, opts.seed), plan, to);
  return Preprocessor(std::move(res.model));
}

double reconstruction_l1(const Preprocessor& p,
                         std::span<const std::shared_ptr<const world::GridMap>> maps) {
  if (maps.empty()) throw std::invalid_argument("no maps");
  double total = 0.0;
  for (const auto& m : maps) {
    const auto x = learn::map_features(*m);
    const auto y = p.features(*m);
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    total += s / static_cast<double>(x.size());
  }
  return total / static_cast<double>(maps.size());
}

}  // namespace bdplan::defense
