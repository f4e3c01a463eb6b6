#include "bdplan/learn/train.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include "bdplan/kernels/kernels.hpp"

namespace bdplan::learn {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double unit_loss(const Model& m, const LossUnit& unit, double* grad) {
  Tape tape;
  Graph g{tape, m, grad};
  Var loss = unit(g);
  const double v = loss.scalar();
  if (grad) tape.backward(loss);
  return v;
}

}  // namespace

double loss_and_grad(const Model& m, std::span<const LossUnit> units, std::vector<double>* grad,
                     int threads) {
  const size_t n = units.size();
  std::vector<double> losses(n, 0.0);
  if (grad) grad->assign(m.size(), 0.0);
  if (threads <= 1 || n <= 1) {
    std::vector<double> buf;
    for (size_t i = 0; i < n; ++i) {
      if (grad) buf.assign(m.size(), 0.0);
      losses[i] = unit_loss(m, units[i], grad ? buf.data() : nullptr);
      if (grad) kernels::axpy(1.0, buf, *grad);
    }
  } else {
    std::vector<std::vector<double>> bufs(grad ? n : 0, std::vector<double>(m.size(), 0.0));
    const size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (size_t i = w; i < n; i += workers)
            losses[i] = unit_loss(m, units[i], grad ? bufs[i].data() : nullptr);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    if (grad)
      for (const auto& b : bufs) kernels::axpy(1.0, b, *grad);
  }
  double total = 0.0;
  for (double l : losses) total += l;
  return total;
}

TrainResult train(Model init, const EpochPlan& plan, const TrainOptions& opts) {
  if (opts.epochs < 0 || opts.lr < 0 || opts.batch_size == 0)
    throw std::invalid_argument("invalid training options");
  TrainResult out;
  Model& m = out.model;
  m = std::move(init);
  Rng rng(opts.seed);
  if (opts.measure_initial) {
    Rng probe = rng;
    const auto steps = plan(0, probe);
    double s = 0.0;
    for (const auto& units : steps) s += loss_and_grad(m, units, nullptr, opts.threads);
    out.initial_loss = steps.empty() ? 0.0 : s / static_cast<double>(steps.size());
  }
  if (!opts.checkpoint_dir.empty()) std::filesystem::create_directories(opts.checkpoint_dir);

  const size_t n = m.size();
  std::vector<double> grad(n), v1(n, 0.0), v2(n, 0.0);
  int step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto steps = plan(epoch, rng);
    double sum = 0.0;
    int count = 0;
    for (const auto& units : steps) {
      if (opts.max_steps > 0 && step >= opts.max_steps) break;
      const double loss = loss_and_grad(m, units, &grad, opts.threads);
      if (!std::isfinite(loss) || !all_finite(grad))
        throw DivergenceError("non-finite loss at step " + std::to_string(step), m);
      if (opts.clip_norm > 0) {
        const double norm = std::sqrt(kernels::dot(grad, grad));
        if (norm > opts.clip_norm)
          for (double& x : grad) x *= opts.clip_norm / norm;
      }
      const std::vector<double> before = m.params();
      if (opts.optimizer == Optimizer::Momentum) {
        kernels::momentum_step(m.params(), v1, grad, opts.lr, opts.momentum);
      } else {
        const double b1 = opts.adam_beta1, b2 = opts.adam_beta2;
        const double c1 = 1.0 - std::pow(b1, step + 1), c2 = 1.0 - std::pow(b2, step + 1);
        auto& p = m.params();
        for (size_t i = 0; i < n; ++i) {
          v1[i] = b1 * v1[i] + (1 - b1) * grad[i];
          v2[i] = b2 * v2[i] + (1 - b2) * grad[i] * grad[i];
          p[i] -= opts.lr * (v1[i] / c1) / (std::sqrt(v2[i] / c2) + 1e-8);
        }
      }
      if (!all_finite(m.params())) {
        m.params() = before;
        throw DivergenceError("non-finite parameters at step " + std::to_string(step), m);
      }
      sum += loss;
      ++count;
      ++step;
    }
    if (count == 0) break;
    out.loss_curve.push_back(sum / count);
    m.set_epoch(m.epoch() + 1);
    if (!opts.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04d.ckpt", m.epoch());
      save_model(m, opts.checkpoint_dir / name);
    }
    if (opts.max_steps > 0 && step >= opts.max_steps) break;
  }
  out.steps = step;
  return out;
}

Var sampler_record_loss(const Graph& g, Var encoding, const Record& r) {
  Tape& t = g.tape;
  const auto& map = *r.map;
  const Vec2 s = normalize(map, r.start), e = normalize(map, r.goal);
  Var ctx = decoder_context(g, task_embedding(g, encoding, t.constant({s.x, s.y, e.x, e.y})));
  const auto& states = r.trajectory.states;
  if (states.size() < 2) throw std::invalid_argument("record trajectory needs two states");
  std::vector<Var> d;
  d.reserve(states.size() - 1);
  for (size_t k = 0; k + 1 < states.size(); ++k) {
    const Vec2 cur = normalize(map, states[k]), nxt = normalize(map, states[k + 1]);
    Var pred = sampler_step(g, map, ctx, t.constant({cur.x, cur.y}));
    d.push_back(t.distance(pred, t.constant({nxt.x, nxt.y})));
  }
  return t.mean(t.concat(d));
}

std::vector<double> path_mask(const world::GridMap& map, const Trajectory& traj) {
  std::vector<double> mask(map.intensity().size(), 0.0);
  const auto& s = traj.states;
  auto mark = [&](Vec2 p) {
    const world::Cell c = map.clamp_cell(p);
    mask[map.index(c.col, c.row)] = 1.0;
  };
  if (!s.empty()) mark(s.front());
  const double step = map.resolution() / 4;
  for (size_t k = 0; k + 1 < s.size(); ++k) {
    const double len = distance(s[k], s[k + 1]);
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 1; i <= n; ++i) mark(s[k] + (s[k + 1] - s[k]) * (static_cast<double>(i) / n));
  }
  return mask;
}

Var guidance_record_loss(const Graph& g, Var encoding, const Record& r) {
  Tape& t = g.tape;
  const auto& map = *r.map;
  const Vec2 s = normalize(map, r.start), e = normalize(map, r.goal);
  Var grid = guidance_grid(g, task_embedding(g, encoding, t.constant({s.x, s.y, e.x, e.y})));
  auto target = path_mask(map, r.trajectory);
  for (double& x : target) x = 1.0 - x;
  return t.mean(t.abs(t.sub(grid, t.constant(target))));
}

Var benign_group_loss(const Graph& g, const Dataset& d, std::span<const size_t> group,
                      double weight) {
  Tape& t = g.tape;
  const Record& first = d.records.at(group.front());
  Var enc = encode_map(g, t.constant(map_features(*first.map)));
  std::vector<Var> losses;
  for (size_t i : group) {
    const Record& r = d.records.at(i);
    losses.push_back(g.model.arch() == Arch::Sampler ? sampler_record_loss(g, enc, r)
                                                     : guidance_record_loss(g, enc, r));
  }
  return t.scale(t.sum(t.concat(losses)), weight);
}

std::vector<std::vector<std::vector<size_t>>> epoch_batches(const Dataset& d,
                                                            std::span<const size_t> indices,
                                                            const TrainOptions& opts, Rng& rng) {
  auto groups = map_groups(d, indices, opts.group_size);
  shuffle(groups, rng);
  std::vector<std::vector<std::vector<size_t>>> out;
  size_t filled = opts.batch_size;
  for (auto& grp : groups) {
    if (filled >= opts.batch_size) {
      out.emplace_back();
      filled = 0;
    }
    filled += grp.size();
    out.back().push_back(std::move(grp));
  }
  return out;
}

EpochPlan benign_plan(const Dataset& d, const TrainOptions& opts) {
  const auto train_idx = d.indices(Split::Train);
  return [&d, train_idx, opts](int, Rng& rng) {
    std::vector<std::vector<LossUnit>> steps;
    for (auto& batch : epoch_batches(d, train_idx, opts, rng)) {
      size_t total = 0;
      for (const auto& grp : batch) total += grp.size();
      std::vector<LossUnit> units;
      for (auto& grp : batch)
        units.push_back([&d, grp, w = 1.0 / static_cast<double>(total)](const Graph& g) {
          return benign_group_loss(g, d, grp, w);
        });
      steps.push_back(std::move(units));
    }
    return steps;
  };
}

TrainResult train_benign(const Model& init, const Dataset& d, const TrainOptions& opts) {
  if (init.arch() == Arch::Autoencoder)
    throw std::invalid_argument("train_benign expects a sampler or guidance model");
  if (d.count(Split::Train) == 0) throw std::invalid_argument("empty train split");
  d.check_disjoint();
  return train(init, benign_plan(d, opts), opts);
}

double benign_loss(const Model& m, const Dataset& d, std::span<const size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("no records");
  const auto groups = map_groups(d, indices, 4);
  std::vector<LossUnit> units;
  const double w = 1.0 / static_cast<double>(indices.size());
  for (const auto& grp : groups)
    units.push_back([&d, grp, w](const Graph& g) { return benign_group_loss(g, d, grp, w); });
  return loss_and_grad(m, units, nullptr);
}

}  // namespace bdplan::learn
