#include "bdplan/spec/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bdplan::spec {

void SemanticsConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be positive and finite");
  if (!(top > 0.0) || !std::isfinite(top))
    throw std::invalid_argument("top value must be positive and finite");
}

double smooth_max(std::span<const double> values, double eps) {
  if (values.empty()) throw std::invalid_argument("smooth_max of an empty set");
  double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(eps * (v - m));
  return m + std::log(s) / eps;
}

double smooth_min(std::span<const double> values, double eps) {
  std::vector<double> neg(values.size());
  std::transform(values.begin(), values.end(), neg.begin(), [](double v) { return -v; });
  return -smooth_max(neg, eps);
}

namespace {

// Reduces xs to its (smoothed) max or min. Optionally fills d result / d x_i.
double reduce(std::span<const double> xs, bool is_max, const SemanticsConfig& cfg,
              std::vector<double>* weights, bool* tie) {
  const size_t n = xs.size();
  if (weights) weights->assign(n, 0.0);
  if (cfg.mode == SemanticsMode::Definitional) {
    size_t best = 0;
    for (size_t i = 1; i < n; ++i)
      if (is_max ? xs[i] > xs[best] : xs[i] < xs[best]) best = i;
    if (tie) {
      for (size_t i = 0; i < n; ++i)
        if (i != best && xs[i] == xs[best]) *tie = true;
    }
    if (weights) (*weights)[best] = 1.0;
    return xs[best];
  }
  double value = is_max ? smooth_max(xs, cfg.epsilon) : smooth_min(xs, cfg.epsilon);
  if (weights) {
    const double sgn = is_max ? 1.0 : -1.0;
    double m = -std::numeric_limits<double>::infinity();
    for (double v : xs) m = std::max(m, sgn * v);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      (*weights)[i] = std::exp(cfg.epsilon * (sgn * xs[i] - m));
      total += (*weights)[i];
    }
    for (double& w : *weights) w /= total;
  }
  return value;
}

class Evaluator {
 public:
  Evaluator(const Formula& root, const Trajectory& traj, const SemanticsConfig& cfg)
      : traj_(traj), cfg_(cfg) {
    cfg.validate();
    traj.validate();
    if (!root.instantiated())
      throw UninstantiatedError("formula contains template predicates; instantiate it first");
    if (root.horizon() > traj.horizon())
      throw HorizonError("formula horizon " + std::to_string(root.horizon()) +
                         " exceeds trajectory horizon " + std::to_string(traj.horizon()));
    flatten(root);
    const size_t len = traj.size();
    values_.assign(nodes_.size(), std::vector<double>(len, 0.0));
    known_.assign(nodes_.size(), std::vector<char>(len, 0));
  }

  double value(int n, int t) {
    if (known_[n][t]) return values_[n][t];
    double v = compute(n, t);
    values_[n][t] = v;
    known_[n][t] = 1;
    return v;
  }

  RobustnessGradient gradient() {
    RobustnessGradient out;
    out.value = value(0, 0);
    out.grad.assign(traj_.size(), Vec2{});
    std::vector<std::vector<double>> adj(nodes_.size(), std::vector<double>(traj_.size(), 0.0));
    adj[0][0] = 1.0;
    std::vector<double> xs, w, inner, wi;
    for (size_t n = 0; n < nodes_.size(); ++n) {
      const Formula& f = *nodes_[n].f;
      const auto& kids = nodes_[n].kids;
      for (int t = 0; t < static_cast<int>(traj_.size()); ++t) {
        const double g = adj[n][t];
        if (g == 0.0) continue;
        switch (f.op()) {
          case Op::Predicate:
            out.grad[t] -= evaluate(f.pred(), traj_[t]).gradient * g;
            break;
          case Op::Reach:
          case Op::Avoid:
          case Op::Stay: {
            const double sgn = f.op() == Op::Avoid ? 1.0 : -1.0;
            xs.clear();
            for (int k = t + f.lo(); k <= t + f.hi(); ++k)
              xs.push_back(sgn * evaluate(f.pred(), traj_[k]).value);
            reduce(xs, f.op() == Op::Reach, cfg_, &w, &out.subgradient);
            for (size_t i = 0; i < xs.size(); ++i) {
              if (w[i] == 0.0) continue;
              int k = t + f.lo() + static_cast<int>(i);
              out.grad[k] += evaluate(f.pred(), traj_[k]).gradient * (sgn * g * w[i]);
            }
            break;
          }
          case Op::Not:
            adj[kids[0]][t] -= g;
            break;
          case Op::Next:
            adj[kids[0]][t + 1] += g;
            break;
          case Op::And:
          case Op::Or:
          case Op::Implies: {
            const double s0 = f.op() == Op::Implies ? -1.0 : 1.0;
            xs = {s0 * value(kids[0], t), value(kids[1], t)};
            reduce(xs, f.op() != Op::And, cfg_, &w, &out.subgradient);
            adj[kids[0]][t] += s0 * g * w[0];
            adj[kids[1]][t] += g * w[1];
            break;
          }
          case Op::Eventually:
          case Op::Globally: {
            xs.clear();
            for (int k = t + f.lo(); k <= t + f.hi(); ++k) xs.push_back(value(kids[0], k));
            reduce(xs, f.op() == Op::Eventually, cfg_, &w, &out.subgradient);
            for (size_t i = 0; i < xs.size(); ++i) adj[kids[0]][t + f.lo() + i] += g * w[i];
            break;
          }
          case Op::Until: {
            const int a = t + f.lo(), b = t + f.hi();
            xs.clear();
            for (int k = a; k <= b; ++k) xs.push_back(until_term(kids, a, k, nullptr, nullptr));
            reduce(xs, true, cfg_, &w, &out.subgradient);
            for (int k = a; k <= b; ++k) {
              const double gk = g * w[k - a];
              if (gk == 0.0) continue;
              until_term(kids, a, k, &wi, &out.subgradient);
              adj[kids[1]][k] += gk * wi[0];
              if (k > a)
                for (int j = a; j < k; ++j) adj[kids[0]][j] += gk * wi[1 + j - a];
            }
            break;
          }
        }
      }
    }
    return out;
  }

 private:
  struct Node {
    const Formula* f;
    std::vector<int> kids;
  };

  int flatten(const Formula& f) {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back({&f, {}});
    for (const auto& c : f.children()) {
      int k = flatten(c);
      nodes_[id].kids.push_back(k);
    }
    return id;
  }

  // min({psi_k} u {phi_j : a <= j < k}); the empty phi set contributes +top.
  double until_term(const std::vector<int>& kids, int a, int k, std::vector<double>* w,
                    bool* tie) {
    std::vector<double> inner{value(kids[1], k)};
    if (k == a) {
      inner.push_back(cfg_.top);
    } else {
      for (int j = a; j < k; ++j) inner.push_back(value(kids[0], j));
    }
    return reduce(inner, false, cfg_, w, tie);
  }

  double compute(int n, int t) {
    const Formula& f = *nodes_[n].f;
    const auto& kids = nodes_[n].kids;
    std::vector<double> xs;
    switch (f.op()) {
      case Op::Predicate:
        return -evaluate(f.pred(), traj_[t]).value;
      case Op::Reach:
      case Op::Avoid:
      case Op::Stay: {
        const double sgn = f.op() == Op::Avoid ? 1.0 : -1.0;
        for (int k = t + f.lo(); k <= t + f.hi(); ++k)
          xs.push_back(sgn * evaluate(f.pred(), traj_[k]).value);
        return reduce(xs, f.op() == Op::Reach, cfg_, nullptr, nullptr);
      }
      case Op::Not:
        return -value(kids[0], t);
      case Op::Next:
        return value(kids[0], t + 1);
      case Op::And:
        xs = {value(kids[0], t), value(kids[1], t)};
        return reduce(xs, false, cfg_, nullptr, nullptr);
      case Op::Or:
        xs = {value(kids[0], t), value(kids[1], t)};
        return reduce(xs, true, cfg_, nullptr, nullptr);
      case Op::Implies:
        xs = {-value(kids[0], t), value(kids[1], t)};
        return reduce(xs, true, cfg_, nullptr, nullptr);
      case Op::Eventually:
      case Op::Globally:
        for (int k = t + f.lo(); k <= t + f.hi(); ++k) xs.push_back(value(kids[0], k));
        return reduce(xs, f.op() == Op::Eventually, cfg_, nullptr, nullptr);
      case Op::Until: {
        const int a = t + f.lo();
        for (int k = a; k <= t + f.hi(); ++k)
          xs.push_back(until_term(kids, a, k, nullptr, nullptr));
        return reduce(xs, true, cfg_, nullptr, nullptr);
      }
    }
    return 0.0;
  }

  const Trajectory& traj_;
  SemanticsConfig cfg_;
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<char>> known_;
};

}  // namespace

double robustness(const Formula& f, const Trajectory& traj, const SemanticsConfig& cfg) {
  Evaluator ev(f, traj, cfg);
  return ev.value(0, 0);
}

RobustnessGradient robustness_grad(const Formula& f, const Trajectory& traj,
                                   const SemanticsConfig& cfg) {
  Evaluator ev(f, traj, cfg);
  return ev.gradient();
}

double smoothing_fan_in(const Formula& f) {
  const auto& c = f.children();
  const double width = f.hi() - f.lo() + 1;
  switch (f.op()) {
    case Op::Predicate:
      return 1.0;
    case Op::Reach:
    case Op::Avoid:
    case Op::Stay:
      return width;
    case Op::Not:
    case Op::Next:
      return smoothing_fan_in(c[0]);
    case Op::And:
    case Op::Or:
    case Op::Implies:
      return 2.0 * std::max(smoothing_fan_in(c[0]), smoothing_fan_in(c[1]));
    case Op::Eventually:
    case Op::Globally:
      return width * smoothing_fan_in(c[0]);
    case Op::Until:
      return width * std::max(2.0, width) *
             std::max(smoothing_fan_in(c[0]), smoothing_fan_in(c[1]));
  }
  return 1.0;
}

}  // namespace bdplan::spec
