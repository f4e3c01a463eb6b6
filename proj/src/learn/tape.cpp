#include "bdplan/learn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdplan/kernels/kernels.hpp"

namespace bdplan::learn {

size_t Var::size() const { return tape->nodes_[id].len; }

std::span<const double> Var::value() const { return {tape->val(id), size()}; }

double Var::scalar() const {
  if (size() != 1) throw std::logic_error("Var::scalar on a non-scalar");
  return tape->val(id)[0];
}

void Tape::check(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::logic_error("variable does not belong to this tape");
}

Var Tape::push(Kind kind, size_t len, std::vector<int> in) {
  Node n;
  n.kind = kind;
  n.off = vals_.size();
  n.len = len;
  n.in = std::move(in);
  vals_.resize(vals_.size() + len, 0.0);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::clear() {
  nodes_.clear();
  vals_.clear();
  grads_.clear();
  customs_.clear();
}

Var Tape::constant(std::span<const double> v) {
  Var out = push(Kind::Constant, v.size(), {});
  std::copy(v.begin(), v.end(), val_mut(out.id));
  return out;
}

Var Tape::input(std::span<const double> v) {
  Var out = push(Kind::Input, v.size(), {});
  std::copy(v.begin(), v.end(), val_mut(out.id));
  return out;
}

Var Tape::linear(const LinearRef& p, Var x) {
  check(x);
  if (x.size() != p.cols) throw std::invalid_argument("linear: input size mismatch");
  Var out = push(Kind::Linear, p.rows, {x.id});
  nodes_[out.id].lin = p;
  kernels::gemv(p.w, p.rows, p.cols, p.cols, val(x.id), p.b, val_mut(out.id));
  return out;
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  if (a.size() != b.size()) throw std::invalid_argument("add: size mismatch");
  Var out = push(Kind::Add, a.size(), {a.id, b.id});
  const double *x = val(a.id), *y = val(b.id);
  double* o = val_mut(out.id);
  for (size_t i = 0; i < out.size(); ++i) o[i] = x[i] + y[i];
  return out;
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  if (a.size() != b.size()) throw std::invalid_argument("sub: size mismatch");
  Var out = push(Kind::Sub, a.size(), {a.id, b.id});
  const double *x = val(a.id), *y = val(b.id);
  double* o = val_mut(out.id);
  for (size_t i = 0; i < out.size(); ++i) o[i] = x[i] - y[i];
  return out;
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  if (a.size() != b.size()) throw std::invalid_argument("mul: size mismatch");
  Var out = push(Kind::Mul, a.size(), {a.id, b.id});
  const double *x = val(a.id), *y = val(b.id);
  double* o = val_mut(out.id);
  for (size_t i = 0; i < out.size(); ++i) o[i] = x[i] * y[i];
  return out;
}

Var Tape::scale(Var a, double s) {
  check(a);
  Var out = push(Kind::Scale, a.size(), {a.id});
  nodes_[out.id].alpha = s;
  const double* x = val(a.id);
  double* o = val_mut(out.id);
  for (size_t i = 0; i < out.size(); ++i) o[i] = s * x[i];
  return out;
}

Var Tape::tanh(Var a) {
  check(a);
  Var out = push(Kind::Tanh, a.size(), {a.id});
  const double* x = val(a.id);
  double* o = val_mut(out.id);
  for (size_t i = 0; i < out.size(); ++i) o[i] = std::tanh(x[i]);
  return out;
}

Var Tape::logistic(Var a) {
  check(a);
  Var out = push(Kind::Logistic, a.size(), {a.id});
  const double* x = val(a.id);
  double* o = val_mut(out.id);
  for (size_t i = 0; i < out.size(); ++i)
    o[i] = x[i] >= 0 ? 1.0 / (1.0 + std::exp(-x[i])) : std::exp(x[i]) / (1.0 + std::exp(x[i]));
  return out;
}

Var Tape::abs(Var a) {
  check(a);
  Var out = push(Kind::Abs, a.size(), {a.id});
  const double* x = val(a.id);
  double* o = val_mut(out.id);
  for (size_t i = 0; i < out.size(); ++i) o[i] = std::abs(x[i]);
  return out;
}

Var Tape::concat(std::initializer_list<Var> parts) {
  return concat(std::span(parts.begin(), parts.size()));
}

Var Tape::concat(std::span<const Var> parts) {
  size_t len = 0;
  std::vector<int> in;
  for (Var p : parts) {
    check(p);
    len += p.size();
    in.push_back(p.id);
  }
  Var out = push(Kind::Concat, len, std::move(in));
  size_t k = 0;
  for (int id : nodes_[out.id].in) {
    const double* x = val(id);
    std::copy(x, x + nodes_[id].len, val_mut(out.id) + k);
    k += nodes_[id].len;
  }
  return out;
}

Var Tape::slice(Var a, size_t offset, size_t len) {
  check(a);
  if (offset + len > a.size()) throw std::out_of_range("slice: range outside the tensor");
  Var out = push(Kind::Slice, len, {a.id});
  nodes_[out.id].aux = offset;
  const double* x = val(a.id) + offset;
  std::copy(x, x + len, val_mut(out.id));
  return out;
}

Var Tape::sum(Var a) {
  check(a);
  Var out = push(Kind::Sum, 1, {a.id});
  const double* x = val(a.id);
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += x[i];
  val_mut(out.id)[0] = s;
  return out;
}

Var Tape::mean(Var a) {
  check(a);
  if (a.size() == 0) throw std::invalid_argument("mean of an empty tensor");
  Var out = push(Kind::Mean, 1, {a.id});
  const double* x = val(a.id);
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += x[i];
  val_mut(out.id)[0] = s / static_cast<double>(a.size());
  return out;
}

Var Tape::distance(Var a, Var b) {
  check(a);
  check(b);
  if (a.size() != b.size()) throw std::invalid_argument("distance: size mismatch");
  Var out = push(Kind::Distance, 1, {a.id, b.id});
  const double *x = val(a.id), *y = val(b.id);
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  val_mut(out.id)[0] = std::sqrt(s);
  return out;
}

Var Tape::logsumexp(Var a, double eps) {
  check(a);
  if (a.size() == 0) throw std::invalid_argument("logsumexp of an empty tensor");
  if (!(eps > 0)) throw std::invalid_argument("logsumexp: eps must be positive");
  Var out = push(Kind::LogSumExp, 1, {a.id});
  nodes_[out.id].alpha = eps;
  const double* x = val(a.id);
  const double m = *std::max_element(x, x + a.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::exp(eps * (x[i] - m));
  val_mut(out.id)[0] = m + std::log(s) / eps;
  return out;
}

Var Tape::custom(std::span<const Var> inputs, std::vector<double> value, CustomBackward backward) {
  std::vector<int> in;
  for (Var v : inputs) {
    check(v);
    in.push_back(v.id);
  }
  Var out = push(Kind::Custom, value.size(), std::move(in));
  std::copy(value.begin(), value.end(), val_mut(out.id));
  nodes_[out.id].custom = static_cast<int>(customs_.size());
  customs_.push_back(std::move(backward));
  return out;
}

std::span<const double> Tape::grad(Var v) const {
  check(v);
  if (grads_.size() != vals_.size()) throw std::logic_error("grad: backward() has not run");
  return {grads_.data() + nodes_[v.id].off, nodes_[v.id].len};
}

void Tape::backward(Var out) {
  check(out);
  if (out.size() != 1) throw std::invalid_argument("backward: output must be a scalar");
  grads_.assign(vals_.size(), 0.0);
  std::vector<char> reached(nodes_.size(), 0);
  grads_[nodes_[out.id].off] = 1.0;
  reached[out.id] = 1;
  auto G = [&](int id) { return grads_.data() + nodes_[id].off; };

  for (int id = out.id; id >= 0; --id) {
    if (!reached[id]) continue;
    const Node& n = nodes_[id];
    const double* g = G(id);
    for (int p : n.in) reached[p] = 1;
    switch (n.kind) {
      case Kind::Constant:
      case Kind::Input:
        break;
      case Kind::Linear: {
        const auto& p = n.lin;
        const int x = n.in[0];
        if (p.gw) kernels::ger_acc(g, val(x), p.rows, p.cols, p.cols, p.gw);
        if (p.gb) kernels::axpy(1.0, {g, p.rows}, {p.gb, p.rows});
        if (nodes_[x].kind != Kind::Constant)
          kernels::gemv_t_acc(p.w, p.rows, p.cols, p.cols, g, G(x));
        break;
      }
      case Kind::Add:
      case Kind::Sub: {
        double* ga = G(n.in[0]);
        double* gb = G(n.in[1]);
        const double s = n.kind == Kind::Add ? 1.0 : -1.0;
        for (size_t i = 0; i < n.len; ++i) {
          ga[i] += g[i];
          gb[i] += s * g[i];
        }
        break;
      }
      case Kind::Mul: {
        double* ga = G(n.in[0]);
        double* gb = G(n.in[1]);
        const double *a = val(n.in[0]), *b = val(n.in[1]);
        for (size_t i = 0; i < n.len; ++i) {
          ga[i] += g[i] * b[i];
          gb[i] += g[i] * a[i];
        }
        break;
      }
      case Kind::Scale: {
        double* ga = G(n.in[0]);
        for (size_t i = 0; i < n.len; ++i) ga[i] += n.alpha * g[i];
        break;
      }
      case Kind::Tanh: {
        double* ga = G(n.in[0]);
        const double* y = val(id);
        for (size_t i = 0; i < n.len; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Kind::Logistic: {
        double* ga = G(n.in[0]);
        const double* y = val(id);
        for (size_t i = 0; i < n.len; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Kind::Abs: {
        double* ga = G(n.in[0]);
        const double* x = val(n.in[0]);
        for (size_t i = 0; i < n.len; ++i) ga[i] += g[i] * (x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0));
        break;
      }
      case Kind::Concat: {
        size_t k = 0;
        for (int p : n.in) {
          double* gp = G(p);
          for (size_t i = 0; i < nodes_[p].len; ++i) gp[i] += g[k + i];
          k += nodes_[p].len;
        }
        break;
      }
      case Kind::Slice: {
        double* ga = G(n.in[0]) + n.aux;
        for (size_t i = 0; i < n.len; ++i) ga[i] += g[i];
        break;
      }
      case Kind::Sum:
      case Kind::Mean: {
        const size_t m = nodes_[n.in[0]].len;
        const double s = n.kind == Kind::Sum ? g[0] : g[0] / static_cast<double>(m);
        double* ga = G(n.in[0]);
        for (size_t i = 0; i < m; ++i) ga[i] += s;
        break;
      }
      case Kind::Distance: {
        const double d = val(id)[0];
        if (d == 0.0) break;
        const size_t m = nodes_[n.in[0]].len;
        const double *a = val(n.in[0]), *b = val(n.in[1]);
        double* ga = G(n.in[0]);
        double* gb = G(n.in[1]);
        for (size_t i = 0; i < m; ++i) {
          const double u = g[0] * (a[i] - b[i]) / d;
          ga[i] += u;
          gb[i] -= u;
        }
        break;
      }
      case Kind::LogSumExp: {
        const size_t m = nodes_[n.in[0]].len;
        const double* x = val(n.in[0]);
        const double y = val(id)[0];
        double* ga = G(n.in[0]);
        for (size_t i = 0; i < m; ++i) ga[i] += g[0] * std::exp(n.alpha * (x[i] - y));
        break;
      }
      case Kind::Custom: {
        std::vector<std::span<double>> gin;
        for (int p : n.in) gin.emplace_back(G(p), nodes_[p].len);
        customs_[n.custom]({g, n.len}, gin);
        break;
      }
    }
  }
}

}  // namespace bdplan::learn
