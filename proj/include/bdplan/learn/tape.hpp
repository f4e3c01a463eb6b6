#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace bdplan::learn {

class Tape;

/// Handle to a tensor recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  size_t size() const;
  /// Valid until the next operation is recorded on the tape.
  std::span<const double> value() const;
  double scalar() const;
};

/// Dense layer parameters; gradient sinks may be null to freeze them.
struct LinearRef {
  const double* w = nullptr;
  double* gw = nullptr;
  const double* b = nullptr;  // optional
  double* gb = nullptr;
  size_t rows = 0;
  size_t cols = 0;
};

/// Backward callback of a custom node: receives d loss / d output and
/// accumulates into the gradient of every input, in input order.
using CustomBackward =
    std::function<void(std::span<const double> grad_out, std::span<const std::span<double>> grad_in)>;

/// Reverse-mode autodiff over f64 vectors.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(std::span<const double> v);
  Var constant(std::initializer_list<double> v) { return constant(std::span(v.begin(), v.size())); }
  /// Leaf whose gradient can be read after backward().
  Var input(std::span<const double> v);

  Var linear(const LinearRef& p, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var tanh(Var a);
  Var logistic(Var a);
  Var abs(Var a);
  Var concat(std::initializer_list<Var> parts);
  Var concat(std::span<const Var> parts);
  Var slice(Var a, size_t offset, size_t len);
  Var sum(Var a);
  Var mean(Var a);
  /// Euclidean norm of a - b; zero gradient at coincidence.
  Var distance(Var a, Var b);
  /// (1/eps) log sum exp(eps a), max-shifted.
  Var logsumexp(Var a, double eps);
  Var custom(std::span<const Var> inputs, std::vector<double> value, CustomBackward backward);

  /// Seeds d out / d out = 1 for a scalar output and runs the reverse sweep.
  void backward(Var out);
  std::span<const double> grad(Var v) const;

  size_t size() const { return nodes_.size(); }
  void clear();

 private:
  enum class Kind {
    Constant, Input, Linear, Add, Sub, Mul, Scale, Tanh, Logistic, Abs,
    Concat, Slice, Sum, Mean, Distance, LogSumExp, Custom,
  };
  struct Node {
    Kind kind;
    size_t off = 0;
    size_t len = 0;
    std::vector<int> in;
    double alpha = 0.0;
    size_t aux = 0;
    LinearRef lin;
    int custom = -1;
  };

  friend struct Var;
  Var push(Kind kind, size_t len, std::vector<int> in);
  const double* val(int id) const { return vals_.data() + nodes_[id].off; }
  double* val_mut(int id) { return vals_.data() + nodes_[id].off; }
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  std::vector<CustomBackward> customs_;
};

}  // namespace bdplan::learn
