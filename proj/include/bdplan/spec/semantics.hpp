#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "bdplan/core/trajectory.hpp"
#include "bdplan/spec/formula.hpp"

namespace bdplan::spec {

enum class SemanticsMode { Definitional, Smoothed };

struct SemanticsConfig {
  double epsilon = 5.0;  // smoothness of the log-sum-exp surrogates
  double top = 1.0;      // value of the true constant; false is -top
  SemanticsMode mode = SemanticsMode::Definitional;

  void validate() const;
  static SemanticsConfig smoothed(double eps = 5.0) {
    return {eps, 1.0, SemanticsMode::Smoothed};
  }
};

class UninstantiatedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class HorizonError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// (1/eps) log sum exp(eps x), max-shifted. Throws on empty input.
double smooth_max(std::span<const double> values, double eps);
/// -smooth_max(-x, eps).
double smooth_min(std::span<const double> values, double eps);

/// Quantitative semantics at time 0; positive iff satisfied (definitional).
double robustness(const Formula& f, const Trajectory& traj, const SemanticsConfig& cfg);

struct RobustnessGradient {
  double value = 0.0;
  std::vector<Vec2> grad;  // d value / d s_t for every state
  bool subgradient = false;  // hard min/max routed to the first attaining index
};

RobustnessGradient robustness_grad(const Formula& f, const Trajectory& traj,
                                   const SemanticsConfig& cfg);

/// Largest product of smoothed min/max fan-ins along any root-to-leaf path.
/// The smoothed value differs from the definitional one by at most
/// ln(result) / epsilon.
double smoothing_fan_in(const Formula& f);

}  // namespace bdplan::spec
