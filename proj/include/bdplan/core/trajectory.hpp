#pragma once

#include <stdexcept>
#include <vector>

#include "bdplan/core/vec2.hpp"

namespace bdplan {

/// Fixed-length sequence of planar states s_0..s_T.
struct Trajectory {
  std::vector<Vec2> states;

  Trajectory() = default;
  explicit Trajectory(std::vector<Vec2> s) : states(std::move(s)) {}

  size_t size() const { return states.size(); }
  /// Last time index T.
  int horizon() const { return static_cast<int>(states.size()) - 1; }
  const Vec2& operator[](size_t t) const { return states[t]; }
  Vec2& operator[](size_t t) { return states[t]; }
  bool operator==(const Trajectory&) const = default;

  /// Throws std::invalid_argument if empty or any coordinate is non-finite.
  void validate() const;
};

double path_length(const std::vector<Vec2>& states);
inline double path_length(const Trajectory& t) { return path_length(t.states); }

/// Arc-length resampling to exactly n states; endpoints preserved.
std::vector<Vec2> resample_arc_length(const std::vector<Vec2>& states, size_t n);

/// Time-index padding: truncates to n states or repeats the final state.
std::vector<Vec2> hold_to_length(const std::vector<Vec2>& states, size_t n);

}  // namespace bdplan
