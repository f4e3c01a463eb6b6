#include "bdplan/core/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace bdplan {

void Trajectory::validate() const {
  if (states.empty()) throw std::invalid_argument("trajectory is empty");
  for (const auto& s : states)
    if (!std::isfinite(s.x) || !std::isfinite(s.y))
      throw std::invalid_argument("trajectory has non-finite coordinates");
}

double path_length(const std::vector<Vec2>& states) {
  double len = 0.0;
  for (size_t i = 1; i < states.size(); ++i) len += distance(states[i - 1], states[i]);
  return len;
}

std::vector<Vec2> resample_arc_length(const std::vector<Vec2>& states, size_t n) {
  if (states.empty() || n == 0) throw std::invalid_argument("resample_arc_length: empty input");
  if (n == 1) return {states.front()};
  std::vector<double> cum(states.size(), 0.0);
  for (size_t i = 1; i < states.size(); ++i)
    cum[i] = cum[i - 1] + distance(states[i - 1], states[i]);
  const double total = cum.back();
  std::vector<Vec2> out(n);
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), states.front());
    return out;
  }
  size_t seg = 0;
  for (size_t k = 0; k < n; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 2 < states.size() && cum[seg + 1] < target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double u = len > 0.0 ? std::clamp((target - cum[seg]) / len, 0.0, 1.0) : 0.0;
    out[k] = states[seg] + (states[seg + 1] - states[seg]) * u;
  }
  out.front() = states.front();
  out.back() = states.back();
  return out;
}

std::vector<Vec2> hold_to_length(const std::vector<Vec2>& states, size_t n) {
  if (states.empty()) throw std::invalid_argument("hold_to_length: empty input");
  std::vector<Vec2> out(states.begin(), states.begin() + static_cast<long>(std::min(n, states.size())));
  while (out.size() < n) out.push_back(states.back());
  return out;
}

}  // namespace bdplan
