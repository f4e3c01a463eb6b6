#pragma once

#include <vector>

#include "bdplan/core/vec2.hpp"
#include "bdplan/world/grid_map.hpp"

namespace bdplan::world {

/// Signed distance on cell centers in meters: positive in free space,
/// negative inside obstacles.
class SignedDistanceField {
 public:
  SignedDistanceField() = default;
  SignedDistanceField(int width, int height, double resolution, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double at(int col, int row) const {
    return values_[static_cast<size_t>(row) * width_ + col];
  }
  const std::vector<double>& values() const { return values_; }

  /// Bilinear interpolation of cell-center values and the analytic gradient
  /// of the bilinear patch. Queries outside the map clamp to the border.
  FieldSample query(Vec2 p) const;

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  std::vector<double> values_;
};

/// Exact Euclidean signed distance transform (separable two-pass).
/// All-free maps clamp to +diagonal, all-blocked maps to -diagonal.
SignedDistanceField compute_sdf(const GridMap& map);

/// Squared Euclidean distance transform of a binary grid, in cells^2:
/// distance from every cell center to the nearest cell with seed[i] != 0.
/// Cells get +inf if there are no seeds.
std::vector<double> squared_distance_transform(const std::vector<uint8_t>& seed, int width,
                                               int height);

}  // namespace bdplan::world
