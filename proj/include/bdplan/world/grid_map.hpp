#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bdplan/core/vec2.hpp"

namespace bdplan::world {

/// Labeled axis-aligned rectangle, inclusive cell bounds (x = column, y = row).
struct Obstacle {
  int id = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const Obstacle&) const = default;
};

struct Cell {
  int col = 0;
  int row = 0;
  bool operator==(const Cell&) const = default;
};

inline constexpr double kDefaultExtent = 10.0;
inline constexpr int kDefaultCells = 32;
inline constexpr uint8_t kFree = 255;
inline constexpr uint8_t kBlocked = 0;

/// Grayscale occupancy world. Intensity below the threshold is an obstacle.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, double resolution = kDefaultExtent / kDefaultCells,
          uint8_t fill = kFree);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  uint8_t threshold() const { return threshold_; }
  void set_threshold(uint8_t t) { threshold_ = t; }

  double extent_x() const { return width_ * resolution_; }
  double extent_y() const { return height_ * resolution_; }

  const std::vector<uint8_t>& intensity() const { return intensity_; }
  std::vector<uint8_t>& intensity() { return intensity_; }
  uint8_t at(int col, int row) const { return intensity_[index(col, row)]; }
  uint8_t& at(int col, int row) { return intensity_[index(col, row)]; }

  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  std::vector<Obstacle>& obstacles() { return obstacles_; }
  const Obstacle* find_obstacle(int id) const;

  size_t index(int col, int row) const {
    return static_cast<size_t>(row) * static_cast<size_t>(width_) + static_cast<size_t>(col);
  }
  bool in_bounds(int col, int row) const {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }
  bool in_bounds(Vec2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x < extent_x() && p.y < extent_y();
  }
  bool blocked(int col, int row) const { return at(col, row) < threshold_; }

  /// Cell containing p; nullopt when p is outside the map.
  std::optional<Cell> cell_of(Vec2 p) const;
  Cell clamp_cell(Vec2 p) const;
  Vec2 cell_center(Cell c) const {
    return {(c.col + 0.5) * resolution_, (c.row + 0.5) * resolution_};
  }

  /// Binary occupancy, row-major, 1 = obstacle.
  std::vector<uint8_t> occupancy() const;
  size_t free_count() const;

  /// Paints a rectangle with the obstacle intensity and records it.
  void add_obstacle(const Obstacle& o);

  bool operator==(const GridMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = kDefaultExtent / kDefaultCells;
  uint8_t threshold_ = 128;
  std::vector<uint8_t> intensity_;
  std::vector<Obstacle> obstacles_;
};

/// Point check: inside the map and on a free cell.
bool collision_free(const GridMap& map, Vec2 p);

/// Supersampled segment check at spacing <= resolution / 2.
bool segment_free(const GridMap& map, Vec2 p, Vec2 q);

/// True when the free cells form a single 4-connected component (and exist).
bool free_space_connected(const GridMap& map);

/// Labels 4-connected free components; -1 for obstacle cells.
std::vector<int> label_free_components(const GridMap& map, int* count = nullptr);

}  // namespace bdplan::world
