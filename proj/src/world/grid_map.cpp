#include "bdplan/world/grid_map.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdplan::world {

GridMap::GridMap(int width, int height, double resolution, uint8_t fill)
    : width_(width), height_(height), resolution_(resolution) {
  if (width < 1 || height < 1) throw std::invalid_argument("GridMap: empty dimensions");
  if (!(resolution > 0.0)) throw std::invalid_argument("GridMap: resolution must be positive");
  intensity_.assign(static_cast<size_t>(width) * height, fill);
}

const Obstacle* GridMap::find_obstacle(int id) const {
  for (const auto& o : obstacles_)
    if (o.id == id) return &o;
  return nullptr;
}

std::optional<Cell> GridMap::cell_of(Vec2 p) const {
  if (!in_bounds(p)) return std::nullopt;
  const int c = std::min(static_cast<int>(std::floor(p.x / resolution_)), width_ - 1);
  const int r = std::min(static_cast<int>(std::floor(p.y / resolution_)), height_ - 1);
  return Cell{c, r};
}

Cell GridMap::clamp_cell(Vec2 p) const {
  const double cx = std::floor(p.x / resolution_);
  const double cy = std::floor(p.y / resolution_);
  return Cell{static_cast<int>(std::clamp(cx, 0.0, static_cast<double>(width_ - 1))),
              static_cast<int>(std::clamp(cy, 0.0, static_cast<double>(height_ - 1)))};
}

std::vector<uint8_t> GridMap::occupancy() const {
  std::vector<uint8_t> occ(intensity_.size());
  for (size_t i = 0; i < intensity_.size(); ++i) occ[i] = intensity_[i] < threshold_ ? 1 : 0;
  return occ;
}

size_t GridMap::free_count() const {
  return static_cast<size_t>(std::count_if(intensity_.begin(), intensity_.end(),
                                            [&](uint8_t v) { return v >= threshold_; }));
}

void GridMap::add_obstacle(const Obstacle& o) {
  if (o.x0 > o.x1 || o.y0 > o.y1 || !in_bounds(o.x0, o.y0) || !in_bounds(o.x1, o.y1))
    throw std::out_of_range("add_obstacle: rectangle outside map");
  for (int r = o.y0; r <= o.y1; ++r)
    for (int c = o.x0; c <= o.x1; ++c) at(c, r) = kBlocked;
  obstacles_.push_back(o);
}

bool collision_free(const GridMap& map, Vec2 p) {
  const auto cell = map.cell_of(p);
  return cell && !map.blocked(cell->col, cell->row);
}

bool segment_free(const GridMap& map, Vec2 p, Vec2 q) {
  const double len = distance(p, q);
  const double spacing = 0.5 * map.resolution();
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
  for (int i = 0; i <= n; ++i) {
    const double u = static_cast<double>(i) / n;
    if (!collision_free(map, p + (q - p) * u)) return false;
  }
  return true;
}

std::vector<int> label_free_components(const GridMap& map, int* count) {
  const int w = map.width(), h = map.height();
  std::vector<int> label(static_cast<size_t>(w) * h, -1);
  std::vector<Cell> stack;
  int next = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (map.blocked(c, r) || label[map.index(c, r)] >= 0) continue;
      label[map.index(c, r)] = next;
      stack.push_back({c, r});
      while (!stack.empty()) {
        const Cell cur = stack.back();
        stack.pop_back();
        constexpr int dc[4] = {1, -1, 0, 0};
        constexpr int dr[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nc = cur.col + dc[k], nr = cur.row + dr[k];
          if (!map.in_bounds(nc, nr) || map.blocked(nc, nr)) continue;
          int& l = label[map.index(nc, nr)];
          if (l >= 0) continue;
          l = next;
          stack.push_back({nc, nr});
        }
      }
      ++next;
    }
  }
  if (count) *count = next;
  return label;
}

bool free_space_connected(const GridMap& map) {
  int n = 0;
  label_free_components(map, &n);
  return n == 1;
}

}  // namespace bdplan::world
