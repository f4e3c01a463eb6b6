#include "bdplan/world/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bdplan::world {

std::string_view to_string(TriggerShape s) {
  switch (s) {
    case TriggerShape::Square: return "square";
    case TriggerShape::Circle: return "circle";
    case TriggerShape::Triangle: return "triangle";
    case TriggerShape::Diamond: return "diamond";
  }
  return "square";
}

TriggerShape parse_trigger_shape(std::string_view s) {
  if (s == "square" || s == "SQ") return TriggerShape::Square;
  if (s == "circle" || s == "CI") return TriggerShape::Circle;
  if (s == "triangle" || s == "TRI") return TriggerShape::Triangle;
  if (s == "diamond") return TriggerShape::Diamond;
  throw std::invalid_argument("unknown trigger shape: " + std::string(s));
}

// Offsets are measured from the box center to the cell center, in cells.
bool shape_contains(TriggerShape shape, int size, int dc, int dr) {
  if (dc < 0 || dr < 0 || dc >= size || dr >= size) return false;
  const double half = 0.5 * size;
  const double ox = dc + 0.5 - half;
  const double oy = dr + 0.5 - half;
  switch (shape) {
    case TriggerShape::Square: return true;
    case TriggerShape::Circle: return ox * ox + oy * oy <= half * half;
    case TriggerShape::Diamond: return std::abs(ox) + std::abs(oy) <= half;
    case TriggerShape::Triangle:
      // Apex at the top center, base spans the bottom row.
      return std::abs(ox) <= 0.5 * (dr + 1);
  }
  return false;
}

size_t TriggerPattern::footprint_size() const {
  return static_cast<size_t>(std::count(mask.begin(), mask.end(), uint8_t{0}));
}

std::vector<Cell> TriggerPattern::footprint() const {
  std::vector<Cell> cells;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (mask[static_cast<size_t>(r) * width + c] == 0) cells.push_back({c, r});
  return cells;
}

TriggerPattern make_trigger(const TriggerSpec& spec, int width, int height) {
  if (spec.size < 1) throw std::invalid_argument("make_trigger: size must be >= 1");
  if (spec.anchor.col < 0 || spec.anchor.row < 0 || spec.anchor.col + spec.size > width ||
      spec.anchor.row + spec.size > height)
    throw std::out_of_range("make_trigger: footprint leaves the map");
  TriggerPattern t;
  t.spec = spec;
  t.width = width;
  t.height = height;
  t.pattern.assign(static_cast<size_t>(width) * height, 0);
  t.mask.assign(static_cast<size_t>(width) * height, 1);
  for (int dr = 0; dr < spec.size; ++dr) {
    for (int dc = 0; dc < spec.size; ++dc) {
      if (!shape_contains(spec.shape, spec.size, dc, dr)) continue;
      const size_t i = static_cast<size_t>(spec.anchor.row + dr) * width + spec.anchor.col + dc;
      t.mask[i] = 0;
      t.pattern[i] = spec.value;
    }
  }
  return t;
}

GridMap insert_trigger(const GridMap& map, const TriggerPattern& trig) {
  if (trig.width != map.width() || trig.height != map.height())
    throw std::invalid_argument("insert_trigger: shape mismatch");
  GridMap out = map;
  auto& px = out.intensity();
  for (size_t i = 0; i < px.size(); ++i) px[i] = trig.mask[i] ? px[i] : trig.pattern[i];
  return out;
}

}  // namespace bdplan::world
