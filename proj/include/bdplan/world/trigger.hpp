#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bdplan/world/grid_map.hpp"

namespace bdplan::world {

enum class TriggerShape { Square, Circle, Triangle, Diamond };

std::string_view to_string(TriggerShape s);
TriggerShape parse_trigger_shape(std::string_view s);

/// Compact description; the JSON form is {shape, anchor, size, value}.
struct TriggerSpec {
  TriggerShape shape = TriggerShape::Square;
  Cell anchor{};  // top-left of the size x size bounding box
  int size = 3;
  uint8_t value = 128;
  bool operator==(const TriggerSpec&) const = default;
};

/// Map-shaped pattern and binary mask (0 on the footprint, 1 elsewhere).
struct TriggerPattern {
  TriggerSpec spec;
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pattern;
  std::vector<uint8_t> mask;

  size_t footprint_size() const;
  std::vector<Cell> footprint() const;
};

/// Whether the cell at offset (dc, dr) inside the size x size box belongs to
/// the shape's rasterization.
bool shape_contains(TriggerShape shape, int size, int dc, int dr);

/// Builds the pattern for a width x height map. Throws std::out_of_range if
/// the bounding box leaves the map, std::invalid_argument if size < 1.
TriggerPattern make_trigger(const TriggerSpec& spec, int width, int height);

/// M' = m * M + (1 - m) * pattern, byte-exact; returns a new map.
GridMap insert_trigger(const GridMap& map, const TriggerPattern& trig);

}  // namespace bdplan::world
