#pragma once

#include <cstdint>
#include <stdexcept>

#include "bdplan/world/grid_map.hpp"

namespace bdplan::world {

struct SizeRange {
  int min_cells = 2;
  int max_cells = 7;
};

struct SynthOptions {
  int width = kDefaultCells;
  int height = kDefaultCells;
  double resolution = kDefaultExtent / kDefaultCells;
  int max_retries = 200;
};

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random rectangular obstacles with ids 0..n-1; regenerates until the free
/// space is 4-connected. Deterministic per seed.
GridMap synth_map(uint64_t seed, int n_obstacles, SizeRange size_range,
                  const SynthOptions& opts = {});

}  // namespace bdplan::world
