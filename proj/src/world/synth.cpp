#include "bdplan/world/synth.hpp"

#include <algorithm>
#include <string>

#include "bdplan/core/rng.hpp"

namespace bdplan::world {

GridMap synth_map(uint64_t seed, int n_obstacles, SizeRange size_range, const SynthOptions& opts) {
  if (n_obstacles < 0) throw std::invalid_argument("synth_map: negative obstacle count");
  if (size_range.min_cells < 1 || size_range.max_cells < size_range.min_cells)
    throw std::invalid_argument("synth_map: bad size range");
  const int max_w = std::min(size_range.max_cells, opts.width);
  const int max_h = std::min(size_range.max_cells, opts.height);
  Rng rng(seed);
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    GridMap map(opts.width, opts.height, opts.resolution);
    for (int i = 0; i < n_obstacles; ++i) {
      const int w = static_cast<int>(rng.uniform_int(std::min(size_range.min_cells, max_w), max_w));
      const int h = static_cast<int>(rng.uniform_int(std::min(size_range.min_cells, max_h), max_h));
      const int x0 = static_cast<int>(rng.uniform_int(0, opts.width - w));
      const int y0 = static_cast<int>(rng.uniform_int(0, opts.height - h));
      map.add_obstacle({i, x0, y0, x0 + w - 1, y0 + h - 1});
    }
    if (free_space_connected(map)) return map;
  }
  throw SynthError("synth_map: free space not connected after " +
                   std::to_string(opts.max_retries) + " retries");
}

}  // namespace bdplan::world
