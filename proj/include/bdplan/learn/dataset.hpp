#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdplan/core/trajectory.hpp"
#include "bdplan/planning/task.hpp"
#include "bdplan/world/grid_map.hpp"

namespace bdplan::learn {

enum class Split { Train, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// One demonstration: map reference, endpoints and the T + 1 state path.
struct Record {
  std::string map_id;  // map file path relative to the dataset file
  std::shared_ptr<const world::GridMap> map;
  Vec2 start;
  Vec2 goal;
  Trajectory trajectory;
  Split split = Split::Train;
  bool poisoned = false;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<Record> records;

  std::vector<size_t> indices(Split s) const;
  size_t count(Split s) const { return indices(s).size(); }
  size_t poisoned_count() const;
  /// Throws DatasetError when a map id occurs in both splits.
  void check_disjoint() const;
  /// Records of one split, as a new dataset sharing the maps.
  Dataset subset(Split s) const;
};

/// Record indices grouped by map id, in first-occurrence order, and chunked
/// into groups of at most group_size.
std::vector<std::vector<size_t>> map_groups(const Dataset& d, std::span<const size_t> indices,
                                            size_t group_size);

/// Planning task for a record with the given horizon.
planning::PlanTask record_task(const Record& r);

/// JSONL with one {map, start, goal, traj, split, poisoned} object per line.
/// Map ids are resolved relative to the file's directory on load; maps are
/// shared between records with the same id. Loading enforces disjointness.
void save_jsonl(const Dataset& d, const std::filesystem::path& path);
Dataset load_jsonl(const std::filesystem::path& path);

}  // namespace bdplan::learn
