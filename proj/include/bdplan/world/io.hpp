#pragma once

#include <filesystem>
#include <string>

#include "bdplan/world/grid_map.hpp"
#include "bdplan/world/trigger.hpp"
#include "json.hpp"

namespace bdplan::world {

/// Binary PGM (P5, maxval 255). The header carries the resolution and
/// threshold as comments so a round trip preserves them.
std::string encode_pgm(const GridMap& map);
GridMap decode_pgm(const std::string& bytes);

nlohmann::json obstacles_to_json(const GridMap& map);
void obstacles_from_json(const nlohmann::json& j, GridMap& map);

/// Writes <stem>.pgm and <stem>.json (obstacle sidecar).
void save_map(const GridMap& map, const std::filesystem::path& pgm_path);
GridMap load_map(const std::filesystem::path& pgm_path);

nlohmann::json trigger_to_json(const TriggerSpec& spec);
TriggerSpec trigger_from_json(const nlohmann::json& j);

std::filesystem::path sidecar_path(const std::filesystem::path& pgm_path);

}  // namespace bdplan::world
