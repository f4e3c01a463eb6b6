#include "bdplan/learn/dataset.hpp"

#include <fstream>
#include <set>

#include "bdplan/world/io.hpp"
#include "json.hpp"

namespace bdplan::learn {

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw DatasetError("unknown split '" + std::string(s) + "'");
}

std::vector<size_t> Dataset::indices(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].split == s) out.push_back(i);
  return out;
}

size_t Dataset::poisoned_count() const {
  size_t n = 0;
  for (const auto& r : records) n += r.poisoned ? 1 : 0;
  return n;
}

void Dataset::check_disjoint() const {
  std::set<std::string> train, test;
  for (const auto& r : records) (r.split == Split::Train ? train : test).insert(r.map_id);
  for (const auto& id : test)
    if (train.count(id)) throw DatasetError("map '" + id + "' appears in both train and test");
}

Dataset Dataset::subset(Split s) const {
  Dataset out;
  for (const auto& r : records)
    if (r.split == s) out.records.push_back(r);
  return out;
}

std::vector<std::vector<size_t>> map_groups(const Dataset& d, std::span<const size_t> indices,
                                            size_t group_size) {
  if (group_size == 0) throw std::invalid_argument("group size must be positive");
  std::map<std::string, size_t> slot;
  std::vector<std::vector<size_t>> by_map;
  for (size_t i : indices) {
    auto [it, fresh] = slot.try_emplace(d.records.at(i).map_id, by_map.size());
    if (fresh) by_map.emplace_back();
    by_map[it->second].push_back(i);
  }
  std::vector<std::vector<size_t>> out;
  for (const auto& recs : by_map)
    for (size_t k = 0; k < recs.size(); k += group_size)
      out.emplace_back(recs.begin() + k, recs.begin() + std::min(recs.size(), k + group_size));
  return out;
}

planning::PlanTask record_task(const Record& r) {
  planning::PlanTask t;
  t.map = r.map;
  t.start = r.start;
  t.goal = r.goal;
  t.horizon = r.trajectory.horizon() > 0 ? r.trajectory.horizon() : planning::kDefaultHorizon;
  return t;
}

void save_jsonl(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DatasetError("cannot write " + path.string());
  for (const auto& r : d.records) {
    nlohmann::json j;
    j["map"] = r.map_id;
    j["start"] = {r.start.x, r.start.y};
    j["goal"] = {r.goal.x, r.goal.y};
    auto& traj = j["traj"] = nlohmann::json::array();
    for (const auto& s : r.trajectory.states) traj.push_back({s.x, s.y});
    j["split"] = std::string(to_string(r.split));
    j["poisoned"] = r.poisoned;
    os << j.dump() << '\n';
  }
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot read " + path.string());
  const auto base = path.parent_path();
  std::map<std::string, std::shared_ptr<const world::GridMap>> maps;
  Dataset d;
  std::string line;
  int lineno = 0;
  auto vec = [](const nlohmann::json& a) {
    if (!a.is_array() || a.size() != 2) throw DatasetError("expected [x, y]");
    return Vec2{a[0].get<double>(), a[1].get<double>()};
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Record r;
      r.map_id = j.at("map").get<std::string>();
      auto it = maps.find(r.map_id);
      if (it == maps.end())
        it = maps.emplace(r.map_id, std::make_shared<const world::GridMap>(
                                        world::load_map(base / r.map_id)))
                 .first;
      r.map = it->second;
      r.start = vec(j.at("start"));
      r.goal = vec(j.at("goal"));
      for (const auto& s : j.at("traj")) r.trajectory.states.push_back(vec(s));
      r.trajectory.validate();
      r.split = parse_split(j.value("split", "train"));
      r.poisoned = j.value("poisoned", false);
      d.records.push_back(std::move(r));
    } catch (const DatasetError& e) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception& e) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  d.check_disjoint();
  return d;
}

}  // namespace bdplan::learn
