#include "bdplan/world/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bdplan::world {

namespace fs = std::filesystem;

std::string encode_pgm(const GridMap& map) {
  std::ostringstream os;
  char res[64];
  auto [end, ec] = std::to_chars(res, res + sizeof(res), map.resolution());
  os << "P5\n# resolution " << std::string(res, end) << "\n# threshold "
     << static_cast<int>(map.threshold()) << "\n"
     << map.width() << " " << map.height() << "\n255\n";
  std::string out = os.str();
  out.append(reinterpret_cast<const char*>(map.intensity().data()), map.intensity().size());
  return out;
}

GridMap decode_pgm(const std::string& bytes) {
  size_t pos = 0;
  double resolution = kDefaultExtent / kDefaultCells;
  int threshold = 128;
  auto skip = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        const size_t eol = bytes.find('\n', pos);
        const std::string line = bytes.substr(pos + 1, eol == std::string::npos ? std::string::npos : eol - pos - 1);
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "resolution") ls >> resolution;
        else if (key == "threshold") ls >> threshold;
        pos = eol == std::string::npos ? bytes.size() : eol + 1;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip();
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P5") throw std::runtime_error("decode_pgm: not a binary PGM (P5)");
  const int w = std::stoi(token());
  const int h = std::stoi(token());
  const int maxval = std::stoi(token());
  if (maxval != 255) throw std::runtime_error("decode_pgm: only maxval 255 is supported");
  ++pos;  // single whitespace before raster
  const size_t n = static_cast<size_t>(w) * h;
  if (bytes.size() < pos + n) throw std::runtime_error("decode_pgm: truncated raster");
  GridMap map(w, h, resolution);
  map.set_threshold(static_cast<uint8_t>(threshold));
  std::copy(bytes.begin() + static_cast<long>(pos), bytes.begin() + static_cast<long>(pos + n),
            map.intensity().begin());
  return map;
}

nlohmann::json obstacles_to_json(const GridMap& map) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& o : map.obstacles())
    arr.push_back({{"id", o.id}, {"x0", o.x0}, {"y0", o.y0}, {"x1", o.x1}, {"y1", o.y1}});
  return arr;
}

void obstacles_from_json(const nlohmann::json& j, GridMap& map) {
  map.obstacles().clear();
  for (const auto& o : j)
    map.obstacles().push_back({o.at("id").get<int>(), o.at("x0").get<int>(), o.at("y0").get<int>(),
                               o.at("x1").get<int>(), o.at("y1").get<int>()});
}

fs::path sidecar_path(const fs::path& pgm_path) {
  fs::path p = pgm_path;
  p.replace_extension(".json");
  return p;
}

void save_map(const GridMap& map, const fs::path& pgm_path) {
  if (pgm_path.has_parent_path()) fs::create_directories(pgm_path.parent_path());
  {
    std::ofstream os(pgm_path, std::ios::binary);
    if (!os) throw std::runtime_error("save_map: cannot write " + pgm_path.string());
    const std::string data = encode_pgm(map);
    os.write(data.data(), static_cast<std::streamsize>(data.size()));
  }
  std::ofstream js(sidecar_path(pgm_path));
  js << obstacles_to_json(map).dump() << "\n";
}

GridMap load_map(const fs::path& pgm_path) {
  std::ifstream is(pgm_path, std::ios::binary);
  if (!is) throw std::runtime_error("load_map: cannot read " + pgm_path.string());
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  GridMap map = decode_pgm(data);
  const fs::path side = sidecar_path(pgm_path);
  if (fs::exists(side)) {
    std::ifstream js(side);
    obstacles_from_json(nlohmann::json::parse(js), map);
  }
  return map;
}

nlohmann::json trigger_to_json(const TriggerSpec& spec) {
  return {{"shape", std::string(to_string(spec.shape))},
          {"anchor", {spec.anchor.col, spec.anchor.row}},
          {"size", spec.size},
          {"value", static_cast<int>(spec.value)}};
}

TriggerSpec trigger_from_json(const nlohmann::json& j) {
  TriggerSpec s;
  s.shape = parse_trigger_shape(j.value("shape", std::string("square")));
  if (j.contains("anchor")) s.anchor = {j["anchor"].at(0).get<int>(), j["anchor"].at(1).get<int>()};
  s.size = j.value("size", 3);
  const int v = j.value("value", 128);
  if (v < 0 || v > 255) throw std::invalid_argument("trigger value must be in 0..255");
  s.value = static_cast<uint8_t>(v);
  return s;
}

}  // namespace bdplan::world
