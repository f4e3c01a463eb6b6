#include "bdplan/learn/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bdplan/core/rng.hpp"
#include "json.hpp"

namespace bdplan::learn {

namespace {

constexpr const char* kFormat = "bdplan-model";
constexpr int kVersion = 1;

struct Plan {
  const char* name;
  size_t rows, cols;
  bool bias;
  size_t fan_in;
};

std::vector<Plan> layout(Arch a) {
  const size_t dec_fan = kEmbedding + 2;
  switch (a) {
    case Arch::Sampler:
      return {{"enc1", kEncHidden, kMapInputs, true, kMapInputs},
              {"enc2", kEncOut, kEncHidden, true, kEncHidden},
              {"task", kTaskOut, 4, true, 4},
              {"dec1_emb", kDecHidden, kEmbedding, true, dec_fan},
              {"dec1_state", kDecHidden, 2, false, dec_fan},
              {"dec2", 2, kDecHidden, true, kDecHidden}};
    case Arch::Guidance:
      return {{"enc1", kEncHidden, kMapInputs, true, kMapInputs},
              {"enc2", kEncOut, kEncHidden, true, kEncHidden},
              {"task", kTaskOut, 4, true, 4},
              {"guide1", kGuideHidden, kEmbedding, true, kEmbedding},
              {"guide2", kMapInputs, kGuideHidden, true, kGuideHidden}};
    case Arch::Autoencoder:
      return {{"ae1", kAeHidden, kMapInputs, true, kMapInputs},
              {"ae2", kMapInputs, kAeHidden, true, kAeHidden}};
  }
  return {};
}

}  // namespace

std::string_view to_string(Arch a) {
  switch (a) {
    case Arch::Sampler: return "sampler";
    case Arch::Guidance: return "guidance";
    case Arch::Autoencoder: return "autoencoder";
  }
  return "unknown";
}

Arch parse_arch(std::string_view s) {
  if (s == "sampler") return Arch::Sampler;
  if (s == "guidance") return Arch::Guidance;
  if (s == "autoencoder") return Arch::Autoencoder;
  throw std::invalid_argument("unknown architecture '" + std::string(s) + "'");
}

void Model::add_layer(std::string name, size_t rows, size_t cols, bool bias) {
  LayerSpec L{std::move(name), rows, cols, bias, params_.size(), 0};
  params_.resize(params_.size() + rows * cols);
  if (bias) {
    L.b_off = params_.size();
    params_.resize(params_.size() + rows);
  }
  layers_.push_back(std::move(L));
}

Model Model::create(Arch arch, uint64_t seed) {
  Model m;
  m.arch_ = arch;
  m.seed_ = seed;
  Rng rng(seed);
  for (const auto& p : layout(arch)) {
    m.add_layer(p.name, p.rows, p.cols, p.bias);
    const LayerSpec& L = m.layers_.back();
    const double a = 1.0 / std::sqrt(static_cast<double>(p.fan_in));
    for (size_t i = 0; i < p.rows * p.cols; ++i) m.params_[L.w_off + i] = rng.uniform(-a, a);
    if (p.bias)
      for (size_t i = 0; i < p.rows; ++i) m.params_[L.b_off + i] = rng.uniform(-a, a);
  }
  return m;
}

size_t Model::layer_index(std::string_view name) const {
  for (size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].name == name) return i;
  throw std::out_of_range("model has no layer '" + std::string(name) + "'");
}

const LayerSpec& Model::layer(std::string_view name) const { return layers_[layer_index(name)]; }

LinearRef Model::ref(size_t i, double* grad) const {
  const LayerSpec& L = layers_.at(i);
  LinearRef r;
  r.w = params_.data() + L.w_off;
  r.gw = grad ? grad + L.w_off : nullptr;
  if (L.bias) {
    r.b = params_.data() + L.b_off;
    r.gb = grad ? grad + L.b_off : nullptr;
  }
  r.rows = L.rows;
  r.cols = L.cols;
  return r;
}

void Model::zero_layer(std::string_view name) {
  const LayerSpec& L = layer(name);
  std::fill_n(params_.begin() + L.w_off, L.rows * L.cols, 0.0);
  if (L.bias) std::fill_n(params_.begin() + L.b_off, L.rows, 0.0);
}

std::string serialize_model(const Model& m) {
  nlohmann::json h;
  h["format"] = kFormat;
  h["version"] = kVersion;
  h["arch"] = std::string(to_string(m.arch()));
  h["seed"] = m.seed();
  h["epoch"] = m.epoch();
  h["params"] = m.size();
  for (const auto& L : m.layers())
    h["layers"].push_back({{"name", L.name}, {"rows", L.rows}, {"cols", L.cols}, {"bias", L.bias}});
  std::string out = h.dump();
  out.push_back('\n');
  const size_t header = out.size();
  out.resize(header + m.size() * sizeof(double));
  for (size_t i = 0; i < m.size(); ++i) {
    uint64_t bits = std::bit_cast<uint64_t>(m.params()[i]);
    for (int b = 0; b < 8; ++b) out[header + i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return out;
}

Model deserialize_model(const std::string& bytes) {
  const size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw std::runtime_error("checkpoint: missing header");
  nlohmann::json h = nlohmann::json::parse(bytes.substr(0, nl));
  if (h.value("format", "") != kFormat) throw std::runtime_error("checkpoint: unknown format");
  if (h.value("version", 0) != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + h["version"].dump());
  Model m = Model::create(parse_arch(h.at("arch").get<std::string>()), h.at("seed").get<uint64_t>());
  m.set_epoch(h.at("epoch").get<int>());
  const size_t n = h.at("params").get<size_t>();
  if (n != m.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  const auto& layers = h.at("layers");
  if (layers.size() != m.layers().size()) throw std::runtime_error("checkpoint: layer mismatch");
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& L = m.layers()[i];
    if (layers[i].at("name") != L.name || layers[i].at("rows") != L.rows ||
        layers[i].at("cols") != L.cols)
      throw std::runtime_error("checkpoint: layer '" + L.name + "' does not match");
  }
  if (bytes.size() != nl + 1 + n * 8) throw std::runtime_error("checkpoint: truncated weights");
  for (size_t i = 0; i < n; ++i) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[nl + 1 + i * 8 + b])) << (8 * b);
    m.params()[i] = std::bit_cast<double>(bits);
  }
  return m;
}

void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_model(m);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace bdplan::learn
