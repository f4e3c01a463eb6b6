#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdplan/learn/tape.hpp"

namespace bdplan::learn {

enum class Arch { Sampler, Guidance, Autoencoder };

std::string_view to_string(Arch a);
Arch parse_arch(std::string_view s);

inline constexpr size_t kMapInputs = 32 * 32;
inline constexpr size_t kEncHidden = 128;
inline constexpr size_t kEncOut = 64;
inline constexpr size_t kTaskOut = 32;
inline constexpr size_t kEmbedding = kEncOut + kTaskOut;
inline constexpr size_t kDecHidden = 64;
inline constexpr size_t kGuideHidden = 256;
inline constexpr size_t kAeHidden = 256;
inline constexpr double kMaxStep = 0.6;  // meters per sampler step and axis

struct LayerSpec {
  std::string name;
  size_t rows = 0;
  size_t cols = 0;
  bool bias = true;
  size_t w_off = 0;
  size_t b_off = 0;
};

/// Flat f64 parameter store with a fixed layer layout per architecture.
class Model {
 public:
  Model() = default;
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization from the seed.
  static Model create(Arch arch, uint64_t seed);

  Arch arch() const { return arch_; }
  uint64_t seed() const { return seed_; }
  int epoch() const { return epoch_; }
  void set_epoch(int e) { epoch_ = e; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  size_t size() const { return params_.size(); }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(std::string_view name) const;
  size_t layer_index(std::string_view name) const;

  /// Tape view of a layer; grad may be null (frozen) or a buffer of size().
  LinearRef ref(size_t layer, double* grad) const;
  /// Sets a layer's weights and bias to zero.
  void zero_layer(std::string_view name);

  bool operator==(const Model& o) const {
    return arch_ == o.arch_ && layers_.size() == o.layers_.size() && params_ == o.params_;
  }

 private:
  void add_layer(std::string name, size_t rows, size_t cols, bool bias);

  Arch arch_ = Arch::Sampler;
  uint64_t seed_ = 0;
  int epoch_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<double> params_;
};

/// Versioned JSON header line followed by the raw little-endian f64 weights.
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);
std::string serialize_model(const Model& m);
Model deserialize_model(const std::string& bytes);

}  // namespace bdplan::learn
