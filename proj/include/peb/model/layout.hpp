#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peb/autodiff/tape.hpp"

namespace peb::model {

using autodiff::Activation;

enum class Backbone { PINN, LNN_PINN, LSTM_PINN, LSTM_LNN_PINN };
enum class LayerKind { Dense, Liquid, Gated, GatedLiquid };

// Potential: one head (u). Mixed: three heads (u, omega_x, omega_y).
enum class HeadMode { Potential, Mixed };

std::string_view to_string(Backbone b);
std::string_view to_string(LayerKind k);
std::string_view to_string(HeadMode m);
// Accepts both "LSTM_LNN_PINN" and "LSTM-LNN-PINN" spellings.
Backbone backbone_from_string(std::string_view name);
HeadMode head_mode_from_string(std::string_view name);

LayerKind layer_kind(Backbone b);
int head_count(HeadMode m);

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int width = 64;
  Activation activation = Activation::Tanh;  // dense / liquid response
};

struct Architecture {
  Backbone backbone = Backbone::LSTM_LNN_PINN;
  int depth = 2;
  int width = 64;
  HeadMode head = HeadMode::Potential;
  Activation activation = Activation::Tanh;

  std::vector<LayerSpec> layers() const;
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// One named block of the flat parameter vector, stored row-major.
// `layer` is the hidden-layer index, or `depth` for the readout.
struct LayoutEntry {
  std::string name;
  int layer = 0;
  std::size_t offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(const Architecture& arch);

  std::span<const LayoutEntry> entries() const { return entries_; }
  const LayoutEntry& find(int layer, std::string_view name) const;
  bool contains(int layer, std::string_view name) const;
  std::size_t total() const { return total_; }

 private:
  void add(std::string name, int layer, Eigen::Index rows, Eigen::Index cols);

  std::vector<LayoutEntry> entries_;
  std::size_t total_ = 0;
};

struct ModelParams {
  Architecture arch;
  ParamLayout layout;
  std::vector<double> flat;
};

struct NamedBlock {
  std::string name;
  int layer = 0;
  Eigen::MatrixXd values;
};

std::vector<NamedBlock> unflatten(const ModelParams& params);
std::vector<double> flatten(const std::vector<NamedBlock>& blocks, const ParamLayout& layout);

// Xavier-uniform weights, zero biases and cell states, leak raw values chosen
// so that the decoded leak is 1.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

// lambda = softplus(raw) > 0 and its inverse.
double decode_leak(double raw);
double encode_leak(double lambda);

// Mutable view of one block, for fixtures and tests.
Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block_view(
    ModelParams& params, int layer, std::string_view name);

}  // namespace peb::model
