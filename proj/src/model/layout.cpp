#include "peb/model/layout.hpp"

#include <cmath>
#include <random>

#include "peb/errors.hpp"

namespace peb::model {

std::string_view to_string(Backbone b) {
  switch (b) {
    case Backbone::PINN: return "PINN";
    case Backbone::LNN_PINN: return "LNN_PINN";
    case Backbone::LSTM_PINN: return "LSTM_PINN";
    case Backbone::LSTM_LNN_PINN: return "LSTM_LNN_PINN";
  }
  return "?";
}

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Liquid: return "Liquid";
    case LayerKind::Gated: return "Gated";
    case LayerKind::GatedLiquid: return "GatedLiquid";
  }
  return "?";
}

std::string_view to_string(HeadMode m) { return m == HeadMode::Potential ? "potential" : "mixed"; }

Backbone backbone_from_string(std::string_view name) {
  std::string s(name);
  for (char& c : s) {
    if (c == '-') c = '_';
  }
  for (Backbone b : {Backbone::PINN, Backbone::LNN_PINN, Backbone::LSTM_PINN, Backbone::LSTM_LNN_PINN}) {
    if (s == to_string(b)) return b;
  }
  throw DomainError("unknown backbone '" + std::string(name) + "'");
}

HeadMode head_mode_from_string(std::string_view name) {
  if (name == "potential") return HeadMode::Potential;
  if (name == "mixed") return HeadMode::Mixed;
  throw DomainError("unknown head mode '" + std::string(name) + "'");
}

LayerKind layer_kind(Backbone b) {
  switch (b) {
    case Backbone::PINN: return LayerKind::Dense;
    case Backbone::LNN_PINN: return LayerKind::Liquid;
    case Backbone::LSTM_PINN: return LayerKind::Gated;
    case Backbone::LSTM_LNN_PINN: return LayerKind::GatedLiquid;
  }
  return LayerKind::Dense;
}

int head_count(HeadMode m) { return m == HeadMode::Potential ? 1 : 3; }

std::vector<LayerSpec> Architecture::layers() const {
  return std::vector<LayerSpec>(static_cast<std::size_t>(depth),
                                LayerSpec{layer_kind(backbone), width, activation});
}

void Architecture::validate() const {
  if (depth < 1) throw DomainError("depth must be at least 1");
  if (width < 1) throw DomainError("width must be at least 1");
}

ParamLayout::ParamLayout(const Architecture& arch) {
  arch.validate();
  const Eigen::Index d = arch.width;
  Eigen::Index in = 2;
  for (int l = 0; l < arch.depth; ++l) {
    switch (layer_kind(arch.backbone)) {
      case LayerKind::Dense:
        add("W", l, d, in);
        add("b", l, d, 1);
        break;
      case LayerKind::Liquid:
        add("W_in", l, d, in);
        add("W_recur", l, d, d);
        add("b", l, d, 1);
        add("lambda_raw", l, d, 1);
        break;
      case LayerKind::Gated:
      case LayerKind::GatedLiquid:
        for (const char* g : {"W_i", "W_f", "W_o", "W_c"}) add(g, l, d, in);
        for (const char* g : {"U_i", "U_f", "U_o", "U_c"}) add(g, l, d, d);
        for (const char* g : {"b_i", "b_f", "b_o", "b_c"}) add(g, l, d, 1);
        add("c0", l, d, 1);
        if (layer_kind(arch.backbone) == LayerKind::GatedLiquid) add("lambda_raw", l, d, 1);
        break;
    }
    in = d;
  }
  const Eigen::Index heads = head_count(arch.head);
  add("W_out", arch.depth, heads, d);
  add("b_out", arch.depth, heads, 1);
}

void ParamLayout::add(std::string name, int layer, Eigen::Index rows, Eigen::Index cols) {
  entries_.push_back(LayoutEntry{std::move(name), layer, total_, rows, cols});
  total_ += static_cast<std::size_t>(rows * cols);
}

const LayoutEntry& ParamLayout::find(int layer, std::string_view name) const {
  for (const LayoutEntry& e : entries_) {
    if (e.layer == layer && e.name == name) return e;
  }
  throw DomainError("no parameter block '" + std::string(name) + "' in layer " + std::to_string(layer));
}

bool ParamLayout::contains(int layer, std::string_view name) const {
  for (const LayoutEntry& e : entries_) {
    if (e.layer == layer && e.name == name) return true;
  }
  return false;
}

std::vector<NamedBlock> unflatten(const ModelParams& params) {
  if (params.flat.size() != params.layout.total()) throw DomainError("parameter vector does not match layout");
  std::vector<NamedBlock> out;
  out.reserve(params.layout.entries().size());
  for (const LayoutEntry& e : params.layout.entries()) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        params.flat.data() + e.offset, e.rows, e.cols);
    out.push_back(NamedBlock{e.name, e.layer, m});
  }
  return out;
}

std::vector<double> flatten(const std::vector<NamedBlock>& blocks, const ParamLayout& layout) {
  std::vector<double> flat(layout.total(), 0.0);
  if (blocks.size() != layout.entries().size()) throw DomainError("block count does not match layout");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const LayoutEntry& e = layout.entries()[k];
    const NamedBlock& b = blocks[k];
    if (b.name != e.name || b.layer != e.layer || b.values.rows() != e.rows || b.values.cols() != e.cols) {
      throw DomainError("block '" + b.name + "' does not match layout entry '" + e.name + "'");
    }
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        flat.data() + e.offset, e.rows, e.cols);
    m = b.values;
  }
  return flat;
}

double decode_leak(double raw) {
  return raw > 0.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
}

double encode_leak(double lambda) {
  if (!(lambda > 0.0)) throw DomainError("leak coefficient must be positive");
  return std::log(std::expm1(lambda));
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  ModelParams p{arch, ParamLayout(arch), {}};
  p.flat.assign(p.layout.total(), 0.0);
  std::mt19937_64 rng(seed);
  const double leak_raw = encode_leak(1.0);
  for (const LayoutEntry& e : p.layout.entries()) {
    double* dst = p.flat.data() + e.offset;
    if (e.name == "lambda_raw") {
      std::fill(dst, dst + e.size(), leak_raw);
    } else if (e.cols > 1 || e.name.starts_with("W") || e.name.starts_with("U")) {
      const double bound = std::sqrt(6.0 / static_cast<double>(e.rows + e.cols));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t k = 0; k < e.size(); ++k) dst[k] = dist(rng);
    }
  }
  return p;
}

Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block_view(
    ModelParams& params, int layer, std::string_view name) {
  const LayoutEntry& e = params.layout.find(layer, name);
  return {params.flat.data() + e.offset, e.rows, e.cols};
}

}  // namespace peb::model
