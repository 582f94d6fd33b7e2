#pragma once

// Shared fixtures. The scalar forward pass below is written directly from
// the layer equations with Jet2 arithmetic and never touches the tape, so it
// serves as an independent oracle for the batched implementation.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "peb/autodiff/jet2.hpp"
#include "peb/model/layout.hpp"

namespace testing {

using peb::autodiff::Jet2;

inline peb::model::ModelParams random_params(const peb::model::Architecture& arch, std::uint64_t seed,
                                             double spread = 0.3) {
  peb::model::ModelParams p = peb::model::init_params(arch, seed);
  std::mt19937_64 rng(seed * 7919 + 17);
  std::normal_distribution<double> noise(0.0, spread);
  for (double& v : p.flat) v += noise(rng);
  return p;
}

inline Jet2 activate(const Jet2& a, peb::autodiff::Activation f) {
  using peb::autodiff::Activation;
  switch (f) {
    case Activation::Identity: return a;
    case Activation::Tanh: return peb::autodiff::tanh(a);
    case Activation::Sigmoid: return peb::autodiff::sigmoid(a);
    case Activation::Exp: return peb::autodiff::exp(a);
    case Activation::Softplus: {
      const double s = 1.0 / (1.0 + std::exp(-a.v));
      return peb::autodiff::jet_chain(a, std::log1p(std::exp(a.v)), s, s * (1.0 - s));
    }
  }
  return a;
}

using JetVec = std::vector<Jet2>;

inline JetVec affine(const Eigen::MatrixXd& W, const JetVec& x) {
  JetVec out(static_cast<std::size_t>(W.rows()));
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) out[i] = out[i] + W(i, j) * x[j];
  }
  return out;
}

inline JetVec plus(const JetVec& a, const JetVec& b) {
  JetVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// One point through the network, straight from the equations.
inline JetVec reference_forward(const peb::model::ModelParams& p, const Jet2& x, const Jet2& y) {
  using peb::autodiff::Activation;
  using peb::model::LayerKind;
  auto block = [&](int layer, const std::string& name) {
    for (const auto& b : peb::model::unflatten(p)) {
      if (b.layer == layer && b.name == name) return b.values;
    }
    throw std::runtime_error("missing block " + name);
  };
  auto column = [&](int layer, const std::string& name) {
    const Eigen::MatrixXd m = block(layer, name);
    JetVec v(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) v[i] = Jet2::constant(m(i, 0));
    return v;
  };

  const LayerKind kind = peb::model::layer_kind(p.arch.backbone);
  JetVec h{x, y};
  for (int l = 0; l < p.arch.depth; ++l) {
    const JetVec in = h;
    const bool has_state = l > 0;
    JetVec h0 = has_state ? in : JetVec(static_cast<std::size_t>(p.arch.width));
    JetVec out(static_cast<std::size_t>(p.arch.width));
    auto alpha = [&](std::size_t i) {
      const double raw = block(l, "lambda_raw")(static_cast<Eigen::Index>(i), 0);
      return std::exp(-std::log1p(std::exp(raw)));
    };
    if (kind == LayerKind::Dense) {
      out = plus(affine(block(l, "W"), in), column(l, "b"));
      for (auto& v : out) v = activate(v, p.arch.activation);
    } else if (kind == LayerKind::Liquid) {
      JetVec pre = plus(affine(block(l, "W_in"), in), column(l, "b"));
      if (has_state) pre = plus(pre, affine(block(l, "W_recur"), h0));
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double a = alpha(i);
        out[i] = a * h0[i] + (1.0 - a) * activate(pre[i], p.arch.activation);
      }
    } else {
      auto gate = [&](const std::string& g, Activation f) {
        JetVec pre = plus(affine(block(l, "W_" + g), in), column(l, "b_" + g));
        if (has_state) pre = plus(pre, affine(block(l, "U_" + g), h0));
        for (auto& v : pre) v = activate(v, f);
        return pre;
      };
      const JetVec i_g = gate("i", Activation::Sigmoid), f_g = gate("f", Activation::Sigmoid),
                   o_g = gate("o", Activation::Sigmoid), c_t = gate("c", Activation::Tanh);
      const JetVec c0 = column(l, "c0");
      for (std::size_t i = 0; i < out.size(); ++i) {
        const Jet2 c = f_g[i] * c0[i] + i_g[i] * c_t[i];
        out[i] = o_g[i] * peb::autodiff::tanh(c);
        if (kind == LayerKind::GatedLiquid) {
          const double a = alpha(i);
          out[i] = a * h0[i] + (1.0 - a) * out[i];
        }
      }
    }
    h = out;
  }
  return plus(affine(block(p.arch.depth, "W_out"), h), column(p.arch.depth, "b_out"));
}

inline double rel_close(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline double jet_max_diff(const Jet2& a, const Jet2& b) {
  return std::max({std::abs(a.v - b.v), std::abs(a.gx - b.gx), std::abs(a.gy - b.gy), std::abs(a.hxx - b.hxx),
                   std::abs(a.hxy - b.hxy), std::abs(a.hyy - b.hyy)});
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("peb_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline const std::vector<peb::model::Backbone>& all_backbones() {
  static const std::vector<peb::model::Backbone> b{peb::model::Backbone::PINN, peb::model::Backbone::LNN_PINN,
                                                   peb::model::Backbone::LSTM_PINN,
                                                   peb::model::Backbone::LSTM_LNN_PINN};
  return b;
}

}  // namespace testing
