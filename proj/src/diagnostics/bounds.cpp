#include "peb/diagnostics/bounds.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

#include "peb/errors.hpp"
#include "peb/model/model.hpp"

namespace peb::diagnostics {

namespace {

using autodiff::JetBasis;
using autodiff::Tape;
using autodiff::Var;
using Eigen::MatrixXd;

constexpr Eigen::Index kChunk = 512;

// Derivatives of map j at values Z along direction pairs (U, V), one column
// per evaluation: JU = DF u, JV = DF v, HUU = D2F[u,u], HVV = D2F[v,v].
struct MapDerivatives {
  MatrixXd JU, JV, HUU, HVV;
};

MapDerivatives differentiate_map(const model::ModelParams& params, int j, const MatrixXd& Z, const MatrixXd& U,
                                 const MatrixXd& V) {
  const Eigen::Index m_in = Z.rows();
  const Eigen::Index total = Z.cols();
  MapDerivatives out;
  for (Eigen::Index start = 0; start < total; start += kChunk) {
    const Eigen::Index n = std::min(kChunk, total - start);
    MatrixXd jets = MatrixXd::Zero(m_in, 6 * n);
    jets.middleCols(0, n) = Z.middleCols(start, n);
    jets.middleCols(n, n) = U.middleCols(start, n);
    jets.middleCols(2 * n, n) = V.middleCols(start, n);
    Tape tape(JetBasis::Hessian, params.flat);
    const Var in = tape.input(std::move(jets), n);
    const Var y = j < params.arch.depth ? model::apply_layer(tape, params, j, in)
                                        : model::apply_readout(tape, params, in);
    if (out.JU.size() == 0) {
      const Eigen::Index m_out = tape.rows(y);
      out.JU.resize(m_out, total);
      out.JV.resize(m_out, total);
      out.HUU.resize(m_out, total);
      out.HVV.resize(m_out, total);
    }
    out.JU.middleCols(start, n) = tape.component(y, autodiff::kDx);
    out.JV.middleCols(start, n) = tape.component(y, autodiff::kDy);
    out.HUU.middleCols(start, n) = tape.component(y, 3);
    out.HVV.middleCols(start, n) = tape.component(y, 5);
  }
  return out;
}

// Largest singular value of J by power iteration on J^T J.
double power_norm(const MatrixXd& J, const BoundOptions& opt, bool& converged) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(J.cols()) / std::sqrt(static_cast<double>(J.cols()));
  double sigma = (J * v).norm();
  converged = false;
  for (int it = 0; it < opt.power_iterations; ++it) {
    Eigen::VectorXd w = J.transpose() * (J * v);
    const double nw = w.norm();
    if (nw == 0.0) {
      converged = true;
      return 0.0;
    }
    v = w / nw;
    const double next = (J * v).norm();
    const bool done = std::abs(next - sigma) <= opt.tolerance * std::max(next, 1e-300);
    sigma = next;
    if (done) {
      converged = true;
      break;
    }
  }
  return sigma;
}

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
}

MatrixXd param_matrix(const model::ModelParams& params, int layer, std::string_view name) {
  const model::LayoutEntry& e = params.layout.find(layer, name);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      params.flat.data() + e.offset, e.rows, e.cols);
}

}  // namespace

OperatorBoundReport second_order_bound(const model::ModelParams& params, std::span<const Point> samples,
                                       const BoundOptions& opt) {
  if (samples.size() < 64) throw DomainError("second_order_bound needs at least 64 sample points");
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  const int depth = params.arch.depth;
  const int maps = depth + 1;
  OperatorBoundReport rep;
  rep.samples = samples.size();
  rep.beta_g = opt.beta_g;

  // Full-network pass recording each map's input jets (value and the two
  // coordinate derivatives) and the output Hessian.
  std::vector<MatrixXd> z(maps), zx(maps), zy(maps);
  {
    Tape tape(JetBasis::Hessian, params.flat);
    Var h = tape.input(model::coordinate_jets(JetBasis::Hessian, samples), n);
    for (int j = 0; j < maps; ++j) {
      z[j] = tape.component(h, autodiff::kValue);
      zx[j] = tape.component(h, autodiff::kDx);
      zy[j] = tape.component(h, autodiff::kDy);
      h = j < depth ? model::apply_layer(tape, params, j, h) : model::apply_readout(tape, params, h);
    }
    for (Eigen::Index s = 0; s < n; ++s) {
      Eigen::Matrix2d hess;
      hess << tape.component(h, 3)(0, s), tape.component(h, 4)(0, s), tape.component(h, 4)(0, s),
          tape.component(h, 5)(0, s);
      const double norm = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(hess).eigenvalues().cwiseAbs().maxCoeff();
      rep.sampled_hessian_max = std::max(rep.sampled_hessian_max, norm);
    }
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  rep.L.assign(maps, 0.0);
  rep.H.assign(maps, 0.0);
  for (int j = 0; j < maps; ++j) {
    const Eigen::Index m_in = z[j].rows();
    // Jacobian: coordinate directions in pairs.
    const Eigen::Index pairs = (m_in + 1) / 2;
    MatrixXd Z(m_in, n * pairs), U = MatrixXd::Zero(m_in, n * pairs), V = MatrixXd::Zero(m_in, n * pairs);
    for (Eigen::Index p = 0; p < pairs; ++p) {
      for (Eigen::Index s = 0; s < n; ++s) {
        const Eigen::Index c = p * n + s;
        Z.col(c) = z[j].col(s);
        U(2 * p, c) = 1.0;
        if (2 * p + 1 < m_in) V(2 * p + 1, c) = 1.0;
      }
    }
    const MapDerivatives jac = differentiate_map(params, j, Z, U, V);
    const Eigen::Index m_out = jac.JU.rows();
    for (Eigen::Index s = 0; s < n; ++s) {
      MatrixXd J(m_out, m_in);
      for (Eigen::Index p = 0; p < pairs; ++p) {
        J.col(2 * p) = jac.JU.col(p * n + s);
        if (2 * p + 1 < m_in) J.col(2 * p + 1) = jac.JV.col(p * n + s);
      }
      bool ok = true;
      rep.L[j] = std::max(rep.L[j], power_norm(J, opt, ok));
      if (!ok) ++rep.power_unconverged;
    }

    // Second derivatives along random unit directions and along the
    // directions the network feeds into this map (d z / dx, d z / dy and
    // their diagonals).
    const int fed = 4;
    const int per_sample = (opt.random_directions + fed + 1) / 2;
    MatrixXd Z2(m_in, n * per_sample), U2(m_in, n * per_sample), V2(m_in, n * per_sample);
    auto unit = [&](Eigen::VectorXd v) {
      const double nv = v.norm();
      if (nv == 0.0) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
        return Eigen::VectorXd(v / v.norm());
      }
      return Eigen::VectorXd(v / nv);
    };
    for (Eigen::Index s = 0; s < n; ++s) {
      std::vector<Eigen::VectorXd> dirs;
      dirs.push_back(unit(zx[j].col(s)));
      dirs.push_back(unit(zy[j].col(s)));
      dirs.push_back(unit(zx[j].col(s) + zy[j].col(s)));
      dirs.push_back(unit(zx[j].col(s) - zy[j].col(s)));
      while (static_cast<int>(dirs.size()) < 2 * per_sample) {
        Eigen::VectorXd v(m_in);
        for (Eigen::Index i = 0; i < m_in; ++i) v(i) = normal(rng);
        dirs.push_back(unit(v));
      }
      for (int q = 0; q < per_sample; ++q) {
        const Eigen::Index c = q * n + s;
        Z2.col(c) = z[j].col(s);
        U2.col(c) = dirs[static_cast<std::size_t>(2 * q)];
        V2.col(c) = dirs[static_cast<std::size_t>(2 * q + 1)];
      }
    }
    const MapDerivatives sec = differentiate_map(params, j, Z2, U2, V2);
    for (Eigen::Index c = 0; c < sec.HUU.cols(); ++c) {
      rep.H[j] = std::max({rep.H[j], sec.HUU.col(c).norm(), sec.HVV.col(c).norm()});
    }
  }

  for (int l = 0; l < maps; ++l) {
    double after = 1.0, after_sq = 1.0, before = 1.0, before_sq = 1.0;
    for (int j = l + 1; j < maps; ++j) {
      after *= rep.L[j];
      after_sq *= rep.L[j] * rep.L[j];
    }
    for (int j = 0; j < l; ++j) {
      before *= rep.L[j];
      before_sq *= rep.L[j] * rep.L[j];
    }
    rep.sum_product += rep.H[l] * after_sq * before;
    rep.sum_product_chain += rep.H[l] * after * before_sq;
  }

  const model::LayerKind kind = model::layer_kind(params.arch.backbone);
  MatrixXd W;
  if (kind == model::LayerKind::Gated || kind == model::LayerKind::GatedLiquid) {
    const MatrixXd wi = param_matrix(params, 0, "W_i");
    W.resize(4 * wi.rows(), wi.cols());
    W << wi, param_matrix(params, 0, "W_f"), param_matrix(params, 0, "W_o"), param_matrix(params, 0, "W_c");
  } else {
    W = param_matrix(params, 0, kind == model::LayerKind::Liquid ? "W_in" : "W");
  }
  rep.W_norm = spectral_norm(W);
  rep.W_out_norm = spectral_norm(param_matrix(params, depth, "W_out"));
  rep.gated_bound = opt.beta_g * rep.W_norm * rep.W_norm * rep.W_out_norm * rep.W_out_norm;
  return rep;
}

}  // namespace peb::diagnostics
