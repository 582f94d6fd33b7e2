#include "peb/autodiff/tape.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "peb/errors.hpp"

namespace peb::autodiff {

namespace {

constexpr std::array<QuadraticForm, 1> kLaplacianForms{{{1.0, 0.0, 1.0}}};
constexpr std::array<QuadraticForm, 3> kHessianForms{{
    {1.0, 0.0, 0.0},
    {0.0, 0.5, 0.0},
    {0.0, 0.0, 1.0},
}};

using Mat = Eigen::MatrixXd;

auto block(Mat& m, Eigen::Index cols, int k) { return m.middleCols(k * cols, cols).array(); }
auto block(const Mat& m, Eigen::Index cols, int k) {
  return m.middleCols(k * cols, cols).array();
}

const char* op_name(int op) {
  static constexpr const char* names[] = {
      "param", "input", "constant", "matmul",   "add",  "sub",     "mul",
      "mul_broadcast", "add_bias", "affine", "activate", "rows", "extract",
      "weighted_sum_squares"};
  return names[op];
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int component_count(JetBasis basis) {
  switch (basis) {
    case JetBasis::Value: return 1;
    case JetBasis::Gradient: return 3;
    case JetBasis::Laplacian: return 4;
    case JetBasis::Hessian: return 6;
  }
  return 1;
}

bool has_gradient(JetBasis basis) { return basis != JetBasis::Value; }

std::span<const QuadraticForm> second_order_forms(JetBasis basis) {
  switch (basis) {
    case JetBasis::Laplacian: return kLaplacianForms;
    case JetBasis::Hessian: return kHessianForms;
    default: return {};
  }
}

Eigen::VectorXd laplacian_coefficients(JetBasis basis) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(component_count(basis));
  switch (basis) {
    case JetBasis::Laplacian: c(3) = 1.0; break;
    case JetBasis::Hessian:
      c(3) = 1.0;
      c(5) = 1.0;
      break;
    default: throw DomainError("jet basis carries no second derivatives");
  }
  return c;
}

std::string_view to_string(Activation f) {
  switch (f) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Exp: return "exp";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "exp") return Activation::Exp;
  if (name == "softplus") return Activation::Softplus;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

ActivationDerivatives activation_derivatives(Activation f, double x) {
  switch (f) {
    case Activation::Identity: return {x, 1.0, 0.0, 0.0};
    case Activation::Tanh: {
      const double t = std::tanh(x);
      const double d = 1.0 - t * t;
      return {t, d, -2.0 * t * d, d * (6.0 * t * t - 2.0)};
    }
    case Activation::Sigmoid: {
      const double s = logistic(x);
      const double d = s * (1.0 - s);
      return {s, d, d * (1.0 - 2.0 * s), d * (1.0 - 6.0 * s + 6.0 * s * s)};
    }
    case Activation::Exp: {
      const double e = std::exp(x);
      return {e, e, e, e};
    }
    case Activation::Softplus: {
      const double s = logistic(x);
      const double d = s * (1.0 - s);
      return {softplus(x), s, d, d * (1.0 - 2.0 * s)};
    }
  }
  return {x, 1.0, 0.0, 0.0};
}

Tape::Tape(JetBasis basis, std::span<const double> params) : basis_(basis), params_(params) {
  nodes_.reserve(64);
}

const Tape::Node& Tape::at(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw StructuralError("dangling tape reference " + std::to_string(v.id));
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

JetBasis Tape::node_basis(const Node& n) const {
  return n.kind == NodeKind::Jet ? basis_ : JetBasis::Value;
}

NodeKind Tape::kind(Var v) const { return at(v).kind; }
Eigen::Index Tape::rows(Var v) const { return at(v).rows; }
Eigen::Index Tape::cols(Var v) const { return at(v).cols; }
int Tape::components(Var v) const { return at(v).ncomp; }
const Eigen::MatrixXd& Tape::value(Var v) const { return at(v).value; }

Eigen::Block<const Eigen::MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true> Tape::component(Var v, int k) const {
  const Node& n = at(v);
  if (k < 0 || k >= n.ncomp) throw DomainError("jet component out of range");
  return n.value.middleCols(k * n.cols, n.cols);
}

double Tape::scalar(Var v) const {
  const Node& n = at(v);
  if (n.rows != 1 || n.cols != 1 || n.ncomp != 1) throw DomainError("node is not a scalar");
  return n.value(0, 0);
}

Var Tape::push(Node n) {
  if (n.a >= 0) n.needs_grad = nodes_[static_cast<std::size_t>(n.a)].needs_grad;
  if (n.b >= 0) n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(n.b)].needs_grad;
  n.ncomp = component_count(node_basis(n));
  evaluate(n, n.value, n.cache);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::param(std::size_t offset, Eigen::Index rows, Eigen::Index cols) {
  if (offset + static_cast<std::size_t>(rows * cols) > params_.size()) {
    throw StructuralError("parameter slice exceeds the parameter vector");
  }
  Node n{.op = Op::Param, .kind = NodeKind::Const};
  n.rows = rows;
  n.cols = cols;
  n.offset = offset;
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::input(Eigen::MatrixXd jets, Eigen::Index cols) {
  const int k = component_count(basis_);
  if (jets.cols() != k * cols) throw DomainError("input jets do not match the tape basis");
  Node n{.op = Op::Input, .kind = NodeKind::Jet};
  n.rows = jets.rows();
  n.cols = cols;
  n.data = std::move(jets);
  return push(std::move(n));
}

Var Tape::constant(Eigen::MatrixXd values) {
  Node n{.op = Op::Constant, .kind = NodeKind::Const};
  n.rows = values.rows();
  n.cols = values.cols();
  n.data = std::move(values);
  return push(std::move(n));
}

Var Tape::matmul(Var w, Var x) {
  const Node& nw = at(w);
  const Node& nx = at(x);
  if (nw.kind != NodeKind::Const) throw StructuralError("matmul needs a spatially constant left operand");
  if (nw.cols != nx.rows) throw DomainError("matmul shape mismatch");
  Node n{.op = Op::MatMul, .kind = nx.kind, .a = w.id, .b = x.id};
  n.rows = nw.rows;
  n.cols = nx.cols;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.kind != nb.kind || na.rows != nb.rows || na.cols != nb.cols) {
    throw StructuralError("add needs operands of identical kind and shape");
  }
  Node n{.op = Op::Add, .kind = na.kind, .a = a.id, .b = b.id};
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.kind != nb.kind || na.rows != nb.rows || na.cols != nb.cols) {
    throw StructuralError("sub needs operands of identical kind and shape");
  }
  Node n{.op = Op::Sub, .kind = na.kind, .a = a.id, .b = b.id};
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.kind == nb.kind && na.rows == nb.rows && na.cols == nb.cols) {
    Node n{.op = Op::Mul, .kind = na.kind, .a = a.id, .b = b.id};
    n.rows = na.rows;
    n.cols = na.cols;
    return push(std::move(n));
  }
  if (nb.kind == NodeKind::Const && nb.cols == 1 && nb.rows == na.rows) {
    Node n{.op = Op::MulBroadcast, .kind = na.kind, .a = a.id, .b = b.id};
    n.rows = na.rows;
    n.cols = na.cols;
    return push(std::move(n));
  }
  if (na.kind == NodeKind::Const && na.cols == 1 && na.rows == nb.rows) return mul(b, a);
  throw StructuralError("mul operands are neither matching nor broadcastable");
}

Var Tape::add_bias(Var x, Var bias) {
  const Node& nx = at(x);
  const Node& nb = at(bias);
  if (nb.kind != NodeKind::Const || nb.cols != 1 || nb.rows != nx.rows) {
    throw StructuralError("bias must be a constant column matching the row count");
  }
  Node n{.op = Op::AddBias, .kind = nx.kind, .a = x.id, .b = bias.id};
  n.rows = nx.rows;
  n.cols = nx.cols;
  return push(std::move(n));
}

Var Tape::affine(Var a, double scale, double shift) {
  const Node& na = at(a);
  Node n{.op = Op::Affine, .kind = na.kind, .a = a.id};
  n.rows = na.rows;
  n.cols = na.cols;
  n.scale = scale;
  n.shift = shift;
  return push(std::move(n));
}

Var Tape::activate(Var a, Activation f) {
  const Node& na = at(a);
  Node n{.op = Op::Activate, .kind = na.kind, .a = a.id};
  n.rows = na.rows;
  n.cols = na.cols;
  n.act = f;
  return push(std::move(n));
}

Var Tape::rows(Var a, Eigen::Index begin, Eigen::Index count) {
  const Node& na = at(a);
  if (begin < 0 || count < 1 || begin + count > na.rows) throw DomainError("row slice out of range");
  Node n{.op = Op::Rows, .kind = na.kind, .a = a.id};
  n.rows = count;
  n.cols = na.cols;
  n.offset = static_cast<std::size_t>(begin);
  return push(std::move(n));
}

Var Tape::extract(Var a, Eigen::Index row, Eigen::MatrixXd coeffs) {
  const Node& na = at(a);
  if (row < 0 || row >= na.rows) throw DomainError("extract row out of range");
  if (coeffs.rows() != na.ncomp || (coeffs.cols() != 1 && coeffs.cols() != na.cols)) {
    throw DomainError("extract coefficients do not match the operand");
  }
  if (coeffs.cols() == 1 && na.cols != 1) coeffs = coeffs.replicate(1, na.cols).eval();
  Node n{.op = Op::Extract, .kind = NodeKind::Plain, .a = a.id};
  n.rows = 1;
  n.cols = na.cols;
  n.offset = static_cast<std::size_t>(row);
  n.data = std::move(coeffs);
  return push(std::move(n));
}

Var Tape::weighted_sum_squares(Var a, Eigen::VectorXd weights) {
  const Node& na = at(a);
  if (na.rows != 1 || na.ncomp != 1 || weights.size() != na.cols) {
    throw DomainError("weighted_sum_squares needs a value-only row and one weight per column");
  }
  Node n{.op = Op::WeightedSumSquares, .kind = na.kind == NodeKind::Const ? NodeKind::Const : NodeKind::Plain,
         .a = a.id};
  n.rows = 1;
  n.cols = 1;
  n.data = std::move(weights);
  return push(std::move(n));
}

void Tape::evaluate(Node& n, Mat& y, Mat& cache) const {
  const Eigen::Index cols = n.cols;
  const JetBasis basis = node_basis(n);
  const bool grad = has_gradient(basis);
  const auto forms = second_order_forms(basis);
  switch (n.op) {
    case Op::Param: {
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
          params_.data() + n.offset, n.rows, n.cols);
      y = m;
      return;
    }
    case Op::Input:
    case Op::Constant: y = n.data; return;
    case Op::MatMul: {
      const Node& w = nodes_[n.a];
      const Node& x = nodes_[n.b];
      y.noalias() = w.value * x.value;
      return;
    }
    case Op::Add: y = nodes_[n.a].value + nodes_[n.b].value; return;
    case Op::Sub: y = nodes_[n.a].value - nodes_[n.b].value; return;
    case Op::Mul: {
      const Mat& A = nodes_[n.a].value;
      const Mat& B = nodes_[n.b].value;
      y.resize(n.rows, A.cols());
      block(y, cols, kValue) = block(A, cols, kValue) * block(B, cols, kValue);
      if (grad) {
        for (int g : {kDx, kDy}) {
          block(y, cols, g) = block(A, cols, g) * block(B, cols, kValue) +
                              block(A, cols, kValue) * block(B, cols, g);
        }
      }
      for (std::size_t s = 0; s < forms.size(); ++s) {
        const int k = 3 + static_cast<int>(s);
        const QuadraticForm& M = forms[s];
        auto ax = block(A, cols, kDx);
        auto ay = block(A, cols, kDy);
        auto bx = block(B, cols, kDx);
        auto by = block(B, cols, kDy);
        block(y, cols, k) = block(A, cols, k) * block(B, cols, kValue) +
                            block(A, cols, kValue) * block(B, cols, k) +
                            2.0 * (M.xx * ax * bx + M.xy * (ax * by + ay * bx) + M.yy * ay * by);
      }
      return;
    }
    case Op::MulBroadcast: {
      const Mat& A = nodes_[n.a].value;
      const Eigen::VectorXd b = nodes_[n.b].value.col(0);
      y = b.asDiagonal() * A;
      return;
    }
    case Op::AddBias: {
      y = nodes_[n.a].value;
      y.leftCols(cols).colwise() += nodes_[n.b].value.col(0);
      return;
    }
    case Op::Affine: {
      y = n.scale * nodes_[n.a].value;
      if (n.shift != 0.0) y.leftCols(cols).array() += n.shift;
      return;
    }
    case Op::Activate: {
      const Mat& X = nodes_[n.a].value;
      y.resize(n.rows, X.cols());
      const int ncache = forms.empty() ? (grad ? 2 : 1) : 3;
      cache.resize(n.rows, ncache * cols);
      if (n.act == Activation::Tanh || n.act == Activation::Sigmoid) {
        // exp-based closed forms vectorize; the scalar library tanh does not.
        auto x = block(X, cols, kValue);
        auto f0 = block(y, cols, kValue);
        auto f1 = block(cache, cols, 0);
        if (n.act == Activation::Tanh) {
          f0 = 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
          f1 = 1.0 - f0.square();
          if (ncache > 1) block(cache, cols, 1) = -2.0 * f0 * f1;
          if (ncache > 2) block(cache, cols, 2) = f1 * (6.0 * f0.square() - 2.0);
        } else {
          f0 = 1.0 / (1.0 + (-x).exp());
          f1 = f0 * (1.0 - f0);
          if (ncache > 1) block(cache, cols, 1) = f1 * (1.0 - 2.0 * f0);
          if (ncache > 2) block(cache, cols, 2) = f1 * (1.0 - 6.0 * f0 + 6.0 * f0.square());
        }
      } else {
        for (Eigen::Index j = 0; j < cols; ++j) {
          for (Eigen::Index i = 0; i < n.rows; ++i) {
            const ActivationDerivatives d = activation_derivatives(n.act, X(i, j));
            y(i, j) = d.f0;
            cache(i, j) = d.f1;
            if (ncache > 1) cache(i, cols + j) = d.f2;
            if (ncache > 2) cache(i, 2 * cols + j) = d.f3;
          }
        }
      }
      if (grad) {
        auto f1 = block(cache, cols, 0);
        auto f2 = block(cache, cols, 1);
        auto gx = block(X, cols, kDx);
        auto gy = block(X, cols, kDy);
        block(y, cols, kDx) = f1 * gx;
        block(y, cols, kDy) = f1 * gy;
        for (std::size_t s = 0; s < forms.size(); ++s) {
          const int k = 3 + static_cast<int>(s);
          const QuadraticForm& M = forms[s];
          block(y, cols, k) =
              f2 * (M.xx * gx * gx + 2.0 * M.xy * gx * gy + M.yy * gy * gy) + f1 * block(X, cols, k);
        }
      }
      return;
    }
    case Op::Rows: {
      y = nodes_[n.a].value.middleRows(static_cast<Eigen::Index>(n.offset), n.rows);
      return;
    }
    case Op::Extract: {
      const Node& x = nodes_[n.a];
      const Eigen::Index r = static_cast<Eigen::Index>(n.offset);
      y = Mat::Zero(1, cols);
      for (int k = 0; k < x.ncomp; ++k) {
        y.row(0).array() += n.data.row(k).array() * x.value.block(r, k * cols, 1, cols).array();
      }
      return;
    }
    case Op::WeightedSumSquares: {
      const Mat& X = nodes_[n.a].value;
      y.resize(1, 1);
      y(0, 0) = (n.data.col(0).transpose().array() * X.row(0).array().square()).sum();
      return;
    }
  }
}

bool Tape::replay_matches() const {
  for (const Node& n : nodes_) {
    if (n.op == Op::Input || n.op == Op::Constant) continue;
    Mat y;
    Mat cache;
    Node copy = n;
    evaluate(copy, y, cache);
    if (y.rows() != n.value.rows() || y.cols() != n.value.cols()) return false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(y.data()[i]) != std::bit_cast<std::uint64_t>(n.value.data()[i])) {
        return false;
      }
    }
  }
  return true;
}

std::vector<double> Tape::backward(Var loss) const {
  const Node& nl = at(loss);
  if (nl.rows != 1 || nl.cols != 1 || nl.ncomp != 1) {
    throw StructuralError("backward needs a scalar loss node");
  }
  std::vector<double> grad(params_.size(), 0.0);
  std::vector<Mat> adjoints(nodes_.size());
  adjoints[static_cast<std::size_t>(loss.id)] = Mat::Ones(1, 1);
  for (std::size_t i = static_cast<std::size_t>(loss.id) + 1; i-- > 0;) {
    Mat& adj = adjoints[i];
    if (adj.size() == 0 || !nodes_[i].needs_grad) continue;
    if (!adj.allFinite()) {
      throw NumericalError("non-finite adjoint at tape node " + std::to_string(i) + " (" +
                               op_name(static_cast<int>(nodes_[i].op)) + ")",
                           static_cast<std::ptrdiff_t>(i));
    }
    propagate(i, adj, adjoints, grad);
    adj.resize(0, 0);
  }
  return grad;
}

void Tape::propagate(std::size_t index, const Mat& adj, std::vector<Mat>& adjoints,
                     std::vector<double>& grad) const {
  const Node& n = nodes_[index];
  const Eigen::Index cols = n.cols;
  // First contribution to an adjoint is assigned, later ones accumulate.
  auto assign_or_add = [&](std::int32_t id, const auto& expr) {
    if (id < 0 || !nodes_[id].needs_grad) return;
    Mat& m = adjoints[id];
    if (m.size() == 0) {
      m = expr;
    } else {
      m += expr;
    }
  };
  auto target = [&](std::int32_t id) -> Mat* {
    if (id < 0 || !nodes_[id].needs_grad) return nullptr;
    Mat& m = adjoints[id];
    if (m.size() == 0) m = Mat::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    return &m;
  };
  const JetBasis basis = node_basis(n);
  const bool has_grad = has_gradient(basis);
  const auto forms = second_order_forms(basis);

  switch (n.op) {
    case Op::Param: {
      for (Eigen::Index r = 0; r < n.rows; ++r) {
        for (Eigen::Index c = 0; c < n.cols; ++c) {
          grad[n.offset + static_cast<std::size_t>(r * n.cols + c)] += adj(r, c);
        }
      }
      return;
    }
    case Op::Input:
    case Op::Constant: return;
    case Op::MatMul: {
      const Node& w = nodes_[n.a];
      const Node& x = nodes_[n.b];
      if (nodes_[n.a].needs_grad) {
        Mat& aw = adjoints[n.a];
        if (aw.size() == 0) {
          aw.noalias() = adj * x.value.transpose();
        } else {
          aw.noalias() += adj * x.value.transpose();
        }
      }
      if (nodes_[n.b].needs_grad) {
        Mat& ax = adjoints[n.b];
        if (ax.size() == 0) {
          ax.noalias() = w.value.transpose() * adj;
        } else {
          ax.noalias() += w.value.transpose() * adj;
        }
      }
      return;
    }
    case Op::Add:
      assign_or_add(n.a, adj);
      assign_or_add(n.b, adj);
      return;
    case Op::Sub:
      assign_or_add(n.a, adj);
      assign_or_add(n.b, -adj);
      return;
    case Op::Mul: {
      const Mat& A = nodes_[n.a].value;
      const Mat& B = nodes_[n.b].value;
      // d(a*b)/da has the same structure as d(a*b)/db with the roles swapped.
      // Each target block is written by one fused expression.
      auto pull = [&](std::int32_t id, const Mat& o) {
        if (id < 0 || !nodes_[id].needs_grad) return;
        Mat& ta = adjoints[id];
        const bool fresh = ta.size() == 0;
        if (fresh) ta.resize(A.rows(), A.cols());
        auto put = [&](int k, const auto& expr) {
          if (fresh) {
            block(ta, cols, k) = expr;
          } else {
            block(ta, cols, k) += expr;
          }
        };
        auto av = block(adj, cols, kValue);
        auto ov = block(o, cols, kValue);
        if (!has_grad) {
          put(kValue, av * ov);
          return;
        }
        auto ax = block(adj, cols, kDx);
        auto ay = block(adj, cols, kDy);
        auto ox = block(o, cols, kDx);
        auto oy = block(o, cols, kDy);
        if (forms.empty()) {
          put(kValue, av * ov + ax * ox + ay * oy);
          put(kDx, ax * ov);
          put(kDy, ay * ov);
          return;
        }
        if (forms.size() == 1) {
          const QuadraticForm& M = forms[0];
          auto al = block(adj, cols, 3);
          put(kValue, av * ov + ax * ox + ay * oy + al * block(o, cols, 3));
          put(kDx, ax * ov + 2.0 * al * (M.xx * ox + M.xy * oy));
          put(kDy, ay * ov + 2.0 * al * (M.xy * ox + M.yy * oy));
          put(3, al * ov);
          return;
        }
        put(kValue, av * ov + ax * ox + ay * oy);
        put(kDx, ax * ov);
        put(kDy, ay * ov);
        for (std::size_t s = 0; s < forms.size(); ++s) {
          const int k = 3 + static_cast<int>(s);
          const QuadraticForm& M = forms[s];
          auto ys = block(adj, cols, k);
          block(ta, cols, kValue) += ys * block(o, cols, k);
          put(k, ys * ov);
          block(ta, cols, kDx) += 2.0 * ys * (M.xx * ox + M.xy * oy);
          block(ta, cols, kDy) += 2.0 * ys * (M.xy * ox + M.yy * oy);
        }
      };
      pull(n.a, B);
      pull(n.b, A);
      return;
    }
    case Op::MulBroadcast: {
      const Mat& A = nodes_[n.a].value;
      const Eigen::VectorXd b = nodes_[n.b].value.col(0);
      assign_or_add(n.a, b.asDiagonal() * adj);
      if (Mat* tb = target(n.b)) tb->col(0) += (adj.array() * A.array()).rowwise().sum().matrix();
      return;
    }
    case Op::AddBias:
      assign_or_add(n.a, adj);
      if (Mat* t = target(n.b)) t->col(0) += adj.leftCols(cols).rowwise().sum();
      return;
    case Op::Affine:
      assign_or_add(n.a, n.scale * adj);
      return;
    case Op::Activate: {
      if (!nodes_[n.a].needs_grad) return;
      Mat& tx = adjoints[n.a];
      const bool fresh = tx.size() == 0;
      const Mat& X = nodes_[n.a].value;
      if (fresh) tx.resize(X.rows(), X.cols());
      auto put = [&](int k, const auto& expr) {
        if (fresh) {
          block(tx, cols, k) = expr;
        } else {
          block(tx, cols, k) += expr;
        }
      };
      auto f1 = block(n.cache, cols, 0);
      auto av = block(adj, cols, kValue);
      if (!has_grad) {
        put(kValue, f1 * av);
        return;
      }
      auto f2 = block(n.cache, cols, 1);
      auto gx = block(X, cols, kDx);
      auto gy = block(X, cols, kDy);
      auto ax = block(adj, cols, kDx);
      auto ay = block(adj, cols, kDy);
      if (forms.size() == 1) {
        const QuadraticForm& M = forms[0];
        auto f3 = block(n.cache, cols, 2);
        auto al = block(adj, cols, 3);
        put(kValue, f1 * av + f2 * (ax * gx + ay * gy) +
                        al * (f3 * (M.xx * gx * gx + 2.0 * M.xy * gx * gy + M.yy * gy * gy) +
                              f2 * block(X, cols, 3)));
        put(kDx, f1 * ax + 2.0 * al * f2 * (M.xx * gx + M.xy * gy));
        put(kDy, f1 * ay + 2.0 * al * f2 * (M.xy * gx + M.yy * gy));
        put(3, al * f1);
        return;
      }
      put(kValue, f1 * av + f2 * (ax * gx + ay * gy));
      put(kDx, f1 * ax);
      put(kDy, f1 * ay);
      if (forms.empty()) return;
      auto f3 = block(n.cache, cols, 2);
      for (std::size_t s = 0; s < forms.size(); ++s) {
        const int k = 3 + static_cast<int>(s);
        const QuadraticForm& M = forms[s];
        auto ys = block(adj, cols, k);
        block(tx, cols, kValue) +=
            ys * (f3 * (M.xx * gx * gx + 2.0 * M.xy * gx * gy + M.yy * gy * gy) + f2 * block(X, cols, k));
        block(tx, cols, kDx) += ys * f2 * 2.0 * (M.xx * gx + M.xy * gy);
        block(tx, cols, kDy) += ys * f2 * 2.0 * (M.xy * gx + M.yy * gy);
        put(k, ys * f1);
      }
      return;
    }
    case Op::Rows:
      if (Mat* t = target(n.a)) t->middleRows(static_cast<Eigen::Index>(n.offset), n.rows) += adj;
      return;
    case Op::Extract: {
      Mat* t = target(n.a);
      if (t == nullptr) return;
      const Eigen::Index r = static_cast<Eigen::Index>(n.offset);
      for (int k = 0; k < nodes_[n.a].ncomp; ++k) {
        t->block(r, k * cols, 1, cols).array() += n.data.row(k).array() * adj.row(0).array();
      }
      return;
    }
    case Op::WeightedSumSquares: {
      Mat* t = target(n.a);
      if (t == nullptr) return;
      const Mat& X = nodes_[n.a].value;
      t->row(0).array() += 2.0 * adj(0, 0) * n.data.col(0).transpose().array() * X.row(0).array();
      return;
    }
  }
}

}  // namespace peb::autodiff
