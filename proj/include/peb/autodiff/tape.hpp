#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace peb::autodiff {

// Which Taylor components a jet tensor carries. Components are stored in the
// order value, d/dx, d/dy, then one entry per second-order form.
//
//   Value      v
//   Gradient   v gx gy
//   Laplacian  v gx gy (hxx+hyy)
//   Hessian    v gx gy hxx hxy hyy      (the full Jet2)
//
// Every second-order component is a quadratic form g^T M g of the gradient
// under the chain rule, which is what lets one kernel serve all bases.
enum class JetBasis { Value, Gradient, Laplacian, Hessian };

struct QuadraticForm {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

int component_count(JetBasis basis);
bool has_gradient(JetBasis basis);
std::span<const QuadraticForm> second_order_forms(JetBasis basis);

inline constexpr int kValue = 0;
inline constexpr int kDx = 1;
inline constexpr int kDy = 2;

// Coefficients c_k with sum_k c_k * component_k == hxx + hyy.
Eigen::VectorXd laplacian_coefficients(JetBasis basis);

enum class Activation { Identity, Tanh, Sigmoid, Exp, Softplus };

std::string_view to_string(Activation f);
Activation activation_from_string(std::string_view name);

struct ActivationDerivatives {
  double f0, f1, f2, f3;
};
ActivationDerivatives activation_derivatives(Activation f, double x);

// Jet: varies in space and carries the tape basis.
// Const: spatially constant (parameters and anything computed from them
//        alone); derivative components are identically zero and not stored.
// Plain: varies in space but carries only a value (results of reading jet
//        components, i.e. loss-side quantities).
enum class NodeKind { Jet, Const, Plain };

struct Var {
  std::int32_t id = -1;
};

// Reverse-mode tape over batched jet tensors. A node of r rows and n columns
// stores an r x (k*n) matrix, one contiguous r x n block per jet component,
// so a constant matrix acting on a jet tensor is a single GEMM.
//
// Parameter leaves read from a flat parameter vector (row-major per block);
// backward() returns d(loss)/d(params) over that whole vector. The parameter
// storage must outlive the tape.
class Tape {
 public:
  Tape(JetBasis basis, std::span<const double> params);

  JetBasis basis() const { return basis_; }
  std::size_t size() const { return nodes_.size(); }

  Var param(std::size_t offset, Eigen::Index rows, Eigen::Index cols);
  // A jet leaf: `jets` is rows x (component_count(basis) * cols).
  Var input(Eigen::MatrixXd jets, Eigen::Index cols);
  Var constant(Eigen::MatrixXd values);

  Var matmul(Var w, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  // Elementwise product; a Const column vector broadcasts over columns.
  Var mul(Var a, Var b);
  Var add_bias(Var x, Var bias);
  // scale * a + shift (the shift only touches the value component).
  Var affine(Var a, double scale, double shift);
  Var activate(Var a, Activation f);
  Var rows(Var a, Eigen::Index begin, Eigen::Index count);
  // Plain 1 x n row: sum_k coeffs(k, j) * component_k(a)(row, j). `coeffs`
  // is k x n, or k x 1 to apply the same combination to every column.
  Var extract(Var a, Eigen::Index row, Eigen::MatrixXd coeffs);
  // sum_j weights(j) * a(0, j)^2 for a 1 x n value-only node.
  Var weighted_sum_squares(Var a, Eigen::VectorXd weights);

  NodeKind kind(Var v) const;
  Eigen::Index rows(Var v) const;
  Eigen::Index cols(Var v) const;
  int components(Var v) const;
  const Eigen::MatrixXd& value(Var v) const;
  // The rows x cols block of component k.
  Eigen::Block<const Eigen::MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true> component(Var v, int k) const;
  double scalar(Var v) const;

  // Throws StructuralError for a bad loss reference and NumericalError
  // (carrying the node index) at the first non-finite adjoint.
  std::vector<double> backward(Var loss) const;

  // Recomputes every non-leaf node from its operands and reports whether
  // all primal values are reproduced bit for bit.
  bool replay_matches() const;

 private:
  enum class Op {
    Param,
    Input,
    Constant,
    MatMul,
    Add,
    Sub,
    Mul,
    MulBroadcast,
    AddBias,
    Affine,
    Activate,
    Rows,
    Extract,
    WeightedSumSquares,
  };

  struct Node {
    Op op;
    NodeKind kind;
    std::int32_t a = -1;
    std::int32_t b = -1;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    int ncomp = 1;
    bool needs_grad = false;
    std::size_t offset = 0;  // Param offset, Rows begin, Extract row
    double scale = 1.0;
    double shift = 0.0;
    Activation act = Activation::Identity;
    Eigen::MatrixXd value;
    Eigen::MatrixXd data;   // op constants: extract coefficients, weights
    Eigen::MatrixXd cache;  // activation derivatives f1 | f2 | f3
  };

  const Node& at(Var v) const;
  JetBasis node_basis(const Node& n) const;
  Var push(Node n);
  void evaluate(Node& n, Eigen::MatrixXd& value, Eigen::MatrixXd& cache) const;
  void propagate(std::size_t index, const Eigen::MatrixXd& adj,
                 std::vector<Eigen::MatrixXd>& adjoints, std::vector<double>& grad) const;

  JetBasis basis_;
  std::span<const double> params_;
  std::vector<Node> nodes_;
};

}  // namespace peb::autodiff
