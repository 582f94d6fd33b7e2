#pragma once

#include <cmath>

namespace peb::autodiff {

enum class Axis { X, Y };

// Second-order Taylor coefficients of a scalar field u(x, y): the value, the
// gradient and the (symmetric) Hessian. Only one mixed partial is stored.
struct Jet2 {
  double v = 0.0;
  double gx = 0.0;
  double gy = 0.0;
  double hxx = 0.0;
  double hxy = 0.0;
  double hyy = 0.0;

  static constexpr Jet2 constant(double c) { return Jet2{c, 0, 0, 0, 0, 0}; }

  double laplacian() const { return hxx + hyy; }
  bool finite() const {
    return std::isfinite(v) && std::isfinite(gx) && std::isfinite(gy) &&
           std::isfinite(hxx) && std::isfinite(hxy) && std::isfinite(hyy);
  }

  friend bool operator==(const Jet2&, const Jet2&) = default;
};

// Independent variable x on the given axis.
Jet2 jet_seed(double x, Axis axis);

// Leibniz rule truncated at order two.
Jet2 jet_mul(const Jet2& a, const Jet2& b);

// f(a) given f(a.v), f'(a.v), f''(a.v).
Jet2 jet_chain(const Jet2& a, double f0, double f1, double f2);

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator*(double s, const Jet2& a);
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) { return jet_mul(a, b); }
Jet2 operator+(const Jet2& a, double c);

Jet2 tanh(const Jet2& a);
Jet2 sigmoid(const Jet2& a);
Jet2 exp(const Jet2& a);
Jet2 reciprocal(const Jet2& a);

}  // namespace peb::autodiff
