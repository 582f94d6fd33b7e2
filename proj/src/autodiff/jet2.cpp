#include "peb/autodiff/jet2.hpp"

#include "peb/errors.hpp"

namespace peb::autodiff {

Jet2 jet_seed(double x, Axis axis) {
  Jet2 j{x, 0, 0, 0, 0, 0};
  (axis == Axis::X ? j.gx : j.gy) = 1.0;
  return j;
}

Jet2 jet_mul(const Jet2& a, const Jet2& b) {
  return Jet2{
      a.v * b.v,
      a.gx * b.v + a.v * b.gx,
      a.gy * b.v + a.v * b.gy,
      a.hxx * b.v + 2.0 * a.gx * b.gx + a.v * b.hxx,
      a.hxy * b.v + a.gx * b.gy + a.gy * b.gx + a.v * b.hxy,
      a.hyy * b.v + 2.0 * a.gy * b.gy + a.v * b.hyy,
  };
}

Jet2 jet_chain(const Jet2& a, double f0, double f1, double f2) {
  return Jet2{
      f0,
      f1 * a.gx,
      f1 * a.gy,
      f2 * a.gx * a.gx + f1 * a.hxx,
      f2 * a.gx * a.gy + f1 * a.hxy,
      f2 * a.gy * a.gy + f1 * a.hyy,
  };
}

Jet2 operator+(const Jet2& a, const Jet2& b) {
  return Jet2{a.v + b.v,     a.gx + b.gx,   a.gy + b.gy,
              a.hxx + b.hxx, a.hxy + b.hxy, a.hyy + b.hyy};
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  return Jet2{a.v - b.v,     a.gx - b.gx,   a.gy - b.gy,
              a.hxx - b.hxx, a.hxy - b.hxy, a.hyy - b.hyy};
}

Jet2 operator-(const Jet2& a) { return Jet2{-a.v, -a.gx, -a.gy, -a.hxx, -a.hxy, -a.hyy}; }

Jet2 operator*(double s, const Jet2& a) {
  return Jet2{s * a.v, s * a.gx, s * a.gy, s * a.hxx, s * a.hxy, s * a.hyy};
}

Jet2 operator+(const Jet2& a, double c) {
  Jet2 r = a;
  r.v += c;
  return r;
}

Jet2 tanh(const Jet2& a) {
  const double t = std::tanh(a.v);
  const double d1 = 1.0 - t * t;
  return jet_chain(a, t, d1, -2.0 * t * d1);
}

Jet2 sigmoid(const Jet2& a) {
  const double s = 1.0 / (1.0 + std::exp(-a.v));
  const double d1 = s * (1.0 - s);
  return jet_chain(a, s, d1, d1 * (1.0 - 2.0 * s));
}

Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return jet_chain(a, e, e, e);
}

Jet2 reciprocal(const Jet2& a) {
  if (a.v == 0.0) throw DomainError("reciprocal of a jet with zero value");
  const double r = 1.0 / a.v;
  return jet_chain(a, r, -r * r, 2.0 * r * r * r);
}

}  // namespace peb::autodiff
