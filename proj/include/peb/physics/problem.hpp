#pragma once

namespace peb::physics {

// SI units throughout.
struct PhysicalConstants {
  double k = 159.0;       // W m^-1 K^-1
  double Q = 2000.0;      // W m^-3
  double h = 50.0;        // W m^-2 K^-1
  double T_inf = 800.0;   // K
  double R = 0.15;        // m

  void validate() const;
};

// Lengths are scaled by R and temperatures are shifted and scaled,
//   u = (T - T_inf) / dT,   dT = QR/(2h) + QR^2/(4k),
// so the exact solution stays in [~0.977, 1] and the ambient term drops out
// of the Robin residual. In these variables the problem reads
//   -lap u = q_hat in the unit disk,   -du/dn = Bi u on the unit circle.
struct NonDimScheme {
  double L = 0.0;            // length scale, = R
  double dT = 0.0;           // temperature scale, K
  double Bi = 0.0;           // hR/k
  double q_hat = 0.0;        // Q R^2 / (k dT)
  double unshifted_scale = 0.0;  // Q R^2 / k
  double T_inf = 0.0;
  double edge_rise = 0.0;    // QR/(2h): wall temperature above ambient, K
  double core_rise = 0.0;    // QR^2/(4k): centre temperature above the wall, K

  double to_physical_temperature(double u) const { return T_inf + dT * u; }
  double to_dimensionless_temperature(double T) const { return (T - T_inf) / dT; }
  // T' = T / (Q R^2 / k)
  double to_unshifted_scale(double T) const { return T / unshifted_scale; }
  double from_unshifted_scale(double t) const { return t * unshifted_scale; }
  double to_physical_length(double x) const { return x * L; }
  double to_dimensionless_length(double x) const { return x / L; }
};

NonDimScheme make_scheme(const PhysicalConstants& c);

// Residual-channel weights. The training loss uses them as written; the
// diagnostic energy functional squares them.
struct LossWeights {
  double w1 = 1.0;        // twist
  double w2 = 1.0;        // divergence
  double w3 = 1e-2;       // closure
  double w4 = 1.0;        // port
  double eps_clo = 1e-2;  // closure scale the default w3 is tied to
  double h_omega = 1.0;
  double h_gamma = 1.0;

  void validate() const;
};

}  // namespace peb::physics
