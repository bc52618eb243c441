#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ew2d {

// 2D heat kernel G_t(x) = exp(-|x|^2/(2t)) / (2*pi*t).
double heat_kernel(double t, double x, double y);

// Periodized kernel on the torus [0,L)^2; image sum truncated once the
// shell contribution drops below 1e-14.
double heat_kernel_torus(double t, double x, double y, double L);

// Smoothing profile phi at unit scale, radius <= 1, unit mass.
// eps carries the correlation length; phi^eps(x) = eps^-2 phi(x/eps).
class Mollifier {
public:
  enum class Kind { smooth_bump, flat_disc, custom };

  static Mollifier smooth_bump(double eps);
  static Mollifier flat_disc(double eps);
  // Arbitrary radial profile, used by tests to exercise validation paths.
  static Mollifier custom(std::function<double(double)> profile,
                          double support_radius, double eps);

  Kind kind() const { return kind_; }
  double eps() const { return eps_; }
  double support_radius() const { return r_phi_; }

  // Unit-scale radial profile phi(r).
  double profile(double r) const;
  // phi^eps evaluated at a point.
  double rescaled(double x, double y) const;
  // Quadrature mass of the unit-scale profile (1 for the built-ins).
  double mass() const;

private:
  Mollifier(Kind k, std::function<double(double)> p, double r_phi, double eps);

  Kind kind_;
  std::function<double(double)> profile_;
  double r_phi_;
  double eps_;
};

// R(x) = (phi * phi(-.))(x) at unit scale, sampled on a radial table.
class Correlation {
public:
  double operator()(double s) const;  // radial evaluation, cubic interpolation
  double at_origin() const { return table_.front(); }
  double support_radius() const { return support_radius_; }
  double mass() const;  // 2*pi * int R(s) s ds, should equal 1

  const std::vector<double>& table() const { return table_; }

private:
  friend Correlation correlation_of(const Mollifier& m);
  std::vector<double> table_;
  double support_radius_ = 2.0;
  double ds_ = 0.0;
};

// Throws std::invalid_argument if the mollifier mass deviates from 1
// by more than 1e-8.
Correlation correlation_of(const Mollifier& m);

// Test function g for the fluctuation statistic.
class TestFunction {
public:
  enum class Kind { bump, heat_gaussian, tabulated };

  // g = G_r, the heat-kernel profile at time r > 0 (closed-form oracles).
  static TestFunction heat_gaussian(double r);
  // Unit-mass smooth bump supported in |x| <= radius.
  static TestFunction bump(double radius);
  // Grid sample on [0,L)^2, centered at (L/2, L/2).
  static TestFunction tabulated(Eigen::ArrayXXd values, double L);

  Kind kind() const { return kind_; }
  double operator()(double x, double y) const;

  // Radial Fourier transform \hat g(k) (Hankel order 0); available for
  // the bump and heat_gaussian kinds.
  bool has_radial_fourier() const { return kind_ != Kind::tabulated; }
  double radial_fourier(double k) const;
  // k beyond which \hat g(k)^2 is negligible (< ~1e-18 of its peak).
  double fourier_cutoff() const;

  double support_diameter() const;  // effective for the Gaussian kind
  double param() const { return param_; }

  const Eigen::ArrayXXd& grid_values() const { return values_; }
  double grid_side() const { return grid_L_; }

private:
  TestFunction() = default;
  Kind kind_ = Kind::heat_gaussian;
  double param_ = 0.5;           // r for heat_gaussian, radius for bump
  double fourier_cutoff_ = 0.0;  // cached for bump
  Eigen::ArrayXXd values_;       // tabulated only
  double grid_L_ = 0.0;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // quadrature error estimate
};

// int |G_tau * g|^2 dy, evaluated spectrally.
QuadratureResult convolved_square_mass(double tau, const TestFunction& g,
                                       double abs_tol = 1e-10);

// Sigma_g^T = nu^2 int_0^T int |G_{T-s} * g(y)|^2 dy ds.
QuadratureResult sigma_gT(double nu, double T, const TestFunction& g,
                          double abs_tol = 1e-8);

// C_{i,j} = nu^2 int_0^{t_i ^ t_j} int (G_{t_i-s}*g)(G_{t_j-s}*g) dy ds.
// Times must be sorted ascending and nonnegative.
Eigen::MatrixXd covariance_cij(double nu, const std::vector<double>& times,
                               const TestFunction& g, double abs_tol = 1e-8);

// int_0^t (1/s ^ cap) ds = log(cap*t) + 1 when cap*t >= 1, else cap*t.
double clipped_singular_integral(double t, double cap);

// Torus side heuristic: diffusion from supp g never wraps over [0,T].
double recommended_torus_side(const TestFunction& g, double T);

}  // namespace ew2d
