#include "ew2d/kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace ew2d {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr double kPi = std::numbers::pi;

double bump_unnormalized(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

// int_{R^2} exp(-1/(1-|x|^2)) dx, computed once.
double bump_mass_unnormalized() {
  static const double mass = [] {
    auto f = [](double r) { return bump_unnormalized(r) * r; };
    return 2.0 * kPi * GK::integrate(f, 0.0, 1.0, 12, 1e-14);
  }();
  return mass;
}

std::mutex fftw_plan_mutex;

}  // namespace

double heat_kernel(double t, double x, double y) {
  if (t <= 0.0) throw std::domain_error("heat_kernel: t must be positive");
  return std::exp(-(x * x + y * y) / (2.0 * t)) / (2.0 * kPi * t);
}

double heat_kernel_torus(double t, double x, double y, double L) {
  if (t <= 0.0) throw std::domain_error("heat_kernel_torus: t must be positive");
  if (L <= 0.0) throw std::domain_error("heat_kernel_torus: L must be positive");
  double sum = heat_kernel(t, x, y);
  for (int shell = 1; shell < 1000; ++shell) {
    double contrib = 0.0;
    for (int mx = -shell; mx <= shell; ++mx) {
      for (int my = -shell; my <= shell; ++my) {
        if (std::max(std::abs(mx), std::abs(my)) != shell) continue;
        contrib += heat_kernel(t, x + mx * L, y + my * L);
      }
    }
    sum += contrib;
    if (contrib < 1e-14) break;
  }
  return sum;
}

Mollifier::Mollifier(Kind k, std::function<double(double)> p, double r_phi,
                     double eps)
    : kind_(k), profile_(std::move(p)), r_phi_(r_phi), eps_(eps) {
  if (eps_ <= 0.0) throw std::invalid_argument("Mollifier: eps must be positive");
  if (r_phi_ <= 0.0)
    throw std::invalid_argument("Mollifier: support radius must be positive");
}

Mollifier Mollifier::smooth_bump(double eps) {
  const double c = 1.0 / bump_mass_unnormalized();
  return Mollifier(Kind::smooth_bump,
                   [c](double r) { return c * bump_unnormalized(r); }, 1.0, eps);
}

Mollifier Mollifier::flat_disc(double eps) {
  return Mollifier(Kind::flat_disc,
                   [](double r) { return r <= 1.0 ? 1.0 / kPi : 0.0; }, 1.0, eps);
}

Mollifier Mollifier::custom(std::function<double(double)> profile,
                            double support_radius, double eps) {
  return Mollifier(Kind::custom, std::move(profile), support_radius, eps);
}

double Mollifier::profile(double r) const {
  if (r > r_phi_) return 0.0;
  return profile_(r);
}

double Mollifier::rescaled(double x, double y) const {
  const double r = std::hypot(x, y) / eps_;
  return profile(r) / (eps_ * eps_);
}

double Mollifier::mass() const {
  auto f = [this](double r) { return profile(r) * r; };
  return 2.0 * kPi * GK::integrate(f, 0.0, r_phi_, 12, 1e-12);
}

Correlation correlation_of(const Mollifier& m) {
  const double mass = m.mass();
  if (std::abs(mass - 1.0) > 1e-8)
    throw std::invalid_argument("correlation_of: mollifier mass " +
                                std::to_string(mass) + " != 1");

  const double rp = m.support_radius();
  Correlation R;
  R.support_radius_ = 2.0 * rp;
  const int n = 2049;
  R.ds_ = R.support_radius_ / (n - 1);
  R.table_.resize(n);

  // R(s) = int_0^{r_phi} rho phi(rho) int_0^{2pi} phi(|rho e^{i th} + s e1|) dth drho
  for (int i = 0; i < n; ++i) {
    const double s = i * R.ds_;
    if (s >= 2.0 * rp) {
      R.table_[i] = 0.0;
      continue;
    }
    auto outer = [&](double rho) {
      auto inner = [&](double th) {
        const double x = rho * std::cos(th) + s;
        const double y = rho * std::sin(th);
        return m.profile(std::hypot(x, y));
      };
      // |rho e^{i th} + s e1| is monotone on [0, pi]; split at the angle
      // where it crosses the support boundary so that each piece is smooth
      // (the flat disc is discontinuous there).
      double angular;
      const double cos_c =
          rho * s > 0.0
              ? (rp * rp - rho * rho - s * s) / (2.0 * rho * s)
              : 2.0;
      if (std::abs(cos_c) < 1.0) {
        const double thc = std::acos(cos_c);
        angular = GK::integrate(inner, 0.0, thc, 10, 1e-11) +
                  GK::integrate(inner, thc, kPi, 10, 1e-11);
      } else {
        angular = GK::integrate(inner, 0.0, kPi, 10, 1e-11);
      }
      return rho * m.profile(rho) * 2.0 * angular;
    };
    R.table_[i] = GK::integrate(outer, 0.0, rp, 12, 1e-11);
  }
  return R;
}

double Correlation::operator()(double s) const {
  s = std::abs(s);
  if (s >= support_radius_) return 0.0;
  // 4-point Lagrange interpolation on the uniform table.
  const int n = static_cast<int>(table_.size());
  int i = static_cast<int>(s / ds_);
  int i0 = std::clamp(i - 1, 0, n - 4);
  const double u = s / ds_ - i0;
  const double c0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
  const double c1 = u * (u - 2) * (u - 3) / 2.0;
  const double c2 = -u * (u - 1) * (u - 3) / 2.0;
  const double c3 = u * (u - 1) * (u - 2) / 6.0;
  return c0 * table_[i0] + c1 * table_[i0 + 1] + c2 * table_[i0 + 2] +
         c3 * table_[i0 + 3];
}

double Correlation::mass() const {
  // Composite Simpson over the radial table (odd point count).
  const int n = static_cast<int>(table_.size());
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * table_[i] * (i * ds_);
  }
  return 2.0 * kPi * sum * ds_ / 3.0;
}

TestFunction TestFunction::heat_gaussian(double r) {
  if (r <= 0.0)
    throw std::invalid_argument("TestFunction: Gaussian width must be positive");
  TestFunction g;
  g.kind_ = Kind::heat_gaussian;
  g.param_ = r;
  return g;
}

TestFunction TestFunction::bump(double radius) {
  if (radius <= 0.0)
    throw std::invalid_argument("TestFunction: bump radius must be positive");
  TestFunction g;
  g.kind_ = Kind::bump;
  g.param_ = radius;
  return g;
}

TestFunction TestFunction::tabulated(Eigen::ArrayXXd values, double L) {
  if (values.rows() != values.cols() || values.rows() < 2)
    throw std::invalid_argument("TestFunction: tabulated grid must be square");
  if (L <= 0.0) throw std::invalid_argument("TestFunction: grid side must be positive");
  TestFunction g;
  g.kind_ = Kind::tabulated;
  g.values_ = std::move(values);
  g.grid_L_ = L;
  return g;
}

double TestFunction::operator()(double x, double y) const {
  switch (kind_) {
    case Kind::heat_gaussian:
      return heat_kernel(param_, x, y);
    case Kind::bump: {
      const double c = 1.0 / (bump_mass_unnormalized() * param_ * param_);
      return c * bump_unnormalized(std::hypot(x, y) / param_);
    }
    case Kind::tabulated: {
      const int n = static_cast<int>(values_.rows());
      const double h = grid_L_ / n;
      const double cx = x + grid_L_ / 2.0, cy = y + grid_L_ / 2.0;
      if (cx < 0 || cy < 0 || cx >= grid_L_ || cy >= grid_L_) return 0.0;
      return values_(static_cast<int>(cx / h), static_cast<int>(cy / h));
    }
  }
  return 0.0;
}

double TestFunction::radial_fourier(double k) const {
  switch (kind_) {
    case Kind::heat_gaussian:
      return std::exp(-param_ * k * k / 2.0);
    case Kind::bump: {
      const double c = 1.0 / bump_mass_unnormalized();
      // hat g(k) = 2 pi int_0^1 c phi(rho) J0(k a rho) rho drho (unit mass)
      auto f = [&](double rho) {
        return c * bump_unnormalized(rho) * std::cyl_bessel_j(0.0, k * param_ * rho) * rho;
      };
      return 2.0 * kPi * GK::integrate(f, 0.0, 1.0, 10, 1e-12);
    }
    case Kind::tabulated:
      throw std::logic_error("radial_fourier: not available for tabulated g");
  }
  return 0.0;
}

double TestFunction::fourier_cutoff() const {
  switch (kind_) {
    case Kind::heat_gaussian:
      // exp(-r k^2) < 1e-18  =>  k > sqrt(41.5/r)
      return std::sqrt(42.0 / param_);
    case Kind::bump: {
      if (fourier_cutoff_ > 0.0) return fourier_cutoff_;
      double k = 4.0 / param_;
      while (std::abs(radial_fourier(k)) > 1e-9 && k < 4000.0 / param_) k *= 1.3;
      const_cast<TestFunction*>(this)->fourier_cutoff_ = k;
      return k;
    }
    case Kind::tabulated:
      return kPi * values_.rows() / grid_L_;
  }
  return 0.0;
}

double TestFunction::support_diameter() const {
  switch (kind_) {
    case Kind::heat_gaussian:
      return 12.0 * std::sqrt(param_);  // mass beyond 6 sigma is negligible
    case Kind::bump:
      return 2.0 * param_;
    case Kind::tabulated:
      return grid_L_;
  }
  return 0.0;
}

namespace {

// Spectrum sum for a tabulated g: (1/L^2) sum_k e^{-tau |k|^2} |hat g_k|^2.
double tabulated_square_mass(double tau, const TestFunction& g) {
  const auto& v = g.grid_values();
  const int n = static_cast<int>(v.rows());
  const double L = g.grid_side();
  const double h = L / n;

  std::vector<double> in(static_cast<size_t>(n) * n);
  std::vector<fftw_complex> out(static_cast<size_t>(n) * (n / 2 + 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) in[static_cast<size_t>(i) * n + j] = v(i, j);

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    plan = fftw_plan_dft_r2c_2d(n, n, in.data(), out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_destroy_plan(plan);
  }

  const double dk = 2.0 * kPi / L;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int fi = i <= n / 2 ? i : i - n;
    for (int j = 0; j <= n / 2; ++j) {
      const double k2 = dk * dk * (static_cast<double>(fi) * fi +
                                   static_cast<double>(j) * j);
      const auto& c = out[static_cast<size_t>(i) * (n / 2 + 1) + j];
      // h^2 * DFT approximates the continuous transform
      const double mag2 = (c[0] * c[0] + c[1] * c[1]) * h * h * h * h;
      const double w = (j == 0 || j == n / 2) ? 1.0 : 2.0;  // r2c symmetry
      sum += w * std::exp(-tau * k2) * mag2;
    }
  }
  return sum / (L * L);
}

}  // namespace

QuadratureResult convolved_square_mass(double tau, const TestFunction& g,
                                       double abs_tol) {
  if (tau < 0.0) throw std::domain_error("convolved_square_mass: tau >= 0 required");
  if (g.kind() == TestFunction::Kind::tabulated)
    return {tabulated_square_mass(tau, g), 0.0};

  // (1/(4 pi)) int_0^inf e^{-tau x} hat g(sqrt x)^2 dx, x = k^2
  const double kmax = g.fourier_cutoff();
  double xmax = kmax * kmax;
  if (tau > 0.0) xmax = std::min(xmax, 42.0 / tau);
  auto f = [&](double x) {
    const double gh = g.radial_fourier(std::sqrt(x));
    return std::exp(-tau * x) * gh * gh;
  };
  double err = 0.0;
  const double val = GK::integrate(f, 0.0, xmax, 12, abs_tol, &err);
  return {val / (4.0 * kPi), err / (4.0 * kPi)};
}

QuadratureResult sigma_gT(double nu, double T, const TestFunction& g,
                          double abs_tol) {
  if (T < 0.0) throw std::domain_error("sigma_gT: T >= 0 required");
  if (T == 0.0) return {0.0, 0.0};
  double inner_err = 0.0;
  auto f = [&](double tau) {
    auto r = convolved_square_mass(tau, g, abs_tol * 1e-2);
    inner_err = std::max(inner_err, r.error);
    return r.value;
  };
  double err = 0.0;
  const double val = GK::integrate(f, 0.0, T, 12, abs_tol, &err);
  return {nu * nu * val, nu * nu * (err + inner_err * T)};
}

Eigen::MatrixXd covariance_cij(double nu, const std::vector<double>& times,
                               const TestFunction& g, double abs_tol) {
  if (times.empty())
    throw std::invalid_argument("covariance_cij: at least one time required");
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0)
    throw std::invalid_argument("covariance_cij: times must be sorted and >= 0");

  const int m = static_cast<int>(times.size());
  Eigen::MatrixXd C(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double ti = times[i], tj = times[j];
      double cij;
      if (ti == 0.0) {
        cij = 0.0;
      } else if (i == j) {
        cij = sigma_gT(nu, ti, g, abs_tol).value;
      } else {
        // inner spatial integral depends on s only through (ti+tj)/2 - s
        auto f = [&](double s) {
          return convolved_square_mass((ti + tj) / 2.0 - s, g, abs_tol * 1e-2).value;
        };
        cij = nu * nu * GK::integrate(f, 0.0, ti, 12, abs_tol);
      }
      C(i, j) = cij;
      C(j, i) = cij;
    }
  }
  return C;
}

double clipped_singular_integral(double t, double cap) {
  if (t <= 0.0 || cap <= 0.0)
    throw std::domain_error("clipped_singular_integral: t > 0 and cap > 0 required");
  const double ct = cap * t;
  return ct >= 1.0 ? std::log(ct) + 1.0 : ct;
}

double recommended_torus_side(const TestFunction& g, double T) {
  return g.support_diameter() + 8.0 * std::sqrt(T);
}

}  // namespace ew2d
