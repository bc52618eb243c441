#include "ew2d/limit_coeff.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "fft_util.hpp"

namespace ew2d {

namespace {

constexpr double kPi = std::numbers::pi;

double cubic_interp(const Eigen::VectorXd& grid_values, double step, double x) {
  const int n = static_cast<int>(grid_values.size());
  int i0 = std::clamp(static_cast<int>(x / step) - 1, 0, n - 4);
  const double u = x / step - i0;
  const double c0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
  const double c1 = u * (u - 2) * (u - 3) / 2.0;
  const double c2 = -u * (u - 1) * (u - 3) / 2.0;
  const double c3 = u * (u - 1) * (u - 2) / 6.0;
  return c0 * grid_values[i0] + c1 * grid_values[i0 + 1] +
         c2 * grid_values[i0 + 2] + c3 * grid_values[i0 + 3];
}

// Second difference with Dirichlet node 0 and zero second difference
// (linear extrapolation) at the far boundary.
void second_difference(const Eigen::VectorXd& f, Eigen::VectorXd& d2) {
  const auto n = f.size();
  d2.resize(n);
  d2[0] = 0.0;
  d2.segment(1, n - 2) =
      f.segment(2, n - 2) - 2.0 * f.segment(1, n - 2) + f.segment(0, n - 2);
  d2[n - 1] = 0.0;
}

}  // namespace

double JSquaredSolution::value_at(double a) const {
  if (a < 0.0 || a > a_grid[a_grid.size() - 1])
    throw std::domain_error("JSquaredSolution: a outside the grid");
  return cubic_interp(values, da, a);
}

JSquaredSolution solve_j_squared(double beta, const SigmaFunction& sigma,
                                 double A_max, double da, double dq,
                                 bool estimate_error) {
  if (A_max < 4.0)
    throw std::invalid_argument("solve_j_squared: A_max >= 4 required");
  if (da <= 0.0) throw std::invalid_argument("solve_j_squared: da must be positive");
  if (beta < 0.0) throw std::invalid_argument("solve_j_squared: beta must be >= 0");

  const int na = static_cast<int>(std::lround(A_max / da)) + 1;
  JSquaredSolution sol;
  sol.a_grid = Eigen::VectorXd::LinSpaced(na, 0.0, (na - 1) * da);
  sol.da = da;
  sol.beta = beta;
  sol.sigma_label = sigma.label;

  Eigen::VectorXd f(na), d2(na);
  const double pref = beta * beta / (4.0 * kPi);
  for (int i = 0; i < na; ++i) {
    const double s = sigma(sol.a_grid[i]);
    f[i] = pref * s * s;
  }

  const double da2 = da * da;
  if (dq > 0.0 && dq * f.maxCoeff() / da2 > 0.5 + 1e-12)
    throw std::invalid_argument(
        "solve_j_squared: dq violates the CFL bound 0.5*da^2/max J^2(0,.)");

  double q = 0.0;
  const double q_end = 2.0;
  while (q < q_end - 1e-15) {
    const double fmax = f.maxCoeff();
    if (fmax < 1e-300) break;  // zero is a fixed point
    double step = dq > 0.0 ? dq : 0.5 * da2 / fmax;
    if (dq > 0.0 && dq * fmax / da2 > 1.0 + 1e-12)
      throw std::invalid_argument(
          "solve_j_squared: fixed dq lost monotonicity during the march");
    step = std::min(step, q_end - q);

    second_difference(f, d2);
    f.array() += (step / (2.0 * da2)) * f.array() * d2.array();

    if (f.minCoeff() < -1e-12)
      throw std::runtime_error("solve_j_squared: scheme produced negative values");
    f = f.cwiseMax(0.0);
    q += step;
    ++sol.n_q_steps;
    sol.dq = std::max(sol.dq, step);
  }
  sol.values = f;

  if (estimate_error) {
    const JSquaredSolution coarse =
        solve_j_squared(beta, sigma, A_max, 2.0 * da, 0.0, false);
    sol.error_estimate = std::abs(sol.value_at(1.0) - coarse.value_at(1.0));
  }
  return sol;
}

double ConditionalField::at(double q, double a) const {
  const double qmax = q_grid[q_grid.size() - 1];
  const double amax = a_grid[a_grid.size() - 1];
  q = std::clamp(q, 0.0, qmax);
  a = std::clamp(a, 0.0, amax);
  const double dqs = q_grid[1] - q_grid[0];
  const double das = a_grid[1] - a_grid[0];
  const int iq = std::min(static_cast<int>(q / dqs),
                          static_cast<int>(q_grid.size()) - 2);
  const int ia = std::min(static_cast<int>(a / das),
                          static_cast<int>(a_grid.size()) - 2);
  const double wq = q / dqs - iq;
  const double wa = a / das - ia;
  return (1 - wq) * ((1 - wa) * v(iq, ia) + wa * v(iq, ia + 1)) +
         wq * ((1 - wa) * v(iq + 1, ia) + wa * v(iq + 1, ia + 1));
}

ConditionalField solve_fbsde_picard(double beta, const SigmaFunction& sigma,
                                    double A_max, double da, double dq,
                                    double tol, int max_iter) {
  if (A_max < 4.0)
    throw std::invalid_argument("solve_fbsde_picard: A_max >= 4 required");
  if (da <= 0.0 || tol <= 0.0 || max_iter < 1)
    throw std::invalid_argument("solve_fbsde_picard: bad grid or tolerance");
  if (beta < 0.0) throw std::invalid_argument("solve_fbsde_picard: beta must be >= 0");

  const int na = static_cast<int>(std::lround(A_max / da)) + 1;
  const int nqs = 401;  // stored q levels
  ConditionalField field;
  field.a_grid = Eigen::VectorXd::LinSpaced(na, 0.0, (na - 1) * da);
  field.q_grid = Eigen::VectorXd::LinSpaced(nqs, 0.0, 2.0);
  field.beta = beta;
  field.sigma_label = sigma.label;

  Eigen::VectorXd terminal(na);
  for (int i = 0; i < na; ++i) {
    const double s = sigma(field.a_grid[i]);
    terminal[i] = s * s;
  }

  // v^0(q, a) = sigma^2(a)
  Eigen::MatrixXd v_prev = terminal.transpose().replicate(nqs, 1);
  Eigen::MatrixXd v_new(nqs, na);

  const double diff_pref = beta * beta / (8.0 * kPi);
  const double da2 = da * da;
  const double dqs = field.q_grid[1] - field.q_grid[0];

  Eigen::VectorXd w(na), d2(na), coeff(na);

  for (int iter = 1; iter <= max_iter; ++iter) {
    w = terminal;
    v_new.row(nqs - 1) = w.transpose();
    double q = 2.0;
    int store_idx = nqs - 2;
    while (store_idx >= 0) {
      const double q_target = field.q_grid[store_idx];
      // frozen coefficient from the previous iterate, linear in q
      const int iq = std::min(static_cast<int>(q / dqs), nqs - 2);
      const double wq = q / dqs - iq;
      coeff = diff_pref * ((1 - wq) * v_prev.row(iq).transpose() +
                           wq * v_prev.row(iq + 1).transpose());
      const double cmax = coeff.maxCoeff();

      double step;
      if (cmax < 1e-300) {
        step = q - q_target;
      } else {
        step = dq > 0.0 ? dq : 0.45 * da2 / cmax;
        if (dq > 0.0 && dq * cmax / da2 > 0.5 + 1e-12)
          throw std::invalid_argument(
              "solve_fbsde_picard: dq violates the CFL bound 0.5*da^2/coeff");
        step = std::min(step, q - q_target);
      }

      second_difference(w, d2);
      w.array() += (step / da2) * coeff.array() * d2.array();
      w = w.cwiseMax(0.0);
      q -= step;

      if (q <= q_target + 1e-14) {
        q = q_target;
        v_new.row(store_idx) = w.transpose();
        --store_idx;
      }
    }

    const double residual = (v_new - v_prev).cwiseAbs().maxCoeff();
    field.residuals.push_back(residual);
    v_prev = v_new;
    if (residual < tol) {
      field.iterations = iter;
      field.v = v_prev;
      return field;
    }
  }
  throw FixedPointError("solve_fbsde_picard: no convergence within max_iter",
                        field.residuals);
}

LimitCoefficient effective_coefficient(const JSquaredSolution& j2) {
  const double val = j2.value_at(1.0);
  if (val < -1e-12)
    throw std::runtime_error("effective_coefficient: negative J^2(2,1)");
  LimitCoefficient c;
  c.nu_eff = 2.0 * std::sqrt(kPi) * std::sqrt(std::max(val, 0.0));
  c.route = CoeffRoute::pde;
  c.beta = j2.beta;
  c.sigma_label = j2.sigma_label;
  if (val > 0.0)
    c.error_estimate = std::sqrt(kPi) * j2.error_estimate / std::sqrt(val);
  return c;
}

LimitCoefficient effective_coefficient(const ConditionalField& v) {
  const double val = v.v0_at(1.0);
  if (val < -1e-12)
    throw std::runtime_error("effective_coefficient: negative v(0,1)");
  LimitCoefficient c;
  c.nu_eff = v.beta * std::sqrt(std::max(val, 0.0));
  c.route = CoeffRoute::fbsde;
  c.beta = v.beta;
  c.sigma_label = v.sigma_label;
  c.iterations = v.iterations;
  if (!v.residuals.empty() && val > 0.0)
    c.error_estimate = v.beta * v.residuals.back() / (2.0 * std::sqrt(val));
  return c;
}

LimitCoefficient closed_form_linear(double beta) {
  const double denom = 1.0 - beta * beta / (2.0 * kPi);
  if (denom <= 0.0)
    throw std::domain_error("closed_form_linear: beta at or above sqrt(2 pi)");
  LimitCoefficient c;
  c.nu_eff = std::sqrt(beta * beta / denom);
  c.route = CoeffRoute::closed_form;
  c.beta = beta;
  c.sigma_label = "linear";
  return c;
}

BetaThresholds beta_threshold(double p, double sigma_lip) {
  if (p < 2.0) throw std::domain_error("beta_threshold: p >= 2 required");
  if (sigma_lip <= 0.0)
    throw std::domain_error("beta_threshold: sigma_lip must be positive");
  const double cp = p * (p - 1.0) / 2.0;
  const double s2pi = std::sqrt(2.0 * kPi);
  return {s2pi / (std::sqrt(cp) * sigma_lip),
          s2pi / (2.0 * std::sqrt(6.0) * sigma_lip)};
}

XiSamples sample_xi(const ConditionalField& field, int n_samples,
                    std::uint64_t seed, int n_steps) {
  if (n_samples < 1 || n_steps < 1)
    throw std::invalid_argument("sample_xi: need n_samples >= 1, n_steps >= 1");
  XiSamples out;
  out.values.resize(n_samples);
  out.beta = field.beta;
  out.sigma_label = field.sigma_label;

  const double dq = 2.0 / n_steps;
  const double pref = field.beta / (2.0 * std::sqrt(kPi));
  for (int i = 0; i < n_samples; ++i) {
    std::mt19937_64 rng(detail::counter_seed(seed, 0x5a6d706cULL,
                                             static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    double xi = 1.0;
    for (int k = 0; k < n_steps; ++k) {
      const double vv = std::max(field.at(k * dq, xi), 0.0);
      xi += pref * std::sqrt(vv) * std::sqrt(dq) * normal(rng);
    }
    out.values[i] = xi;
  }
  return out;
}

}  // namespace ew2d
