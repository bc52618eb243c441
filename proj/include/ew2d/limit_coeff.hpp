#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ew2d/she_solver.hpp"

namespace ew2d {

// Solution of  d_q J2 = (1/2) J2 d_aa J2,  J2(0,a) = (beta^2/(4 pi)) sigma^2(a),
// marched to q = 2 by an explicit monotone scheme.
struct JSquaredSolution {
  Eigen::VectorXd a_grid;
  Eigen::VectorXd values;  // J^2(2, a)
  double da = 0.0;
  double dq = 0.0;  // largest step actually taken
  std::int64_t n_q_steps = 0;
  double beta = 0.0;
  std::string sigma_label;
  double error_estimate = 0.0;  // from a coarsened companion run

  // Cubic interpolation of J^2(2, a).
  double value_at(double a) const;
};

// dq = 0 picks the CFL step (safety 0.5) adaptively; a positive dq is
// validated against the CFL bound and used as given.
JSquaredSolution solve_j_squared(double beta, const SigmaFunction& sigma,
                                 double A_max = 6.0, double da = 0.005,
                                 double dq = 0.0, bool estimate_error = true);

// Picard fixed point of the backward representation
//   d_q v + (beta^2/(8 pi)) v_prev d_aa v = 0,   v(2,a) = sigma^2(a),
// approximating v(q,a) = E[sigma^2(Xi(2)) | Xi(q) = a].
struct ConditionalField {
  Eigen::VectorXd a_grid;
  Eigen::VectorXd q_grid;  // stored levels, 0..2
  Eigen::MatrixXd v;       // q level x a node
  int iterations = 0;
  std::vector<double> residuals;
  double beta = 0.0;
  std::string sigma_label;

  double at(double q, double a) const;  // bilinear, clamped to the grid
  double v0_at(double a) const { return at(0.0, a); }
};

class FixedPointError : public std::runtime_error {
public:
  FixedPointError(std::string msg, std::vector<double> history)
      : std::runtime_error(std::move(msg)), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

ConditionalField solve_fbsde_picard(double beta, const SigmaFunction& sigma,
                                    double A_max = 6.0, double da = 0.01,
                                    double dq = 0.0, double tol = 1e-6,
                                    int max_iter = 20);

enum class CoeffRoute { pde, fbsde, closed_form };

// nu_eff = beta sqrt(E sigma(Xi(2))^2) = 2 sqrt(pi) J(2,1)
struct LimitCoefficient {
  double nu_eff = 0.0;
  CoeffRoute route = CoeffRoute::pde;
  double error_estimate = 0.0;
  double beta = 0.0;
  std::string sigma_label;
  int iterations = 0;
};

LimitCoefficient effective_coefficient(const JSquaredSolution& j2);
LimitCoefficient effective_coefficient(const ConditionalField& v);
// Linear sigma only: nu = sqrt(beta^2 / (1 - beta^2/(2 pi))).
LimitCoefficient closed_form_linear(double beta);

struct BetaThresholds {
  double moment_bound;   // sqrt(2 pi) / (sqrt(c_p) lip), c_p = p(p-1)/2
  double theorem_bound;  // (1/(2 sqrt 6)) sqrt(2 pi) / lip
};
BetaThresholds beta_threshold(double p, double sigma_lip);

// Samples of Xi_{1,2}(2) by Euler-Maruyama on the converged field.
struct XiSamples {
  std::vector<double> values;
  double beta = 0.0;
  std::string sigma_label;
};
XiSamples sample_xi(const ConditionalField& field, int n_samples,
                    std::uint64_t seed, int n_steps = 2000);

}  // namespace ew2d
