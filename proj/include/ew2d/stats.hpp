#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "ew2d/kernel.hpp"
#include "ew2d/limit_coeff.hpp"
#include "ew2d/she_solver.hpp"

namespace ew2d {

// X^{eps,t}(g) for each requested output time of one replica.
struct FluctuationSample {
  std::vector<double> x;  // one value per output time
  int replica_id = 0;
  double u_at_probe = 0.0;     // u(T, x0) at the probe point
  double subzero_fraction = 0.0;  // grid fraction with u < 0 at T
};

// g sampled on the torus grid, centered at (L/2, L/2).
Eigen::ArrayXXd sample_on_grid(const TestFunction& g, const GridSpec& grid);

// X = sqrt(log eps^-1) h^2 sum (u - 1) g, one value per snapshot.
std::vector<double> fluctuation_statistic(const std::vector<FieldState>& traj,
                                          const Eigen::ArrayXXd& g_on_grid,
                                          const GridSpec& grid, double eps);

struct NormalityResult {
  double ks = 0.0;
  double p_value = 1.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  bool degenerate = false;  // zero-variance input, no test run
};

// One-sample KS against N(0, s^2) with s^2 estimated from the samples;
// asymptotic Kolmogorov p-value. Requires >= 100 samples.
NormalityResult normality_test(const std::vector<double>& samples);

struct KsResult {
  double distance = 0.0;
  double p_value = 1.0;
};
KsResult two_sample_ks(std::vector<double> a, std::vector<double> b);

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct TimeSummary {
  double time = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  double theoretical_variance = 0.0;  // Sigma_g^t at nu_eff
  NormalityResult normality;
};

struct EnsembleReport {
  std::string schema = "ew2d-report/1";

  // configuration fingerprint
  double beta = 0.0;
  double eps = 0.0;
  std::string sigma_label;
  double T = 0.0;
  double L = 0.0;
  int n = 0;
  double dt = 0.0;
  std::uint64_t master_seed = 0;
  int n_replicas = 0;
  std::string g_spec;
  double nu_eff = 0.0;
  bool exploratory = false;  // beta above the working threshold

  std::vector<TimeSummary> per_time;
  Eigen::MatrixXd empirical_covariance;
  Eigen::MatrixXd theoretical_covariance;

  double subzero_fraction_mean = 0.0;
  int blowups = 0;
  double blowup_fraction = 0.0;
  bool degenerate = false;  // all-zero statistic (beta = 0 style input)
  double runtime_seconds = 0.0;

  std::vector<FluctuationSample> samples;  // raw, replica order
};

struct EnsembleRunSpec {
  SolverConfig cfg;
  Mollifier::Kind mollifier = Mollifier::Kind::smooth_bump;
  TestFunction g = TestFunction::heat_gaussian(0.5);
  std::vector<double> times;  // sorted, multiples of dt
  int n_replicas = 400;
  std::uint64_t master_seed = 1;
  double nu_eff = 0.0;  // from limit_coeff at the same (beta, sigma)
  int jobs = 1;
};

// Evolves the replicas, collects the fluctuation statistic, and compares
// against Sigma_g^t / C_{i,j} at the supplied nu_eff.
EnsembleReport run_ensemble(const EnsembleRunSpec& spec);

// Two-sample KS between u(T, x0) over the ensemble and the Xi samples.
// Throws if the (beta, sigma) fingerprints disagree.
KsResult one_point_test(const EnsembleReport& report, const XiSamples& xi);

struct MomentDiagnostic {
  double p = 2.0;
  double sup_moment = 0.0;
  std::vector<double> per_time;  // sup over probes at each time
  double ceiling = 0.0;
  bool exceeded = false;
  bool exploratory = false;  // beta >= beta_threshold(p)
};

// Empirical p-th moment of u over probed (t, x); probes a fixed set of
// grid points. p in {2, 4}.
MomentDiagnostic moment_diagnostic(const EnsembleRunSpec& spec, double p,
                                   double ceiling = 10.0);

struct IncrementDiagnostic {
  double slope = 0.0;  // fitted exponent of E|X_t - X_s|^p vs (t - s)
  int n_pairs = 0;
  bool degenerate = false;
};

// Log-log regression of the p-th increment moment over all time pairs.
IncrementDiagnostic path_increment_diagnostic(
    const std::vector<FluctuationSample>& samples,
    const std::vector<double>& times, double p = 4.0);

}  // namespace ew2d
