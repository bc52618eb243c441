#include "ew2d/stats.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

namespace ew2d {

namespace {

Mollifier make_mollifier(Mollifier::Kind kind, double eps) {
  switch (kind) {
    case Mollifier::Kind::smooth_bump:
      return Mollifier::smooth_bump(eps);
    case Mollifier::Kind::flat_disc:
      return Mollifier::flat_disc(eps);
    default:
      throw std::invalid_argument("ensemble: custom mollifiers not supported here");
  }
}

struct ReplicaResult {
  bool blew_up = false;
  FluctuationSample sample;
};

// Evolves replicas [0, n) in parallel; visit(r, traj) runs on the worker
// and fills results[r]. Aggregation afterwards is replica-ordered, so the
// output is independent of the thread schedule.
template <typename Visit>
void parallel_replicas(const EnsembleRunSpec& spec, Visit&& visit) {
  const int jobs = std::max(1, spec.jobs);
  std::atomic<int> next{0};
  auto worker = [&]() {
    const Mollifier m = make_mollifier(spec.mollifier, spec.cfg.eps);
    SheSolver solver(spec.cfg, m);
    for (int r = next.fetch_add(1); r < spec.n_replicas; r = next.fetch_add(1)) {
      visit(r, solver);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
}

double sample_variance(const std::vector<double>& x, double mean) {
  if (x.size() < 2) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / (static_cast<double>(x.size()) - 1.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

Eigen::ArrayXXd sample_on_grid(const TestFunction& g, const GridSpec& grid) {
  grid.validate();
  const int n = grid.n;
  const double h = grid.h();
  const double c = grid.L / 2.0;
  Eigen::ArrayXXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = g(i * h - c, j * h - c);
  return out;
}

std::vector<double> fluctuation_statistic(const std::vector<FieldState>& traj,
                                          const Eigen::ArrayXXd& g_on_grid,
                                          const GridSpec& grid, double eps) {
  if (eps <= 0.0 || eps >= 1.0)
    throw std::invalid_argument("fluctuation_statistic: eps must lie in (0,1)");
  if (g_on_grid.rows() != grid.n || g_on_grid.cols() != grid.n)
    throw std::invalid_argument("fluctuation_statistic: grid mismatch");
  const double scale =
      std::sqrt(std::log(1.0 / eps)) * grid.h() * grid.h();
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& state : traj) {
    if (state.u.rows() != grid.n || state.u.cols() != grid.n)
      throw std::invalid_argument("fluctuation_statistic: grid mismatch");
    out.push_back(scale * ((state.u - 1.0) * g_on_grid).sum());
  }
  return out;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

NormalityResult normality_test(const std::vector<double>& samples) {
  if (samples.size() < 100)
    throw std::invalid_argument("normality_test: at least 100 samples required");
  const double n = static_cast<double>(samples.size());

  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  NormalityResult r;
  if (m2 < 1e-300) {
    r.degenerate = true;
    return r;
  }
  const double s = std::sqrt(m2 * n / (n - 1.0));
  r.skewness = m3 / std::pow(m2, 1.5);
  r.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i] / s);  // null: N(0, s^2), mean 0
    d = std::max(d, std::max((i + 1) / n - f, f - i / n));
  }
  r.ks = d;
  r.p_value = kolmogorov_q(std::sqrt(n) * d);
  return r;
}

KsResult two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("two_sample_ks: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.distance = d;
  const double ne = na * nb / (na + nb);
  r.p_value = kolmogorov_q(std::sqrt(ne) * d);
  return r;
}

EnsembleReport run_ensemble(const EnsembleRunSpec& spec) {
  const auto t_start = std::chrono::steady_clock::now();
  spec.cfg.validate();
  if (spec.times.empty())
    throw std::invalid_argument("run_ensemble: at least one output time required");
  if (!std::is_sorted(spec.times.begin(), spec.times.end()))
    throw std::invalid_argument("run_ensemble: output times must be sorted");
  if (spec.n_replicas < 100)
    throw std::invalid_argument("run_ensemble: n_replicas >= 100 for test validity");

  const Eigen::ArrayXXd g_grid = sample_on_grid(spec.g, spec.cfg.grid);
  const int m = static_cast<int>(spec.times.size());
  const int probe = spec.cfg.grid.n / 2;

  std::vector<ReplicaResult> results(spec.n_replicas);
  parallel_replicas(spec, [&](int r, SheSolver& solver) {
    ReplicaResult& res = results[r];
    try {
      const auto traj = solver.evolve(spec.master_seed, r, spec.times);
      res.sample.x =
          fluctuation_statistic(traj, g_grid, spec.cfg.grid, spec.cfg.eps);
      res.sample.replica_id = r;
      const auto& last = traj.back().u;
      res.sample.u_at_probe = last(probe, probe);
      res.sample.subzero_fraction =
          static_cast<double>((last < 0.0).count()) / last.size();
    } catch (const BlowUpError&) {
      res.blew_up = true;
    }
  });

  EnsembleReport rep;
  rep.beta = spec.cfg.beta;
  rep.eps = spec.cfg.eps;
  rep.sigma_label = spec.cfg.sigma.label;
  rep.T = spec.cfg.T;
  rep.L = spec.cfg.grid.L;
  rep.n = spec.cfg.grid.n;
  rep.dt = spec.cfg.grid.dt;
  rep.master_seed = spec.master_seed;
  rep.n_replicas = spec.n_replicas;
  rep.nu_eff = spec.nu_eff;
  const auto thresholds = beta_threshold(4.0, std::max(spec.cfg.sigma.lip, 1e-300));
  rep.exploratory = spec.cfg.beta >= thresholds.theorem_bound;
  switch (spec.g.kind()) {
    case TestFunction::Kind::heat_gaussian:
      rep.g_spec = "heat_gaussian(" + std::to_string(spec.g.param()) + ")";
      break;
    case TestFunction::Kind::bump:
      rep.g_spec = "bump(" + std::to_string(spec.g.param()) + ")";
      break;
    case TestFunction::Kind::tabulated:
      rep.g_spec = "tabulated";
      break;
  }

  for (int r = 0; r < spec.n_replicas; ++r) {
    if (results[r].blew_up)
      ++rep.blowups;
    else
      rep.samples.push_back(std::move(results[r].sample));
  }
  rep.blowup_fraction = static_cast<double>(rep.blowups) / spec.n_replicas;
  const int nv = static_cast<int>(rep.samples.size());
  if (nv == 0) {
    rep.degenerate = true;
    return rep;
  }

  rep.theoretical_covariance = covariance_cij(spec.nu_eff, spec.times, spec.g);

  rep.per_time.resize(m);
  bool all_zero = true;
  std::vector<std::vector<double>> by_time(m, std::vector<double>(nv));
  for (int k = 0; k < nv; ++k)
    for (int i = 0; i < m; ++i) by_time[i][k] = rep.samples[k].x[i];

  for (int i = 0; i < m; ++i) {
    TimeSummary& ts = rep.per_time[i];
    ts.time = spec.times[i];
    double mean = 0.0;
    for (double v : by_time[i]) mean += v;
    mean /= nv;
    ts.mean = mean;
    const double var = sample_variance(by_time[i], mean);
    ts.variance = var;
    ts.mean_se = std::sqrt(var / nv);
    double m4 = 0.0;
    for (double v : by_time[i]) m4 += std::pow(v - mean, 4.0);
    m4 /= nv;
    ts.variance_se = std::sqrt(std::max(m4 - var * var, 0.0) / nv);
    ts.theoretical_variance = rep.theoretical_covariance(i, i);
    if (var > 1e-300) all_zero = false;
    if (nv >= 100)
      ts.normality = normality_test(by_time[i]);
    else
      ts.normality.degenerate = true;
  }
  rep.degenerate = all_zero;

  rep.empirical_covariance.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double acc = 0.0;
      for (int k = 0; k < nv; ++k)
        acc += (by_time[i][k] - rep.per_time[i].mean) *
               (by_time[j][k] - rep.per_time[j].mean);
      acc /= std::max(nv - 1, 1);
      rep.empirical_covariance(i, j) = acc;
      rep.empirical_covariance(j, i) = acc;
    }

  double sz = 0.0;
  for (const auto& s : rep.samples) sz += s.subzero_fraction;
  rep.subzero_fraction_mean = sz / nv;

  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rep;
}

KsResult one_point_test(const EnsembleReport& report, const XiSamples& xi) {
  if (report.sigma_label != xi.sigma_label ||
      std::abs(report.beta - xi.beta) > 1e-12)
    throw std::invalid_argument(
        "one_point_test: (beta, sigma) fingerprints do not match");
  std::vector<double> u;
  u.reserve(report.samples.size());
  for (const auto& s : report.samples) u.push_back(s.u_at_probe);
  return two_sample_ks(std::move(u), xi.values);
}

MomentDiagnostic moment_diagnostic(const EnsembleRunSpec& spec, double p,
                                   double ceiling) {
  if (p != 2.0 && p != 4.0)
    throw std::invalid_argument("moment_diagnostic: p must be 2 or 4");
  spec.cfg.validate();
  if (spec.times.empty())
    throw std::invalid_argument("moment_diagnostic: times required");

  const int n = spec.cfg.grid.n;
  const int probes[3][2] = {{n / 2, n / 2}, {0, 0}, {n / 4, (3 * n) / 4}};
  const int m = static_cast<int>(spec.times.size());

  // per replica, per time, per probe |u|^p
  std::vector<std::vector<double>> acc(spec.n_replicas);
  parallel_replicas(spec, [&](int r, SheSolver& solver) {
    const auto traj = solver.evolve(spec.master_seed, r, spec.times);
    auto& row = acc[r];
    row.resize(static_cast<size_t>(m) * 3);
    for (int i = 0; i < m; ++i)
      for (int q = 0; q < 3; ++q)
        row[static_cast<size_t>(i) * 3 + q] =
            std::pow(std::abs(traj[i].u(probes[q][0], probes[q][1])), p);
  });

  MomentDiagnostic d;
  d.p = p;
  d.ceiling = ceiling;
  d.per_time.resize(m, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int q = 0; q < 3; ++q) {
      double mean = 0.0;
      for (int r = 0; r < spec.n_replicas; ++r)
        mean += acc[r][static_cast<size_t>(i) * 3 + q];
      mean /= spec.n_replicas;
      d.per_time[i] = std::max(d.per_time[i], mean);
    }
    d.sup_moment = std::max(d.sup_moment, d.per_time[i]);
  }
  d.exceeded = d.sup_moment > ceiling;
  d.exploratory =
      spec.cfg.beta >= beta_threshold(p, spec.cfg.sigma.lip).moment_bound;
  return d;
}

IncrementDiagnostic path_increment_diagnostic(
    const std::vector<FluctuationSample>& samples,
    const std::vector<double>& times, double p) {
  const int m = static_cast<int>(times.size());
  const int n_pairs = m * (m - 1) / 2;
  if (n_pairs < 4)
    throw std::invalid_argument(
        "path_increment_diagnostic: at least 4 time pairs required");
  if (samples.empty())
    throw std::invalid_argument("path_increment_diagnostic: no samples");

  IncrementDiagnostic d;
  std::vector<double> lx, ly;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double mom = 0.0;
      for (const auto& s : samples)
        mom += std::pow(std::abs(s.x[j] - s.x[i]), p);
      mom /= static_cast<double>(samples.size());
      if (mom <= 0.0) {
        d.degenerate = true;
        d.n_pairs = n_pairs;
        return d;
      }
      lx.push_back(std::log(times[j] - times[i]));
      ly.push_back(std::log(mom));
    }
  const double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t k = 0; k < lx.size(); ++k) {
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  d.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  d.n_pairs = n_pairs;
  return d;
}

}  // namespace ew2d
