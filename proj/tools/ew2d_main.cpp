// ew2d command-line driver: limit | simulate | report | selftest.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "ew2d/config.hpp"
#include "ew2d/io.hpp"
#include "ew2d/kernel.hpp"
#include "ew2d/limit_coeff.hpp"
#include "ew2d/stats.hpp"

namespace fs = std::filesystem;
using namespace ew2d;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSelftest = 4;

struct CliOverrides {
  std::string config_path;
  double beta = -1.0;
  std::vector<double> eps;
  std::int64_t seed = -1;
  int replicas = -1;
  std::string out;
  int jobs = -1;
};

ExperimentConfig build_config(const CliOverrides& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{}
                                             : load_config(o.config_path);
  if (o.beta >= 0.0) c.beta = o.beta;
  if (!o.eps.empty()) c.epsilons = o.eps;
  if (o.seed >= 0) c.master_seed = static_cast<std::uint64_t>(o.seed);
  if (o.replicas >= 0) c.replicas = o.replicas;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.jobs >= 0) c.jobs = o.jobs;
  if (c.output_times.empty()) c.output_times = {c.T};
  return c;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string route_name(CoeffRoute r) {
  switch (r) {
    case CoeffRoute::pde: return "pde";
    case CoeffRoute::fbsde: return "fbsde";
    case CoeffRoute::closed_form: return "closed_form";
  }
  return "?";
}

int cmd_limit(const CliOverrides& o) {
  ExperimentConfig cfg;
  std::vector<std::string> warnings;
  try {
    cfg = build_config(o);
    warnings = cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  print_warnings(warnings);

  // Reject a CFL-violating dq override up front, before the march starts.
  if (cfg.dq > 0.0 && cfg.dq > 0.5 * cfg.da * cfg.da) {
    std::cerr << "config error: dq=" << cfg.dq
              << " violates the CFL bound dq <= 0.5*da^2 = "
              << 0.5 * cfg.da * cfg.da << "\n";
    return kExitConfig;
  }

  std::vector<LimitCoefficient> rows;
  double rel_disagreement = 0.0;
  try {
    const SigmaFunction sigma = cfg.sigma();
    const auto j2 = solve_j_squared(cfg.beta, sigma, cfg.A_max, cfg.da, cfg.dq);
    rows.push_back(effective_coefficient(j2));
    const auto field =
        solve_fbsde_picard(cfg.beta, sigma, cfg.A_max, cfg.da_fbsde, cfg.dq,
                           cfg.picard_tol, cfg.picard_max_iter);
    rows.push_back(effective_coefficient(field));
    if (sigma.kind == SigmaFunction::Kind::linear)
      rows.push_back(closed_form_linear(cfg.beta));
    rel_disagreement =
        std::abs(rows[0].nu_eff - rows[1].nu_eff) / std::abs(rows[0].nu_eff);
  } catch (const std::exception& e) {
    std::cerr << "limit solve failed: " << e.what() << "\n";
    return kExitNumerical;
  }

  std::ostringstream csv;
  csv << "beta,sigma,route,nu_eff,error_estimate,iterations\n";
  csv.precision(10);
  for (const auto& r : rows)
    csv << r.beta << "," << r.sigma_label << "," << route_name(r.route) << ","
        << r.nu_eff << "," << r.error_estimate << "," << r.iterations << "\n";
  std::cout << csv.str();
  std::cout << "# route disagreement (pde vs fbsde, relative): "
            << rel_disagreement << "\n";

  fs::create_directories(cfg.out_dir);
  std::ofstream out(fs::path(cfg.out_dir) / "limit.csv");
  out << csv.str();

  if (rel_disagreement > cfg.route_tol) {
    std::cerr << "routes disagree beyond tolerance " << cfg.route_tol << "\n";
    return kExitNumerical;
  }
  return 0;
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  std::string s = buf;
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

int cmd_simulate(const CliOverrides& o) {
  ExperimentConfig cfg;
  std::vector<std::string> warnings;
  try {
    cfg = build_config(o);
    warnings = cfg.validate();
    // dry-validate the per-epsilon solver configs before any compute
    for (double eps : cfg.epsilons) {
      SolverConfig sc{cfg.beta, eps, cfg.sigma(), cfg.grid_for(cfg.T), cfg.T};
      sc.validate();
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  print_warnings(warnings);

  const int jobs = resolve_jobs(cfg.jobs);
  fs::create_directories(cfg.out_dir);

  int total_blowups = 0;
  int total_replicas = 0;
  try {
    const SigmaFunction sigma = cfg.sigma();
    const auto j2 = solve_j_squared(cfg.beta, sigma, cfg.A_max, cfg.da, cfg.dq);
    const LimitCoefficient coeff = effective_coefficient(j2);
    std::cout << "nu_eff (pde route) = " << coeff.nu_eff << "\n";

    for (double eps : cfg.epsilons) {
      EnsembleRunSpec spec;
      spec.cfg = {cfg.beta, eps, sigma, cfg.grid_for(cfg.T), cfg.T};
      spec.mollifier = cfg.mollifier == "flat_disc" ? Mollifier::Kind::flat_disc
                                                    : Mollifier::Kind::smooth_bump;
      spec.g = cfg.test_function();
      spec.times = cfg.output_times;
      spec.n_replicas = cfg.replicas;
      spec.master_seed = cfg.master_seed;
      spec.nu_eff = coeff.nu_eff;
      spec.jobs = jobs;

      const EnsembleReport report = run_ensemble(spec);
      total_blowups += report.blowups;
      total_replicas += report.n_replicas;

      const fs::path base = fs::path(cfg.out_dir) / ("eps" + eps_tag(eps));
      write_report(fs::path(base.string() + "_report.json"), report);
      write_samples_csv(fs::path(base.string() + "_samples.csv"), report,
                        cfg.output_times);
      const auto& last = report.per_time.back();
      std::cout << "eps=" << eps << "  var=" << last.variance
                << "  theory=" << last.theoretical_variance
                << "  ks_p=" << last.normality.p_value
                << "  blowups=" << report.blowups << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kExitNumerical;
  }

  if (total_blowups > 0) {
    std::cerr << "blow-ups in " << total_blowups << "/" << total_replicas
              << " replicas ("
              << static_cast<double>(total_blowups) / total_replicas << ")\n";
    return kExitNumerical;
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out_dir) {
  if (files.empty()) {
    std::cerr << "config error: at least one report file is required\n";
    return kExitConfig;
  }
  std::vector<EnsembleReport> reports;
  try {
    for (const auto& f : files) reports.push_back(read_report(f));
  } catch (const std::exception& e) {
    std::cerr << "report error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::ostringstream csv, dat;
  csv << "eps,empirical_var,sigma_gT,ratio,ks_p\n";
  dat << "# eps empirical_var sigma_gT ratio ks_p\n";
  csv.precision(10);
  dat.precision(10);
  for (const auto& r : reports) {
    const auto& last = r.per_time.back();
    const double ratio = last.theoretical_variance > 0.0
                             ? last.variance / last.theoretical_variance
                             : 0.0;
    csv << r.eps << "," << last.variance << "," << last.theoretical_variance
        << "," << ratio << "," << last.normality.p_value << "\n";
    dat << r.eps << " " << last.variance << " " << last.theoretical_variance
        << " " << ratio << " " << last.normality.p_value << "\n";
  }
  std::cout << csv.str();

  fs::create_directories(out_dir);
  std::ofstream csv_out(fs::path(out_dir) / "comparison.csv");
  csv_out << csv.str();
  std::ofstream dat_out(fs::path(out_dir) / "comparison.dat");
  dat_out << dat.str();
  return 0;
}

// Oracle spot-checks; each line reports PASS/FAIL, overall exit 4 on any FAIL.
int cmd_selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };
  const double pi = std::numbers::pi;
  try {
    // analytic thresholds
    const auto th2 = beta_threshold(2.0, 1.0);
    const auto th4 = beta_threshold(4.0, 1.0);
    check("beta_threshold(2) = sqrt(2 pi)",
          std::abs(th2.moment_bound - std::sqrt(2.0 * pi)) < 1e-14);
    check("beta_threshold(4) = sqrt(2 pi)/sqrt(6)",
          std::abs(th4.moment_bound - std::sqrt(2.0 * pi) / std::sqrt(6.0)) <
              1e-14);
    check("theorem bound = sqrt(2 pi)/(2 sqrt 6)",
          std::abs(th4.theorem_bound - std::sqrt(2.0 * pi) / (2.0 * std::sqrt(6.0))) <
              1e-14);

    // clipped integral identity
    check("clipped integral log(4 pi)+1",
          std::abs(clipped_singular_integral(1.0, 4.0 * pi) -
                   (std::log(4.0 * pi) + 1.0)) < 1e-12);

    // quadrature oracle: g = G_{0.5}, T=1, nu=1
    const auto g = TestFunction::heat_gaussian(0.5);
    const double sig = sigma_gT(1.0, 1.0, g).value;
    check("sigma_gT closed form (log 3)/(4 pi)",
          std::abs(sig - std::log(3.0) / (4.0 * pi)) < 1e-6);

    // linear-sigma limit coefficient, both routes vs closed form
    const auto j2 = solve_j_squared(1.0, SigmaFunction::linear());
    const double j2_oracle = (1.0 / (4.0 * pi)) / (1.0 - 1.0 / (2.0 * pi));
    check("J^2(2,1) quadratic ansatz",
          std::abs(j2.value_at(1.0) - j2_oracle) / j2_oracle < 1e-3);
    const auto pde = effective_coefficient(j2);
    const auto field = solve_fbsde_picard(1.0, SigmaFunction::linear());
    const auto fb = effective_coefficient(field);
    const auto cf = closed_form_linear(1.0);
    check("pde route vs closed form",
          std::abs(pde.nu_eff - cf.nu_eff) / cf.nu_eff < 5e-3);
    check("fbsde route vs closed form",
          std::abs(fb.nu_eff - cf.nu_eff) / cf.nu_eff < 5e-3);

    // determinism of the counter-based noise
    GridSpec grid{4.0, 64, 1e-3};
    const Mollifier m = Mollifier::smooth_bump(0.25);
    NoiseGenerator gen(grid, m);
    const auto w1 = gen.increment_at(7, 3, 11);
    const auto w2 = gen.increment_at(7, 3, 11);
    check("noise increment byte-reproducible",
          (w1.values == w2.values).all());
  } catch (const std::exception& e) {
    std::cerr << "selftest aborted: " << e.what() << "\n";
    return kExitNumerical;
  }
  if (failures > 0) {
    std::cerr << failures << " selftest check(s) failed\n";
    return kExitSelftest;
  }
  std::cout << "selftest: all checks passed\n";
  return 0;
}

void add_common(CLI::App* sub, CliOverrides& o) {
  sub->add_option("--config", o.config_path, "TOML config file");
  sub->add_option("--beta", o.beta, "noise strength override");
  sub->add_option("--eps", o.eps, "epsilon list override");
  sub->add_option("--seed", o.seed, "master seed override");
  sub->add_option("--replicas", o.replicas, "replica count override");
  sub->add_option("--out", o.out, "output directory override");
  sub->add_option("--jobs", o.jobs, "parallel worker bound (env EW2D_JOBS)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D stochastic heat equation laboratory"};
  app.require_subcommand(1);

  CliOverrides o;
  auto* limit = app.add_subcommand("limit", "tabulate the limit coefficient");
  add_common(limit, o);
  auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo pipeline");
  add_common(simulate, o);
  std::vector<std::string> report_files;
  std::string report_out = ".";
  auto* report = app.add_subcommand("report", "consolidate simulation reports");
  report->add_option("files", report_files, "report JSON files");
  report->add_option("--out", report_out, "output directory");
  auto* selftest = app.add_subcommand("selftest", "run the oracle spot-checks");

  CLI11_PARSE(app, argc, argv);

  if (limit->parsed()) return cmd_limit(o);
  if (simulate->parsed()) return cmd_simulate(o);
  if (report->parsed()) return cmd_report(report_files, report_out);
  if (selftest->parsed()) return cmd_selftest();
  return kExitConfig;
}
