#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ew2d/kernel.hpp"
#include "ew2d/she_solver.hpp"

namespace ew2d {

// Flat key-value view of a TOML-subset file: [section] headers become
// "section." key prefixes; values are strings, bools, numbers, or arrays.
class TomlTable {
public:
  using Value = std::variant<double, bool, std::string, std::vector<double>,
                             std::vector<std::string>>;

  static TomlTable parse_file(const std::filesystem::path& path);
  static TomlTable parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, std::string fallback) const;
  std::vector<double> numbers(const std::string& key) const;

  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

private:
  std::map<std::string, Value> values_;
};

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  double beta = 1.0;
  std::string sigma_label = "linear";
  std::vector<double> epsilons = {0.4, 0.2, 0.1};
  double L = 8.0;
  int n = 256;
  double dt = 0.0;  // 0: default T/2048
  double T = 0.5;
  std::vector<double> output_times;  // empty: {T}
  std::string g_kind = "heat_gaussian";
  double g_param = 0.5;
  std::string mollifier = "smooth_bump";
  int replicas = 400;
  std::uint64_t master_seed = 1;
  std::string out_dir = ".";
  int jobs = 0;  // 0: EW2D_JOBS env or hardware_concurrency

  // limit_coeff controls
  double A_max = 6.0;
  double da = 0.005;
  double da_fbsde = 0.01;
  double dq = 0.0;  // 0: automatic CFL step
  double picard_tol = 1e-6;
  int picard_max_iter = 20;
  double route_tol = 5e-3;  // relative nu_eff disagreement for exit status
  int xi_samples = 4000;

  SigmaFunction sigma() const;
  TestFunction test_function() const;
  GridSpec grid_for(double T_effective) const;

  // Validates every downstream module precondition; throws ConfigError.
  // Returns human-readable warnings (subcriticality, marginal resolution).
  std::vector<std::string> validate() const;
};

ExperimentConfig config_from_toml(const TomlTable& t);
ExperimentConfig load_config(const std::filesystem::path& path);

int resolve_jobs(int requested);  // EW2D_JOBS fallback, then hardware

}  // namespace ew2d
