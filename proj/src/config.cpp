#include "ew2d/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace ew2d {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Cuts a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

double parse_number(const std::string& tok, int line_no) {
  try {
    size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(line_no) +
                      ": cannot parse number '" + tok + "'");
  }
}

TomlTable::Value parse_value(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (v.empty())
    throw ConfigError("config line " + std::to_string(line_no) + ": empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']')
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unterminated array");
    const std::string inner = trim(v.substr(1, v.size() - 2));
    if (inner.empty()) return std::vector<double>{};
    std::vector<std::string> toks;
    std::string cur;
    for (char c : inner) {
      if (c == ',') {
        toks.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    toks.push_back(trim(cur));
    if (!toks.empty() && !toks.front().empty() && toks.front().front() == '"') {
      std::vector<std::string> out;
      for (const auto& t : toks) {
        if (t.size() < 2 || t.front() != '"' || t.back() != '"')
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": malformed string array");
        out.push_back(t.substr(1, t.size() - 2));
      }
      return out;
    }
    std::vector<double> out;
    for (const auto& t : toks) out.push_back(parse_number(t, line_no));
    return out;
  }
  return parse_number(v, line_no);
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    table.values_[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return table;
}

TomlTable TomlTable::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse(text);
}

double TomlTable::number(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  if (const double* d = std::get_if<double>(&it->second)) return *d;
  throw ConfigError("config key '" + key + "' is not a number");
}

double TomlTable::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

bool TomlTable::boolean_or(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const bool* b = std::get_if<bool>(&it->second)) return *b;
  throw ConfigError("config key '" + key + "' is not a boolean");
}

std::string TomlTable::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError("config key '" + key + "' is not a string");
}

std::string TomlTable::str_or(const std::string& key, std::string fallback) const {
  return has(key) ? str(key) : std::move(fallback);
}

std::vector<double> TomlTable::numbers(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  if (const double* d = std::get_if<double>(&it->second)) return {*d};
  throw ConfigError("config key '" + key + "' is not a number array");
}

SigmaFunction ExperimentConfig::sigma() const {
  if (sigma_label == "linear") return SigmaFunction::linear();
  if (sigma_label == "saturating") return SigmaFunction::saturating();
  if (sigma_label == "zero") return SigmaFunction::zero();
  throw ConfigError("unknown sigma '" + sigma_label +
                    "' (expected linear, saturating, or zero)");
}

TestFunction ExperimentConfig::test_function() const {
  if (g_kind == "heat_gaussian") return TestFunction::heat_gaussian(g_param);
  if (g_kind == "bump") return TestFunction::bump(g_param);
  throw ConfigError("unknown test function kind '" + g_kind +
                    "' (expected heat_gaussian or bump)");
}

GridSpec ExperimentConfig::grid_for(double T_effective) const {
  GridSpec grid;
  grid.L = L;
  grid.n = n;
  grid.dt = dt > 0.0 ? dt : T_effective / 2048.0;
  return grid;
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> warnings;
  if (beta <= 0.0) throw ConfigError("beta must be positive");
  if (epsilons.empty()) throw ConfigError("at least one epsilon is required");
  for (double e : epsilons)
    if (e <= 0.0 || e >= 1.0)
      throw ConfigError("epsilon values must lie in (0,1)");
  if (T <= 0.0) throw ConfigError("T must be positive");
  if (replicas < 100)
    throw ConfigError("replicas must be >= 100 for the distributional tests");
  if (A_max <= 1.0) throw ConfigError("A_max must exceed the evaluation point 1");
  if (da <= 0.0 || da_fbsde <= 0.0) throw ConfigError("da must be positive");
  if (dq < 0.0) throw ConfigError("dq must be nonnegative");
  if (dq > 0.0 && dq > 0.5 * da * da)
    warnings.push_back("dq exceeds the 0.5*da^2 safety bound; the PDE march "
                       "may refuse it at runtime");
  if (picard_tol <= 0.0) throw ConfigError("picard_tol must be positive");
  if (picard_max_iter < 1) throw ConfigError("picard_max_iter must be >= 1");
  if (route_tol <= 0.0) throw ConfigError("route_tol must be positive");
  if (xi_samples < 100) throw ConfigError("xi_samples must be >= 100");
  if (jobs < 0) throw ConfigError("jobs must be nonnegative");

  const SigmaFunction s = sigma();  // validates the label
  const TestFunction g = test_function();

  // grid checks against the finest epsilon and the horizon
  const GridSpec grid = grid_for(T);
  grid.validate();
  const double eps_min = *std::min_element(epsilons.begin(), epsilons.end());
  grid.validate_for_eps(eps_min);
  if (!grid.resolves_well(eps_min))
    warnings.push_back("grid spacing h=" + std::to_string(grid.h()) +
                       " only marginally resolves eps=" + std::to_string(eps_min) +
                       " (h <= eps/4 recommended)");
  if (recommended_torus_side(g, T) > L)
    warnings.push_back("torus side L=" + std::to_string(L) +
                       " is below the recommended " +
                       std::to_string(recommended_torus_side(g, T)) +
                       "; wrap-around may bias the statistic");

  for (double t : output_times) {
    if (t < 0.0 || t > T + 1e-12)
      throw ConfigError("output times must lie in [0, T]");
    const double k = t / grid.dt;
    if (std::abs(k - std::llround(k)) > 1e-9)
      throw ConfigError("output times must be multiples of dt");
  }
  if (!std::is_sorted(output_times.begin(), output_times.end()))
    throw ConfigError("output times must be sorted ascending");

  if (beta * s.lip >= std::sqrt(2.0 * std::numbers::pi))
    warnings.push_back("beta=" + std::to_string(beta) +
                       " is at or above the subcriticality threshold "
                       "sqrt(2*pi)/Lip; results are exploratory");
  return warnings;
}

ExperimentConfig config_from_toml(const TomlTable& t) {
  ExperimentConfig c;
  c.beta = t.number_or("beta", c.beta);
  c.sigma_label = t.str_or("sigma", c.sigma_label);
  if (t.has("epsilon")) c.epsilons = t.numbers("epsilon");
  c.T = t.number_or("T", c.T);
  if (t.has("output_times")) c.output_times = t.numbers("output_times");
  c.replicas = static_cast<int>(t.number_or("replicas", c.replicas));
  if (t.has("seed")) {
    const double s = t.number("seed");
    if (s < 0.0 || s != std::floor(s))
      throw ConfigError("seed must be a nonnegative integer");
    c.master_seed = static_cast<std::uint64_t>(s);
  }
  c.out_dir = t.str_or("out", c.out_dir);
  c.jobs = static_cast<int>(t.number_or("jobs", c.jobs));
  c.mollifier = t.str_or("mollifier", c.mollifier);

  c.L = t.number_or("grid.L", c.L);
  c.n = static_cast<int>(t.number_or("grid.n", c.n));
  c.dt = t.number_or("grid.dt", c.dt);

  c.g_kind = t.str_or("test_function.kind", c.g_kind);
  c.g_param = t.number_or("test_function.param", c.g_param);

  c.A_max = t.number_or("limit.A_max", c.A_max);
  c.da = t.number_or("limit.da", c.da);
  c.da_fbsde = t.number_or("limit.da_fbsde", c.da_fbsde);
  c.dq = t.number_or("limit.dq", c.dq);
  c.picard_tol = t.number_or("limit.picard_tol", c.picard_tol);
  c.picard_max_iter =
      static_cast<int>(t.number_or("limit.picard_max_iter", c.picard_max_iter));
  c.route_tol = t.number_or("limit.route_tol", c.route_tol);
  c.xi_samples = static_cast<int>(t.number_or("limit.xi_samples", c.xi_samples));

  if (c.mollifier != "smooth_bump" && c.mollifier != "flat_disc")
    throw ConfigError("unknown mollifier '" + c.mollifier +
                      "' (expected smooth_bump or flat_disc)");
  if (c.output_times.empty()) c.output_times = {c.T};
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_toml(TomlTable::parse_file(path));
}

int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EW2D_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace ew2d
