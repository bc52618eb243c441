#include "ew2d/io.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace ew2d {

namespace {

using nlohmann::json;

void write_dump(const std::filesystem::path& path, const char magic[8],
                const Eigen::ArrayXXd& values, const GridSpec& grid,
                double eps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  char header[32] = {};
  std::memcpy(header, magic, 8);
  const std::uint32_t n = static_cast<std::uint32_t>(grid.n);
  const float eps_f = static_cast<float>(eps);
  const double h = grid.h(), dt = grid.dt;
  std::memcpy(header + 8, &n, 4);
  std::memcpy(header + 12, &eps_f, 4);
  std::memcpy(header + 16, &h, 8);
  std::memcpy(header + 24, &dt, 8);
  out.write(header, 32);
  // row-major
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j) {
      const double v = values(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_noise_dump(const std::filesystem::path& path, const NoiseIncrement& w,
                      const GridSpec& grid, double eps) {
  write_dump(path, "EW2DNOIS", w.values, grid, eps);
}

void write_field_dump(const std::filesystem::path& path, const FieldState& s,
                      const GridSpec& grid, double eps) {
  write_dump(path, "EW2DFELD", s.u, grid, eps);
}

GridDump read_grid_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char header[32];
  in.read(header, 32);
  if (!in) throw std::runtime_error("truncated header: " + path.string());
  GridDump d;
  d.magic.assign(header, 8);
  if (d.magic != "EW2DNOIS" && d.magic != "EW2DFELD")
    throw std::runtime_error("bad magic in " + path.string());
  std::uint32_t n;
  float eps_f;
  std::memcpy(&n, header + 8, 4);
  std::memcpy(&eps_f, header + 12, 4);
  std::memcpy(&d.h, header + 16, 8);
  std::memcpy(&d.dt, header + 24, 8);
  d.n = static_cast<int>(n);
  d.eps = eps_f;
  d.values.resize(d.n, d.n);
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.n; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      d.values(i, j) = v;
    }
  if (!in) throw std::runtime_error("truncated payload: " + path.string());
  return d;
}

std::uint64_t field_checksum(const Eigen::ArrayXXd& values) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      double v = values(i, j);
      unsigned char bytes[8];
      std::memcpy(bytes, &v, 8);
      for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
      }
    }
  return hash;
}

void write_trajectory_manifest(const std::filesystem::path& path,
                               const std::vector<double>& times,
                               const std::vector<std::string>& files,
                               const std::vector<std::uint64_t>& checksums) {
  if (times.size() != files.size() || times.size() != checksums.size())
    throw std::invalid_argument("trajectory manifest: length mismatch");
  json j;
  j["schema"] = "ew2d-trajectory/1";
  j["times"] = times;
  j["files"] = files;
  j["checksums"] = checksums;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  if (rows == 0) return {};
  const auto cols = j.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t jj = 0; jj < cols; ++jj) m(i, jj) = j.at(i).at(jj).get<double>();
  return m;
}

}  // namespace

std::string report_to_json(const EnsembleReport& r) {
  json j;
  j["schema"] = r.schema;
  j["beta"] = r.beta;
  j["eps"] = r.eps;
  j["sigma"] = r.sigma_label;
  j["T"] = r.T;
  j["L"] = r.L;
  j["n"] = r.n;
  j["dt"] = r.dt;
  j["master_seed"] = r.master_seed;
  j["n_replicas"] = r.n_replicas;
  j["g"] = r.g_spec;
  j["nu_eff"] = r.nu_eff;
  j["exploratory"] = r.exploratory;
  j["subzero_fraction_mean"] = r.subzero_fraction_mean;
  j["blowups"] = r.blowups;
  j["blowup_fraction"] = r.blowup_fraction;
  j["degenerate"] = r.degenerate;
  j["runtime_seconds"] = r.runtime_seconds;

  json times = json::array();
  for (const auto& ts : r.per_time) {
    json t;
    t["time"] = ts.time;
    t["mean"] = ts.mean;
    t["mean_se"] = ts.mean_se;
    t["variance"] = ts.variance;
    t["variance_se"] = ts.variance_se;
    t["theoretical_variance"] = ts.theoretical_variance;
    t["ks"] = ts.normality.ks;
    t["ks_p_value"] = ts.normality.p_value;
    t["skewness"] = ts.normality.skewness;
    t["excess_kurtosis"] = ts.normality.excess_kurtosis;
    t["normality_degenerate"] = ts.normality.degenerate;
    times.push_back(t);
  }
  j["per_time"] = times;
  j["empirical_covariance"] = matrix_to_json(r.empirical_covariance);
  j["theoretical_covariance"] = matrix_to_json(r.theoretical_covariance);

  json samples = json::array();
  for (const auto& s : r.samples) {
    json e;
    e["replica_id"] = s.replica_id;
    e["x"] = s.x;
    e["u_at_probe"] = s.u_at_probe;
    e["subzero_fraction"] = s.subzero_fraction;
    samples.push_back(e);
  }
  j["samples"] = samples;
  return j.dump(2);
}

EnsembleReport report_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  EnsembleReport r;
  r.schema = j.at("schema").get<std::string>();
  if (r.schema != "ew2d-report/1")
    throw std::runtime_error("unsupported report schema: " + r.schema);
  r.beta = j.at("beta");
  r.eps = j.at("eps");
  r.sigma_label = j.at("sigma");
  r.T = j.at("T");
  r.L = j.at("L");
  r.n = j.at("n");
  r.dt = j.at("dt");
  r.master_seed = j.at("master_seed");
  r.n_replicas = j.at("n_replicas");
  r.g_spec = j.at("g");
  r.nu_eff = j.at("nu_eff");
  r.exploratory = j.at("exploratory");
  r.subzero_fraction_mean = j.at("subzero_fraction_mean");
  r.blowups = j.at("blowups");
  r.blowup_fraction = j.at("blowup_fraction");
  r.degenerate = j.at("degenerate");
  r.runtime_seconds = j.at("runtime_seconds");
  for (const auto& t : j.at("per_time")) {
    TimeSummary ts;
    ts.time = t.at("time");
    ts.mean = t.at("mean");
    ts.mean_se = t.at("mean_se");
    ts.variance = t.at("variance");
    ts.variance_se = t.at("variance_se");
    ts.theoretical_variance = t.at("theoretical_variance");
    ts.normality.ks = t.at("ks");
    ts.normality.p_value = t.at("ks_p_value");
    ts.normality.skewness = t.at("skewness");
    ts.normality.excess_kurtosis = t.at("excess_kurtosis");
    ts.normality.degenerate = t.at("normality_degenerate");
    r.per_time.push_back(ts);
  }
  r.empirical_covariance = matrix_from_json(j.at("empirical_covariance"));
  r.theoretical_covariance = matrix_from_json(j.at("theoretical_covariance"));
  for (const auto& e : j.at("samples")) {
    FluctuationSample s;
    s.replica_id = e.at("replica_id");
    s.x = e.at("x").get<std::vector<double>>();
    s.u_at_probe = e.at("u_at_probe");
    s.subzero_fraction = e.at("subzero_fraction");
    r.samples.push_back(std::move(s));
  }
  return r;
}

void write_report(const std::filesystem::path& path, const EnsembleReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << report_to_json(r) << "\n";
}

EnsembleReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return report_from_json(text);
}

void write_samples_csv(const std::filesystem::path& path,
                       const EnsembleReport& report,
                       const std::vector<double>& times) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "replica_id,t,X\n";
  out.precision(17);
  for (const auto& s : report.samples)
    for (size_t i = 0; i < s.x.size() && i < times.size(); ++i)
      out << s.replica_id << "," << times[i] << "," << s.x[i] << "\n";
}

}  // namespace ew2d
