#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ew2d/noise.hpp"
#include "ew2d/she_solver.hpp"
#include "ew2d/stats.hpp"

namespace ew2d {

// Binary grid dump: 32-byte header (magic[8], u32 n, f32 eps, f64 h,
// f64 dt), then n*n row-major little-endian doubles.
// Magic is "EW2DNOIS" for noise increments and "EW2DFELD" for fields.
void write_noise_dump(const std::filesystem::path& path, const NoiseIncrement& w,
                      const GridSpec& grid, double eps);
void write_field_dump(const std::filesystem::path& path, const FieldState& s,
                      const GridSpec& grid, double eps);

struct GridDump {
  std::string magic;
  int n = 0;
  double eps = 0.0;
  double h = 0.0;
  double dt = 0.0;
  Eigen::ArrayXXd values;
};
GridDump read_grid_dump(const std::filesystem::path& path);

// FNV-1a over the raw doubles, used in trajectory manifests.
std::uint64_t field_checksum(const Eigen::ArrayXXd& values);

// JSON manifest for an exported trajectory: times and per-snapshot
// checksums plus the dump filenames.
void write_trajectory_manifest(const std::filesystem::path& path,
                               const std::vector<double>& times,
                               const std::vector<std::string>& files,
                               const std::vector<std::uint64_t>& checksums);

std::string report_to_json(const EnsembleReport& report);
EnsembleReport report_from_json(const std::string& json_text);
void write_report(const std::filesystem::path& path, const EnsembleReport& r);
EnsembleReport read_report(const std::filesystem::path& path);

// Raw samples CSV: header "replica_id,t,X".
void write_samples_csv(const std::filesystem::path& path,
                       const EnsembleReport& report,
                       const std::vector<double>& times);

}  // namespace ew2d
