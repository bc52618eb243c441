#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>

#include "ew2d/kernel.hpp"

namespace ew2d {

struct GridSpec {
  double L = 8.0;   // torus side
  int n = 256;      // points per side, power of two
  double dt = 0.5 / 2048.0;

  double h() const { return L / n; }

  // Throws std::invalid_argument on a malformed grid.
  void validate() const;
  // Additionally checks that the grid resolves the mollifier scale.
  // h > eps/2 is refused; eps/4 < h <= eps/2 is accepted but reported
  // by resolves_well() as marginal.
  void validate_for_eps(double eps) const;
  bool resolves_well(double eps) const { return h() <= eps / 4.0 + 1e-15; }
};

struct SeedLineage {
  std::uint64_t master_seed = 0;
  int replica_id = 0;
  std::int64_t step_index = 0;
};

// One time-slice of the mollified noise, units of sqrt(dt).
struct NoiseIncrement {
  Eigen::ArrayXXd values;
  SeedLineage seed_lineage;
};

// Deterministic per-replica stream handle; value type, cheap to copy.
struct NoiseStream {
  std::uint64_t master_seed = 0;
  int replica_id = 0;
  std::int64_t next_step = 0;
};

NoiseStream make_stream(std::uint64_t master_seed, int replica_id);

// Synthesizes increments for one (grid, mollifier) pair: i.i.d. cell
// normals scaled by sqrt(dt)/h, convolved with phi^eps by torus FFT.
// Single-writer per instance; create one per worker.
class NoiseGenerator {
public:
  NoiseGenerator(const GridSpec& grid, const Mollifier& m);
  ~NoiseGenerator();
  NoiseGenerator(const NoiseGenerator&) = delete;
  NoiseGenerator& operator=(const NoiseGenerator&) = delete;

  const GridSpec& grid() const { return grid_; }
  double eps() const { return eps_; }

  // Advances the stream by one step.
  NoiseIncrement next_increment(NoiseStream& stream);
  // Counter-based access: any (replica, step) out of order.
  NoiseIncrement increment_at(std::uint64_t master_seed, int replica_id,
                              std::int64_t step_index);

  // Fills a caller-provided buffer (avoids the per-increment allocation
  // on the hot path). values must be n x n.
  void fill_increment(std::uint64_t master_seed, int replica_id,
                      std::int64_t step_index, Eigen::ArrayXXd& values);

private:
  GridSpec grid_;
  double eps_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ew2d
