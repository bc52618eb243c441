#include "ew2d/noise.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "fft_util.hpp"

namespace ew2d {

void GridSpec::validate() const {
  if (L <= 0.0) throw std::invalid_argument("GridSpec: L must be positive");
  if (dt <= 0.0) throw std::invalid_argument("GridSpec: dt must be positive");
  if (n < 2 || (n & (n - 1)) != 0)
    throw std::invalid_argument("GridSpec: n must be a power of two (n >= 2)");
}

void GridSpec::validate_for_eps(double eps) const {
  validate();
  if (eps <= 0.0) throw std::invalid_argument("GridSpec: eps must be positive");
  if (h() > eps / 2.0 + 1e-15)
    throw std::invalid_argument(
        "GridSpec: grid spacing h=" + std::to_string(h()) +
        " does not resolve the mollifier scale eps=" + std::to_string(eps) +
        " (need h <= eps/2)");
}

NoiseStream make_stream(std::uint64_t master_seed, int replica_id) {
  return NoiseStream{master_seed, replica_id, 0};
}

struct NoiseGenerator::Impl {
  detail::FftPair fft;
  // h^2 * DFT of the grid-sampled, mass-renormalized phi^eps.
  std::vector<double> multiplier;  // real by symmetry of phi

  explicit Impl(int n) : fft(n) {}
};

NoiseGenerator::NoiseGenerator(const GridSpec& grid, const Mollifier& m)
    : grid_(grid), eps_(m.eps()) {
  grid_.validate_for_eps(eps_);
  const double support = m.support_radius() * eps_;
  if (support >= grid_.L / 2.0)
    throw std::invalid_argument(
        "NoiseGenerator: mollifier support wraps the torus (eps too large for L)");

  const int n = grid_.n;
  const double h = grid_.h();
  impl_ = std::make_unique<Impl>(n);

  // Sample phi^eps at minimum-image grid offsets and renormalize to unit
  // discrete mass, removing the O(h^2) sampling bias.
  double* buf = impl_->fft.real();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (i <= n / 2 ? i : i - n) * h;
    for (int j = 0; j < n; ++j) {
      const double y = (j <= n / 2 ? j : j - n) * h;
      const double v = m.rescaled(x, y);
      buf[static_cast<size_t>(i) * n + j] = v;
      sum += v;
    }
  }
  const double norm = 1.0 / (sum * h * h);
  for (size_t k = 0; k < static_cast<size_t>(n) * n; ++k) buf[k] *= norm;

  impl_->fft.forward();
  const int nc = impl_->fft.spec_cols();
  impl_->multiplier.resize(static_cast<size_t>(n) * nc);
  for (size_t k = 0; k < impl_->multiplier.size(); ++k) {
    // phi is even, so the transform is real; keep the real part.
    impl_->multiplier[k] = impl_->fft.spec()[k][0] * h * h;
  }
}

NoiseGenerator::~NoiseGenerator() = default;

void NoiseGenerator::fill_increment(std::uint64_t master_seed, int replica_id,
                                    std::int64_t step_index,
                                    Eigen::ArrayXXd& values) {
  const int n = grid_.n;
  if (values.rows() != n || values.cols() != n)
    throw std::invalid_argument("fill_increment: buffer shape mismatch");

  std::mt19937_64 rng(detail::counter_seed(
      master_seed, static_cast<std::uint64_t>(replica_id),
      static_cast<std::uint64_t>(step_index)));
  std::normal_distribution<double> normal(0.0, 1.0);

  const double scale = std::sqrt(grid_.dt) / grid_.h();
  double* buf = impl_->fft.real();
  const size_t nn = static_cast<size_t>(n) * n;
  for (size_t k = 0; k < nn; ++k) buf[k] = scale * normal(rng);

  impl_->fft.forward();
  const size_t ns = impl_->multiplier.size();
  fftw_complex* spec = impl_->fft.spec();
  for (size_t k = 0; k < ns; ++k) {
    spec[k][0] *= impl_->multiplier[k];
    spec[k][1] *= impl_->multiplier[k];
  }
  impl_->fft.inverse();

  const double inv = 1.0 / (static_cast<double>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      values(i, j) = buf[static_cast<size_t>(i) * n + j] * inv;
}

NoiseIncrement NoiseGenerator::increment_at(std::uint64_t master_seed,
                                            int replica_id,
                                            std::int64_t step_index) {
  NoiseIncrement w;
  w.values.resize(grid_.n, grid_.n);
  fill_increment(master_seed, replica_id, step_index, w.values);
  w.seed_lineage = {master_seed, replica_id, step_index};
  return w;
}

NoiseIncrement NoiseGenerator::next_increment(NoiseStream& stream) {
  NoiseIncrement w =
      increment_at(stream.master_seed, stream.replica_id, stream.next_step);
  ++stream.next_step;
  return w;
}

}  // namespace ew2d
