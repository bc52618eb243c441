#include "ew2d/she_solver.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "fft_util.hpp"

namespace ew2d {

SigmaFunction SigmaFunction::linear() {
  return {"linear", 1.0, Kind::linear, {}};
}

SigmaFunction SigmaFunction::saturating() {
  return {"saturating", 1.0, Kind::saturating, {}};
}

SigmaFunction SigmaFunction::zero() {
  return {"zero", 0.0, Kind::zero, {}};
}

SigmaFunction SigmaFunction::custom(std::string label, double lip,
                                    std::function<double(double)> f) {
  if (lip <= 0.0) throw std::invalid_argument("SigmaFunction: lip must be positive");
  return {std::move(label), lip, Kind::custom, std::move(f)};
}

double SigmaFunction::operator()(double x) const {
  if (x <= 0.0) return 0.0;  // extension by zero, consistent with sigma(0)=0
  switch (kind) {
    case Kind::linear:
      return x;
    case Kind::saturating:
      return 1.0 - std::exp(-x);
    case Kind::zero:
      return 0.0;
    case Kind::custom:
      return evaluator(x);
  }
  return 0.0;
}

void SigmaFunction::apply(const Eigen::ArrayXXd& u, Eigen::ArrayXXd& out) const {
  switch (kind) {
    case Kind::linear:
      out = u.max(0.0);
      return;
    case Kind::saturating:
      out = 1.0 - (-u.max(0.0)).exp();
      return;
    case Kind::zero:
      out.setZero(u.rows(), u.cols());
      return;
    case Kind::custom:
      out = u.unaryExpr([this](double x) { return (*this)(x); });
      return;
  }
}

bool SigmaFunction::lipschitz_check(int n_pairs, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-2.0, 8.0);
  for (int i = 0; i < n_pairs; ++i) {
    const double x = dist(rng), y = dist(rng);
    if (std::abs((*this)(x) - (*this)(y)) > lip * std::abs(x - y) * (1.0 + 1e-12))
      return false;
  }
  return true;
}

bool SolverConfig::subcritical() const {
  return beta * sigma.lip < std::sqrt(2.0 * std::numbers::pi);
}

void SolverConfig::validate() const {
  if (beta < 0.0) throw std::invalid_argument("SolverConfig: beta must be >= 0");
  if (eps <= 0.0 || eps >= 1.0)
    throw std::invalid_argument("SolverConfig: eps must lie in (0,1)");
  if (T <= 0.0) throw std::invalid_argument("SolverConfig: T must be positive");
  grid.validate_for_eps(eps);
  if (!std::isfinite(attenuation()))
    throw std::invalid_argument("SolverConfig: attenuation factor not finite");
}

struct SheSolver::Impl {
  detail::FftPair fft;
  std::vector<double> heat_multiplier;  // exp(-dt |k|^2 / 2)
  Eigen::ArrayXXd sigma_buf;
  Eigen::ArrayXXd noise_buf;

  explicit Impl(int n) : fft(n) {}
};

SheSolver::SheSolver(const SolverConfig& cfg, const Mollifier& m) : cfg_(cfg) {
  cfg_.validate();
  if (m.eps() != cfg_.eps)
    throw std::invalid_argument("SheSolver: mollifier eps does not match config");
  noise_ = std::make_unique<NoiseGenerator>(cfg_.grid, m);

  const int n = cfg_.grid.n;
  impl_ = std::make_unique<Impl>(n);
  impl_->sigma_buf.resize(n, n);
  impl_->noise_buf.resize(n, n);

  const int nc = impl_->fft.spec_cols();
  const double dk = 2.0 * std::numbers::pi / cfg_.grid.L;
  impl_->heat_multiplier.resize(static_cast<size_t>(n) * nc);
  for (int i = 0; i < n; ++i) {
    const int fi = i <= n / 2 ? i : i - n;
    for (int j = 0; j < nc; ++j) {
      const double k2 = dk * dk * (static_cast<double>(fi) * fi +
                                   static_cast<double>(j) * j);
      impl_->heat_multiplier[static_cast<size_t>(i) * nc + j] =
          std::exp(-cfg_.grid.dt * k2 / 2.0);
    }
  }
}

SheSolver::~SheSolver() = default;

FieldState SheSolver::initial_state(int replica_id) const {
  FieldState s;
  s.u = Eigen::ArrayXXd::Ones(cfg_.grid.n, cfg_.grid.n);
  s.t = 0.0;
  s.replica_id = replica_id;
  return s;
}

void SheSolver::step(FieldState& state, const NoiseIncrement& w) {
  const int n = cfg_.grid.n;
  if (w.values.rows() != n || w.values.cols() != n)
    throw std::invalid_argument("step: noise increment shape mismatch");
  if (state.t + cfg_.grid.dt > cfg_.T + 1e-12)
    throw std::invalid_argument("step: time advance past horizon T");

  const double atten = cfg_.attenuation();
  cfg_.sigma.apply(state.u, impl_->sigma_buf);

  double* buf = impl_->fft.real();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      buf[static_cast<size_t>(i) * n + j] =
          state.u(i, j) + atten * impl_->sigma_buf(i, j) * w.values(i, j);

  impl_->fft.forward();
  fftw_complex* spec = impl_->fft.spec();
  const size_t ns = impl_->heat_multiplier.size();
  for (size_t k = 0; k < ns; ++k) {
    spec[k][0] *= impl_->heat_multiplier[k];
    spec[k][1] *= impl_->heat_multiplier[k];
  }
  impl_->fft.inverse();

  const double inv = 1.0 / (static_cast<double>(n) * n);
  bool finite = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = buf[static_cast<size_t>(i) * n + j] * inv;
      state.u(i, j) = v;
      finite &= std::isfinite(v);
    }
  state.t += cfg_.grid.dt;
  if (!finite) throw BlowUpError(state.t, state.replica_id);
}

std::vector<FieldState> SheSolver::evolve(std::uint64_t master_seed,
                                          int replica_id,
                                          const std::vector<double>& output_times) {
  const double dt = cfg_.grid.dt;
  std::vector<std::int64_t> out_steps;
  out_steps.reserve(output_times.size());
  for (double t : output_times) {
    if (t < -1e-12 || t > cfg_.T + 1e-12)
      throw std::invalid_argument("evolve: output time outside [0, T]");
    const double k = t / dt;
    const std::int64_t ki = std::llround(k);
    if (std::abs(k - ki) > 1e-9)
      throw std::invalid_argument("evolve: output time not a multiple of dt");
    out_steps.push_back(ki);
  }

  std::vector<FieldState> snapshots;
  snapshots.reserve(output_times.size());
  FieldState state = initial_state(replica_id);
  const std::int64_t last =
      out_steps.empty() ? 0 : *std::max_element(out_steps.begin(), out_steps.end());

  NoiseIncrement w;
  w.values.resize(cfg_.grid.n, cfg_.grid.n);
  std::int64_t k = 0;
  // output_times are expected sorted; snapshot at each requested step
  size_t next_out = 0;
  while (next_out < out_steps.size() && out_steps[next_out] == 0) {
    snapshots.push_back(state);
    ++next_out;
  }
  while (k < last) {
    noise_->fill_increment(master_seed, replica_id, k, w.values);
    w.seed_lineage = {master_seed, replica_id, k};
    step(state, w);
    ++k;
    while (next_out < out_steps.size() && out_steps[next_out] == k) {
      snapshots.push_back(state);
      ++next_out;
    }
  }
  if (next_out != out_steps.size())
    throw std::invalid_argument("evolve: output times must be sorted ascending");
  return snapshots;
}

MicroParams micro_params(const SolverConfig& cfg) {
  return {cfg.T / (cfg.eps * cfg.eps), 1.0 / cfg.eps};
}

double macro_horizon(const MicroParams& mp, double eps) {
  return mp.horizon * eps * eps;
}

}  // namespace ew2d
