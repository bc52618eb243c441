#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ew2d/noise.hpp"

namespace ew2d {

// Multiplicative nonlinearity sigma: [0,inf) -> [0,inf), sigma(0)=0,
// extended by zero on the negatives.
struct SigmaFunction {
  enum class Kind { linear, saturating, zero, custom };

  std::string label;
  double lip = 1.0;
  Kind kind = Kind::linear;
  std::function<double(double)> evaluator;  // custom only

  static SigmaFunction linear();      // sigma(x) = x
  static SigmaFunction saturating();  // sigma(x) = 1 - exp(-x)
  static SigmaFunction zero();        // degenerate test input
  static SigmaFunction custom(std::string label, double lip,
                              std::function<double(double)> f);

  double operator()(double x) const;
  void apply(const Eigen::ArrayXXd& u, Eigen::ArrayXXd& out) const;

  // Spot-check |sigma(x)-sigma(y)| <= lip|x-y| on sampled pairs.
  bool lipschitz_check(int n_pairs = 10000, std::uint64_t seed = 12345) const;
};

struct SolverConfig {
  double beta = 1.0;
  double eps = 0.1;  // in (0,1)
  SigmaFunction sigma = SigmaFunction::linear();
  GridSpec grid;
  double T = 0.5;

  double attenuation() const { return beta / std::sqrt(std::log(1.0 / eps)); }
  bool subcritical() const;  // beta * lip < sqrt(2*pi)
  void validate() const;
};

struct FieldState {
  Eigen::ArrayXXd u;
  double t = 0.0;
  int replica_id = 0;
};

class BlowUpError : public std::runtime_error {
public:
  BlowUpError(double t, int replica)
      : std::runtime_error("field blow-up at t=" + std::to_string(t) +
                           " (replica " + std::to_string(replica) + ")"),
        time(t),
        replica_id(replica) {}
  double time;
  int replica_id;
};

// Exponential-Euler stepper in mild form: exact Fourier heat propagator,
// Ito (left-point) noise term. One instance per worker.
class SheSolver {
public:
  SheSolver(const SolverConfig& cfg, const Mollifier& m);
  ~SheSolver();
  SheSolver(const SheSolver&) = delete;
  SheSolver& operator=(const SheSolver&) = delete;

  const SolverConfig& config() const { return cfg_; }

  FieldState initial_state(int replica_id = 0) const;

  // u <- e^{dt Lap/2} [u + atten * sigma(u) .* w]; throws BlowUpError on
  // non-finite values.
  void step(FieldState& state, const NoiseIncrement& w);

  // Full trajectory with snapshots at the requested output times (each a
  // multiple of dt within [0, T]). Deterministic in (seed, replica).
  std::vector<FieldState> evolve(std::uint64_t master_seed, int replica_id,
                                 const std::vector<double>& output_times);

  NoiseGenerator& noise() { return *noise_; }

private:
  SolverConfig cfg_;
  std::unique_ptr<NoiseGenerator> noise_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct MicroParams {
  double horizon;          // T / eps^2
  double length_dilation;  // 1 / eps
};

// Macroscopic problem restated at the microscopic scale (unit mollifier).
MicroParams micro_params(const SolverConfig& cfg);
// Round trip back to the macroscopic horizon.
double macro_horizon(const MicroParams& mp, double eps);

}  // namespace ew2d
