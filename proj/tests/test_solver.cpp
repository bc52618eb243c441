#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ew2d/she_solver.hpp"

using namespace ew2d;
constexpr double pi = std::numbers::pi;

TEST_CASE("sigma functions: values and zero extension") {
  const SigmaFunction lin = SigmaFunction::linear();
  CHECK(lin(2.5) == 2.5);
  CHECK(lin(0.0) == 0.0);
  CHECK(lin(-1.0) == 0.0);  // extension by zero
  CHECK(lin.lip == 1.0);

  const SigmaFunction sat = SigmaFunction::saturating();
  CHECK(sat(1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(sat(-0.5) == 0.0);
  CHECK(sat(50.0) == doctest::Approx(1.0));

  const SigmaFunction zero = SigmaFunction::zero();
  CHECK(zero(3.0) == 0.0);

  CHECK(lin.lipschitz_check());
  CHECK(sat.lipschitz_check());
  CHECK_THROWS_AS(SigmaFunction::custom("bad", 0.0, [](double x) { return x; }),
                  std::invalid_argument);
}

TEST_CASE("sigma apply matches pointwise evaluation") {
  Eigen::ArrayXXd u(2, 2);
  u << -1.0, 0.5, 2.0, 0.0;
  Eigen::ArrayXXd out;
  for (const auto& s : {SigmaFunction::linear(), SigmaFunction::saturating(),
                        SigmaFunction::zero()}) {
    s.apply(u, out);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(out(i, j) == doctest::Approx(s(u(i, j))));
  }
}

TEST_CASE("solver config validation and derived quantities") {
  SolverConfig cfg;
  cfg.grid = {4.0, 64, 1e-3};
  cfg.eps = 0.25;
  CHECK_NOTHROW(cfg.validate());

  // attenuation beta / sqrt(log eps^-1)
  cfg.beta = 1.0;
  cfg.eps = 0.1;
  cfg.grid = {4.0, 128, 1e-3};
  CHECK(cfg.attenuation() == doctest::Approx(1.0 / std::sqrt(std::log(10.0))));

  CHECK(cfg.subcritical());
  cfg.beta = std::sqrt(2.0 * pi) + 1e-6;
  CHECK(!cfg.subcritical());

  SolverConfig bad = cfg;
  bad.eps = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.eps = 0.05;  // h = 0.03125 > eps/2
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.beta = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.T = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("degenerate sigma keeps the flat initial state exactly") {
  SolverConfig cfg;
  cfg.beta = 1.0;
  cfg.eps = 0.25;
  cfg.sigma = SigmaFunction::zero();
  cfg.grid = {4.0, 64, 1e-3};
  cfg.T = 0.01;
  SheSolver solver(cfg, Mollifier::smooth_bump(cfg.eps));
  const auto traj = solver.evolve(1, 0, {0.0, 0.01});
  REQUIRE(traj.size() == 2);
  CHECK((traj[0].u == 1.0).all());
  CHECK(traj[1].u.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(traj[1].u.minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("heat propagator is spectrally exact on an eigenfunction") {
  SolverConfig cfg;
  cfg.beta = 1.0;
  cfg.eps = 0.25;
  cfg.sigma = SigmaFunction::zero();  // isolates the propagator
  cfg.grid = {4.0, 64, 1e-2};
  cfg.T = 0.1;
  SheSolver solver(cfg, Mollifier::smooth_bump(cfg.eps));

  FieldState s = solver.initial_state();
  const double h = cfg.grid.h(), k1 = 2.0 * pi / cfg.grid.L;
  for (int i = 0; i < cfg.grid.n; ++i)
    for (int j = 0; j < cfg.grid.n; ++j) s.u(i, j) = std::cos(k1 * i * h);

  NoiseIncrement w;
  w.values = Eigen::ArrayXXd::Zero(cfg.grid.n, cfg.grid.n);
  solver.step(s, w);

  const double decay = std::exp(-cfg.grid.dt * k1 * k1 / 2.0);
  for (int i = 0; i < cfg.grid.n; i += 7)
    CHECK(s.u(i, 5) == doctest::Approx(decay * std::cos(k1 * i * h)).epsilon(1e-12));
  CHECK(s.t == doctest::Approx(cfg.grid.dt));
}

TEST_CASE("spatial mean is conserved by the propagator step") {
  SolverConfig cfg;
  cfg.grid = {4.0, 64, 1e-3};
  cfg.eps = 0.25;
  cfg.T = 0.1;
  SheSolver solver(cfg, Mollifier::smooth_bump(cfg.eps));
  FieldState s = solver.initial_state();
  const auto w = solver.noise().increment_at(3, 0, 0);
  Eigen::ArrayXXd sig(cfg.grid.n, cfg.grid.n);
  cfg.sigma.apply(s.u, sig);
  const double expected =
      (s.u + cfg.attenuation() * sig * w.values).mean();
  FieldState s2 = s;
  solver.step(s2, w);
  CHECK(s2.u.mean() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("evolution is deterministic in (seed, replica)") {
  SolverConfig cfg;
  cfg.grid = {4.0, 64, 1e-3};
  cfg.eps = 0.25;
  cfg.T = 0.05;
  SheSolver a(cfg, Mollifier::smooth_bump(cfg.eps));
  SheSolver b(cfg, Mollifier::smooth_bump(cfg.eps));
  const auto ta = a.evolve(77, 4, {0.05});
  const auto tb = b.evolve(77, 4, {0.05});
  REQUIRE(ta.size() == 1);
  CHECK((ta[0].u == tb[0].u).all());
  const auto tc = a.evolve(77, 5, {0.05});
  CHECK(!(ta[0].u == tc[0].u).all());
}

TEST_CASE("output time validation") {
  SolverConfig cfg;
  cfg.grid = {4.0, 64, 1e-3};
  cfg.eps = 0.25;
  cfg.T = 0.05;
  SheSolver solver(cfg, Mollifier::smooth_bump(cfg.eps));
  CHECK_THROWS_AS(solver.evolve(1, 0, {0.0005}), std::invalid_argument);
  CHECK_THROWS_AS(solver.evolve(1, 0, {0.2}), std::invalid_argument);
  CHECK_THROWS_AS(solver.evolve(1, 0, {0.02, 0.01}), std::invalid_argument);
}

TEST_CASE("mollifier scale must match the config") {
  SolverConfig cfg;
  cfg.grid = {4.0, 64, 1e-3};
  cfg.eps = 0.25;
  CHECK_THROWS_AS(SheSolver(cfg, Mollifier::smooth_bump(0.3)),
                  std::invalid_argument);
}

TEST_CASE("blow-up is detected and carries the replica id") {
  SolverConfig cfg;
  cfg.grid = {4.0, 64, 1e-3};
  cfg.eps = 0.25;
  cfg.T = 0.05;
  cfg.beta = 1.0;
  cfg.sigma = SigmaFunction::custom("explosive", 1.0,
                                    [](double) { return 1e308; });
  SheSolver solver(cfg, Mollifier::smooth_bump(cfg.eps));
  FieldState s = solver.initial_state(9);
  const auto w = solver.noise().increment_at(1, 9, 0);
  try {
    solver.step(s, w);
    // one step may survive; drive it until it pops
    for (int k = 1; k < 50; ++k)
      solver.step(s, solver.noise().increment_at(1, 9, k));
    FAIL("expected BlowUpError");
  } catch (const BlowUpError& e) {
    CHECK(e.replica_id == 9);
    CHECK(e.time > 0.0);
  }
}

TEST_CASE("self-convergence: halving dt under coupled noise barely moves u") {
  // coarse increments are sums of paired fine increments, so both runs see
  // the same Brownian path; the dt -> dt/2 difference must sit far below
  // the field's own fluctuation scale.
  SolverConfig coarse;
  coarse.beta = 1.0;
  coarse.eps = 0.25;
  coarse.grid = {4.0, 64, 0.125 / 64.0};
  coarse.T = 0.125;
  SolverConfig fine = coarse;
  fine.grid.dt = coarse.grid.dt / 2.0;

  const Mollifier m = Mollifier::smooth_bump(0.25);
  SheSolver sc(coarse, m), sf(fine, m);
  NoiseGenerator gen(fine.grid, m);  // fine-step noise, shared by both

  double diff = 0.0, fluct = 0.0;
  const int replicas = 8;
  for (int r = 0; r < replicas; ++r) {
    FieldState uc = sc.initial_state(r), uf = sf.initial_state(r);
    NoiseIncrement wc, wf;
    wf.values.resize(64, 64);
    for (int k = 0; k < 64; ++k) {
      gen.fill_increment(17, r, 2 * k, wf.values);
      sf.step(uf, wf);
      wc.values = wf.values;
      gen.fill_increment(17, r, 2 * k + 1, wf.values);
      sf.step(uf, wf);
      wc.values += wf.values;
      sc.step(uc, wc);
    }
    diff += std::sqrt((uc.u - uf.u).square().mean());
    fluct += std::sqrt((uc.u - 1.0).square().mean());
  }
  CHECK(diff / replicas < 0.1 * fluct / replicas);
  CHECK(fluct > 0.0);
}

TEST_CASE("micro/macro scaling round trip") {
  SolverConfig cfg;
  cfg.T = 0.5;
  cfg.eps = 0.1;
  const MicroParams mp = micro_params(cfg);
  CHECK(mp.horizon == doctest::Approx(50.0));
  CHECK(mp.length_dilation == doctest::Approx(10.0));
  CHECK(macro_horizon(mp, cfg.eps) == doctest::Approx(cfg.T));
}
