#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ew2d/noise.hpp"

using namespace ew2d;

TEST_CASE("grid validation") {
  GridSpec g{4.0, 64, 1e-3};
  CHECK_NOTHROW(g.validate());
  CHECK(g.h() == doctest::Approx(0.0625));

  GridSpec bad_n{4.0, 63, 1e-3};
  CHECK_THROWS_AS(bad_n.validate(), std::invalid_argument);
  GridSpec bad_dt{4.0, 64, 0.0};
  CHECK_THROWS_AS(bad_dt.validate(), std::invalid_argument);
  GridSpec bad_L{0.0, 64, 1e-3};
  CHECK_THROWS_AS(bad_L.validate(), std::invalid_argument);

  // h = 0.0625: refuses eps < 2h = 0.125, marginal up to 4h = 0.25
  CHECK_THROWS_AS(g.validate_for_eps(0.1), std::invalid_argument);
  CHECK_NOTHROW(g.validate_for_eps(0.15));
  CHECK(!g.resolves_well(0.15));
  CHECK(g.resolves_well(0.25));
  CHECK(g.resolves_well(0.4));
}

TEST_CASE("counter-based increments are reproducible and order-independent") {
  const GridSpec grid{4.0, 64, 1e-3};
  const Mollifier m = Mollifier::smooth_bump(0.25);
  NoiseGenerator gen(grid, m);

  const auto a = gen.increment_at(42, 3, 7);
  const auto b = gen.increment_at(42, 3, 7);
  CHECK((a.values == b.values).all());
  CHECK(a.seed_lineage.master_seed == 42);
  CHECK(a.seed_lineage.replica_id == 3);
  CHECK(a.seed_lineage.step_index == 7);

  // a second generator instance agrees bit-for-bit
  NoiseGenerator gen2(grid, m);
  const auto c = gen2.increment_at(42, 3, 7);
  CHECK((a.values == c.values).all());

  // distinct coordinates give distinct fields
  CHECK(!(gen.increment_at(42, 3, 8).values == a.values).all());
  CHECK(!(gen.increment_at(42, 4, 7).values == a.values).all());
  CHECK(!(gen.increment_at(43, 3, 7).values == a.values).all());
}

TEST_CASE("stream interface matches counter access") {
  const GridSpec grid{4.0, 64, 1e-3};
  const Mollifier m = Mollifier::smooth_bump(0.25);
  NoiseGenerator gen(grid, m);
  NoiseStream s = make_stream(9, 2);
  for (int k = 0; k < 3; ++k) {
    const auto w = gen.next_increment(s);
    CHECK(w.seed_lineage.step_index == k);
    CHECK((w.values == gen.increment_at(9, 2, k).values).all());
  }
  CHECK(s.next_step == 3);
}

TEST_CASE("mollifier/grid compatibility is enforced") {
  const GridSpec grid{4.0, 64, 1e-3};
  // support eps * r_phi must stay under L/2
  CHECK_THROWS_AS(NoiseGenerator(GridSpec{1.0, 64, 1e-3},
                                 Mollifier::flat_disc(0.6)),
                  std::invalid_argument);
  CHECK_THROWS_AS(NoiseGenerator(grid, Mollifier::smooth_bump(0.1)),
                  std::invalid_argument);  // h > eps/2
}

TEST_CASE("empirical covariance matches dt eps^-2 R(./eps)") {
  // light version of the acceptance check: 4000 increments, a few lags
  const double eps = 0.25, dt = 1e-3;
  const GridSpec grid{4.0, 64, dt};
  const double h = grid.h();
  const Mollifier m = Mollifier::smooth_bump(eps);
  const Correlation R = correlation_of(m);
  NoiseGenerator gen(grid, m);

  const int n = grid.n, M = 4000;
  const std::vector<int> lags = {0, 1, 2, 4, 8};
  std::vector<double> sum(lags.size(), 0.0), sumsq(lags.size(), 0.0);
  Eigen::ArrayXXd w(n, n);
  for (int k = 0; k < M; ++k) {
    gen.fill_increment(5, 0, k, w);
    for (size_t li = 0; li < lags.size(); ++li) {
      // average over a row of sites to tighten the estimate
      double acc = 0.0;
      const int lag = lags[li];
      for (int j = 0; j < n; j += 8) acc += w(7, j) * w((7 + lag) % n, j);
      acc /= (n / 8);
      sum[li] += acc;
      sumsq[li] += acc * acc;
    }
  }
  for (size_t li = 0; li < lags.size(); ++li) {
    const double mean = sum[li] / M;
    const double var = sumsq[li] / M - mean * mean;
    const double se = std::sqrt(var / M);
    const double expected = dt / (eps * eps) * R(lags[li] * h / eps);
    CHECK(std::abs(mean - expected) < 5.0 * se + 1e-12);
  }
}

TEST_CASE("increments have zero mean") {
  const GridSpec grid{4.0, 64, 1e-3};
  NoiseGenerator gen(grid, Mollifier::smooth_bump(0.25));
  Eigen::ArrayXXd w(grid.n, grid.n);
  double total = 0.0;
  const int M = 500;
  for (int k = 0; k < M; ++k) {
    gen.fill_increment(11, 0, k, w);
    total += w.mean();
  }
  // var of the spatial mean is dt/L^2 (white-noise mass); se accordingly
  const double se = std::sqrt(grid.dt / (grid.L * grid.L) / M);
  CHECK(std::abs(total / M) < 5.0 * se);
}
