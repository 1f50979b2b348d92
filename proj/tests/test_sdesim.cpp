#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fracgb/sdesim.hpp"
#include "fracgb/specialfn.hpp"

using namespace fracgb;

namespace {

CoeffSpec spec(Family b, Family s1, Family s2) { return CoeffSpec::make(b, s1, s2); }

const Family kZero = Family::zero();

// Affine-coefficient battery for the Picard checks.
std::vector<CoeffSpec> picard_battery() {
  return {spec(Family::affine(0.2, -0.5), Family::affine(0.1, 0.3), Family::affine(0.2, 0.2)),
          spec(Family::linear(0.5), Family::constant(0.5), Family::linear(0.3)),
          spec(Family::affine(-0.3, 0.4), Family::linear(-0.4), Family::constant(0.5)),
          spec(Family::sinusoidal(0.5), Family::affine(0.2, 0.5), Family::affine(0.1, 0.25))};
}

}  // namespace

TEST(CoeffSpec, ComputedConstants) {
  const auto c = spec(Family::affine(1.0, -2.0), Family::sinusoidal(0.5), Family::linear(0.3));
  EXPECT_DOUBLE_EQ(c.lipschitz_L(), 2.8);
  EXPECT_GE(c.growth_K(), c.sampled_growth());
  EXPECT_NO_THROW(c.validate());
}

TEST(CoeffSpec, DeclaredConstantsAreChecked) {
  EXPECT_THROW(CoeffSpec(Family::linear(2.0), kZero, kZero, 1.0, 5.0), DomainError);
  EXPECT_THROW(CoeffSpec(Family::constant(3.0), kZero, kZero, 0.0, 1.0), DomainError);
  EXPECT_NO_THROW(CoeffSpec(Family::affine(3.0, 4.0), kZero, kZero, 4.0, 5.0));
  EXPECT_THROW(CoeffSpec(kZero, kZero, kZero, std::nan(""), 1.0), DomainError);
}

TEST(Brownian, Deterministic) {
  const TimeGrid grid(1.0, 1000);
  const auto a = brownian_path(99, grid);
  const auto b = brownian_path(99, grid);
  EXPECT_EQ(a.increments, b.increments);
  EXPECT_NE(a.increments, brownian_path(100, grid).increments);
  EXPECT_EQ(a.increments.size(), 1000u);
}

TEST(Brownian, SingleStep) {
  const TimeGrid grid(2.0, 1);
  double s2 = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto z = brownian_path(path_seed(5, k), grid);
    ASSERT_EQ(z.increments.size(), 1u);
    s2 += z.increments[0] * z.increments[0];
  }
  const double var = s2 / n;
  EXPECT_NEAR(var, 2.0, 4.0 * 2.0 * std::sqrt(2.0 / n));
}

TEST(Brownian, IncrementStatistics) {
  const TimeGrid grid(1.0, 100000);
  const auto z = brownian_path(2024, grid);
  double m = 0.0, v = 0.0;
  for (double d : z.increments) m += d;
  m /= z.increments.size();
  for (double d : z.increments) v += (d - m) * (d - m);
  v /= z.increments.size() - 1;
  const double dt = grid.step();
  EXPECT_LT(std::abs(m), 5.0 * std::sqrt(dt / z.increments.size()));
  EXPECT_LT(std::abs(v - dt), 5.0 * dt * std::sqrt(2.0 / z.increments.size()));
}

TEST(Brownian, TerminalVarianceOverEnsemble) {
  const TimeGrid grid(1.0, 8);
  const auto e = simulate_ensemble(spec(kZero, kZero, Family::constant(1.0)), 0.0, AlphaOrder(0.5), grid, 100000, 3);
  const auto st = mc_ensemble_stats(e, {1, 2});
  EXPECT_LT(std::abs(st.variance.back() - 1.0), 3.0 * st.variance_se.back());
}

TEST(SimulatePath, ConstantFractionalChannelIsExact) {
  const TimeGrid grid(1.0, 1024);
  for (double a : {0.25, 0.5, 0.75, 0.9}) {
    const AbelWeights w(AlphaOrder(a), grid);
    const auto x = simulate_path(spec(kZero, Family::constant(-0.7), kZero), 2.0, brownian_path(1, grid),
                                 AlphaOrder(a), w);
    for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(x[j], 2.0 - 0.7 * std::pow(grid.node(j), a), 1e-12);
  }
}

TEST(SimulatePath, LinearFractionalChannelMatchesVolterra) {
  const double a = 0.5;
  const TimeGrid grid(1.0, 2048);
  const AbelWeights w(AlphaOrder(a), grid);
  const auto x = simulate_path(spec(kZero, Family::linear(1.0), kZero), 1.5, brownian_path(1, grid), AlphaOrder(a), w);
  const double want = 1.5 * mittag_leffler(gamma_fn(a + 1.0) * 1.0, a);
  EXPECT_NEAR(x.back() / want, 1.0, 5e-3);
}

TEST(SimulatePath, EulerMaruyamaWhenFractionalChannelVanishes) {
  const TimeGrid grid(1.0, 500);
  const auto noise = brownian_path(17, grid);
  const auto c = spec(Family::affine(0.3, -0.8), kZero, Family::affine(0.2, 0.4));
  const auto x = simulate_path(c, 0.7, noise, AlphaOrder(0.4), AbelWeights(AlphaOrder(0.4), grid));
  double xe = 0.7, drift = 0.0, ito = 0.0;
  for (std::size_t n = 1; n < grid.size(); ++n) {
    drift += grid.step() * (0.3 - 0.8 * xe);
    ito += (0.2 + 0.4 * xe) * noise.increments[n - 1];
    xe = 0.7 + drift + ito;
    EXPECT_EQ(x[n], xe);
  }
}

TEST(SimulatePath, GeometricBrownianSecondMoment) {
  const double mu = 0.3, sigma = 0.4, x0 = 1.0;
  const TimeGrid grid(1.0, 256);
  const auto e =
      simulate_ensemble(spec(Family::linear(mu), kZero, Family::linear(sigma)), x0, AlphaOrder(0.5), grid, 20000, 11);
  const auto st = mc_ensemble_stats(e, {2});
  const double want = x0 * x0 * std::exp((2.0 * mu + sigma * sigma) * 1.0);
  // Euler bias is O(h); allow it on top of the statistical error.
  EXPECT_LT(std::abs(st.moments[0].mean.back() - want), 3.0 * st.moments[0].se.back() + 5e-3 * want);
}

TEST(SimulatePath, BlowUpReportsNode) {
  const TimeGrid grid(1.0, 2000);
  try {
    simulate_path(spec(Family::linear(1e6), kZero, kZero), 1.0, brownian_path(1, grid), AlphaOrder(0.5),
                  AbelWeights(AlphaOrder(0.5), grid));
    FAIL();
  } catch (const NodeError& e) {
    EXPECT_GT(e.node(), 0u);
  }
}

TEST(Ensemble, ThreadCountDoesNotChangePaths) {
  const TimeGrid grid(1.0, 64);
  const auto c = spec(Family::affine(0.1, -0.3), Family::linear(0.2), Family::affine(0.3, 0.1));
  const auto one = simulate_ensemble(c, 1.0, AlphaOrder(0.6), grid, 37, 5, 1);
  const auto four = simulate_ensemble(c, 1.0, AlphaOrder(0.6), grid, 37, 5, 4);
  for (std::size_t k = 0; k < 37; ++k) {
    for (std::size_t j = 0; j < grid.size(); ++j) ASSERT_EQ(one.paths[k][j], four.paths[k][j]);
  }
  // Path j depends only on (base_seed, j).
  const auto alone = simulate_path(c, 1.0, brownian_path(path_seed(5, 12), grid), AlphaOrder(0.6),
                                   AbelWeights(AlphaOrder(0.6), grid));
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_EQ(alone[j], one.paths[12][j]);
}

TEST(EnsembleStats, ConstantPaths) {
  const TimeGrid grid(1.0, 16);
  const auto e = simulate_ensemble(spec(kZero, kZero, kZero), 2.5, AlphaOrder(0.5), grid, 50, 1);
  const auto st = mc_ensemble_stats(e, {1, 2});
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_EQ(st.moments[0].mean[j], 2.5);
    EXPECT_EQ(st.moments[0].se[j], 0.0);
    EXPECT_EQ(st.variance[j], 0.0);
  }
  EXPECT_NEAR(st.integrated_second_moment, 6.25, 1e-12);
}

TEST(EnsembleStats, PureBrownian) {
  const double x0 = 0.5;
  const TimeGrid grid(1.0, 64);
  const auto e = simulate_ensemble(spec(kZero, kZero, Family::constant(1.0)), x0, AlphaOrder(0.5), grid, 40000, 8);
  const auto st = mc_ensemble_stats(e, {1, 2});
  EXPECT_LT(std::abs(st.variance.back() - 1.0), 3.0 * st.variance_se.back());
  // int_0^1 (x0^2 + t) dt; the trapezoid rule is exact for this linear mean.
  const double want = x0 * x0 + 0.5;
  EXPECT_LT(std::abs(st.integrated_second_moment - want), 3.0 * st.integrated_second_moment_se);
  EXPECT_GE(st.sup_second_moment.back(), st.moments[1].mean.back());
}

TEST(Picard, ZeroCoefficientsConvergeImmediately) {
  const TimeGrid grid(1.0, 32);
  const auto r = picard_solve_path(spec(kZero, kZero, kZero), 3.0, brownian_path(1, grid), AlphaOrder(0.5),
                                   AbelWeights(AlphaOrder(0.5), grid), 1e-8, 10);
  EXPECT_EQ(r.iterations, 1u);
  ASSERT_EQ(r.gaps.size(), 1u);
  EXPECT_EQ(r.gaps[0], 0.0);
  for (double v : r.path.values()) EXPECT_EQ(v, 3.0);
}

TEST(Picard, DeterministicCaseMatchesVolterra) {
  const TimeGrid grid(1.0, 1024);
  for (double a : {0.5, 0.75}) {
    const AbelWeights w(AlphaOrder(a), grid);
    const auto r = picard_solve_path(spec(kZero, Family::linear(1.0), kZero), 1.0, brownian_path(3, grid),
                                     AlphaOrder(a), w, 1e-8, 60);
    const auto u = solve_volterra(SampledFn::constant(grid, 1.0), SampledFn::constant(grid, 0.0),
                                  SampledFn::constant(grid, a), w);
    for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(r.path[j], u[j], 1e-6);
  }
}

TEST(Picard, BatteryConvergesAndContracts) {
  const TimeGrid grid(1.0, 512);
  for (double a : {0.5, 0.75}) {
    const AbelWeights w(AlphaOrder(a), grid);
    for (const auto& c : picard_battery()) {
      const auto noise = brownian_path(42, grid);
      const auto r = picard_solve_path(c, 1.0, noise, AlphaOrder(a), w, 1e-8, 30);
      EXPECT_LE(r.iterations, 30u);
      for (std::size_t k = r.gaps.size() / 2; k + 1 < r.gaps.size(); ++k) EXPECT_LT(r.gaps[k + 1], r.gaps[k]);
      // Picard limit and direct scheme differ by the scheme error, O(h^(1/2)).
      const auto x = simulate_path(c, 1.0, noise, AlphaOrder(a), w);
      double gap = 0.0;
      for (std::size_t j = 0; j < grid.size(); ++j) gap = std::max(gap, std::abs(x[j] - r.path[j]));
      EXPECT_LT(gap, 0.2 * std::sqrt(grid.step()));
    }
  }
}

TEST(Picard, NonConvergenceCarriesGaps) {
  const TimeGrid grid(1.0, 64);
  try {
    picard_solve_path(picard_battery()[0], 1.0, brownian_path(1, grid), AlphaOrder(0.5),
                      AbelWeights(AlphaOrder(0.5), grid), 1e-14, 3);
    FAIL();
  } catch (const PicardNonConvergence& e) {
    EXPECT_EQ(e.gaps().size(), 3u);
  }
}

TEST(Uniqueness, IdenticalStartsGiveZero) {
  const TimeGrid grid(1.0, 128);
  const AbelWeights w(AlphaOrder(0.5), grid);
  const auto c = picard_battery()[1];
  const auto noise = brownian_path(9, grid);
  EXPECT_EQ(uniqueness_probe(c, 1.0, noise, AlphaOrder(0.5), w, offset_starts(grid, 1.0, {0.0, 0.0})), 0.0);
}

TEST(Uniqueness, OffsetStartsAgree) {
  const TimeGrid grid(1.0, 256);
  const AbelWeights w(AlphaOrder(0.5), grid);
  const double tol = 1e-8;
  for (const auto& c : picard_battery()) {
    const auto noise = brownian_path(21, grid);
    EXPECT_LT(uniqueness_probe(c, 1.0, noise, AlphaOrder(0.5), w, offset_starts(grid, 1.0, {0.0, 5.0, -5.0}), tol),
              10.0 * tol);
  }
}

TEST(Uniqueness, ZeroCoefficientsAnyStarts) {
  const TimeGrid grid(1.0, 32);
  const AbelWeights w(AlphaOrder(0.5), grid);
  std::vector<SampledFn> starts{SampledFn::sample(grid, [](double t) { return std::sin(9.0 * t); }),
                                SampledFn::constant(grid, -4.0)};
  EXPECT_EQ(uniqueness_probe(spec(kZero, kZero, kZero), 1.0, brownian_path(1, grid), AlphaOrder(0.5), w, starts), 0.0);
}
