#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracgb/gronwall.hpp"

using namespace fracgb;

namespace {

SampledFn constant(const TimeGrid& g, double c) { return SampledFn::constant(g, c); }

MixedBoundParams params(double alpha, double cap = 1.0) {
  MixedBoundParams p;
  p.alpha = AlphaOrder(alpha);
  p.m_cap = cap;
  return p;
}

// Reference E_{1/2}(z) = exp(z^2) erfc(-z).
double ml_half(double z) { return std::exp(z * z) * std::erfc(-z); }

}  // namespace

TEST(ClassicalBound, ConstantData) {
  const TimeGrid grid(2.0, 100);
  const auto b = classical_bound(constant(grid, 3.0), constant(grid, 0.7), true);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_NEAR(b.values[j], 3.0 * std::exp(0.7 * grid.node(j)), 1e-12);
    EXPECT_EQ(b.tail_bound[j], 0.0);
  }
}

TEST(ClassicalBound, ZeroKernelKeepsH) {
  const TimeGrid grid(1.0, 40);
  const auto h = SampledFn::sample(grid, [](double t) { return 2.0 - std::cos(t); });
  const auto b = classical_bound(h, constant(grid, 0.0), false);
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_DOUBLE_EQ(b.values[j], h[j]);
}

TEST(ClassicalBound, GeneralFormMatchesIntegral) {
  // h(t) = t, k = 1: 1 + int_0^1 s e^(1-s) ds = e - 1
  const TimeGrid grid(1.0, 1024);
  const auto b = classical_bound(SampledFn::sample(grid, [](double t) { return t; }), constant(grid, 1.0), false);
  EXPECT_NEAR(b.values.back(), std::numbers::e - 1.0, 1e-6);
}

TEST(ClassicalBound, RejectsNegativeKernel) {
  const TimeGrid grid(1.0, 8);
  EXPECT_THROW(classical_bound(constant(grid, 1.0), constant(grid, -0.1), true), HypothesisError);
}

TEST(FractionalBound, ClosedForm) {
  const TimeGrid grid(1.0, 64);
  const auto b = fractional_bound(constant(grid, 1.0), constant(grid, 0.6), AlphaOrder(0.5), true, params(0.5));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_NEAR(b.values[j] / ml_half(0.6 * std::sqrt(std::numbers::pi * grid.node(j))), 1.0, 1e-13);
  }
}

TEST(FractionalBound, ZeroKernelKeepsA) {
  const TimeGrid grid(1.0, 32);
  const auto a = SampledFn::sample(grid, [](double t) { return 1.0 + t * t; });
  const auto closed = fractional_bound(a, constant(grid, 0.0), AlphaOrder(0.3), true, params(0.3));
  const auto series = fractional_bound(a, constant(grid, 0.0), AlphaOrder(0.3), false, params(0.3));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_DOUBLE_EQ(closed.values[j], a[j]);
    EXPECT_DOUBLE_EQ(series.values[j], a[j]);
  }
}

TEST(FractionalBound, SeriesAgreesWithClosedForm) {
  const TimeGrid grid(1.0, 64);
  const auto one = constant(grid, 1.0);
  const auto closed = fractional_bound(one, one, AlphaOrder(0.5), true, params(0.5));
  const auto series = fractional_bound(one, one, AlphaOrder(0.5), false, params(0.5));
  EXPECT_NEAR(series.values.back() / closed.values.back(), 1.0, 1e-8);
  EXPECT_GT(series.truncation.back(), 0u);
}

TEST(FractionalBound, Hypotheses) {
  const TimeGrid grid(1.0, 16);
  const auto one = constant(grid, 1.0);
  const auto down = SampledFn::sample(grid, [](double t) { return 1.0 - 0.5 * t; });
  EXPECT_THROW(fractional_bound(one, down, AlphaOrder(0.5), true, params(0.5)), HypothesisError);
  EXPECT_THROW(fractional_bound(down, one, AlphaOrder(0.5), true, params(0.5)), HypothesisError);
  EXPECT_THROW(fractional_bound(one, constant(grid, 2.0), AlphaOrder(0.5), true, params(0.5, 1.0)), HypothesisError);
}

TEST(MixedSeries, ReducesToFractionalWhenBIsZero) {
  const TimeGrid grid(1.0, 128);
  for (double a : {0.25, 0.5, 0.9}) {
    const auto af = SampledFn::sample(grid, [](double t) { return 0.5 + 2.0 * t; });
    const auto g = constant(grid, 0.5);
    const auto mixed = mixed_bound_series(af, constant(grid, 0.0), g, params(a));
    const auto frac = fractional_bound(af, g, AlphaOrder(a), false, params(a));
    for (std::size_t j = 0; j < grid.size(); ++j) {
      EXPECT_EQ(mixed.values[j], frac.values[j]);
      EXPECT_EQ(mixed.tail_bound[j], frac.tail_bound[j]);
    }
  }
}

TEST(MixedSeries, ReducesToClassicalWhenGIsZero) {
  const TimeGrid grid(1.0, 128);
  // constant a: sum b^n t^n / n! = e^(b t)
  const auto s = mixed_bound_series(constant(grid, 2.0), constant(grid, 0.8), constant(grid, 0.0), params(0.5));
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(s.values[j] / (2.0 * std::exp(0.8 * grid.node(j))), 1.0, 1e-11);
  // a(t) = t: iterated series is t + int_0^t s b e^(b (t-s)) ds = (e^(b t) - 1) / b
  const auto lin = mixed_bound_series(SampledFn::sample(grid, [](double t) { return t; }), constant(grid, 0.8),
                                      constant(grid, 0.0), params(0.75));
  EXPECT_NEAR(lin.values.back(), (std::exp(0.8) - 1.0) / 0.8, 1e-11);
}

TEST(MixedSeries, UnitDataBelowClosedAndAboveVolterra) {
  const TimeGrid grid(1.0, 512);
  const auto one = constant(grid, 1.0);
  const auto s = mixed_bound_series(one, one, one, params(0.5));
  const auto c = mixed_bound_closed(one, one, one, AlphaOrder(0.5));
  const auto u = solve_volterra(one, one, one, AlphaOrder(0.5));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_LE(s.values[j], c.values[j] * (1.0 + 1e-12));
    EXPECT_LE(u[j], s.values[j] + s.tail_bound[j] + 1e-8 + 1e-6 * u[j]);
    EXPECT_GE(s.tail_bound[j], 0.0);
    EXPECT_TRUE(std::isfinite(s.tail_bound[j]));
    EXPECT_LE(s.tail_bound[j], 1e-12 * s.values[j] + 1e-300);
  }
}

TEST(MixedSeries, PartialSumsNondecreasing) {
  for (unsigned n = 1; n < 40; ++n) {
    EXPECT_GE(log_mixed_double_sum(0.7, 1.2, AlphaOrder(0.5), 1.3, n),
              log_mixed_double_sum(0.7, 1.2, AlphaOrder(0.5), 1.3, n - 1));
  }
}

TEST(MixedSeries, ConvergenceFailureIsReported) {
  const TimeGrid grid(1.0, 16);
  auto p = params(0.25, 2.0);
  p.n_max = 8;
  EXPECT_THROW(mixed_bound_series(constant(grid, 1.0), constant(grid, 2.0), constant(grid, 2.0), p),
               ConvergenceError);
}

TEST(MixedClosed, UnitExample) {
  const TimeGrid grid(1.0, 10);
  const auto one = constant(grid, 1.0);
  const auto c = mixed_bound_closed(one, one, one, AlphaOrder(0.5));
  const double want = ml_half(std::sqrt(std::numbers::pi)) * std::exp(2.0);
  EXPECT_NEAR(c.values.back() / want, 1.0, 1e-13);
  EXPECT_NEAR(c.values.back(), 339.89160098745416, 1e-10);
}

TEST(MixedClosed, Reductions) {
  const TimeGrid grid(1.5, 30);
  const auto a = SampledFn::sample(grid, [](double t) { return 1.0 + t; });
  const auto g = constant(grid, 0.4);
  const auto zero = constant(grid, 0.0);
  const auto c = mixed_bound_closed(a, zero, g, AlphaOrder(0.5));
  const auto f = fractional_bound(a, g, AlphaOrder(0.5), true, params(0.5));
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(c.values[j] / f.values[j], 1.0, 1e-14);
  const auto b = constant(grid, 0.9);
  const auto cl = mixed_bound_closed(a, b, zero, AlphaOrder(1.0));
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(cl.values[j] / (a[j] * std::exp(0.9 * grid.node(j))), 1.0, 1e-14);
}

TEST(MixedClosed, RequiresNondecreasingA) {
  const TimeGrid grid(1.0, 10);
  const auto a = SampledFn::sample(grid, [](double t) { return 2.0 - t; });
  const auto one = constant(grid, 1.0);
  try {
    mixed_bound_closed(a, one, one, AlphaOrder(0.5));
    FAIL();
  } catch (const HypothesisError& e) {
    EXPECT_NE(std::string(e.what()).find("a(t) must be nondecreasing"), std::string::npos);
  }
  // Flat up to rounding is accepted.
  std::vector<double> flat(grid.size(), 1.0);
  flat[5] -= 1e-14;
  EXPECT_NO_THROW(mixed_bound_closed(SampledFn(grid, flat), one, one, AlphaOrder(0.5)));
}

TEST(OperatorB, Examples) {
  const TimeGrid grid(1.0, 64);
  const AbelWeights w(AlphaOrder(0.5), grid);
  const auto b = SampledFn::sample(grid, [](double t) { return 1.0 + t; });
  const auto g = constant(grid, 0.3);
  const auto r = apply_operator_B(constant(grid, 1.0), b, g, w);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.node(j);
    EXPECT_NEAR(r[j], b[j] * t + 0.3 * std::sqrt(t) / 0.5, 1e-12);
  }
  const auto z = apply_operator_B(constant(grid, 0.0), b, g, w);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
  const auto q = apply_operator_B(SampledFn::sample(grid, [](double s) { return s; }), constant(grid, 1.0),
                                  constant(grid, 0.0), w);
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(q[j], 0.5 * grid.node(j) * grid.node(j), 1e-14);
}

TEST(OperatorPowerBound, Examples) {
  EXPECT_LT(operator_power_bound(200, 0.5, 0.5, AlphaOrder(0.5), 1.0, 1.0), 1e-12);
  EXPECT_EQ(operator_power_bound(7, 1.0, 1.0, AlphaOrder(0.5), 1.0, 0.0), 0.0);
  // n = 1: (b + g) max{t^(alpha-1), t} u_int
  EXPECT_NEAR(operator_power_bound(1, 0.3, 0.4, AlphaOrder(0.5), 4.0, 2.0), 0.7 * 4.0 * 2.0, 1e-13);
  EXPECT_NEAR(operator_power_bound(1, 0.3, 0.4, AlphaOrder(0.999), 0.5, 2.0), 0.7 * 1.0 * 2.0, 2e-3);
  EXPECT_THROW(operator_power_bound(0, 1.0, 1.0, AlphaOrder(0.5), 1.0, 1.0), DomainError);
}

TEST(OperatorPowerBound, DecaysPastRidge) {
  double prev = operator_power_bound(60, 1.0, 1.0, AlphaOrder(0.5), 1.0, 1.0);
  for (unsigned n = 61; n <= 400; ++n) {
    const double v = operator_power_bound(n, 1.0, 1.0, AlphaOrder(0.5), 1.0, 1.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(ThirdClaim, CertificateDominatesDoubleSum) {
  for (double a : {0.25, 0.5, 0.75, 0.9}) {
    for (double m : {0.5, 1.0, 2.0}) {
      for (double tau : {0.5, 1.0, 2.0}) {
        EXPECT_LE(log_mixed_double_sum(m, m, AlphaOrder(a), tau, 60), log_mixed_certificate(m, AlphaOrder(a), tau))
            << a << " " << m << " " << tau;
      }
    }
  }
}

TEST(MixedParams, Validation) {
  MixedBoundParams p;
  p.series_tol = 1e-3;
  EXPECT_THROW(p.validate(), DomainError);
  p = MixedBoundParams{};
  p.n_max = 4;
  EXPECT_THROW(p.validate(), DomainError);
  p = MixedBoundParams{};
  p.alpha = AlphaOrder(1.0);
  EXPECT_THROW(p.validate(), HypothesisError);
}
