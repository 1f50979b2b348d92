#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "fracgb/verify.hpp"

using namespace fracgb;

namespace {

BatteryCase make_case(double alpha, Family a, Family b, Family g, std::size_t n = 256) {
  return {"test", AlphaOrder(alpha), a, b, g, TimeGrid(1.0, n), {}};
}

const Check* find(const Verdict& v, const std::string& name) {
  for (const auto& c : v.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST(Battery, LatticeShape) {
  const auto cases = default_battery(64);
  EXPECT_EQ(cases.size(), 108u);
  EXPECT_EQ(cases.front().case_id, "alpha=0.25;a=const:1;b=zero;g=zero");
  for (const auto& c : cases) EXPECT_EQ(c.grid.n_steps(), 64u);
  std::vector<std::string> ids;
  for (const auto& c : cases) ids.push_back(c.case_id);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
}

TEST(Battery, UnitExamplePasses) {
  const auto v = run_inequality_battery(
      {make_case(0.5, Family::constant(1.0), Family::constant(0.5), Family::constant(0.5))});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(v[0].passed());
  ASSERT_NE(find(v[0], "series_dominance"), nullptr);
  ASSERT_NE(find(v[0], "closed_dominance"), nullptr);
  EXPECT_GT(find(v[0], "closed_dominance")->worst_margin, 0.0);
}

TEST(Battery, FractionalOnlyCase) {
  const auto v = run_inequality_battery(
      {make_case(0.25, Family::affine(0.5, 2.0), Family::zero(), Family::constant(0.5), 1024)});
  EXPECT_TRUE(v[0].passed());
}

TEST(Battery, ZeroForcingPasses) {
  const auto v = run_inequality_battery({make_case(0.5, Family::zero(), Family::constant(0.5), Family::constant(0.5))});
  EXPECT_TRUE(v[0].passed());
  for (const auto& c : v[0].checks) EXPECT_GE(c.worst_margin, 0.0);
}

TEST(Battery, ScaledDownBoundsFail) {
  VerifyOptions opt;
  opt.bound_scale = 0.5;
  const auto v = run_inequality_battery(
      {make_case(0.5, Family::constant(1.0), Family::constant(0.5), Family::constant(0.5))}, opt);
  EXPECT_FALSE(v[0].passed());
  EXPECT_LT(find(v[0], "series_dominance")->worst_margin, 0.0);
}

TEST(Battery, HypothesisViolationIsRecordedNotThrown) {
  std::vector<BatteryCase> cases{make_case(0.5, Family::constant(1.0), Family::affine(1.0, -0.5), Family::constant(0.5)),
                                 make_case(0.5, Family::constant(1.0), Family::zero(), Family::zero())};
  std::vector<Verdict> v;
  ASSERT_NO_THROW(v = run_inequality_battery(cases));
  ASSERT_EQ(v.size(), 2u);
  EXPECT_FALSE(v[0].passed());
  bool mentions = false;
  for (const auto& c : v[0].checks) mentions = mentions || c.detail.find("nondecreasing") != std::string::npos;
  EXPECT_TRUE(mentions);
  EXPECT_TRUE(v[1].passed());
}

TEST(Battery, QuickBatteryAllPass) {
  VerifyOptions opt;
  opt.threads = 4;
  const auto v = run_inequality_battery(quick_battery(), opt);
  EXPECT_EQ(v.size(), 27u);
  for (const auto& x : v) EXPECT_TRUE(x.passed()) << x.case_id;
}

TEST(Battery, ThreadCountDoesNotChangeResults) {
  const auto cases = default_battery(64);
  VerifyOptions one, many;
  many.threads = 7;
  const auto a = run_inequality_battery(cases, one);
  const auto b = run_inequality_battery(cases, many);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].checks.size(), b[k].checks.size());
    for (std::size_t c = 0; c < a[k].checks.size(); ++c) {
      EXPECT_EQ(a[k].checks[c].worst_margin, b[k].checks[c].worst_margin);
      EXPECT_EQ(a[k].checks[c].t, b[k].checks[c].t);
    }
  }
}

TEST(Reductions, AllPass) {
  const auto v = run_reduction_suite();
  EXPECT_EQ(v.size(), 28u);
  for (const auto& x : v) {
    EXPECT_TRUE(x.passed()) << x.case_id;
    EXPECT_FALSE(x.checks.empty());
  }
}
