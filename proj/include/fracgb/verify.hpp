#pragma once

// Batch verification: extremal Volterra solutions against the Gronwall-type
// bounds over parameter lattices, plus the reduction checks between the
// mixed, fractional and classical evaluators.

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "fracgb/families.hpp"
#include "fracgb/grid.hpp"
#include "fracgb/gronwall.hpp"
#include "fracgb/singquad.hpp"

namespace fracgb {

struct Tolerances {
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
};

struct BatteryCase {
  std::string case_id;
  AlphaOrder alpha{0.5};
  Family a_spec;
  Family b_spec;
  Family g_spec;
  TimeGrid grid{1.0, 1024};
  Tolerances tol;
};

struct Check {
  std::string name;
  bool pass = false;
  double worst_margin = 0.0;  // min over nodes of bound - u + eps_abs + eps_rel |u|
  double t = 0.0;             // node of the worst margin
  std::string detail;         // diagnostics for failed oracles
};

struct Verdict {
  std::string case_id;
  std::vector<Check> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

struct VerifyOptions {
  double series_tol = 1e-12;
  unsigned n_max = 400;
  double bound_scale = 1.0;  // test hook: values below 1 must make the battery fail
  unsigned threads = 1;
};

namespace detail {

inline Check dominance_check(const std::string& name, const SampledFn& u, const BoundCurve& bound, bool add_tail,
                             const Tolerances& tol, double scale) {
  Check c{name, true, std::numeric_limits<double>::infinity(), 0.0, {}};
  for (std::size_t j = 0; j < u.size(); ++j) {
    double b = bound.values[j];
    if (add_tail) b += bound.tail_bound[j];
    b *= scale;
    const double margin = b - u[j] + tol.eps_abs + tol.eps_rel * std::abs(u[j]);
    if (margin < c.worst_margin) {
      c.worst_margin = margin;
      c.t = u.grid().node(j);
    }
  }
  c.pass = c.worst_margin >= 0.0;
  return c;
}

inline Check failed_check(const std::string& name, const std::string& why) { return {name, false, 0.0, 0.0, why}; }

inline double cap_of(const SampledFn& b, const SampledFn& g) {
  const double m = std::max(*std::max_element(b.values().begin(), b.values().end()),
                            *std::max_element(g.values().begin(), g.values().end()));
  return m > 0.0 ? m : 1.0;
}

inline Verdict run_case(const BatteryCase& bc, const VerifyOptions& opt) {
  Verdict v{bc.case_id, {}};
  try {
    const auto a = bc.a_spec.sample(bc.grid);
    const auto b = bc.b_spec.sample(bc.grid);
    const auto g = bc.g_spec.sample(bc.grid);
    const auto u = solve_volterra(a, b, g, bc.alpha);

    MixedBoundParams p;
    p.alpha = bc.alpha;
    p.m_cap = cap_of(b, g);
    p.series_tol = opt.series_tol;
    p.n_max = opt.n_max;
    try {
      const auto series = mixed_bound_series(a, b, g, p);
      v.checks.push_back(dominance_check("series_dominance", u, series, true, bc.tol, opt.bound_scale));
    } catch (const std::exception& e) {
      v.checks.push_back(failed_check("series_dominance", e.what()));
    }
    if (is_nondecreasing(a.values())) {
      try {
        const auto closed = mixed_bound_closed(a, b, g, bc.alpha);
        v.checks.push_back(dominance_check("closed_dominance", u, closed, false, bc.tol, opt.bound_scale));
      } catch (const std::exception& e) {
        v.checks.push_back(failed_check("closed_dominance", e.what()));
      }
    }
  } catch (const std::exception& e) {
    v.checks.push_back(failed_check("oracle", e.what()));
  }
  return v;
}

}  // namespace detail

/// alpha x a x b x g lattice: alpha in {0.25, 0.5, 0.75, 0.9}, a in
/// {1, 1+t, 0.5+2t}, b and g in {0, 0.25, 0.5}; 108 cases on [0, 1].
inline std::vector<BatteryCase> default_battery(std::size_t n_steps = 1024, double t_end = 1.0) {
  const std::vector<double> alphas{0.25, 0.5, 0.75, 0.9};
  const std::vector<Family> as{Family::constant(1.0), Family::affine(1.0, 1.0), Family::affine(0.5, 2.0)};
  const std::vector<double> levels{0.0, 0.25, 0.5};
  std::vector<BatteryCase> out;
  for (double al : alphas) {
    for (const auto& a : as) {
      for (double bl : levels) {
        for (double gl : levels) {
          const Family b = bl == 0.0 ? Family::zero() : Family::constant(bl);
          const Family g = gl == 0.0 ? Family::zero() : Family::constant(gl);
          BatteryCase c{"alpha=" + detail::format_double(al) + ";a=" + a.to_string() + ";b=" + b.to_string() +
                            ";g=" + g.to_string(),
                        AlphaOrder(al), a, b, g, TimeGrid(t_end, n_steps), {}};
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

/// The alpha = 0.5 slice of the default lattice (27 cases). The grid stays at
/// n = 1024: on coarser grids the discrete Volterra solution itself can
/// overshoot the exact one by more than the dominance tolerance.
inline std::vector<BatteryCase> quick_battery(std::size_t n_steps = 1024, double t_end = 1.0) {
  auto all = default_battery(n_steps, t_end);
  std::vector<BatteryCase> out;
  for (auto& c : all) {
    if (c.alpha.value() == 0.5) out.push_back(std::move(c));
  }
  return out;
}

/// One Verdict per case, in input order. Never throws for a bad case.
inline std::vector<Verdict> run_inequality_battery(const std::vector<BatteryCase>& cases,
                                                   const VerifyOptions& opt = {}) {
  std::vector<Verdict> out(cases.size());
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(cases.size())));
  if (threads <= 1) {
    for (std::size_t k = 0; k < cases.size(); ++k) out[k] = detail::run_case(cases[k], opt);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t k = t; k < cases.size(); k += threads) out[k] = detail::run_case(cases[k], opt);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

namespace detail {

// Check that passes when every relative gap is at most `limit`; the margin is
// limit - worst gap.
struct GapTracker {
  std::string name;
  double limit;
  double worst = 0.0;
  double where = 0.0;

  void observe(double got, double want, double t) {
    const double scale = std::max(std::abs(want), std::numeric_limits<double>::min());
    const double gap = got == want ? 0.0 : std::abs(got - want) / scale;
    if (gap > worst || std::isnan(gap)) {
      worst = gap;
      where = t;
    }
  }

  Check finish() const { return {name, worst <= limit, limit - worst, where, {}}; }
};

}  // namespace detail

/// Reduction checks:
///   * b = 0: mixed series equals the fractional series (relative 1e-10) and
///     the Mittag-Leffler closed form (relative 1e-9);
///   * g = 0: mixed series equals a e^(b t) for constant data, and the closed
///     form approaches the classical bound monotonically as alpha -> 1;
///   * a = 0: every bound vanishes.
inline std::vector<Verdict> run_reduction_suite(std::size_t n_steps = 256, double t_end = 1.0) {
  const TimeGrid grid(t_end, n_steps);
  std::vector<Verdict> out;
  const std::vector<double> alphas{0.25, 0.5, 0.75, 0.9};
  const std::vector<Family> as{Family::constant(1.0), Family::affine(1.0, 1.0), Family::affine(0.5, 2.0)};

  for (double al : alphas) {
    for (const auto& af : as) {
      for (double gl : {0.25, 0.5}) {
        const auto a = af.sample(grid);
        const auto zero = SampledFn::constant(grid, 0.0);
        const auto g = SampledFn::constant(grid, gl);
        MixedBoundParams p;
        p.alpha = AlphaOrder(al);
        p.m_cap = gl;
        Verdict v{"reduction:b=0;alpha=" + detail::format_double(al) + ";a=" + af.to_string() +
                      ";g=" + detail::format_double(gl),
                  {}};
        try {
          const auto mixed = mixed_bound_series(a, zero, g, p);
          const auto frac = fractional_bound(a, g, p.alpha, false, p);
          const auto closed = fractional_bound(a, g, p.alpha, true, p);
          detail::GapTracker series_gap{"b0_series_vs_fractional", 1e-10};
          detail::GapTracker closed_gap{"b0_series_vs_closed", 1e-9};
          for (std::size_t j = 0; j < grid.size(); ++j) {
            series_gap.observe(mixed.values[j], frac.values[j], grid.node(j));
            if (af.kind() == FamilyKind::constant) closed_gap.observe(mixed.values[j], closed.values[j], grid.node(j));
          }
          v.checks.push_back(series_gap.finish());
          if (af.kind() == FamilyKind::constant) v.checks.push_back(closed_gap.finish());
        } catch (const std::exception& e) {
          v.checks.push_back(detail::failed_check("b0_series_vs_fractional", e.what()));
        }
        out.push_back(std::move(v));
      }
    }
  }

  for (double bl : {0.25, 0.5, 1.0}) {
    const auto a = SampledFn::constant(grid, 1.0);
    const auto b = SampledFn::constant(grid, bl);
    const auto zero = SampledFn::constant(grid, 0.0);
    Verdict v{"reduction:g=0;b=" + detail::format_double(bl), {}};
    try {
      const auto classical = classical_bound(a, b, true);
      MixedBoundParams p;
      p.alpha = AlphaOrder(0.5);
      p.m_cap = bl;
      const auto series = mixed_bound_series(a, b, zero, p);
      detail::GapTracker series_gap{"g0_series_vs_classical", 1e-9};
      for (std::size_t j = 0; j < grid.size(); ++j) series_gap.observe(series.values[j], classical.values[j], grid.node(j));
      v.checks.push_back(series_gap.finish());

      double previous = std::numeric_limits<double>::infinity();
      bool monotone = true;
      double last_gap = 0.0;
      for (double al : {0.9, 0.99, 0.999}) {
        const auto closed = mixed_bound_closed(a, b, zero, AlphaOrder(al));
        const double gap = std::abs(closed.values.back() - classical.values.back()) / classical.values.back();
        monotone = monotone && gap < previous;
        previous = gap;
        last_gap = gap;
      }
      v.checks.push_back({"g0_monotone_approach", monotone, monotone ? 0.0 : -1.0, t_end, {}});
      v.checks.push_back({"g0_final_gap", last_gap < 0.01, 0.01 - last_gap, t_end, {}});
    } catch (const std::exception& e) {
      v.checks.push_back(detail::failed_check("g0_reduction", e.what()));
    }
    out.push_back(std::move(v));
  }

  {
    const auto zero = SampledFn::constant(grid, 0.0);
    const auto half = SampledFn::constant(grid, 0.5);
    Verdict v{"reduction:a=0", {}};
    try {
      MixedBoundParams p;
      p.alpha = AlphaOrder(0.5);
      p.m_cap = 0.5;
      const auto series = mixed_bound_series(zero, half, half, p);
      const auto closed = mixed_bound_closed(zero, half, half, p.alpha);
      const auto frac = fractional_bound(zero, half, p.alpha, false, p);
      const auto classical = classical_bound(zero, half, true);
      const auto u = solve_volterra(zero, half, half, p.alpha);
      double worst = 0.0;
      for (const auto* c : {&series, &closed, &frac, &classical}) {
        for (std::size_t j = 0; j < grid.size(); ++j) worst = std::max({worst, std::abs(c->values[j]), c->tail_bound[j]});
      }
      for (std::size_t j = 0; j < grid.size(); ++j) worst = std::max(worst, std::abs(u[j]));
      v.checks.push_back({"a0_all_bounds_zero", worst == 0.0, -worst, 0.0, {}});
    } catch (const std::exception& e) {
      v.checks.push_back(detail::failed_check("a0_all_bounds_zero", e.what()));
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace fracgb
