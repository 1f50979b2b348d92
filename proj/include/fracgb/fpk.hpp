#pragma once

// One-dimensional fractional Fokker-Planck-Kolmogorov equation in integral form
//
//   P(t) - P(0) = int_0^t A* P ds + alpha int_0^t (t-s)^(alpha-1) B* P ds,
//
//   A* h = -d/dx [b h] + 1/2 d2/dx2 [sigma2^2 h],    B* h = -d/dx [sigma1 h],
//
// on a cell-centred grid with zero-flux walls. A* uses central fluxes, B* an
// upwind flux. Time integrals use the trapezoid rule and product-trapezoid
// Abel weights, so each step is one tridiagonal solve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fracgb/errors.hpp"
#include "fracgb/grid.hpp"
#include "fracgb/sdesim.hpp"
#include "fracgb/singquad.hpp"

namespace fracgb {

/// Cells [x_min + i h, x_min + (i+1) h], values at the centres.
class SpaceGrid {
 public:
  SpaceGrid(double x_min, double x_max, std::size_t n_cells) : x_min_(x_min), x_max_(x_max), n_cells_(n_cells) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
      throw DomainError("SpaceGrid: need finite x_min < x_max");
    }
    if (n_cells < 16) throw DomainError("SpaceGrid: n_cells must be at least 16");
  }

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t n_cells() const noexcept { return n_cells_; }
  double step() const noexcept { return (x_max_ - x_min_) / static_cast<double>(n_cells_); }
  double center(std::size_t i) const noexcept { return x_min_ + (static_cast<double>(i) + 0.5) * step(); }
  /// Face between cells i-1 and i (face 0 is x_min).
  double face(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * step(); }

  friend bool operator==(const SpaceGrid&, const SpaceGrid&) = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_cells_;
};

/// Tridiagonal matrix; lower[0] and upper[n-1] are unused.
struct Tridiag {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  explicit Tridiag(std::size_t n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

  std::size_t size() const noexcept { return diag.size(); }

  void apply(std::span<const double> p, std::span<double> out) const noexcept {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * p[i];
      if (i > 0) s += lower[i] * p[i - 1];
      if (i + 1 < n) s += upper[i] * p[i + 1];
      out[i] = s;
    }
  }

  std::vector<double> apply(std::span<const double> p) const {
    std::vector<double> out(size());
    apply(p, out);
    return out;
  }

  /// Sum of each column; zero for a mass-neutral stencil.
  std::vector<double> column_sums() const {
    const std::size_t n = size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
      double s = diag[j];
      if (j > 0) s += upper[j - 1];
      if (j + 1 < n) s += lower[j + 1];
      out[j] = s;
    }
    return out;
  }
};

/// Thomas algorithm; no pivoting (callers pass diagonally dominant systems).
inline std::vector<double> solve_tridiagonal(const Tridiag& m, std::vector<double> rhs) {
  const std::size_t n = m.size();
  std::vector<double> c(n);
  double denom = m.diag[0];
  if (denom == 0.0) throw DomainError("solve_tridiagonal: zero pivot");
  c[0] = n > 1 ? m.upper[0] / denom : 0.0;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = m.diag[i] - m.lower[i] * c[i - 1];
    if (denom == 0.0) throw DomainError("solve_tridiagonal: zero pivot");
    c[i] = i + 1 < n ? m.upper[i] / denom : 0.0;
    rhs[i] = (rhs[i] - m.lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
  return rhs;
}

struct SpatialOperators {
  Tridiag a_star;  // -d/dx[b .] + 1/2 d2/dx2[sigma2^2 .]
  Tridiag b_star;  // -d/dx[sigma1 .], upwind
};

/// Conservative stencils with zero flux through x_min and x_max. The
/// coefficients are autonomous, so `t` only documents the evaluation time.
inline SpatialOperators spatial_operators(const CoeffSpec& c, const SpaceGrid& xg, double /*t*/ = 0.0) {
  const std::size_t n = xg.n_cells();
  const double h = xg.step();
  SpatialOperators ops{Tridiag(n), Tridiag(n)};
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = c.sigma2()(xg.center(i));
    diff[i] = s * s;
  }
  // Interior face f sits between cells f-1 and f. Central flux
  //   F = b_f (P_{f-1} + P_f)/2 - (D_f P_f - D_{f-1} P_{f-1}) / (2h),
  // upwind flux G = v+ P_{f-1} + v- P_f; cell i gains (F_i - F_{i+1}) / h.
  for (std::size_t f = 1; f < n; ++f) {
    const std::size_t l = f - 1, r = f;
    const double xf = xg.face(f);
    const double bf = c.drift()(xf);
    const double cl = (0.5 * bf + 0.5 * diff[l] / h) / h;  // flux weight on P_l
    const double cr = (0.5 * bf - 0.5 * diff[r] / h) / h;  // flux weight on P_r
    auto& A = ops.a_star;
    A.diag[l] -= cl;
    A.upper[l] -= cr;
    A.lower[r] += cl;
    A.diag[r] += cr;

    const double v = c.sigma1()(xf);
    const double vp = std::max(v, 0.0) / h;
    const double vm = std::min(v, 0.0) / h;
    auto& B = ops.b_star;
    B.diag[l] -= vp;
    B.upper[l] -= vm;
    B.lower[r] += vp;
    B.diag[r] += vm;
  }
  return ops;
}

/// Transition density on (time grid x space grid), row-major by time.
struct DensityField {
  AlphaOrder alpha{0.5};
  double x0 = 0.0;
  TimeGrid tgrid{1.0, 1};
  SpaceGrid xgrid{0.0, 1.0, 16};
  std::vector<double> P;
  std::vector<double> mass;       // sum_i P[n][i] h_x per time node
  double max_mass_drift = 0.0;    // max_n |mass_n - 1|
  double min_value = 0.0;         // min over all nodes (before any clipping)
  double mollifier_variance = 0.0;  // discrete variance of the initial slice

  std::span<const double> slice(std::size_t n) const {
    const std::size_t m = xgrid.n_cells();
    return std::span<const double>(P).subspan(n * m, m);
  }

  /// sum_i f(x_i) P[n][i] h_x
  template <class F>
  double expect(std::size_t n, F&& f) const {
    const auto s = slice(n);
    const double h = xgrid.step();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += f(xgrid.center(i)) * s[i] * h;
    return acc;
  }

  double mean(std::size_t n) const {
    return expect(n, [](double x) { return x; });
  }

  double variance(std::size_t n) const {
    const double m = mean(n);
    return expect(n, [m](double x) { return (x - m) * (x - m); });
  }
};

struct FpkOptions {
  double mass_tol = 1e-3;
  double cfl_limit = 0.5;
};

/// Normalized grid Gaussian with standard deviation h_x centred at x0.
inline std::vector<double> mollified_delta(const SpaceGrid& xg, double x0) {
  const double h = xg.step();
  std::vector<double> p(xg.n_cells());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = (xg.center(i) - x0) / h;
    p[i] = std::exp(-0.5 * z * z);
    total += p[i] * h;
  }
  if (!(total > 0.0)) throw DomainError("fpk_solve: x0 lies outside the spatial domain");
  for (double& v : p) v /= total;
  return p;
}

inline DensityField fpk_solve(const CoeffSpec& c, double x0, AlphaOrder alpha, const TimeGrid& tg, const SpaceGrid& xg,
                              const FpkOptions& opt = {}) {
  if (!(x0 > xg.x_min() && x0 < xg.x_max())) throw DomainError("fpk_solve: x0 must lie inside the spatial domain");
  const std::size_t m = xg.n_cells();
  const double hx = xg.step();
  const double ht = tg.step();
  double max_diff = 0.0;
  for (std::size_t i = 0; i < m; ++i) max_diff = std::max(max_diff, std::pow(c.sigma2()(xg.center(i)), 2));
  const double cfl = max_diff * ht / (hx * hx);
  if (cfl > opt.cfl_limit) {
    throw DomainError("fpk_solve: CFL violation, sigma2^2 dt / dx^2 = " + std::to_string(cfl) + " > " +
                      std::to_string(opt.cfl_limit));
  }

  const auto ops = spatial_operators(c, xg);
  const bool has_frac = !c.sigma1().is_zero();
  const AbelWeights w(alpha, tg);
  const double a = alpha.value();

  // System matrix I - ht/2 A* - alpha w_nn B*, identical at every step.
  Tridiag sys(m);
  for (std::size_t i = 0; i < m; ++i) {
    sys.lower[i] = -0.5 * ht * ops.a_star.lower[i];
    sys.diag[i] = 1.0 - 0.5 * ht * ops.a_star.diag[i];
    sys.upper[i] = -0.5 * ht * ops.a_star.upper[i];
    if (has_frac) {
      sys.lower[i] -= a * w.diagonal() * ops.b_star.lower[i];
      sys.diag[i] -= a * w.diagonal() * ops.b_star.diag[i];
      sys.upper[i] -= a * w.diagonal() * ops.b_star.upper[i];
    }
  }

  DensityField out;
  out.alpha = alpha;
  out.x0 = x0;
  out.tgrid = tg;
  out.xgrid = xg;
  out.P.assign(tg.size() * m, 0.0);
  out.mass.assign(tg.size(), 0.0);

  const auto p0 = mollified_delta(xg, x0);
  std::copy(p0.begin(), p0.end(), out.P.begin());
  {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += xg.center(i) * p0[i] * hx;
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) var += std::pow(xg.center(i) - mean, 2) * p0[i] * hx;
    out.mollifier_variance = var;
  }

  std::vector<std::vector<double>> bp_hist;  // B* P_j, j < n
  std::vector<double> ap_sum(m, 0.0);         // ht (AP_0/2 + AP_1 + ... + AP_{n-1})
  std::vector<double> ap(m), rhs(m);
  auto mass_of = [hx](std::span<const double> s) {
    double acc = 0.0;
    for (double v : s) acc += v * hx;
    return acc;
  };
  out.mass[0] = mass_of(p0);
  out.min_value = *std::min_element(p0.begin(), p0.end());

  for (std::size_t n = 1; n < tg.size(); ++n) {
    const auto prev = out.slice(n - 1);
    ops.a_star.apply(prev, ap);
    const double f = (n == 1) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < m; ++i) ap_sum[i] += f * ht * ap[i];
    if (has_frac) bp_hist.push_back(ops.b_star.apply(prev));

    for (std::size_t i = 0; i < m; ++i) rhs[i] = p0[i] + ap_sum[i];
    if (has_frac) {
      for (std::size_t j = 0; j < n; ++j) {
        const double wj = a * w.weight(n, j);
        const auto& bp = bp_hist[j];
        for (std::size_t i = 0; i < m; ++i) rhs[i] += wj * bp[i];
      }
    }
    // The trapezoid closure contributes ht/2 A* P_n, handled implicitly.
    const auto pn = solve_tridiagonal(sys, rhs);
    std::copy(pn.begin(), pn.end(), out.P.begin() + static_cast<std::ptrdiff_t>(n * m));
    for (double v : pn) {
      if (!std::isfinite(v)) throw NodeError("fpk_solve: non-finite density", n);
    }
    out.min_value = std::min(out.min_value, *std::min_element(pn.begin(), pn.end()));
    out.mass[n] = mass_of(pn);
    const double drift = std::abs(out.mass[n] - 1.0);
    out.max_mass_drift = std::max(out.max_mass_drift, drift);
    if (drift > opt.mass_tol) {
      throw NodeError("fpk_solve: mass drift " + std::to_string(drift) + " exceeds " + std::to_string(opt.mass_tol) +
                          " (widen the domain or refine the grid)",
                      n);
    }
  }
  return out;
}

/// Scalar test functions V(x) with closed-form derivatives.
enum class TestFunction { x, x2, cos };

inline TestFunction parse_test_function(std::string_view s) {
  if (s == "x") return TestFunction::x;
  if (s == "x2" || s == "x^2") return TestFunction::x2;
  if (s == "cos" || s == "cosx") return TestFunction::cos;
  throw DomainError("unknown test function '" + std::string(s) + "' (expected x, x2 or cos)");
}

inline std::string to_string(TestFunction v) {
  switch (v) {
    case TestFunction::x: return "x";
    case TestFunction::x2: return "x2";
    case TestFunction::cos: return "cos";
  }
  return "x";
}

struct TestFnValue {
  double v, dv, d2v;
};

inline TestFnValue eval_test_function(TestFunction v, double x) noexcept {
  switch (v) {
    case TestFunction::x: return {x, 1.0, 0.0};
    case TestFunction::x2: return {x * x, 2.0 * x, 2.0};
    case TestFunction::cos: return {std::cos(x), -std::sin(x), -std::cos(x)};
  }
  return {0.0, 0.0, 0.0};
}

struct GeneratorValues {
  double L1, L2, L3;
};

/// L1 V = V' b + 1/2 sigma2^2 V'',  L2 V = V' sigma1,  L3 V = V' sigma2.
inline GeneratorValues generator_apply(const CoeffSpec& c, TestFunction V, double /*t*/, double x) {
  const auto f = eval_test_function(V, x);
  const double s2 = c.sigma2()(x);
  return {f.dv * c.drift()(x) + 0.5 * s2 * s2 * f.d2v, f.dv * c.sigma1()(x), f.dv * s2};
}

struct WeakMomentRow {
  double t = 0.0;
  double fpk = 0.0;       // density quadrature, mollifier offset removed
  double mc = 0.0;        // ensemble mean
  double mc_se = 0.0;
  double identity = 0.0;  // V(x0) + int E[L1 V] + alpha int (t-s)^(alpha-1) E[L2 V]
};

struct WeakMomentReport {
  TestFunction V = TestFunction::x;
  double mollifier_offset = 0.0;  // int V P(0) dx - V(x0), removed from fpk and identity
  std::vector<WeakMomentRow> rows;

  /// Largest pairwise discrepancy relative to max(k SE, rel |value|).
  double worst_ratio(double k_se = 3.0, double rel = 0.02) const {
    double worst = 0.0;
    for (const auto& r : rows) {
      const double scale = std::max(1.0, std::abs(r.identity));
      const double tol_stat = std::max(k_se * r.mc_se, rel * scale);
      const double tol_det = rel * scale;
      worst = std::max(worst, std::abs(r.fpk - r.mc) / tol_stat);
      worst = std::max(worst, std::abs(r.identity - r.mc) / tol_stat);
      worst = std::max(worst, std::abs(r.fpk - r.identity) / tol_det);
    }
    return worst;
  }
};

/// Compares E[V(x(t))] from the density, from the ensemble and from the
/// integrated generator identity at every ensemble node. The field's time
/// grid must refine the ensemble's by an integer factor.
inline WeakMomentReport weak_moment_check(const CoeffSpec& c, TestFunction V, const DensityField& field,
                                          const PathEnsemble& ensemble) {
  const TimeGrid& ft = field.tgrid;
  const TimeGrid& et = ensemble.grid;
  if (ft.t_end() != et.t_end() || ft.n_steps() % et.n_steps() != 0) {
    throw GridMismatch("weak_moment_check: field time grid must refine the ensemble grid");
  }
  if (field.x0 != ensemble.x0) throw DomainError("weak_moment_check: field and ensemble start from different x0");
  const std::size_t ratio = ft.n_steps() / et.n_steps();
  const double a = field.alpha.value();

  std::vector<double> l1(ft.size()), l2(ft.size());
  for (std::size_t n = 0; n < ft.size(); ++n) {
    const double t = ft.node(n);
    l1[n] = field.expect(n, [&](double x) { return generator_apply(c, V, t, x).L1; });
    l2[n] = field.expect(n, [&](double x) { return generator_apply(c, V, t, x).L2; });
  }
  const SampledFn l1f(ft, l1), l2f(ft, l2);
  const auto reg = cumulative_trapezoid(l1f);
  const auto sing = frac_integral(l2f, AbelWeights(field.alpha, ft));

  WeakMomentReport rep;
  rep.V = V;
  const double v0 = eval_test_function(V, field.x0).v;
  const double start = field.expect(0, [&](double x) { return eval_test_function(V, x).v; });
  rep.mollifier_offset = start - v0;
  const double np = static_cast<double>(ensemble.paths.size());
  for (std::size_t k = 0; k < et.size(); ++k) {
    const std::size_t n = k * ratio;
    WeakMomentRow row;
    row.t = et.node(k);
    row.fpk = field.expect(n, [&](double x) { return eval_test_function(V, x).v; }) - rep.mollifier_offset;
    row.identity = v0 + reg[n] + a * sing[n];
    double mean = 0.0;
    for (const auto& p : ensemble.paths) mean += eval_test_function(V, p[k]).v;
    mean /= np;
    double ss = 0.0;
    for (const auto& p : ensemble.paths) ss += std::pow(eval_test_function(V, p[k]).v - mean, 2);
    row.mc = mean;
    row.mc_se = np > 1 ? std::sqrt(ss / (np - 1.0) / np) : 0.0;
    rep.rows.push_back(row);
  }
  return rep;
}

/// Gaussian kernel density estimate at the cell centres, Silverman bandwidth.
inline std::vector<double> kde_on_grid(std::span<const double> samples, const SpaceGrid& xg) {
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= std::max(1.0, n - 1.0);
  const double bw = std::max(1.06 * std::sqrt(var) * std::pow(n, -0.2), 1e-12);
  // Bin the samples first, then convolve bins with the kernel.
  const std::size_t m = xg.n_cells();
  const double h = xg.step();
  const std::size_t fine = 8;
  const double hf = h / fine;
  std::vector<double> bins(m * fine, 0.0);
  for (double s : samples) {
    const double pos = (s - xg.x_min()) / hf;
    if (pos < 0.0 || pos >= static_cast<double>(bins.size())) continue;
    bins[static_cast<std::size_t>(pos)] += 1.0;
  }
  std::vector<double> out(m, 0.0);
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(8.0 * bw / hf));
  for (std::size_t i = 0; i < m; ++i) {
    const double x = xg.center(i);
    const auto centre = static_cast<std::ptrdiff_t>((x - xg.x_min()) / hf);
    double acc = 0.0;
    for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(0, centre - reach);
         b < std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(bins.size()), centre + reach + 1); ++b) {
      if (bins[b] == 0.0) continue;
      const double z = (x - (xg.x_min() + (b + 0.5) * hf)) / bw;
      acc += bins[b] * std::exp(-0.5 * z * z);
    }
    out[i] = acc * norm;
  }
  return out;
}

/// sum_i |p_i - q_i| h_x
inline double l1_distance(std::span<const double> p, std::span<const double> q, const SpaceGrid& xg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return acc * xg.step();
}

}  // namespace fracgb
