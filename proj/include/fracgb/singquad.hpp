#pragma once

// Product integration for the Abel kernel (t-s)^(alpha-1) on a uniform grid
// and a time-marching solver for the second-kind Volterra equation
//
//   u(t) = a(t) + b(t) int_0^t u(s) ds + g(t) int_0^t (t-s)^(alpha-1) u(s) ds.
//
// The kernel is integrated analytically against the piecewise-linear
// interpolant of the smooth factor, so the singular point s = t is never
// evaluated.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fracgb/errors.hpp"
#include "fracgb/grid.hpp"

namespace fracgb {

namespace detail {

// Generalized binomial coefficient C(p, k) for real p.
inline double gen_binomial(double p, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c *= (p - i) / (i + 1);
  return c;
}

// (m+1)^p - 2 m^p + (m-1)^p without cancellation for large m.
inline double second_difference_pow(double m, double p) {
  if (m < 8.0) return std::pow(m + 1.0, p) - 2.0 * std::pow(m, p) + std::pow(m - 1.0, p);
  const double x2 = 1.0 / (m * m);
  double s = 0.0;
  double xk = x2;
  for (int k = 1; k < 40; ++k) {
    const double term = gen_binomial(p, 2 * k) * xk;
    s += term;
    if (std::abs(term) <= 1e-18 * std::abs(s)) break;
    xk *= x2;
  }
  return 2.0 * std::pow(m, p) * s;
}

// (n-1)^p - (n-p) n^(p-1), i.e. n^p [(1-x)^p - 1 + p x] with x = 1/n.
inline double left_end_pow(double n, double p) {
  if (n < 8.0) return std::pow(n - 1.0, p) - (n - p) * std::pow(n, p - 1.0);
  const double x = 1.0 / n;
  double s = 0.0;
  double xk = x * x;
  for (int k = 2; k < 60; ++k) {
    const double term = gen_binomial(p, k) * ((k % 2) ? -xk : xk);
    s += term;
    if (std::abs(term) <= 1e-18 * std::abs(s)) break;
    xk *= x;
  }
  return std::pow(n, p) * s;
}

}  // namespace detail

/// Product-trapezoid weights w[n][j] for int_0^{t_n} (t_n - s)^(alpha-1) phi(s) ds
/// plus the left-rectangle weights used by explicit schemes.
///
/// The table is Toeplitz apart from the j = 0 column, so it is stored by lag.
class AbelWeights {
 public:
  AbelWeights(AlphaOrder alpha, TimeGrid grid) : alpha_(alpha), grid_(grid) {
    const double a = alpha.value();
    const double p = a + 1.0;
    const std::size_t n_steps = grid.n_steps();
    const double h = grid.step();
    const double c = std::pow(h, a) / (a * p);
    diag_ = c;
    interior_.assign(n_steps + 1, 0.0);
    left_.assign(n_steps + 1, 0.0);
    rect_.assign(n_steps + 1, 0.0);
    const double rect_scale = std::pow(h, a) / a;
    for (std::size_t m = 1; m <= n_steps; ++m) {
      const double dm = static_cast<double>(m);
      interior_[m] = c * detail::second_difference_pow(dm, p);
      left_[m] = c * detail::left_end_pow(dm, p);
      // m^a - (m-1)^a
      rect_[m] = rect_scale * (-std::pow(dm, a) * std::expm1(a * std::log1p(-1.0 / dm)));
    }
  }

  AlphaOrder alpha() const noexcept { return alpha_; }
  const TimeGrid& grid() const noexcept { return grid_; }

  /// Trapezoid-type weight of phi(t_j) in the integral anchored at t_n.
  double weight(std::size_t n, std::size_t j) const noexcept {
    if (n == 0 || j > n) return 0.0;
    if (j == n) return diag_;
    if (j == 0) return left_[n];
    return interior_[n - j];
  }

  double diagonal() const noexcept { return diag_; }

  /// int_{t_j}^{t_{j+1}} (t_n - s)^(alpha-1) ds for j < n.
  double rect_weight(std::size_t n, std::size_t j) const noexcept {
    return j < n ? rect_[n - j] : 0.0;
  }

  std::vector<double> row(std::size_t n) const {
    std::vector<double> r(n + 1);
    for (std::size_t j = 0; j <= n; ++j) r[j] = weight(n, j);
    return r;
  }

  /// sum_{j<n} w[n][j] phi_j (history part, diagonal excluded).
  double apply_history(std::size_t n, std::span<const double> phi) const noexcept {
    if (n == 0) return 0.0;
    double s = left_[n] * phi[0];
    for (std::size_t j = 1; j < n; ++j) s += interior_[n - j] * phi[j];
    return s;
  }

  double apply_row(std::size_t n, std::span<const double> phi) const noexcept {
    if (n == 0) return 0.0;
    return apply_history(n, phi) + diag_ * phi[n];
  }

  /// sum_{j<n} rect[n][j] phi_j (left-point product rule).
  double apply_rect_row(std::size_t n, std::span<const double> phi) const noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += rect_[n - j] * phi[j];
    return s;
  }

 private:
  AlphaOrder alpha_;
  TimeGrid grid_;
  double diag_ = 0.0;
  std::vector<double> interior_;  // by lag m = n - j, 1 <= j < n
  std::vector<double> left_;      // j = 0 column, by n
  std::vector<double> rect_;      // by lag m = n - j, j < n
};

inline AbelWeights abel_weights(AlphaOrder alpha, TimeGrid grid) { return AbelWeights(alpha, grid); }

/// int_0^{t_n} (t_n - s)^(alpha-1) phi(s) ds at every node (no leading alpha).
inline SampledFn frac_integral(const SampledFn& phi, const AbelWeights& w) {
  require_same_grid(phi.grid(), w.grid(), "frac_integral");
  std::vector<double> out(phi.size(), 0.0);
  for (std::size_t n = 1; n < out.size(); ++n) out[n] = w.apply_row(n, phi.values());
  return SampledFn(phi.grid(), std::move(out));
}

/// Composite trapezoid int_0^{t_n} phi(s) ds at every node.
inline SampledFn cumulative_trapezoid(const SampledFn& phi) {
  const double h = phi.grid().step();
  std::vector<double> out(phi.size(), 0.0);
  for (std::size_t n = 1; n < out.size(); ++n) out[n] = out[n - 1] + 0.5 * h * (phi[n - 1] + phi[n]);
  return SampledFn(phi.grid(), std::move(out));
}

/// Solves u = a + b * int u + g * int (t-s)^(alpha-1) u on the grid of `w`.
///
/// Each step is implicit in u(t_n) only through the diagonal weights, which
/// makes the step a scalar division. Throws NodeError when the diagonal
/// coefficient 1 - b h/2 - g w_nn is not positive.
inline SampledFn solve_volterra(const SampledFn& a, const SampledFn& b, const SampledFn& g,
                                const AbelWeights& w) {
  require_same_grid(a.grid(), w.grid(), "solve_volterra(a)");
  require_same_grid(b.grid(), w.grid(), "solve_volterra(b)");
  require_same_grid(g.grid(), w.grid(), "solve_volterra(g)");
  if (!is_nonnegative(a.values()) || !is_nonnegative(b.values()) || !is_nonnegative(g.values())) {
    throw HypothesisError("solve_volterra: a, b and g must be nonnegative");
  }
  if (!is_nondecreasing(b.values()) || !is_nondecreasing(g.values())) {
    throw HypothesisError("solve_volterra: b and g must be nondecreasing");
  }

  const std::size_t size = a.size();
  const double h = a.grid().step();
  std::vector<double> u(size, 0.0);
  u[0] = a[0];
  double trap_history = 0.0;  // h * (u_0/2 + u_1 + ... + u_{n-1})
  for (std::size_t n = 1; n < size; ++n) {
    trap_history += (n == 1 ? 0.5 : 1.0) * h * u[n - 1];
    const double rhs = a[n] + b[n] * trap_history + g[n] * w.apply_history(n, u);
    const double diag = 1.0 - 0.5 * h * b[n] - g[n] * w.diagonal();
    if (!(diag > 0.0)) {
      throw NodeError("solve_volterra: singular implicit step, reduce the step size", n);
    }
    u[n] = rhs / diag;
    if (!std::isfinite(u[n])) throw NodeError("solve_volterra: non-finite solution", n);
  }
  return SampledFn(a.grid(), std::move(u));
}

inline SampledFn solve_volterra(const SampledFn& a, const SampledFn& b, const SampledFn& g, AlphaOrder alpha) {
  return solve_volterra(a, b, g, AbelWeights(alpha, a.grid()));
}

}  // namespace fracgb
