#pragma once

// Gronwall-Bellman type bounds for
//
//   u(t) <= a(t) + b(t) int_0^t u + g(t) int_0^t (t-s)^(alpha-1) u(s) ds.
//
// Three families of evaluators:
//   * classical_bound       -- k(t) kernel only (alpha = 1 analogue);
//   * fractional_bound      -- singular kernel only (b = 0);
//   * mixed_bound_series / mixed_bound_closed -- both kernels.
//
// The mixed series is the double sum over (n, i) of
//   C(n,i) b^(n-i) g^i Gamma(alpha)^i / Gamma(i alpha + n - i)
//     * int_0^t (t-s)^(i alpha + n - i - 1) a(s) ds,
// with each kernel moment taken exactly against the piecewise-linear
// interpolant of a. The truncated remainder is certified by the smaller of
// two majorants: the operator-power estimate (Gamma(alpha)^n max{t^(n alpha-1), t^n}
// (b+g)^n / Gamma(n alpha) int a) summed over n > n*, and the
// Mittag-Leffler x exponential majorant restricted to i + k > n*.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fracgb/errors.hpp"
#include "fracgb/grid.hpp"
#include "fracgb/singquad.hpp"
#include "fracgb/specialfn.hpp"

namespace fracgb {

struct MixedBoundParams {
  AlphaOrder alpha{0.5};
  double m_cap = 1.0;
  double series_tol = 1e-12;
  unsigned n_max = 400;

  void validate() const {
    if (!alpha.is_fractional()) throw HypothesisError("mixed bound: alpha must lie in (0, 1)");
    if (!(m_cap > 0.0) || !std::isfinite(m_cap)) throw DomainError("mixed bound: M_cap must be finite and positive");
    if (!(series_tol > 0.0 && series_tol <= 1e-4)) throw DomainError("mixed bound: series_tol must lie in (0, 1e-4]");
    if (n_max < 8) throw DomainError("mixed bound: n_max must be at least 8");
  }
};

/// Bound values on a grid with a certified remainder per node.
struct BoundCurve {
  TimeGrid grid;
  std::vector<double> values;
  std::vector<double> tail_bound;
  std::vector<unsigned> truncation;  // outer series index used per node; 0 for closed forms

  double at(std::size_t j) const { return values.at(j); }
  double max_value() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
  unsigned max_truncation() const {
    return truncation.empty() ? 0u : *std::max_element(truncation.begin(), truncation.end());
  }
};

namespace detail {

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  explicit CompensatedSum(double init = 0.0) : sum_(init) {}
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline void require_nonnegative(const SampledFn& f, const char* name) {
  if (!is_nonnegative(f.values())) throw HypothesisError(std::string(name) + "(t) must be nonnegative");
}

inline void require_nondecreasing(const SampledFn& f, const char* name) {
  if (!is_nondecreasing(f.values())) throw HypothesisError(std::string(name) + "(t) must be nondecreasing");
}

inline void require_capped(const SampledFn& f, double cap, const char* name) {
  for (double v : f.values()) {
    if (v > cap) throw HypothesisError(std::string(name) + "(t) must be bounded by M = " + std::to_string(cap));
  }
}

/// Exact moments int_0^{t_n} (t_n - s)^(gamma-1) a(s) ds of the piecewise
/// linear interpolant of a, written as a(s) = a0 + c0 s + sum_j dc_j (s - t_j)_+.
class KernelMoments {
 public:
  explicit KernelMoments(const SampledFn& a) : grid_(a.grid()) {
    const auto v = a.values();
    const std::size_t n = v.size();
    const double h = grid_.step();
    a0_ = v[0];
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    const double global_slope = (v[n - 1] - v[0]) / grid_.t_end();
    bool affine = true;
    for (std::size_t j = 0; j < n && affine; ++j) {
      affine = std::abs(v[j] - (a0_ + global_slope * grid_.node(j))) <= 1e-14 * std::max(scale, 1e-300);
    }
    if (affine) {
      c0_ = global_slope;
    } else {
      c0_ = (v[1] - v[0]) / h;
      double prev = c0_;
      for (std::size_t j = 1; j + 1 < n; ++j) {
        const double slope = (v[j + 1] - v[j]) / h;
        if (slope != prev) kinks_.push_back({j, grid_.node(j), slope - prev});
        prev = slope;
      }
    }
    integral_.assign(n, 0.0);
    running_max_.assign(n, v[0]);
    for (std::size_t j = 1; j < n; ++j) {
      integral_[j] = integral_[j - 1] + 0.5 * h * (v[j - 1] + v[j]);
      running_max_[j] = std::max(running_max_[j - 1], v[j]);
    }
  }

  /// Moment divided by t^gamma / gamma, at node `node` (t > 0).
  double bracket(std::size_t node, double gamma) const {
    const double t = grid_.node(node);
    double s = c0_;
    for (const auto& k : kinks_) {
      if (k.index >= node) break;
      s += k.dc * std::pow(1.0 - k.t / t, gamma + 1.0);
    }
    return a0_ + t / (gamma + 1.0) * s;
  }

  double moment(std::size_t node, double gamma) const {
    if (node == 0) return 0.0;
    const double t = grid_.node(node);
    return std::max(0.0, bracket(node, gamma)) * std::pow(t, gamma) / gamma;
  }

  double integral(std::size_t node) const { return integral_[node]; }
  double running_max(std::size_t node) const { return running_max_[node]; }

 private:
  struct Kink {
    std::size_t index;
    double t;
    double dc;
  };
  TimeGrid grid_;
  double a0_ = 0.0;
  double c0_ = 0.0;
  std::vector<Kink> kinks_;
  std::vector<double> integral_;
  std::vector<double> running_max_;
};

// log C(n,i), log Gamma(k + i alpha) and log(k + i alpha), grown row by row.
class SeriesTables {
 public:
  explicit SeriesTables(double alpha) : alpha_(alpha) {}

  void ensure(unsigned n) {
    while (rows_ <= n) {
      const unsigned r = rows_++;
      std::vector<Entry> row(r + 1);
      for (unsigned i = 0; i <= r; ++i) {
        const unsigned k = r - i;
        const double gamma = static_cast<double>(k) + static_cast<double>(i) * alpha_;
        row[i] = {gamma, log_binomial(r, i), r == 0 ? 0.0 : log_gamma(gamma), r == 0 ? 0.0 : std::log(gamma)};
      }
      table_.push_back(std::move(row));
    }
  }

  struct Entry {
    double gamma;
    double log_binom;
    double log_gamma_fn;
    double log_gamma;
  };

  const Entry& at(unsigned n, unsigned i) const { return table_[n][i]; }

 private:
  double alpha_;
  unsigned rows_ = 0;
  std::vector<std::vector<Entry>> table_;
};

/// Upper bound for sum_{i + k > n*} x_i y_k, x_i = z^i / Gamma(i alpha + 1),
/// y_k = w^k / k!. Each factor series is summed until negligible with a
/// geometric bound on what is left.
class ProductTail {
 public:
  ProductTail(double z, double w, double alpha) {
    x_terms_ = terms(z, [alpha](unsigned i) { return log_gamma(i * alpha + 1.0); });
    x_rest_ = remainder(x_terms_);
    const auto y_terms = terms(w, [](unsigned k) { return log_gamma(k + 1.0); });
    // y_suffix_[j] = sum_{k >= j} y_k, last entry is the geometric remainder.
    y_suffix_.assign(y_terms.size() + 1, 0.0);
    y_suffix_.back() = remainder(y_terms);
    for (std::size_t j = y_terms.size(); j-- > 0;) y_suffix_[j] = y_suffix_[j + 1] + y_terms[j];
  }

  double operator()(unsigned n_star) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < x_terms_.size(); ++i) {
      const std::size_t need = n_star + 1 > i ? n_star + 1 - i : 0;
      s.add(x_terms_[i] * y_at(need));
    }
    s.add(x_rest_ * y_suffix_[0]);
    return s.value();
  }

 private:
  template <class LogDenom>
  static std::vector<double> terms(double z, LogDenom log_denom) {
    std::vector<double> out{1.0};
    if (z > 0.0) {
      const double log_z = std::log(z);
      double total = 1.0;
      for (unsigned i = 1; i < 100000; ++i) {
        const double term = std::exp(i * log_z - log_denom(i));
        out.push_back(term);
        total += term;
        if (term < out[out.size() - 2] && term <= 1e-30 * total) break;
      }
    }
    return out;
  }

  // Geometric bound on the terms not stored (ratios decrease past the peak).
  static double remainder(const std::vector<double>& t) {
    if (t.size() < 2 || t.back() == 0.0) return 0.0;
    const double r = t.back() / t[t.size() - 2];
    return r < 1.0 ? t.back() * r / (1.0 - r) : std::numeric_limits<double>::infinity();
  }

  double y_at(std::size_t j) const { return j < y_suffix_.size() ? y_suffix_[j] : y_suffix_.back(); }

  std::vector<double> x_terms_;
  double x_rest_ = 0.0;
  std::vector<double> y_suffix_;
};

inline double log_operator_power_bound(unsigned n, double b_cap, double g_cap, double alpha, double t,
                                       double u_int) {
  const double s = b_cap + g_cap;
  if (u_int == 0.0 || s == 0.0 || t == 0.0) return -std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  const double lt = std::log(t);
  return nd * log_gamma(alpha) + std::max((nd * alpha - 1.0) * lt, nd * lt) + nd * std::log(s) -
         log_gamma(nd * alpha) + std::log(u_int);
}

// sum_{m > n*} of the operator-power majorant, abandoned (returning +inf) as
// soon as it exceeds `give_up_above`. Valid only once (n*+1) alpha >= 2.
inline double operator_power_tail(unsigned n_star, double b, double g, double alpha, double t, double u_int,
                                  double give_up_above) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (u_int == 0.0 || b + g == 0.0 || t == 0.0) return 0.0;
  if ((n_star + 1.0) * alpha < 2.0) return inf;
  const double log_cap = std::log(give_up_above);
  double log_max = -inf;
  double scaled = 0.0;  // sum exp(l - log_max)
  double prev = -inf;
  for (unsigned m = n_star + 1; m < n_star + 1000000u; ++m) {
    const double l = log_operator_power_bound(m, b, g, alpha, t, u_int);
    if (l > log_max) {
      scaled = scaled * std::exp(log_max - l) + 1.0;
      log_max = l;
    } else {
      scaled += std::exp(l - log_max);
    }
    const double log_sum = log_max + std::log(scaled);
    if (log_sum > log_cap) return inf;
    if (l < prev && l < log_sum - 46.0) return std::exp(log_sum);
    prev = l;
  }
  return inf;
}

struct NodeSeries {
  double value;
  double tail;
  unsigned n_star;
};

// Runs the outer sum at one node. `row(n)` returns the n-th row contribution.
template <class Row>
NodeSeries sum_series_at_node(double a_t, double a_max, double a_int, double b_t, double g_t, double t, double alpha,
                              const MixedBoundParams& p, Row&& row) {
  CompensatedSum partial(a_t);
  const double z = g_t * gamma_fn(alpha) * std::pow(t, alpha);
  const double w = b_t * t / alpha;
  std::optional<ProductTail> tail;
  for (unsigned n = 1; n <= p.n_max; ++n) {
    const double r = row(n);
    partial.add(r);
    const double value = partial.value();
    if (r <= p.series_tol * value) {
      if (!tail) tail.emplace(z, w, alpha);
      const double majorant = a_max * (*tail)(n);
      if (majorant <= p.series_tol * value) {
        const double eq8 = operator_power_tail(n, b_t, g_t, alpha, t, a_int, std::max(majorant, 1e-300));
        return {value, std::min(majorant, eq8), n};
      }
    }
  }
  throw ConvergenceError("mixed bound: series did not meet series_tol within n_max=" + std::to_string(p.n_max) +
                         " at t=" + std::to_string(t));
}

}  // namespace detail

/// Classical Gronwall bound for x <= h + int k x.
inline BoundCurve classical_bound(const SampledFn& h, const SampledFn& k, bool nondecreasing_h) {
  require_same_grid(h.grid(), k.grid(), "classical_bound");
  detail::require_nonnegative(k, "k");
  if (nondecreasing_h) detail::require_nondecreasing(h, "h");
  const TimeGrid grid = h.grid();
  const auto big_k = cumulative_trapezoid(k);
  const std::size_t n = h.size();
  BoundCurve out{grid, std::vector<double>(n), std::vector<double>(n, 0.0), std::vector<unsigned>(n, 0)};
  if (nondecreasing_h) {
    for (std::size_t j = 0; j < n; ++j) out.values[j] = h[j] * std::exp(big_k[j]);
    return out;
  }
  // h(t) + int_0^t h(s) k(s) exp(K(t) - K(s)) ds, trapezoid in s.
  const double dt = grid.step();
  out.values[0] = h[0];
  for (std::size_t m = 1; m < n; ++m) {
    detail::CompensatedSum s;
    for (std::size_t j = 0; j <= m; ++j) {
      const double wj = (j == 0 || j == m) ? 0.5 * dt : dt;
      s.add(wj * h[j] * k[j] * std::exp(big_k[m] - big_k[j]));
    }
    out.values[m] = h[m] + s.value();
  }
  return out;
}

/// Bound for u <= a + g int (t-s)^(alpha-1) u. Closed Mittag-Leffler form
/// when `nondecreasing_a`, otherwise the truncated resolvent series.
inline BoundCurve fractional_bound(const SampledFn& a, const SampledFn& g, AlphaOrder alpha, bool nondecreasing_a,
                                   MixedBoundParams p) {
  p.alpha = alpha;
  p.validate();
  require_same_grid(a.grid(), g.grid(), "fractional_bound");
  detail::require_nonnegative(a, "a");
  detail::require_nonnegative(g, "g");
  detail::require_nondecreasing(g, "g");
  detail::require_capped(g, p.m_cap, "g");
  const TimeGrid grid = a.grid();
  const std::size_t size = a.size();
  const double al = alpha.value();
  BoundCurve out{grid, std::vector<double>(size), std::vector<double>(size, 0.0), std::vector<unsigned>(size, 0)};

  if (nondecreasing_a) {
    detail::require_nondecreasing(a, "a");
    const double gam = gamma_fn(al);
    for (std::size_t j = 0; j < size; ++j) {
      const double t = grid.node(j);
      out.values[j] = a[j] * mittag_leffler(g[j] * gam * std::pow(t, al), al);
    }
    return out;
  }

  const detail::KernelMoments moments(a);
  detail::SeriesTables tables(al);
  const double log_gamma_alpha = std::log(gamma_fn(al));
  out.values[0] = a[0];
  for (std::size_t j = 1; j < size; ++j) {
    const double t = grid.node(j);
    const double log_t = std::log(t);
    const double g_t = g[j];
    const double log_big_g = g_t > 0.0 ? std::log(g_t) + log_gamma_alpha : 0.0;
    auto row = [&](unsigned n) -> double {
      if (g_t == 0.0) return 0.0;
      tables.ensure(n);
      const auto& e = tables.at(n, n);
      double lc = 0.0;
      lc += static_cast<double>(n) * log_big_g;
      lc -= e.log_gamma_fn;
      const double br = moments.bracket(j, e.gamma);
      return std::exp(lc + e.gamma * log_t - e.log_gamma) * std::max(0.0, br);
    };
    const auto r = detail::sum_series_at_node(a[j], moments.running_max(j), moments.integral(j), 0.0, g_t, t, al, p,
                                              row);
    out.values[j] = r.value;
    out.tail_bound[j] = r.tail;
    out.truncation[j] = r.n_star;
  }
  return out;
}

/// Truncated double series bound for the mixed inequality with a certified tail.
inline BoundCurve mixed_bound_series(const SampledFn& a, const SampledFn& b, const SampledFn& g,
                                     const MixedBoundParams& p) {
  p.validate();
  require_same_grid(a.grid(), b.grid(), "mixed_bound_series(b)");
  require_same_grid(a.grid(), g.grid(), "mixed_bound_series(g)");
  detail::require_nonnegative(a, "a");
  detail::require_nonnegative(b, "b");
  detail::require_nonnegative(g, "g");
  detail::require_nondecreasing(b, "b");
  detail::require_nondecreasing(g, "g");
  detail::require_capped(b, p.m_cap, "b");
  detail::require_capped(g, p.m_cap, "g");

  const TimeGrid grid = a.grid();
  const std::size_t size = a.size();
  const double al = p.alpha.value();
  BoundCurve out{grid, std::vector<double>(size), std::vector<double>(size, 0.0), std::vector<unsigned>(size, 0)};
  const detail::KernelMoments moments(a);
  detail::SeriesTables tables(al);
  const double log_gamma_alpha = std::log(gamma_fn(al));
  out.values[0] = a[0];
  for (std::size_t j = 1; j < size; ++j) {
    const double t = grid.node(j);
    const double log_t = std::log(t);
    const double b_t = b[j];
    const double g_t = g[j];
    const double log_b = b_t > 0.0 ? std::log(b_t) : 0.0;
    const double log_big_g = g_t > 0.0 ? std::log(g_t) + log_gamma_alpha : 0.0;
    auto row = [&](unsigned n) -> double {
      tables.ensure(n);
      detail::CompensatedSum r;
      for (unsigned i = 0; i <= n; ++i) {
        const unsigned k = n - i;
        if ((k > 0 && b_t == 0.0) || (i > 0 && g_t == 0.0)) continue;
        const auto& e = tables.at(n, i);
        double lc = e.log_binom;
        if (k > 0) lc += static_cast<double>(k) * log_b;
        if (i > 0) lc += static_cast<double>(i) * log_big_g;
        lc -= e.log_gamma_fn;
        const double br = moments.bracket(j, e.gamma);
        r.add(std::exp(lc + e.gamma * log_t - e.log_gamma) * std::max(0.0, br));
      }
      return r.value();
    };
    const auto r = detail::sum_series_at_node(a[j], moments.running_max(j), moments.integral(j), b_t, g_t, t, al, p,
                                              row);
    out.values[j] = r.value;
    out.tail_bound[j] = r.tail;
    out.truncation[j] = r.n_star;
  }
  return out;
}

/// a(t) E_alpha(g(t) Gamma(alpha) t^alpha) exp(b(t) t / alpha) for nondecreasing a.
/// alpha = 1 is accepted and gives a(t) e^(g t) e^(b t).
inline BoundCurve mixed_bound_closed(const SampledFn& a, const SampledFn& b, const SampledFn& g, AlphaOrder alpha) {
  require_same_grid(a.grid(), b.grid(), "mixed_bound_closed(b)");
  require_same_grid(a.grid(), g.grid(), "mixed_bound_closed(g)");
  detail::require_nonnegative(a, "a");
  detail::require_nonnegative(b, "b");
  detail::require_nonnegative(g, "g");
  detail::require_nondecreasing(b, "b");
  detail::require_nondecreasing(g, "g");
  detail::require_nondecreasing(a, "a");
  const TimeGrid grid = a.grid();
  const std::size_t size = a.size();
  const double al = alpha.value();
  const double gam = gamma_fn(al);
  BoundCurve out{grid, std::vector<double>(size), std::vector<double>(size, 0.0), std::vector<unsigned>(size, 0)};
  for (std::size_t j = 0; j < size; ++j) {
    if (a[j] == 0.0) continue;
    const double t = grid.node(j);
    const double log_ml = log_mittag_leffler(g[j] * gam * std::pow(t, al), al);
    out.values[j] = std::exp(std::log(a[j]) + log_ml + b[j] * t / al);
  }
  return out;
}

/// B phi(t) = b(t) int_0^t phi + g(t) int_0^t (t-s)^(alpha-1) phi(s) ds.
inline SampledFn apply_operator_B(const SampledFn& phi, const SampledFn& b, const SampledFn& g, const AbelWeights& w) {
  require_same_grid(phi.grid(), b.grid(), "apply_operator_B(b)");
  require_same_grid(phi.grid(), g.grid(), "apply_operator_B(g)");
  const auto regular = cumulative_trapezoid(phi);
  const auto singular = frac_integral(phi, w);
  std::vector<double> out(phi.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = b[j] * regular[j] + g[j] * singular[j];
  return SampledFn(phi.grid(), std::move(out));
}

/// Scalar majorant of |B^n u|(t) given int_0^t u = u_int:
/// Gamma(alpha)^n max{t^(n alpha - 1), t^n} (b+g)^n / Gamma(n alpha) * u_int.
inline double operator_power_bound(unsigned n, double b_cap, double g_cap, AlphaOrder alpha, double t, double u_int) {
  if (n == 0) throw DomainError("operator_power_bound: n must be positive");
  if (!alpha.is_fractional()) throw DomainError("operator_power_bound: alpha must lie in (0, 1)");
  if (b_cap < 0.0 || g_cap < 0.0 || t < 0.0 || u_int < 0.0) {
    throw DomainError("operator_power_bound: inputs must be nonnegative");
  }
  return std::exp(detail::log_operator_power_bound(n, b_cap, g_cap, alpha.value(), t, u_int));
}

/// ln of E_alpha(M Gamma(alpha) tau^alpha) exp(M tau / alpha), the majorant of
/// the double sum evaluated with b = g = M.
inline double log_mixed_certificate(double m, AlphaOrder alpha, double tau) {
  const double al = alpha.value();
  return log_mittag_leffler(m * gamma_fn(al) * std::pow(tau, al), al) + m * tau / al;
}

/// ln of sum_{n=0}^{n*} sum_i C(n,i) b^(n-i) g^i Gamma(alpha)^i tau^(i alpha + n - i) / Gamma(i alpha + n - i + 1).
inline double log_mixed_double_sum(double b, double g, AlphaOrder alpha, double tau, unsigned n_star) {
  const double al = alpha.value();
  if (tau == 0.0) return 0.0;
  const double log_tau = std::log(tau);
  const double log_big_g = g > 0.0 ? std::log(g) + std::log(gamma_fn(al)) : 0.0;
  const double log_b = b > 0.0 ? std::log(b) : 0.0;
  std::vector<double> logs;
  for (unsigned n = 0; n <= n_star; ++n) {
    for (unsigned i = 0; i <= n; ++i) {
      const unsigned k = n - i;
      if ((k > 0 && b == 0.0) || (i > 0 && g == 0.0)) continue;
      const double gamma = k + i * al;
      logs.push_back(log_binomial(n, i) + k * log_b + i * log_big_g + gamma * log_tau - log_gamma(gamma + 1.0));
    }
  }
  const double lmax = *std::max_element(logs.begin(), logs.end());
  detail::CompensatedSum s;
  for (double l : logs) s.add(std::exp(l - lmax));
  return lmax + std::log(s.value());
}

}  // namespace fracgb
