#pragma once

// Gamma, binomial and Mittag-Leffler evaluation in double precision.
//
// Gamma and log-Gamma defer to the C library (tgamma / lgamma_r), which is
// accurate to a few ulp on the positive axis. The Mittag-Leffler function is
// summed directly for moderate arguments and switches to its exponential
// leading asymptotic form once exp(z^(1/alpha)) swamps the algebraic terms.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "fracgb/errors.hpp"

namespace fracgb {

inline double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError("log_gamma: argument must be finite and positive, got " + std::to_string(x));
  }
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);  // reentrant: std::lgamma writes the global signgam
#else
  return std::lgamma(x);
#endif
}

inline double gamma_fn(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError("gamma_fn: argument must be finite and positive, got " + std::to_string(x));
  }
  if (x < 171.0) return std::tgamma(x);
  return std::exp(log_gamma(x));
}

inline double log_binomial(unsigned n, unsigned i) {
  if (i > n) throw DomainError("binomial: i must not exceed n");
  if (i == 0 || i == n) return 0.0;
  return log_gamma(n + 1.0) - log_gamma(i + 1.0) - log_gamma(n - i + 1.0);
}

/// C(n, i); exact integer arithmetic for n <= 50, log-Gamma beyond.
inline double binomial(unsigned n, unsigned i) {
  if (i > n) throw DomainError("binomial: i must not exceed n");
  if (n <= 50) {
    const unsigned k = i < n - i ? i : n - i;
    std::uint64_t c = 1;
    for (unsigned j = 0; j < k; ++j) c = c * (n - j) / (j + 1);
    return static_cast<double>(c);
  }
  return std::round(std::exp(log_binomial(n, i)));
}

struct MLParams {
  double alpha = 0.5;
  double rel_tol = 1e-15;
  unsigned max_terms = 20000;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("MLParams: alpha must lie in (0, 1]");
    if (!(rel_tol > 0.0 && rel_tol <= 1e-3)) throw DomainError("MLParams: rel_tol must lie in (0, 1e-3]");
    if (max_terms < 16) throw DomainError("MLParams: max_terms must be at least 16");
  }
};

namespace detail {

// Above this value of z^(1/alpha) the algebraic part of the asymptotic
// expansion is below 1e-17 of the exponential part.
inline constexpr double kMLAsymptoticThreshold = 40.0;

inline double ml_log_term(double log_z, unsigned k, double alpha) {
  return k * log_z - log_gamma(k * alpha + 1.0);
}

// Sum of z^k / Gamma(k alpha + 1), returned as (log of scale, scaled sum).
struct MLSeries {
  double log_scale;
  double sum;
};

inline MLSeries ml_series(double z, const MLParams& p) {
  const double log_z = std::log(z);
  // Largest term sits near k = z^(1/alpha) / alpha; scale everything by it.
  const double w = std::pow(z, 1.0 / p.alpha);
  const unsigned k_peak = static_cast<unsigned>(std::max(0.0, std::floor(w / p.alpha)));
  double log_scale = 0.0;
  for (unsigned k : {k_peak, k_peak + 1}) {
    log_scale = std::max(log_scale, ml_log_term(log_z, k, p.alpha));
  }

  double sum = 0.0;
  double comp = 0.0;
  double prev = 0.0;
  for (unsigned k = 0;; ++k) {
    if (k >= p.max_terms) {
      throw ConvergenceError("mittag_leffler: series exceeded max_terms=" + std::to_string(p.max_terms));
    }
    const double term = std::exp(ml_log_term(log_z, k, p.alpha) - log_scale);
    const double y = term - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    if (k > k_peak && term < prev) {
      // Term ratios decrease past the peak, so the remainder is geometric.
      const double r = term / prev;
      if (term * r / (1.0 - r) <= 0.5 * p.rel_tol * sum) break;
    }
    prev = term;
  }
  return {log_scale, sum};
}

inline double ml_algebraic_tail(double z, double alpha) {
  // sum_{k=1}^{6} z^-k / Gamma(1 - k alpha), with 1/Gamma at poles = 0.
  double s = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const double arg = 1.0 - k * alpha;
    if (arg <= 0.0 && arg == std::floor(arg)) continue;
    s += std::pow(z, -k) / std::tgamma(arg);
  }
  return s;
}

}  // namespace detail

/// ln E_alpha(z) for z >= 0; finite even where E_alpha(z) overflows.
inline double log_mittag_leffler(double z, const MLParams& p) {
  p.validate();
  if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("mittag_leffler: z must be finite and >= 0");
  if (z == 0.0) return 0.0;
  const double w = std::pow(z, 1.0 / p.alpha);
  if (w >= detail::kMLAsymptoticThreshold) {
    const double corr = p.alpha * std::exp(-w) * detail::ml_algebraic_tail(z, p.alpha);
    return w - std::log(p.alpha) + std::log1p(-corr);
  }
  const auto s = detail::ml_series(z, p);
  return s.log_scale + std::log(s.sum);
}

/// E_alpha(z) = sum_k z^k / Gamma(k alpha + 1) for z >= 0.
inline double mittag_leffler(double z, const MLParams& p) {
  p.validate();
  if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("mittag_leffler: z must be finite and >= 0");
  if (z == 0.0) return 1.0;
  const double w = std::pow(z, 1.0 / p.alpha);
  if (w >= detail::kMLAsymptoticThreshold) {
    return std::exp(w) / p.alpha - detail::ml_algebraic_tail(z, p.alpha);
  }
  const auto s = detail::ml_series(z, p);
  return std::exp(s.log_scale) * s.sum;
}

inline double mittag_leffler(double z, double alpha) {
  MLParams p;
  p.alpha = alpha;
  return mittag_leffler(z, p);
}

inline double log_mittag_leffler(double z, double alpha) {
  MLParams p;
  p.alpha = alpha;
  return log_mittag_leffler(z, p);
}

}  // namespace fracgb
