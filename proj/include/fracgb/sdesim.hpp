#pragma once

// Scalar fractional SDE
//
//   dx = b(x) dt + sigma1(x) dt^alpha + sigma2(x) dB,   x(0) = x0,
//
// in its integral form
//
//   x(t) = x0 + int_0^t b ds + alpha int_0^t (t-s)^(alpha-1) sigma1 ds + int_0^t sigma2 dB.
//
// Two solvers share one frozen noise stream: an explicit left-point scheme
// (the Abel channel uses left-rectangle product weights anchored at the new
// node) and Picard successive approximation on the grid (product-trapezoid
// weights, Ito left-point stochastic sum).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fracgb/errors.hpp"
#include "fracgb/families.hpp"
#include "fracgb/grid.hpp"
#include "fracgb/singquad.hpp"

namespace fracgb {

/// Drift b, fractional channel sigma1 and diffusion sigma2, each from the
/// closed family registry, with Lipschitz constant L and linear-growth
/// constant K valid on |x| <= state_range.
class CoeffSpec {
 public:
  static constexpr double kDefaultRange = 100.0;

  /// Constants computed from the families.
  static CoeffSpec make(Family drift, Family sigma1, Family sigma2, double state_range = kDefaultRange) {
    CoeffSpec c(drift, sigma1, sigma2, 0.0, 0.0, state_range);
    c.lipschitz_ = c.min_lipschitz();
    c.growth_ = c.growth_upper_bound();
    return c;
  }

  /// Declared constants; rejected when smaller than what the families need.
  CoeffSpec(Family drift, Family sigma1, Family sigma2, double lipschitz_L, double growth_K,
            double state_range = kDefaultRange)
      : drift_(drift), sigma1_(sigma1), sigma2_(sigma2), lipschitz_(lipschitz_L), growth_(growth_K),
        range_(state_range) {
    if (!(state_range > 0.0) || !std::isfinite(state_range)) throw DomainError("CoeffSpec: state range must be positive");
    if (!std::isfinite(lipschitz_L) || !std::isfinite(growth_K)) throw DomainError("CoeffSpec: L and K must be finite");
    if (lipschitz_L != 0.0 || growth_K != 0.0) validate();
  }

  const Family& drift() const noexcept { return drift_; }
  const Family& sigma1() const noexcept { return sigma1_; }
  const Family& sigma2() const noexcept { return sigma2_; }
  double lipschitz_L() const noexcept { return lipschitz_; }
  double growth_K() const noexcept { return growth_; }
  double state_range() const noexcept { return range_; }

  /// Sum of sup |f'|: the Lipschitz constant of (b, sigma1, sigma2) in the
  /// sum-of-absolute-differences form.
  double min_lipschitz() const { return drift_.lipschitz() + sigma1_.lipschitz() + sigma2_.lipschitz(); }

  /// sup over sampled |x| <= range of sqrt((b^2 + s1^2 + s2^2) / (1 + x^2)).
  double sampled_growth() const {
    constexpr int kSamples = 20001;
    double worst = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double x = -range_ + 2.0 * range_ * i / (kSamples - 1);
      const double s = square(drift_(x)) + square(sigma1_(x)) + square(sigma2_(x));
      worst = std::max(worst, s / (1.0 + x * x));
    }
    return std::sqrt(worst);
  }

  /// Closed-form growth constant: largest eigenvalue of the quadratic form of
  /// the affine parts plus the sinusoidal amplitudes (triangle inequality).
  double growth_upper_bound() const {
    double a = 0.0, bq = 0.0, cq = 0.0, sin_sq = 0.0;
    for (const Family* f : {&drift_, &sigma1_, &sigma2_}) {
      double c0 = 0.0, c1 = 0.0;
      switch (f->kind()) {
        case FamilyKind::zero: break;
        case FamilyKind::constant: c0 = f->p0(); break;
        case FamilyKind::linear: c1 = f->p0(); break;
        case FamilyKind::affine: c0 = f->p0(); c1 = f->p1(); break;
        case FamilyKind::sinusoidal: sin_sq += square(f->p0()); break;
      }
      a += c0 * c0;
      bq += c0 * c1;
      cq += c1 * c1;
    }
    const double lam = 0.5 * (a + cq) + std::sqrt(square(0.5 * (a - cq)) + bq * bq);
    return std::sqrt(lam) + std::sqrt(sin_sq);
  }

  void validate() const {
    if (lipschitz_ + 1e-12 < min_lipschitz()) {
      throw DomainError("CoeffSpec: declared L=" + std::to_string(lipschitz_) + " is below the family Lipschitz constant " +
                        std::to_string(min_lipschitz()));
    }
    if (growth_ * (1.0 + 1e-12) < sampled_growth()) {
      throw DomainError("CoeffSpec: declared K=" + std::to_string(growth_) + " is below the sampled growth constant " +
                        std::to_string(sampled_growth()));
    }
  }

  friend bool operator==(const CoeffSpec&, const CoeffSpec&) = default;

 private:
  static double square(double v) { return v * v; }

  Family drift_;
  Family sigma1_;
  Family sigma2_;
  double lipschitz_ = 0.0;
  double growth_ = 0.0;
  double range_ = kDefaultRange;
};

/// Brownian increments dB_j ~ N(0, dt) for one path on a grid.
struct NoiseStream {
  std::uint64_t seed = 0;
  TimeGrid grid{1.0, 1};
  std::vector<double> increments;
};

/// SplitMix64 finalizer; used to derive independent per-path seeds.
inline std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of path `index` in an ensemble with `base_seed`.
inline std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  return mix_seed(base_seed ^ mix_seed(index + 0x632BE59BD9B4E019ull));
}

/// Deterministic Gaussian increments from (seed, grid): mt19937_64 seeded
/// through seed_seq, Box-Muller on 53-bit uniforms.
inline NoiseStream brownian_path(std::uint64_t seed, const TimeGrid& grid) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 gen(seq);
  auto uniform = [&gen]() { return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53; };  // (0, 1]
  const std::size_t n = grid.n_steps();
  const double scale = std::sqrt(grid.step());
  NoiseStream out{seed, grid, std::vector<double>(n)};
  for (std::size_t j = 0; j < n; j += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    out.increments[j] = scale * r * std::cos(theta);
    if (j + 1 < n) out.increments[j + 1] = scale * r * std::sin(theta);
  }
  return out;
}

namespace detail {

inline void require_finite_state(double x, std::size_t node) {
  if (!std::isfinite(x)) throw NodeError("non-finite state (coefficient blow-up)", node);
}

// alpha * sum_{j<n} rect[n][j] * sigma1(t_j) for a state-independent sigma1.
inline std::vector<double> frozen_fractional_channel(const Family& sigma1, const AbelWeights& w) {
  const std::size_t size = w.grid().size();
  std::vector<double> out(size, 0.0);
  if (sigma1.is_zero()) return out;
  const std::vector<double> values(size, sigma1(0.0));
  const double a = w.alpha().value();
  for (std::size_t n = 1; n < size; ++n) out[n] = a * w.apply_rect_row(n, values);
  return out;
}

inline SampledFn simulate_path_impl(const CoeffSpec& c, double x0, const NoiseStream& noise, const AbelWeights& w,
                                    const std::vector<double>* frozen) {
  const TimeGrid& grid = noise.grid;
  const std::size_t size = grid.size();
  const double h = grid.step();
  const double a = w.alpha().value();
  const bool state_dependent_s1 = !c.sigma1().is_constant();
  std::vector<double> x(size);
  std::vector<double> s1(state_dependent_s1 ? size : 0);
  x[0] = x0;
  double drift_sum = 0.0;
  double ito_sum = 0.0;
  for (std::size_t n = 1; n < size; ++n) {
    const double xp = x[n - 1];
    drift_sum += h * c.drift()(xp);
    ito_sum += c.sigma2()(xp) * noise.increments[n - 1];
    double frac = 0.0;
    if (state_dependent_s1) {
      s1[n - 1] = c.sigma1()(xp);
      frac = a * w.apply_rect_row(n, s1);
    } else {
      frac = (*frozen)[n];
    }
    x[n] = x0 + drift_sum + frac + ito_sum;
    require_finite_state(x[n], n);
  }
  return SampledFn(grid, std::move(x));
}

}  // namespace detail

/// Explicit history-dependent scheme on the noise grid:
///   x_n = x0 + h sum_{j<n} b(x_j) + alpha sum_{j<n} R[n][j] sigma1(x_j) + sum_{j<n} sigma2(x_j) dB_j,
/// with R[n][j] the exact kernel integral over [t_j, t_{j+1}].
inline SampledFn simulate_path(const CoeffSpec& c, double x0, const NoiseStream& noise, AlphaOrder alpha,
                               const AbelWeights& w) {
  require_same_grid(noise.grid, w.grid(), "simulate_path");
  if (!(w.alpha() == alpha)) throw DomainError("simulate_path: weights built for a different alpha");
  if (!std::isfinite(x0)) throw DomainError("simulate_path: x0 must be finite");
  if (c.sigma1().is_constant()) {
    const auto frozen = detail::frozen_fractional_channel(c.sigma1(), w);
    return detail::simulate_path_impl(c, x0, noise, w, &frozen);
  }
  return detail::simulate_path_impl(c, x0, noise, w, nullptr);
}

struct PicardResult {
  SampledFn path;
  std::vector<double> gaps;  // sup-node |x^{k+1} - x^k| for k = 0, 1, ...
  unsigned iterations = 0;
};

/// Raised when Picard iteration misses its tolerance; carries the gap history.
class PicardNonConvergence : public ConvergenceError {
 public:
  PicardNonConvergence(const std::string& what, std::vector<double> gaps)
      : ConvergenceError(what), gaps_(std::move(gaps)) {}
  const std::vector<double>& gaps() const noexcept { return gaps_; }

 private:
  std::vector<double> gaps_;
};

namespace detail {

// One application of the discretized integral operator to `xk`.
inline std::vector<double> picard_map(const CoeffSpec& c, double x0, const NoiseStream& noise, const AbelWeights& w,
                                      const std::vector<double>& xk) {
  const std::size_t size = xk.size();
  const double h = noise.grid.step();
  const double a = w.alpha().value();
  std::vector<double> bv(size), s1(size), s2(size);
  for (std::size_t j = 0; j < size; ++j) {
    bv[j] = c.drift()(xk[j]);
    s1[j] = c.sigma1()(xk[j]);
    s2[j] = c.sigma2()(xk[j]);
  }
  const bool has_s1 = !c.sigma1().is_zero();
  std::vector<double> next(size);
  next[0] = x0;
  double drift_sum = 0.0;
  double ito_sum = 0.0;
  for (std::size_t n = 1; n < size; ++n) {
    drift_sum += 0.5 * h * (bv[n - 1] + bv[n]);
    ito_sum += s2[n - 1] * noise.increments[n - 1];
    const double frac = has_s1 ? a * w.apply_row(n, s1) : 0.0;
    next[n] = x0 + drift_sum + frac + ito_sum;
    require_finite_state(next[n], n);
  }
  return next;
}

}  // namespace detail

/// Picard-Lindeloef successive approximation on a frozen noise stream,
/// started from `initial` (x^0). Stops once the sup-node gap drops below tol.
inline PicardResult picard_solve_path(const CoeffSpec& c, double x0, const NoiseStream& noise, AlphaOrder alpha,
                                      const AbelWeights& w, double tol, unsigned k_max, const SampledFn& initial) {
  require_same_grid(noise.grid, w.grid(), "picard_solve_path");
  require_same_grid(initial.grid(), w.grid(), "picard_solve_path(initial)");
  if (!(w.alpha() == alpha)) throw DomainError("picard_solve_path: weights built for a different alpha");
  if (!(tol > 0.0)) throw DomainError("picard_solve_path: tol must be positive");
  if (k_max < 1) throw DomainError("picard_solve_path: k_max must be at least 1");
  std::vector<double> xk(initial.values().begin(), initial.values().end());
  std::vector<double> gaps;
  for (unsigned k = 1; k <= k_max; ++k) {
    auto next = detail::picard_map(c, x0, noise, w, xk);
    double gap = 0.0;
    for (std::size_t j = 0; j < next.size(); ++j) gap = std::max(gap, std::abs(next[j] - xk[j]));
    gaps.push_back(gap);
    xk = std::move(next);
    if (gap < tol) return {SampledFn(noise.grid, std::move(xk)), std::move(gaps), k};
  }
  throw PicardNonConvergence("picard_solve_path: no convergence within k_max=" + std::to_string(k_max), std::move(gaps));
}

/// Picard iteration from x^0 = x0.
inline PicardResult picard_solve_path(const CoeffSpec& c, double x0, const NoiseStream& noise, AlphaOrder alpha,
                                      const AbelWeights& w, double tol, unsigned k_max) {
  return picard_solve_path(c, x0, noise, alpha, w, tol, k_max, SampledFn::constant(noise.grid, x0));
}

/// Largest pairwise sup-distance between Picard limits reached from different
/// initial iterates on the same noise stream.
inline double uniqueness_probe(const CoeffSpec& c, double x0, const NoiseStream& noise, AlphaOrder alpha,
                               const AbelWeights& w, const std::vector<SampledFn>& starts, double tol = 1e-8,
                               unsigned k_max = 60) {
  std::vector<SampledFn> limits;
  limits.reserve(starts.size());
  for (const auto& s : starts) limits.push_back(picard_solve_path(c, x0, noise, alpha, w, tol, k_max, s).path);
  double worst = 0.0;
  for (std::size_t p = 0; p < limits.size(); ++p) {
    for (std::size_t q = p + 1; q < limits.size(); ++q) {
      for (std::size_t j = 0; j < limits[p].size(); ++j) worst = std::max(worst, std::abs(limits[p][j] - limits[q][j]));
    }
  }
  return worst;
}

/// Constant initial iterates x0 + offset.
inline std::vector<SampledFn> offset_starts(const TimeGrid& grid, double x0, const std::vector<double>& offsets) {
  std::vector<SampledFn> out;
  for (double o : offsets) out.push_back(SampledFn::constant(grid, x0 + o));
  return out;
}

/// Seeded collection of simulated trajectories on a shared grid; path j is
/// driven by brownian_path(path_seed(base_seed, j), grid).
struct PathEnsemble {
  std::size_t n_paths = 0;
  std::uint64_t base_seed = 0;
  double x0 = 0.0;
  TimeGrid grid{1.0, 1};
  std::vector<SampledFn> paths;
};

/// Runs `n_paths` paths of simulate_path. Paths are independent and written
/// by index, so the result does not depend on `threads`.
inline PathEnsemble simulate_ensemble(const CoeffSpec& c, double x0, AlphaOrder alpha, const TimeGrid& grid,
                                      std::size_t n_paths, std::uint64_t base_seed, unsigned threads = 1) {
  if (n_paths == 0) throw DomainError("simulate_ensemble: n_paths must be positive");
  const AbelWeights w(alpha, grid);
  std::vector<double> frozen;
  if (c.sigma1().is_constant()) frozen = detail::frozen_fractional_channel(c.sigma1(), w);
  std::vector<std::optional<SampledFn>> slots(n_paths);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const auto noise = brownian_path(path_seed(base_seed, j), grid);
      slots[j] = detail::simulate_path_impl(c, x0, noise, w, frozen.empty() ? nullptr : &frozen);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_paths)));
  if (threads == 1) {
    work(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_paths + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(n_paths, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  PathEnsemble out{n_paths, base_seed, x0, grid, {}};
  out.paths.reserve(n_paths);
  for (auto& s : slots) out.paths.push_back(std::move(*s));
  return out;
}

struct MomentEstimate {
  unsigned order = 1;
  std::vector<double> mean;  // per node, E[x^order]
  std::vector<double> se;    // standard error of the mean
};

struct EnsembleStats {
  TimeGrid grid{1.0, 1};
  std::size_t n_paths = 0;
  std::vector<MomentEstimate> moments;
  std::vector<double> variance;     // unbiased sample variance of x per node
  std::vector<double> variance_se;  // large-sample standard error of the variance
  double integrated_second_moment = 0.0;  // E[int_0^T x^2 dt]
  double integrated_second_moment_se = 0.0;
  std::vector<double> sup_second_moment;  // E[sup_{s<=t} x(s)^2], reported only
};

/// Per-node sample moments with standard errors.
inline EnsembleStats mc_ensemble_stats(const PathEnsemble& e, const std::vector<unsigned>& orders) {
  if (e.paths.empty()) throw DomainError("mc_ensemble_stats: empty ensemble");
  const std::size_t size = e.grid.size();
  const double n = static_cast<double>(e.paths.size());
  EnsembleStats out;
  out.grid = e.grid;
  out.n_paths = e.paths.size();
  for (unsigned p : orders) {
    MomentEstimate m{p, std::vector<double>(size), std::vector<double>(size)};
    for (std::size_t j = 0; j < size; ++j) {
      double mean = 0.0;
      for (const auto& path : e.paths) mean += std::pow(path[j], static_cast<int>(p));
      mean /= n;
      double ss = 0.0;
      for (const auto& path : e.paths) {
        const double d = std::pow(path[j], static_cast<int>(p)) - mean;
        ss += d * d;
      }
      m.mean[j] = mean;
      m.se[j] = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    }
    out.moments.push_back(std::move(m));
  }
  out.variance.assign(size, 0.0);
  out.variance_se.assign(size, 0.0);
  for (std::size_t j = 0; j < size; ++j) {
    double mean = 0.0;
    for (const auto& path : e.paths) mean += path[j];
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (const auto& path : e.paths) {
      const double d = path[j] - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    if (n > 1) {
      out.variance[j] = m2 / (n - 1.0);
      const double mu2 = m2 / n;
      const double mu4 = m4 / n;
      out.variance_se[j] = std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / n);
    }
  }
  const double h = e.grid.step();
  std::vector<double> per_path(e.paths.size());
  out.sup_second_moment.assign(size, 0.0);
  for (std::size_t k = 0; k < e.paths.size(); ++k) {
    const auto& path = e.paths[k];
    double integral = 0.0;
    double running = 0.0;
    for (std::size_t j = 0; j < size; ++j) {
      const double x2 = path[j] * path[j];
      if (j > 0) integral += 0.5 * h * (path[j - 1] * path[j - 1] + x2);
      running = std::max(running, x2);
      out.sup_second_moment[j] += running / n;
    }
    per_path[k] = integral;
  }
  double mean = 0.0;
  for (double v : per_path) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : per_path) ss += (v - mean) * (v - mean);
  out.integrated_second_moment = mean;
  out.integrated_second_moment_se = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return out;
}

}  // namespace fracgb
