#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracgb/errors.hpp"

namespace fracgb {

/// Fractional order of the Abel kernel (t-s)^(alpha-1).
///
/// Admits the closed interval end alpha = 1 so that the classical limit
/// (kernel identically one) can be represented; operations that need a
/// strictly fractional order check `is_fractional()`.
class AlphaOrder {
 public:
  explicit AlphaOrder(double value) : value_(value) {
    if (!std::isfinite(value) || value <= 0.0 || value > 1.0) {
      throw DomainError("alpha must lie in (0, 1], got " + std::to_string(value));
    }
  }

  double value() const noexcept { return value_; }
  bool is_fractional() const noexcept { return value_ < 1.0; }

  friend bool operator==(AlphaOrder, AlphaOrder) = default;

 private:
  double value_;
};

/// Uniform partition t_j = j * t_end / n_steps of [0, t_end].
class TimeGrid {
 public:
  TimeGrid(double t_end, std::size_t n_steps) : t_end_(t_end), n_steps_(n_steps) {
    if (!std::isfinite(t_end) || t_end <= 0.0) {
      throw DomainError("t_end must be finite and positive");
    }
    if (n_steps < 1) {
      throw DomainError("n_steps must be at least 1");
    }
  }

  double t_end() const noexcept { return t_end_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t size() const noexcept { return n_steps_ + 1; }
  double step() const noexcept { return t_end_ / static_cast<double>(n_steps_); }

  double node(std::size_t j) const noexcept {
    return j == n_steps_ ? t_end_ : static_cast<double>(j) * step();
  }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = node(j);
    return out;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t_end_;
  std::size_t n_steps_;
};

/// Function values on the nodes of a TimeGrid.
class SampledFn {
 public:
  SampledFn(TimeGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw GridMismatch("sampled values do not match the grid size");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw DomainError("sampled function has a non-finite value");
    }
  }

  static SampledFn constant(TimeGrid grid, double c) {
    return SampledFn(grid, std::vector<double>(grid.size(), c));
  }

  template <class F>
  static SampledFn sample(TimeGrid grid, F&& f) {
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid.node(j));
    return SampledFn(grid, std::move(v));
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t j) const noexcept { return values_[j]; }
  std::size_t size() const noexcept { return values_.size(); }
  double back() const noexcept { return values_.back(); }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string(what) + ": time grids differ");
}

/// Nondecreasing on the grid, accepting steps down of at most `tol`
/// (relative to the local magnitude) as numerically flat.
inline bool is_nondecreasing(std::span<const double> v, double tol = 1e-12) {
  for (std::size_t j = 1; j < v.size(); ++j) {
    const double scale = std::max(1.0, std::max(std::abs(v[j]), std::abs(v[j - 1])));
    if (v[j] < v[j - 1] - tol * scale) return false;
  }
  return true;
}

inline bool is_nonnegative(std::span<const double> v, double tol = 0.0) {
  for (double x : v) {
    if (x < -tol) return false;
  }
  return true;
}

}  // namespace fracgb
