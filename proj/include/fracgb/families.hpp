#pragma once

// Closed registry of scalar function families used both for the Gronwall
// data a(t), b(t), g(t) and for SDE coefficients b(x), sigma1(x), sigma2(x).
// Text form is `family[:p0[,p1]]`, e.g. `const:1`, `affine:0.5,2`, `zero`.

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "fracgb/errors.hpp"
#include "fracgb/grid.hpp"

namespace fracgb {

enum class FamilyKind { zero, constant, linear, affine, sinusoidal };

class Family {
 public:
  Family() = default;

  static Family zero() { return Family(FamilyKind::zero, 0.0, 0.0); }
  static Family constant(double c) { return Family(FamilyKind::constant, c, 0.0); }
  static Family linear(double c) { return Family(FamilyKind::linear, c, 0.0); }
  static Family affine(double c0, double c1) { return Family(FamilyKind::affine, c0, c1); }
  static Family sinusoidal(double c) { return Family(FamilyKind::sinusoidal, c, 0.0); }

  static Family parse(std::string_view text);

  FamilyKind kind() const noexcept { return kind_; }
  double p0() const noexcept { return p0_; }
  double p1() const noexcept { return p1_; }

  double operator()(double x) const noexcept {
    switch (kind_) {
      case FamilyKind::zero: return 0.0;
      case FamilyKind::constant: return p0_;
      case FamilyKind::linear: return p0_ * x;
      case FamilyKind::affine: return p0_ + p1_ * x;
      case FamilyKind::sinusoidal: return p0_ * std::sin(x);
    }
    return 0.0;
  }

  double derivative(double x) const noexcept {
    switch (kind_) {
      case FamilyKind::zero:
      case FamilyKind::constant: return 0.0;
      case FamilyKind::linear: return p0_;
      case FamilyKind::affine: return p1_;
      case FamilyKind::sinusoidal: return p0_ * std::cos(x);
    }
    return 0.0;
  }

  /// sup |f'| over the whole real line (attained for every family).
  double lipschitz() const noexcept {
    switch (kind_) {
      case FamilyKind::zero:
      case FamilyKind::constant: return 0.0;
      case FamilyKind::linear:
      case FamilyKind::sinusoidal: return std::abs(p0_);
      case FamilyKind::affine: return std::abs(p1_);
    }
    return 0.0;
  }

  bool is_zero() const noexcept { return p0_ == 0.0 && p1_ == 0.0; }

  /// True when the value does not depend on its argument.
  bool is_constant() const noexcept {
    return kind_ == FamilyKind::zero || kind_ == FamilyKind::constant || lipschitz() == 0.0;
  }

  std::string to_string() const;

  SampledFn sample(const TimeGrid& grid) const {
    return SampledFn::sample(grid, [this](double t) { return (*this)(t); });
  }

  friend bool operator==(const Family&, const Family&) = default;

 private:
  Family(FamilyKind k, double p0, double p1) : kind_(k), p0_(p0), p1_(p1) {
    if (!std::isfinite(p0) || !std::isfinite(p1)) throw DomainError("family parameters must be finite");
  }

  FamilyKind kind_ = FamilyKind::zero;
  double p0_ = 0.0;
  double p1_ = 0.0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view context) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw DomainError("invalid number '" + std::string(s) + "' in " + std::string(context));
  }
  return v;
}

}  // namespace detail

inline Family Family::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (true) {
      const auto comma = rest.find(',');
      params.push_back(detail::parse_double(rest.substr(0, comma), text));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  auto want = [&](std::size_t n) {
    if (params.size() != n) {
      throw DomainError("family '" + std::string(name) + "' takes " + std::to_string(n) + " parameter(s): '" +
                        std::string(text) + "'");
    }
  };
  if (name == "zero") {
    want(0);
    return zero();
  }
  if (name == "const" || name == "constant") {
    want(1);
    return constant(params[0]);
  }
  if (name == "linear") {
    want(1);
    return linear(params[0]);
  }
  if (name == "affine") {
    want(2);
    return affine(params[0], params[1]);
  }
  if (name == "sin" || name == "sinusoidal") {
    want(1);
    return sinusoidal(params[0]);
  }
  throw DomainError("unknown function family '" + std::string(name) + "'");
}

inline std::string Family::to_string() const {
  switch (kind_) {
    case FamilyKind::zero: return "zero";
    case FamilyKind::constant: return "const:" + detail::format_double(p0_);
    case FamilyKind::linear: return "linear:" + detail::format_double(p0_);
    case FamilyKind::affine: return "affine:" + detail::format_double(p0_) + "," + detail::format_double(p1_);
    case FamilyKind::sinusoidal: return "sin:" + detail::format_double(p0_);
  }
  return "zero";
}

}  // namespace fracgb
