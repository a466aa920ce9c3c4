#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "matchlab/core.hpp"

namespace matchlab::numerics {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Standard normal -------------------------------------------------------------

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

/// P(lo <= Z <= hi) for a standard normal Z, evaluated through erfc on the
/// tail side so that far-out intervals keep full relative precision.
inline double normal_interval(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (lo >= 0.0) return 0.5 * (std::erfc(lo / kSqrt2) - std::erfc(hi / kSqrt2));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi / kSqrt2) - std::erfc(-lo / kSqrt2));
  return 0.5 * (std::erf(hi / kSqrt2) - std::erf(lo / kSqrt2));
}

/// Inverse of the standard normal cdf: Acklam's rational approximation
/// followed by one Halley step.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInfinity;
    if (p == 1.0) return kInfinity;
    throw NumericalDomainError("normal_quantile: probability outside [0, 1]");
  }
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x = 0.0;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// Quadrature ------------------------------------------------------------------

struct QuadratureOptions {
  double rel_tol = 1e-10;
  unsigned max_depth = 20;
};

/// Adaptive 15-point Gauss-Kronrod on [lo, hi]. Throws QuadratureError when
/// the error estimate stays above rel_tol * max(|I|, L1 norm * eps).
template <typename F>
double integrate(F&& f, double lo, double hi, QuadratureOptions opt = {}) {
  if (hi == lo) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), lo, hi, opt.max_depth, opt.rel_tol, &err, &l1);
  const double scale = std::max(std::abs(value), l1 * 1e-14);
  if (!std::isfinite(value) || err > 1e-8 * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "quadrature on [" << lo << ", " << hi << "] did not converge: value=" << value
       << " error=" << err << " L1=" << l1;
    throw QuadratureError(os.str());
  }
  return value;
}

/// Integrates piecewise over sorted breakpoints (discontinuities of f).
template <typename F>
double integrate_pieces(F&& f, std::vector<double> breaks, QuadratureOptions opt = {}) {
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) total += integrate(f, breaks[i], breaks[i + 1], opt);
  }
  return total;
}

// Disk / rectangle geometry -----------------------------------------------------

namespace detail {
/// Antiderivative of sqrt(r^2 - t^2) on [-r, r].
inline double half_chord_primitive(double x, double r) {
  x = std::clamp(x, -r, r);
  return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(x / r));
}
}  // namespace detail

/// Exact area of {|x| <= r} intersected with the rectangle.
inline double disk_rect_area(double r, const Rect& rect) {
  if (r <= 0.0) return 0.0;
  const double x_lo = std::max(rect.lo1, -r);
  const double x_hi = std::min(rect.hi1, r);
  if (!(x_hi > x_lo) || !(rect.hi2 > rect.lo2)) return 0.0;
  const double c = rect.lo2;
  const double d = rect.hi2;
  std::vector<double> xs{x_lo, x_hi};
  for (double y : {c, d}) {
    if (std::abs(y) < r) {
      const double w = std::sqrt(r * r - y * y);
      for (double x : {-w, w}) {
        if (x > x_lo && x < x_hi) xs.push_back(x);
      }
    }
  }
  std::sort(xs.begin(), xs.end());
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = xs[i + 1];
    if (!(x1 > x0)) continue;
    const double xm = 0.5 * (x0 + x1);
    const double s = std::sqrt(std::max(0.0, r * r - xm * xm));
    const bool top_is_line = d < s;
    const bool bottom_is_line = c > -s;
    const double top_m = top_is_line ? d : s;
    const double bottom_m = bottom_is_line ? c : -s;
    if (!(top_m > bottom_m)) continue;
    const double chord = detail::half_chord_primitive(x1, r) - detail::half_chord_primitive(x0, r);
    const double width = x1 - x0;
    const double top = top_is_line ? d * width : chord;
    const double bottom = bottom_is_line ? c * width : -chord;
    area += top - bottom;
  }
  return std::max(0.0, area);
}

/// Exact area of {a < |x| <= b} intersected with the rectangle.
inline double annulus_rect_area(double a, double b, const Rect& rect) {
  return std::max(0.0, disk_rect_area(b, rect) - disk_rect_area(a, rect));
}

}  // namespace matchlab::numerics
