#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace matchlab {

// Errors ----------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid descriptor or parameter outside its domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (sizes, masses, points).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Operation is not defined for this density / region combination.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Problem too large for the configured budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// A solver invariant was violated; indicates a bug, never bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Geometry --------------------------------------------------------------------

struct Point2 {
  double x1 = 0.0;
  double x2 = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x1, s * a.x2}; }

inline double squared_norm(Point2 a) { return a.x1 * a.x1 + a.x2 * a.x2; }
inline double squared_distance(Point2 a, Point2 b) { return squared_norm(a - b); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x1) && std::isfinite(p.x2); }

/// Axis-aligned rectangle [lo1, hi1] x [lo2, hi2]. Infinite bounds are allowed.
struct Rect {
  double lo1 = 0.0;
  double lo2 = 0.0;
  double hi1 = 0.0;
  double hi2 = 0.0;

  double width() const { return hi1 - lo1; }
  double height() const { return hi2 - lo2; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (lo1 + hi1), 0.5 * (lo2 + hi2)}; }

  bool contains(Point2 p) const {
    return p.x1 >= lo1 && p.x1 <= hi1 && p.x2 >= lo2 && p.x2 <= hi2;
  }
  /// Half-open membership [lo, hi) on both axes.
  bool contains_half_open(Point2 p) const {
    return p.x1 >= lo1 && p.x1 < hi1 && p.x2 >= lo2 && p.x2 < hi2;
  }
  /// Squared distance from an interior point to the rectangle boundary.
  double squared_distance_to_boundary(Point2 p) const {
    const double d = std::min(std::min(p.x1 - lo1, hi1 - p.x1), std::min(p.x2 - lo2, hi2 - p.x2));
    return d * d;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace matchlab
