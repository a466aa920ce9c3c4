#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/numerics.hpp"

namespace matchlab {

/// Radius of the Gaussian cut-off disk, sqrt(2 log(n / (log n)^alpha)).
/// Throws ConfigError when the radicand is not positive.
inline double cutoff_radius(double n, double alpha) {
  if (!(n > 1.0) || !std::isfinite(n)) throw ConfigError("cut-off radius needs n > 1");
  const double log_n = std::log(n);
  const double r2 = 2.0 * (log_n - alpha * std::log(log_n));
  if (!(r2 > 0.0)) {
    std::ostringstream os;
    os << "cut-off radius undefined: 2 log(n/(log n)^alpha) = " << r2 << " <= 0 for n=" << n
       << ", alpha=" << alpha;
    throw ConfigError(os.str());
  }
  return std::sqrt(r2);
}

/// One horizontal strip of the square cover: cells j_min..j_max in row k.
struct CutoffRow {
  int k = 0;
  int j_min = 0;
  int j_max = -1;
};

/// Square cover E_N of the disk {|x| <= r_N} by squares of side eps / r_N,
/// together with its standard Gaussian mass. Immutable after build().
class GaussianCutoff {
 public:
  static GaussianCutoff build(double n, double alpha, double eps) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw ConfigError("alpha must lie in (1, 2)");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive");
    if (!(n >= 3.0)) throw ConfigError("Gaussian cut-off needs n >= 3");
    GaussianCutoff g;
    g.n_ = n;
    g.alpha_ = alpha;
    g.eps_ = eps;
    g.r_ = cutoff_radius(n, alpha);
    const double r2 = g.r_ * g.r_;
    g.k_max_ = static_cast<int>(std::floor(r2 / eps));
    g.k_min_ = -g.k_max_ - 1;
    for (int k = g.k_min_; k <= g.k_max_; ++k) {
      const double lo = g.grid(k);
      const double hi = g.grid(k + 1);
      const double dy = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
      if (!(dy < g.r_)) continue;
      const double w = std::sqrt(r2 - dy * dy);
      // largest j with a_j < w
      int j_max = static_cast<int>(std::ceil(w / g.side())) - 1;
      while (g.grid(j_max + 1) < w) ++j_max;
      while (j_max >= 0 && !(g.grid(j_max) < w)) --j_max;
      g.rows_.push_back({k, -j_max - 1, j_max});
    }
    g.row_of_k_.assign(static_cast<std::size_t>(g.k_max_ - g.k_min_ + 1), -1);
    for (std::size_t i = 0; i < g.rows_.size(); ++i) {
      g.row_of_k_[static_cast<std::size_t>(g.rows_[i].k - g.k_min_)] = static_cast<int>(i);
    }
    double mass = 0.0;
    for (const auto& row : g.rows_) mass += g.gaussian_mass(g.row_rect(row));
    g.mass_ = mass;
    return g;
  }

  double n() const { return n_; }
  double alpha() const { return alpha_; }
  double eps() const { return eps_; }
  double radius() const { return r_; }
  double side() const { return eps_ / r_; }
  int k_min() const { return k_min_; }
  int k_max() const { return k_max_; }
  const std::vector<CutoffRow>& rows() const { return rows_; }
  /// Standard Gaussian mass of E_N.
  double mass() const { return mass_; }

  /// Grid coordinate a_j = j eps / r_N (same for both axes).
  double grid(int j) const { return j * eps_ / r_; }

  Rect cell_rect(int j, int k) const { return {grid(j), grid(k), grid(j + 1), grid(k + 1)}; }
  Rect row_rect(const CutoffRow& row) const {
    return {grid(row.j_min), grid(row.k), grid(row.j_max + 1), grid(row.k + 1)};
  }

  static double gaussian_mass(const Rect& r) {
    return numerics::normal_interval(r.lo1, r.hi1) * numerics::normal_interval(r.lo2, r.hi2);
  }

  /// Cell (j, k) containing p under half-open cells; points on the outer
  /// boundary of the cover resolve to the adjacent inner cell.
  std::optional<std::pair<int, int>> locate(Point2 p) const {
    if (!is_finite(p)) return std::nullopt;
    const double h = side();
    int k = static_cast<int>(std::floor(p.x2 / h));
    if (p.x2 >= grid(k + 1)) ++k;
    if (p.x2 < grid(k)) --k;
    if (k == k_max_ + 1 && p.x2 == grid(k)) k = k_max_;
    const CutoffRow* row = find_row(k);
    if (row == nullptr) return std::nullopt;
    int j = static_cast<int>(std::floor(p.x1 / h));
    if (p.x1 >= grid(j + 1)) ++j;
    if (p.x1 < grid(j)) --j;
    if (j == row->j_max + 1 && p.x1 == grid(j)) j = row->j_max;
    if (j < row->j_min || j > row->j_max) return std::nullopt;
    return std::make_pair(j, k);
  }

  bool contains(Point2 p) const { return locate(p).has_value(); }

  /// Standard Gaussian mass of rect intersected with E_N.
  double mass_in(const Rect& rect) const {
    double total = 0.0;
    for (const auto& row : rows_) {
      const Rect rr = row_rect(row);
      const Rect cut{std::max(rr.lo1, rect.lo1), std::max(rr.lo2, rect.lo2), std::min(rr.hi1, rect.hi1),
                     std::min(rr.hi2, rect.hi2)};
      if (cut.hi1 > cut.lo1 && cut.hi2 > cut.lo2) total += gaussian_mass(cut);
    }
    return total;
  }

  Rect bounding_box() const {
    int j_lo = 0, j_hi = -1;
    for (const auto& row : rows_) {
      j_lo = std::min(j_lo, row.j_min);
      j_hi = std::max(j_hi, row.j_max);
    }
    return {grid(j_lo), grid(k_min_), grid(j_hi + 1), grid(k_max_ + 1)};
  }

  const CutoffRow* find_row(int k) const {
    if (k < k_min_ || k > k_max_) return nullptr;
    const int idx = row_of_k_[static_cast<std::size_t>(k - k_min_)];
    return idx < 0 ? nullptr : &rows_[static_cast<std::size_t>(idx)];
  }

 private:
  double n_ = 0.0;
  double alpha_ = 0.0;
  double eps_ = 0.0;
  double r_ = 0.0;
  int k_min_ = 0;
  int k_max_ = -1;
  std::vector<CutoffRow> rows_;
  std::vector<int> row_of_k_;
  double mass_ = 0.0;
};

}  // namespace matchlab
