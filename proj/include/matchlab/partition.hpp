#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/cutoff.hpp"
#include "matchlab/densities.hpp"
#include "matchlab/numerics.hpp"

namespace matchlab {

enum class PartitionKind { Gaussian, Maxwellian };

struct Cell {
  int j = 0;
  int k = 0;
  Rect bounds;
  double mass = 0.0;  // rho_N(Q), probability under the cut-off density
};

/// Row k of the grid holds cells j_min..j_max.
struct RowRange {
  int k = 0;
  int j_min = 0;
  int j_max = -1;
};

/// Cut-off cell structure. Cells are ordered by row (increasing k), then by j.
struct GridPartition {
  PartitionKind kind = PartitionKind::Gaussian;
  double n = 0.0;
  double alpha = 0.0;
  double eps = 0.0;   // Gaussian kind
  int m = 0;          // Maxwellian kind
  double r_n = 0.0;
  double r_tilde = 0.0;  // Maxwellian kind: (floor(m floor(r_N) r_N) + 1) / (m floor(r_N))
  std::int64_t r_tilde_numerator = 0;
  std::int64_t r_tilde_denominator = 0;
  double side = 0.0;
  int k_min = 0;
  int k_max = -1;
  std::vector<RowRange> rows;
  std::vector<Cell> cells;
  double support_mass = 0.0;  // rho(E_N) or rho of the Maxwellian strip
  double min_expected = 0.0;  // min over cells of n rho_N(Q)
  double max_expected = 0.0;
  /// min_expected / (eps^2 (log n)^(alpha-1)) for the Gaussian kind and
  /// min_expected / ((log n)^(alpha-1) / m^2) for the Maxwellian kind.
  double count_constant = 0.0;
  std::shared_ptr<const GaussianCutoff> cutoff;  // Gaussian kind

  /// Bound on |a_{j+1}^2 - a_j^2| over the grid: 2 eps + eps^2 / r_N^2.
  double distortion() const { return 2.0 * eps + eps * eps / (r_n * r_n); }

  std::size_t row_offset(std::size_t row) const { return offsets_[row]; }

  /// Index into `cells` of the cell containing p (half-open cells, outer
  /// boundary resolved inward), or nullopt outside the cover.
  std::optional<std::size_t> locate(Point2 p) const {
    if (!is_finite(p)) return std::nullopt;
    auto cell_index = [this](int j, int k) -> std::optional<std::size_t> {
      if (k < k_min || k > k_max) return std::nullopt;
      const int r = row_of_k_[static_cast<std::size_t>(k - k_min)];
      if (r < 0) return std::nullopt;
      const RowRange& row = rows[static_cast<std::size_t>(r)];
      if (j < row.j_min || j > row.j_max) return std::nullopt;
      return offsets_[static_cast<std::size_t>(r)] + static_cast<std::size_t>(j - row.j_min);
    };
    if (kind == PartitionKind::Gaussian) {
      const auto jk = cutoff->locate(p);
      if (!jk) return std::nullopt;
      return cell_index(jk->first, jk->second);
    }
    auto axis = [this](double x, int lo, int hi) -> std::optional<int> {
      const double t = x * static_cast<double>(r_tilde_denominator);
      int i = static_cast<int>(std::floor(t));
      if (i == hi + 1 && t == static_cast<double>(hi + 1)) i = hi;
      if (i < lo || i > hi) return std::nullopt;
      return i;
    };
    const auto k = axis(p.x2, k_min, k_max);
    const auto j = axis(p.x1, 0, m_cols_ - 1);
    if (!k || !j) return std::nullopt;
    return cell_index(*j, *k);
  }

  /// Per-cell counts of the points; every point must lie in the cover.
  std::vector<std::int64_t> counts(std::span<const Point2> pts) const {
    std::vector<std::int64_t> out(cells.size(), 0);
    for (auto p : pts) {
      const auto c = locate(p);
      if (!c) throw InputError("cell counts: point outside the partition");
      ++out[*c];
    }
    return out;
  }

  // filled by the builders
  std::vector<std::size_t> offsets_;
  std::vector<int> row_of_k_;
  int m_cols_ = 0;
};

namespace detail {

inline void finish_partition(GridPartition& p) {
  p.offsets_.clear();
  p.row_of_k_.assign(static_cast<std::size_t>(p.k_max - p.k_min + 1), -1);
  std::size_t offset = 0;
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    p.offsets_.push_back(offset);
    p.row_of_k_[static_cast<std::size_t>(p.rows[r].k - p.k_min)] = static_cast<int>(r);
    offset += static_cast<std::size_t>(p.rows[r].j_max - p.rows[r].j_min + 1);
  }
  if (offset != p.cells.size()) throw InternalError("partition: cell count does not match the row ranges");
  p.min_expected = numerics::kInfinity;
  p.max_expected = 0.0;
  for (const auto& c : p.cells) {
    const double e = p.n * c.mass;
    p.min_expected = std::min(p.min_expected, e);
    p.max_expected = std::max(p.max_expected, e);
  }
  if (!(p.min_expected > 0.0)) throw NumericalDomainError("partition: a cell has zero expected count");
}

}  // namespace detail

/// Square cover of the cut-off disk {|x| <= r_N} with side eps / r_N.
inline GridPartition build_gaussian_partition(double n, double alpha, double eps) {
  auto cut = std::make_shared<const GaussianCutoff>(GaussianCutoff::build(n, alpha, eps));
  GridPartition p;
  p.kind = PartitionKind::Gaussian;
  p.n = n;
  p.alpha = alpha;
  p.eps = eps;
  p.r_n = cut->radius();
  p.side = cut->side();
  p.k_min = cut->k_min();
  p.k_max = cut->k_max();
  p.support_mass = cut->mass();
  const double r2 = p.r_n * p.r_n;
  const double bound = p.distortion() * (1.0 + 1e-12);
  for (const auto& row : cut->rows()) {
    p.rows.push_back({row.k, row.j_min, row.j_max});
    // minimal cover: the last cell reaches the circle, the next would not
    const double lo = cut->grid(row.k), hi = cut->grid(row.k + 1);
    const double dy = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
    const double w = std::sqrt(r2 - dy * dy);
    if (!(cut->grid(row.j_max) < w && cut->grid(row.j_max + 1) >= w)) {
      throw InternalError("partition: row range is not the minimal cover");
    }
    for (int j = row.j_min; j <= row.j_max; ++j) {
      const Rect r = cut->cell_rect(j, row.k);
      p.cells.push_back({j, row.k, r, GaussianCutoff::gaussian_mass(r) / cut->mass()});
    }
  }
  for (int j = p.k_min; j <= p.k_max; ++j) {
    const double a0 = cut->grid(j), a1 = cut->grid(j + 1);
    if (std::abs(a1 * a1 - a0 * a0) > bound) throw InternalError("partition: grid step exceeds the distortion bound");
  }
  p.cutoff = std::move(cut);
  detail::finish_partition(p);
  p.count_constant = p.min_expected / (eps * eps * std::pow(std::log(n), alpha - 1.0));
  return p;
}

/// Cover of (0,1) x (-r~_N, r~_N) by squares of side 1/(m floor(r_N)).
inline GridPartition build_maxwell_partition(double n, double alpha, int m) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw ConfigError("alpha must lie in (1, 2)");
  if (m < 1) throw ConfigError("m must be a positive integer");
  if (!(n >= 3.0)) throw ConfigError("Maxwellian partition needs n >= 3");
  GridPartition p;
  p.kind = PartitionKind::Maxwellian;
  p.n = n;
  p.alpha = alpha;
  p.m = m;
  p.r_n = cutoff_radius(n, alpha);
  const auto fr = static_cast<std::int64_t>(std::floor(p.r_n));
  if (fr < 1) throw ConfigError("Maxwellian partition needs r_N >= 1");
  const std::int64_t cols = static_cast<std::int64_t>(m) * fr;
  const std::int64_t num = static_cast<std::int64_t>(std::floor(static_cast<double>(cols) * p.r_n)) + 1;
  p.r_tilde_numerator = num;
  p.r_tilde_denominator = cols;
  p.r_tilde = static_cast<double>(num) / static_cast<double>(cols);
  p.side = 1.0 / static_cast<double>(cols);
  p.k_min = -static_cast<int>(num);
  p.k_max = static_cast<int>(num) - 1;
  p.m_cols_ = static_cast<int>(cols);
  p.support_mass = numerics::normal_interval(-p.r_tilde, p.r_tilde);
  auto at = [cols](std::int64_t i) { return static_cast<double>(i) / static_cast<double>(cols); };
  for (int k = p.k_min; k <= p.k_max; ++k) {
    p.rows.push_back({k, 0, static_cast<int>(cols) - 1});
    const double strip = numerics::normal_interval(at(k), at(k + 1));
    for (int j = 0; j < static_cast<int>(cols); ++j) {
      const Rect r{at(j), at(k), at(j + 1), at(k + 1)};
      p.cells.push_back({j, k, r, p.side * strip / p.support_mass});
    }
  }
  detail::finish_partition(p);
  p.count_constant =
      p.min_expected / (std::pow(std::log(n), alpha - 1.0) / (static_cast<double>(m) * static_cast<double>(m)));
  return p;
}

/// Gaussian restricted to E_N and renormalised.
inline Density truncate_density(double n, double alpha, double eps) { return make_truncated_gaussian(n, alpha, eps); }

// Cell maps -------------------------------------------------------------------------

/// Monotone map of [lo, hi] pushing the standard normal restricted to the
/// interval onto the uniform law: lo + (hi - lo) P(lo < Z < x) / P(lo < Z < hi).
inline double interval_to_uniform(double lo, double hi, double x) {
  if (!(x >= lo && x <= hi)) throw InputError("interval map: point outside the interval");
  return lo + (hi - lo) * numerics::normal_interval(lo, x) / numerics::normal_interval(lo, hi);
}

/// Inverse of interval_to_uniform, by safeguarded Newton iteration started
/// from the normal quantile.
inline double interval_from_uniform(double lo, double hi, double u) {
  if (!(u >= lo && u <= hi)) throw InputError("interval map: point outside the interval");
  if (u == lo || u == hi) return u;
  const double total = numerics::normal_interval(lo, hi);
  const double target = total * (u - lo) / (hi - lo);
  auto f = [&](double y) { return numerics::normal_interval(lo, y) - target; };
  double a = lo, b = hi;
  double y = numerics::normal_quantile(std::clamp(numerics::normal_cdf(lo) + target, 1e-300, 1.0 - 1e-16));
  if (!(y > lo && y < hi)) y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fy = f(y);
    if (fy == 0.0) return y;
    if (fy < 0.0) {
      a = y;
    } else {
      b = y;
    }
    double next = y - fy / numerics::normal_pdf(y);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - y) <= 1e-15 * std::max(1.0, std::abs(y)) || b - a <= 1e-15 * std::max(1.0, std::abs(y))) {
      return next;
    }
    y = next;
  }
  return y;
}

/// Product monotone map of a cell: restricted Gaussian -> uniform.
inline Point2 cell_to_uniform(const Cell& cell, Point2 p) {
  if (!cell.bounds.contains(p)) throw InputError("cell map: point outside the cell");
  return {interval_to_uniform(cell.bounds.lo1, cell.bounds.hi1, p.x1),
          interval_to_uniform(cell.bounds.lo2, cell.bounds.hi2, p.x2)};
}

/// Inverse product map: uniform -> restricted Gaussian.
inline Point2 cell_from_uniform(const Cell& cell, Point2 p) {
  if (!cell.bounds.contains(p)) throw InputError("cell map: point outside the cell");
  return {interval_from_uniform(cell.bounds.lo1, cell.bounds.hi1, p.x1),
          interval_from_uniform(cell.bounds.lo2, cell.bounds.hi2, p.x2)};
}

/// e^{-d} <= |S(x) - S(y)|^2 / |x - y|^2 <= e^{d} with d the larger of the
/// two axis bounds |hi^2 - lo^2|.
struct DistortionCertificate {
  double lower = 1.0;
  double upper = 1.0;
};

inline DistortionCertificate cell_distortion(const Cell& cell) {
  const auto& b = cell.bounds;
  const double d = std::max(std::abs(b.hi1 * b.hi1 - b.lo1 * b.lo1), std::abs(b.hi2 * b.hi2 - b.lo2 * b.lo2));
  return {std::exp(-d), std::exp(d)};
}

/// Map of the cell with the given grid indices.
inline Point2 cell_uniform_map(const GridPartition& part, const Cell& cell, Point2 p) {
  if (part.kind != PartitionKind::Gaussian) throw UnsupportedError("cell maps are defined for the Gaussian partition");
  return cell_to_uniform(cell, p);
}

// Chernoff event ---------------------------------------------------------------------

struct ChernoffEvent {
  double theta = 0.0;
  double xi = 0.0;
  bool holds = true;
  int worst_j = 0;
  int worst_k = 0;
  double worst_deviation = 0.0;  // |N - E| / E at the worst cell
  char worst_sample = 'X';
};

inline double default_xi(double alpha) { return (alpha - 1.0) / 4.0; }

/// Checks |N_Q - n rho_N(Q)| <= theta n rho_N(Q) + slack for every cell and
/// both samples, with theta = (log n)^(-xi).
inline ChernoffEvent chernoff_event_check(const GridPartition& part, std::span<const std::int64_t> counts_x,
                                          std::span<const std::int64_t> counts_y, double xi, double slack = 0.0) {
  if (!(xi > 0.0 && xi < (part.alpha - 1.0) / 2.0)) throw ConfigError("xi must lie in (0, (alpha-1)/2)");
  if (counts_x.size() != part.cells.size() || counts_y.size() != part.cells.size()) {
    throw InputError("chernoff: one count per cell required");
  }
  const auto n = static_cast<std::int64_t>(std::llround(part.n));
  for (auto counts : {counts_x, counts_y}) {
    std::int64_t total = 0;
    for (auto c : counts) {
      if (c < 0) throw InputError("chernoff: negative count");
      total += c;
    }
    if (total != n) {
      std::ostringstream os;
      os << "chernoff: counts sum to " << total << ", expected " << n;
      throw InputError(os.str());
    }
  }
  ChernoffEvent ev;
  ev.xi = xi;
  ev.theta = std::pow(std::log(part.n), -xi);
  double worst_excess = -numerics::kInfinity;
  for (std::size_t c = 0; c < part.cells.size(); ++c) {
    const double e = part.n * part.cells[c].mass;
    for (char which : {'X', 'Y'}) {
      const double count = static_cast<double>(which == 'X' ? counts_x[c] : counts_y[c]);
      const double dev = std::abs(count - e);
      const double excess = dev - ev.theta * e - slack;
      if (excess > 0.0) ev.holds = false;
      if (excess > worst_excess) {
        worst_excess = excess;
        ev.worst_j = part.cells[c].j;
        ev.worst_k = part.cells[c].k;
        ev.worst_deviation = dev / e;
        ev.worst_sample = which;
      }
    }
  }
  return ev;
}

}  // namespace matchlab
