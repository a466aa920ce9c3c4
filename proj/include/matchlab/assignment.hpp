#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "matchlab/core.hpp"

namespace matchlab {

/// Optimal pairing: X[i] is matched with Y[assignment[i]].
struct MatchResult {
  std::vector<std::size_t> assignment;
  double cost_sum = 0.0;   // C_N
  double cost_w2sq = 0.0;  // C_N / n
  std::size_t n = 0;
};

namespace detail {

inline void check_points(std::span<const Point2> pts, const char* what) {
  for (const auto& p : pts) {
    if (!is_finite(p)) throw InputError(std::string(what) + ": non-finite point");
  }
}

inline double matching_cost(std::span<const Point2> xs, std::span<const Point2> ys,
                            const std::vector<std::size_t>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) total += squared_distance(xs[i], ys[assignment[i]]);
  return total;
}

inline MatchResult finish(std::span<const Point2> xs, std::span<const Point2> ys,
                          std::vector<std::size_t> assignment) {
  MatchResult r;
  r.n = xs.size();
  r.cost_sum = matching_cost(xs, ys, assignment);
  r.cost_w2sq = r.n == 0 ? 0.0 : r.cost_sum / static_cast<double>(r.n);
  r.assignment = std::move(assignment);
  return r;
}

/// Power-of-two multiplier for integer costs: 2^40 unless
/// max_cost * scale * (terms + 1) would approach the int64 range.
inline double integer_cost_scale(double max_cost, std::size_t terms) {
  double scale = std::ldexp(1.0, 40);
  const double limit = std::ldexp(1.0, 61);
  const double t = static_cast<double>(terms) + 1.0;
  while (scale > 1.0 && max_cost * scale * t > limit) scale *= 0.5;
  if (max_cost * scale * t > limit) throw InputError("coordinates too large for integer cost scaling");
  return scale;
}

inline std::int64_t scaled_cost(Point2 a, Point2 b, double scale) {
  return static_cast<std::int64_t>(std::llround(squared_distance(a, b) * scale));
}

inline double max_pair_distance_sq(std::span<const Point2> xs, std::span<const Point2> ys) {
  if (xs.empty() || ys.empty()) return 0.0;
  Rect box{xs[0].x1, xs[0].x2, xs[0].x1, xs[0].x2};
  auto grow = [&](Point2 p) {
    box.lo1 = std::min(box.lo1, p.x1);
    box.lo2 = std::min(box.lo2, p.x2);
    box.hi1 = std::max(box.hi1, p.x1);
    box.hi2 = std::max(box.hi2, p.x2);
  };
  for (auto p : xs) grow(p);
  for (auto p : ys) grow(p);
  return box.width() * box.width() + box.height() * box.height();
}

/// Uniform bucket grid for k-nearest-neighbour queries on a fixed point set.
class PointGrid {
 public:
  explicit PointGrid(std::span<const Point2> pts) : pts_(pts) {
    if (pts.empty()) return;
    box_ = {pts[0].x1, pts[0].x2, pts[0].x1, pts[0].x2};
    for (auto p : pts) {
      box_.lo1 = std::min(box_.lo1, p.x1);
      box_.lo2 = std::min(box_.lo2, p.x2);
      box_.hi1 = std::max(box_.hi1, p.x1);
      box_.hi2 = std::max(box_.hi2, p.x2);
    }
    g_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(pts.size()) / 2.0)));
    h1_ = std::max(box_.width(), 1e-300) / static_cast<double>(g_);
    h2_ = std::max(box_.height(), 1e-300) / static_cast<double>(g_);
    start_.assign(g_ * g_ + 1, 0);
    std::vector<std::size_t> cell(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell[i] = index(pts[i]);
      ++start_[cell[i] + 1];
    }
    for (std::size_t c = 0; c < g_ * g_; ++c) start_[c + 1] += start_[c];
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[cell[i]]++] = static_cast<std::uint32_t>(i);
  }

  /// Indices of the k points nearest to q (ties in unspecified order).
  void nearest(Point2 q, std::size_t k, std::vector<std::pair<double, std::uint32_t>>& out) const {
    out.clear();
    k = std::min(k, pts_.size());
    if (k == 0) return;
    const long cx = clamp_cell((q.x1 - box_.lo1) / h1_);
    const long cy = clamp_cell((q.x2 - box_.lo2) / h2_);
    const long g = static_cast<long>(g_);
    auto by_dist = [](const auto& a, const auto& b) { return a.first < b.first; };
    for (long ring = 0;; ++ring) {
      for (long dx = -ring; dx <= ring; ++dx) {
        for (long dy = -ring; dy <= ring; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
          const long x = cx + dx, y = cy + dy;
          if (x < 0 || y < 0 || x >= g || y >= g) continue;
          const std::size_t c = static_cast<std::size_t>(x) * g_ + static_cast<std::size_t>(y);
          for (std::size_t t = start_[c]; t < start_[c + 1]; ++t) {
            const std::uint32_t i = items_[t];
            const double d = squared_distance(q, pts_[i]);
            if (out.size() < k) {
              out.push_back({d, i});
              std::push_heap(out.begin(), out.end(), by_dist);
            } else if (d < out.front().first) {
              std::pop_heap(out.begin(), out.end(), by_dist);
              out.back() = {d, i};
              std::push_heap(out.begin(), out.end(), by_dist);
            }
          }
        }
      }
      if (ring >= g) break;
      // everything outside the scanned block is at least this far away
      const double reach = static_cast<double>(ring) * std::min(h1_, h2_);
      if (out.size() == k && reach * reach >= out.front().first) break;
    }
  }

 private:
  std::span<const Point2> pts_;
  Rect box_{};
  std::size_t g_ = 1;
  double h1_ = 1.0, h2_ = 1.0;
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> items_;

  long clamp_cell(double t) const {
    if (!(t >= 0.0)) return 0;
    return std::min(static_cast<long>(t), static_cast<long>(g_) - 1);
  }
  std::size_t index(Point2 p) const {
    return static_cast<std::size_t>(clamp_cell((p.x1 - box_.lo1) / h1_)) * g_ +
           static_cast<std::size_t>(clamp_cell((p.x2 - box_.lo2) / h2_));
  }
};

}  // namespace detail

struct AssignmentOptions {
  /// Candidate edges per point in each direction before the dual check
  /// adds whatever is missing.
  std::size_t neighbors = 30;
};

/// Exact minimum-cost perfect matching under squared Euclidean cost.
///
/// Shortest augmenting paths (Dijkstra with column potentials) on a sparse
/// nearest-neighbour candidate graph over integer-scaled costs. After the
/// sparse solve, reduced costs are checked on all n^2 pairs; rows with a
/// violated pair receive their most violated edges and are re-augmented
/// until the duals certify optimality on the complete graph. Ties between equal-cost
/// paths are broken by column index, so the output is deterministic.
inline MatchResult assignment_solve(std::span<const Point2> xs, std::span<const Point2> ys,
                                    AssignmentOptions opt = {}) {
  const std::size_t n = xs.size();
  if (ys.size() != n) {
    std::ostringstream os;
    os << "assignment: size mismatch |X|=" << n << " |Y|=" << ys.size();
    throw InputError(os.str());
  }
  detail::check_points(xs, "assignment");
  detail::check_points(ys, "assignment");
  if (n == 0) throw InputError("assignment: needs at least one point per side");

  using i64 = std::int64_t;
  constexpr i64 kInf = std::numeric_limits<i64>::max() / 4;
  // Paths have at most 2n edges, potentials move by at most one path length.
  const double scale = detail::integer_cost_scale(detail::max_pair_distance_sq(xs, ys), 4 * n);
  auto cost = [&](std::size_t i, std::size_t j) { return detail::scaled_cost(xs[i], ys[j], scale); };

  // Candidate graph: column and cached integer cost per edge.
  struct Edge {
    std::uint32_t col;
    i64 cost;
  };
  const std::size_t k = std::min(opt.neighbors, n);
  std::vector<std::vector<Edge>> adj(n);
  auto add_edges = [&](std::size_t row, const std::vector<std::uint32_t>& cols) {
    auto& r = adj[row];
    for (std::uint32_t j : cols) r.push_back({j, cost(row, j)});
    std::sort(r.begin(), r.end(), [](const Edge& a, const Edge& b) { return a.col < b.col; });
    r.erase(std::unique(r.begin(), r.end(), [](const Edge& a, const Edge& b) { return a.col == b.col; }), r.end());
  };
  {
    std::vector<std::vector<std::uint32_t>> cand(n);
    std::vector<std::pair<double, std::uint32_t>> buf;
    const detail::PointGrid grid_y(ys);
    for (std::size_t i = 0; i < n; ++i) {
      grid_y.nearest(xs[i], k, buf);
      for (const auto& e : buf) cand[i].push_back(e.second);
    }
    const detail::PointGrid grid_x(xs);
    for (std::size_t j = 0; j < n; ++j) {
      grid_x.nearest(ys[j], k, buf);
      for (const auto& e : buf) cand[e.second].push_back(static_cast<std::uint32_t>(j));
    }
    for (std::size_t i = 0; i < n; ++i) add_edges(i, cand[i]);
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<i64> v(n, 0);
  std::vector<std::size_t> row_of(n, kNone);  // column -> row
  std::vector<std::size_t> col_of(n, kNone);  // row -> column
  std::vector<i64> dist(n, kInf);
  std::vector<std::size_t> pred(n, kNone);
  std::vector<char> done(n, 0);
  std::vector<std::size_t> touched;
  std::vector<std::size_t> finalized;
  using Entry = std::pair<i64, std::size_t>;
  auto matched_cost = [&](std::size_t row, std::size_t j) {
    for (const Edge& e : adj[row]) {
      if (e.col == j) return e.cost;
    }
    return cost(row, j);
  };
  std::vector<i64> row_base(n, 0);  // c(i, col_of[i]) while matched

  // Returns false when no free column is reachable through candidate edges.
  auto augment = [&](std::size_t root) -> bool {
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    touched.clear();
    finalized.clear();
    auto relax = [&](std::size_t row, i64 base) {
      for (const Edge& e : adj[row]) {
        const std::size_t j = e.col;
        if (done[j]) continue;
        const i64 d = base + e.cost - v[j];
        if (d < dist[j]) {
          if (dist[j] == kInf) touched.push_back(j);
          dist[j] = d;
          pred[j] = row;
          heap.push({d, j});
        }
      }
    };
    relax(root, 0);
    std::size_t sink = kNone;
    i64 sink_dist = 0;
    while (!heap.empty()) {
      const auto [d, j] = heap.top();
      heap.pop();
      if (done[j] || d != dist[j]) continue;
      done[j] = 1;
      finalized.push_back(j);
      if (row_of[j] == kNone) {
        sink = j;
        sink_dist = d;
        break;
      }
      const std::size_t row = row_of[j];
      relax(row, d - (row_base[row] - v[j]));
    }
    const bool found = sink != kNone;
    if (found) {
      for (std::size_t j : finalized) v[j] += dist[j] - sink_dist;
      std::size_t j = sink;
      while (true) {
        const std::size_t row = pred[j];
        const std::size_t prev = col_of[row];
        row_of[j] = row;
        col_of[row] = j;
        row_base[row] = matched_cost(row, j);
        if (row == root) break;
        j = prev;
      }
    }
    for (std::size_t j : touched) {
      dist[j] = kInf;
      pred[j] = kNone;
      done[j] = 0;
    }
    for (std::size_t j : finalized) done[j] = 0;
    return found;
  };

  // On failure the row gets edges to its nearest free columns, which makes
  // the next attempt succeed.
  auto augment_or_extend = [&](std::size_t row) {
    if (augment(row)) return;
    std::vector<std::pair<double, std::uint32_t>> free_cols;
    for (std::size_t j = 0; j < n; ++j) {
      if (row_of[j] == kNone) free_cols.push_back({squared_distance(xs[row], ys[j]), static_cast<std::uint32_t>(j)});
    }
    const std::size_t take = std::min(k, free_cols.size());
    std::partial_sort(free_cols.begin(), free_cols.begin() + static_cast<std::ptrdiff_t>(take), free_cols.end());
    std::vector<std::uint32_t> cols;
    for (std::size_t t = 0; t < take; ++t) cols.push_back(free_cols[t].second);
    add_edges(row, cols);
    if (!augment(row)) throw InternalError("assignment: augmentation failed after adding free columns");
  };

  for (std::size_t i = 0; i < n; ++i) augment_or_extend(i);

  // Certify on the complete graph. Rows with violated pairs receive their
  // most violated edges and are re-augmented.
  // A floating-point pass flags candidates; the integer slack decides.
  std::vector<std::pair<i64, std::uint32_t>> slack;
  std::vector<double> y1(n), y2(n), vd(n);
  for (std::size_t j = 0; j < n; ++j) {
    y1[j] = ys[j].x1;
    y2[j] = ys[j].x2;
  }
  std::vector<char> flag(n);
  for (int round = 0;; ++round) {
    std::vector<std::size_t> bad_rows;
    double vmax = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      vd[j] = static_cast<double>(v[j]);
      vmax = std::max(vmax, std::abs(vd[j]));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const i64 u = row_base[i] - v[col_of[i]];
      const double ud = static_cast<double>(u);
      const double margin = 4.0 + 1e-12 * (std::abs(ud) + vmax + static_cast<double>(row_base[i]));
      const double a1 = xs[i].x1, a2 = xs[i].x2;
      for (std::size_t j = 0; j < n; ++j) {
        const double d1 = a1 - y1[j], d2 = a2 - y2[j];
        flag[j] = (d1 * d1 + d2 * d2) * scale - vd[j] - ud < margin;
      }
      slack.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (!flag[j]) continue;
        const i64 s = cost(i, j) - v[j] - u;
        if (s < 0) slack.push_back({s, static_cast<std::uint32_t>(j)});
      }
      if (slack.empty()) continue;
      const std::size_t take = std::min(k, slack.size());
      std::partial_sort(slack.begin(), slack.begin() + static_cast<std::ptrdiff_t>(take), slack.end());
      std::vector<std::uint32_t> cols;
      for (std::size_t t = 0; t < take; ++t) cols.push_back(slack[t].second);
      add_edges(i, cols);
      bad_rows.push_back(i);
    }
    if (bad_rows.empty()) break;
    if (round > static_cast<int>(4 * n) + 8) throw InternalError("assignment: dual repair did not converge");
    for (std::size_t i : bad_rows) {
      row_of[col_of[i]] = kNone;
      col_of[i] = kNone;
    }
    for (std::size_t i : bad_rows) augment_or_extend(i);
  }

  return detail::finish(xs, ys, std::move(col_of));
}

/// Exhaustive minimum over all n! permutations in lexicographic order; the
/// first permutation reaching the minimum integer-scaled cost is kept.
inline MatchResult brute_force_solve(std::span<const Point2> xs, std::span<const Point2> ys) {
  const std::size_t n = xs.size();
  if (ys.size() != n) throw InputError("brute force: size mismatch");
  if (n == 0) throw InputError("brute force: needs at least one point per side");
  if (n > 10) throw ResourceError("brute force refuses n > 10");
  detail::check_points(xs, "brute force");
  detail::check_points(ys, "brute force");
  const double scale = detail::integer_cost_scale(detail::max_pair_distance_sq(xs, ys), n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();
  do {
    std::int64_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += detail::scaled_cost(xs[i], ys[perm[i]], scale);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return detail::finish(xs, ys, std::move(best));
}

/// Sorted pairing on the line: the optimal 1D coupling for convex cost.
inline double monotone_1d_cost(std::vector<double> x, std::vector<double> y) {
  if (x.size() != y.size()) throw InputError("monotone_1d_cost: length mismatch");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (x[i] - y[i]) * (x[i] - y[i]);
  return total;
}

}  // namespace matchlab
