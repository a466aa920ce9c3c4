#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "matchlab/assignment.hpp"
#include "matchlab/core.hpp"
#include "matchlab/densities.hpp"
#include "matchlab/network_simplex.hpp"
#include "matchlab/numerics.hpp"

namespace matchlab {

struct WeightedCloud {
  std::vector<Point2> points;
  std::vector<double> weights;

  double total_mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

/// Uniform weights 1/n (or `mass`/n) on the points of a cloud.
inline WeightedCloud uniform_weights(std::span<const Point2> pts, double mass = 1.0) {
  WeightedCloud w;
  w.points.assign(pts.begin(), pts.end());
  w.weights.assign(pts.size(), pts.empty() ? 0.0 : mass / static_cast<double>(pts.size()));
  return w;
}

struct TransportPlan {
  struct Entry {
    std::size_t source;
    std::size_t sink;
    double mass;
  };
  std::vector<Entry> flows;
  double cost = 0.0;  // sum mass * |x - y|^2
};

struct TransportOptions {
  /// Integer mass units per unit of total mass.
  double mass_units = std::ldexp(1.0, 40);
  /// Refuse problems with more nodes than this.
  std::size_t node_budget = 1u << 20;
  /// Cost matrices up to this many entries are cached.
  std::size_t cache_entries = 1u << 24;
};

namespace detail {

/// Largest-remainder rounding of w / total * units to integers summing to units.
inline std::vector<std::int64_t> integer_masses(const std::vector<double>& w, double total, double units) {
  std::vector<std::int64_t> out(w.size());
  std::vector<std::pair<double, std::size_t>> rem(w.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = w[i] / total * units;
    const double f = std::floor(x);
    out[i] = static_cast<std::int64_t>(f);
    assigned += out[i];
    rem[i] = {x - f, i};
  }
  auto left = static_cast<std::int64_t>(std::llround(units)) - assigned;
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t t = 0; left > 0 && !rem.empty(); ++t, --left) ++out[rem[t % rem.size()].second];
  return out;
}

inline void check_weighted(const WeightedCloud& c, const char* name) {
  if (c.points.size() != c.weights.size()) {
    throw InputError(std::string(name) + ": points and weights differ in length");
  }
  check_points(c.points, name);
  for (double w : c.weights) {
    if (!std::isfinite(w) || w < 0.0) throw InputError(std::string(name) + ": weights must be finite and >= 0");
  }
}

/// Cost callback over integer-scaled costs, cached when small enough.
inline TransportSimplex::CostFn make_cost(std::vector<std::int64_t>& cache, std::size_t m, std::size_t k,
                                          std::function<std::int64_t(std::size_t, std::size_t)> f,
                                          std::size_t cache_entries) {
  if (m * k <= cache_entries) {
    cache.resize(m * k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < k; ++j) cache[i * k + j] = f(i, j);
    }
    const std::int64_t* data = cache.data();
    return [data, k](std::size_t i, std::size_t j) { return data[i * k + j]; };
  }
  return f;
}

}  // namespace detail

/// Exact optimal transport between two weighted clouds under squared
/// Euclidean cost, by network simplex on integer-scaled masses and costs.
/// Optimality is certified by a full dual-feasibility pass before return;
/// the reported cost is recomputed in floating point from the plan.
inline TransportPlan ot_cost(const WeightedCloud& a, const WeightedCloud& b, TransportOptions opt = {}) {
  detail::check_weighted(a, "ot_cost source");
  detail::check_weighted(b, "ot_cost sink");
  const double ma = a.total_mass();
  const double mb = b.total_mass();
  if (!(ma > 0.0) || !(mb > 0.0)) throw InputError("ot_cost: total mass must be positive");
  if (std::abs(ma - mb) > 1e-9 * std::max(1.0, std::max(ma, mb))) {
    std::ostringstream os;
    os << "ot_cost: total masses differ (" << ma << " vs " << mb << ")";
    throw InputError(os.str());
  }
  const std::size_t m = a.points.size();
  const std::size_t k = b.points.size();
  if (m + k > opt.node_budget) {
    std::ostringstream os;
    os << "ot_cost: " << m + k << " nodes exceed the budget of " << opt.node_budget;
    throw ResourceError(os.str());
  }
  const double mass = 0.5 * (ma + mb);
  const double unit = mass / opt.mass_units;
  auto supply = detail::integer_masses(a.weights, ma, opt.mass_units);
  auto demand = detail::integer_masses(b.weights, mb, opt.mass_units);

  const double scale = detail::integer_cost_scale(detail::max_pair_distance_sq(a.points, b.points), 4 * (m + k + 1));
  std::vector<std::int64_t> cache;
  auto cost = detail::make_cost(
      cache, m, k,
      [&](std::size_t i, std::size_t j) { return detail::scaled_cost(a.points[i], b.points[j], scale); },
      opt.cache_entries);
  TransportSimplex solver(std::move(supply), std::move(demand), cost);
  solver.solve();

  TransportPlan plan;
  for (const auto& f : solver.flows()) {
    const double q = static_cast<double>(f.amount) * unit;
    plan.flows.push_back({f.source, f.sink, q});
    plan.cost += q * squared_distance(a.points[f.source], b.points[f.sink]);
  }
  return plan;
}

/// Boundary-relaxed cost: each point of X and Y (unit mass) is either matched
/// across at |x - y|^2 or sent to the boundary of `domain` at its squared
/// distance to it. Returns the optimum divided by max(|X|, 1).
inline double wb2_cost(std::span<const Point2> xs, std::span<const Point2> ys, const Rect& domain,
                       TransportOptions opt = {}) {
  if (!(domain.hi1 > domain.lo1) || !(domain.hi2 > domain.lo2)) throw InputError("wb2: empty domain");
  detail::check_points(xs, "wb2");
  detail::check_points(ys, "wb2");
  for (auto p : xs) {
    if (!domain.contains(p)) throw InputError("wb2: point of X outside the domain");
  }
  for (auto p : ys) {
    if (!domain.contains(p)) throw InputError("wb2: point of Y outside the domain");
  }
  const std::size_t nx = xs.size();
  const std::size_t ny = ys.size();
  if (nx + ny == 0) return 0.0;
  if (nx + ny + 2 > opt.node_budget) throw ResourceError("wb2: node budget exceeded");

  // sources: X then the boundary; sinks: Y then the boundary
  std::vector<std::int64_t> supply(nx + 1, 1), demand(ny + 1, 1);
  supply[nx] = static_cast<std::int64_t>(ny);
  demand[ny] = static_cast<std::int64_t>(nx);
  const double span_sq = domain.width() * domain.width() + domain.height() * domain.height();
  const double scale = detail::integer_cost_scale(span_sq, 4 * (nx + ny + 3));
  auto raw = [&](std::size_t i, std::size_t j) -> double {
    if (i < nx && j < ny) return squared_distance(xs[i], ys[j]);
    if (i < nx) return domain.squared_distance_to_boundary(xs[i]);
    if (j < ny) return domain.squared_distance_to_boundary(ys[j]);
    return 0.0;
  };
  std::vector<std::int64_t> cache;
  auto cost = detail::make_cost(
      cache, nx + 1, ny + 1,
      [&](std::size_t i, std::size_t j) { return static_cast<std::int64_t>(std::llround(raw(i, j) * scale)); },
      opt.cache_entries);
  TransportSimplex solver(std::move(supply), std::move(demand), cost);
  solver.solve();
  double total = 0.0;
  for (const auto& f : solver.flows()) total += static_cast<double>(f.amount) * raw(f.source, f.sink);
  return total / static_cast<double>(std::max<std::size_t>(nx, 1));
}

// Semidiscrete ----------------------------------------------------------------------

/// Box outside which d has density below 1/(100 n) (or no mass at all).
inline Rect effective_box(const Density& d, double n) {
  const double level = std::max(1.0, 100.0 * n);
  return std::visit(
      [&](const auto& v) -> Rect {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          return {0.0, 0.0, v.side, v.side};
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          return {-v.radius, -v.radius, v.radius, v.radius};
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          return {-v.radius, -v.radius, v.radius, v.radius};
        } else if constexpr (std::is_same_v<T, Gaussian2D>) {
          const double r = std::sqrt(2.0 * std::log(level / (2.0 * numerics::kPi)));
          return {-r, -r, r, r};
        } else if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          const double r = std::sqrt(2.0 * std::log(level / (2.0 * numerics::kPi)));
          return {v.mean.x1 - r, v.mean.x2 - r, v.mean.x1 + r, v.mean.x2 + r};
        } else if constexpr (std::is_same_v<T, Maxwellian>) {
          const double t = std::sqrt(2.0 * std::log(level / std::sqrt(2.0 * numerics::kPi)));
          return {0.0, -t, 1.0, t};
        } else {
          return v.cutoff->bounding_box();
        }
      },
      d);
}

/// resolution x resolution discretisation of d over its effective box: one
/// atom per cell at the cell centre carrying the exact cell mass. Empty cells
/// are dropped and the masses renormalised to 1.
inline WeightedCloud discretize(const Density& d, std::size_t resolution, double n) {
  if (resolution < 1) throw ConfigError("discretize: resolution must be >= 1");
  const Rect box = effective_box(d, n);
  const double h1 = box.width() / static_cast<double>(resolution);
  const double h2 = box.height() / static_cast<double>(resolution);
  WeightedCloud out;
  for (std::size_t a = 0; a < resolution; ++a) {
    for (std::size_t b = 0; b < resolution; ++b) {
      const Rect cell{box.lo1 + h1 * static_cast<double>(a), box.lo2 + h2 * static_cast<double>(b),
                      a + 1 == resolution ? box.hi1 : box.lo1 + h1 * static_cast<double>(a + 1),
                      b + 1 == resolution ? box.hi2 : box.lo2 + h2 * static_cast<double>(b + 1)};
      const double w = region_mass(d, cell, n);
      if (w > 0.0) {
        out.points.push_back(cell.center());
        out.weights.push_back(w);
      }
    }
  }
  const double total = out.total_mass();
  if (!(total > 0.0)) throw InternalError("discretize: no mass inside the effective box");
  for (double& w : out.weights) w /= total;
  return out;
}

/// Upper bound on the discretisation bias: squared cell diagonal.
inline double discretization_bias(const Density& d, std::size_t resolution, double n) {
  const Rect box = effective_box(d, n);
  const double h1 = box.width() / static_cast<double>(resolution);
  const double h2 = box.height() / static_cast<double>(resolution);
  return h1 * h1 + h2 * h2;
}

struct SemidiscreteOptions {
  TransportOptions transport{};
  /// Grid cells plus points allowed before refusing.
  std::size_t node_budget = 1u << 16;
};

/// W_2^2 between the empirical measure of xs and a grid discretisation of d
/// (N-dependent families evaluated at n = |xs|). Biased upward by O(h^2).
inline double semidiscrete_estimate(std::span<const Point2> xs, const Density& d, std::size_t resolution,
                                    SemidiscreteOptions opt = {}) {
  if (resolution < 8) throw ConfigError("semidiscrete: resolution must be >= 8");
  if (xs.empty()) throw InputError("semidiscrete: empty point cloud");
  const std::size_t nodes = resolution * resolution + xs.size();
  if (resolution > (1u << 15) || nodes > opt.node_budget) {
    std::ostringstream os;
    os << "semidiscrete: resolution " << resolution << " needs " << nodes << " nodes, budget is "
       << opt.node_budget;
    throw ResourceError(os.str());
  }
  const double n = static_cast<double>(xs.size());
  const WeightedCloud grid = discretize(d, resolution, std::max(n, 2.0));
  return ot_cost(uniform_weights(xs), grid, opt.transport).cost;
}

inline double semidiscrete_estimate(const PointCloud& x, const Density& d, std::size_t resolution,
                                    SemidiscreteOptions opt = {}) {
  return semidiscrete_estimate(std::span<const Point2>(x.points), d, resolution, opt);
}

// PointCloud conveniences -------------------------------------------------------------

inline MatchResult assignment_cost(const PointCloud& x, const PointCloud& y) {
  return assignment_solve(x.points, y.points);
}

inline MatchResult brute_force_cost(const PointCloud& x, const PointCloud& y) {
  return brute_force_solve(x.points, y.points);
}

inline double wb2_cost(const PointCloud& x, const PointCloud& y, const Rect& domain) {
  return wb2_cost(std::span<const Point2>(x.points), std::span<const Point2>(y.points), domain);
}

}  // namespace matchlab
