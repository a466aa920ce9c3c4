#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/cutoff.hpp"
#include "matchlab/densities.hpp"
#include "matchlab/numerics.hpp"
#include "matchlab/partition.hpp"

namespace matchlab {

/// Points per annulus of a multiscaling density.
struct AnnulusCounts {
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
};

inline AnnulusCounts annulus_counts(const Multiscaling& d, std::span<const Point2> pts) {
  validate(d);
  AnnulusCounts c;
  c.counts.assign(d.levels(), 0);
  for (auto p : pts) {
    const std::size_t l = multiscaling_annulus(d, std::sqrt(squared_norm(p)));
    if (l >= d.levels()) throw InputError("annulus counts: point outside the support");
    ++c.counts[l];
  }
  c.total = static_cast<std::int64_t>(pts.size());
  return c;
}

/// 2 KL(m | standard Gaussian), an upper bound for W_2^2 between the two.
/// N-dependent families are evaluated at n.
inline double talagrand_bound(const Density& d, double n = 0.0) {
  validate(d);
  const double log2pi = std::log(2.0 * numerics::kPi);
  const double kl = std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          // E|x|^2 = 2 L^2 / 3 on [0, L]^2
          return log2pi - 2.0 * std::log(v.side) + v.side * v.side / 3.0;
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          return log2pi - std::log(numerics::kPi * v.radius * v.radius) + v.radius * v.radius / 4.0;
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          const auto masses = multiscaling_masses(v, n);
          double total = 0.0;
          for (std::size_t l = 0; l < v.levels(); ++l) {
            const double s0 = v.radii[l] * v.radii[l], s1 = v.radii[l + 1] * v.radii[l + 1];
            const double second_moment = 0.5 * (s0 + s1);
            total += masses[l] * (std::log(masses[l] / v.annulus_area(l)) + log2pi + 0.5 * second_moment);
          }
          return total;
        } else if constexpr (std::is_same_v<T, Gaussian2D>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          return 0.5 * squared_norm(v.mean);
        } else if constexpr (std::is_same_v<T, Maxwellian>) {
          return 0.5 * log2pi + 1.0 / 6.0;
        } else {
          return -std::log(v.cutoff->mass());
        }
      },
      d);
  if (!std::isfinite(kl) || kl < -1e-12) {
    std::ostringstream os;
    os << "talagrand_bound: relative entropy is not finite for family " << family_name(d);
    throw DivergenceError(os.str());
  }
  return 2.0 * std::max(0.0, kl);
}

/// 2 log(1 / rho(E_N)): bounds W_2^2 between the Gaussian and its cut-off.
/// For 1 < alpha < 2 the radius is positive for every n >= 3, so smaller n
/// is the only degenerate case.
inline double cutoff_bound(double n, double alpha, double eps) {
  if (!(n >= 3.0) || !std::isfinite(n)) throw InputError("cutoff_bound: needs n >= 3 for a non-degenerate partition");
  const double log_n = std::log(n);
  if (!(log_n - alpha * std::log(log_n) > 0.0)) throw InputError("cutoff_bound: r_N^2 <= 0, partition is degenerate");
  const auto cut = GaussianCutoff::build(n, alpha, eps);
  return -2.0 * std::log(cut.mass());
}

namespace detail {
/// Net mass rho(B) - nu(B) inside radius r for the counts-reweighted measure.
struct RadialFlux {
  std::vector<double> inner;  // cumulative deficit of annuli 0..l-1
  std::vector<double> own;    // deficit of annulus l
};

inline RadialFlux radial_flux(const Multiscaling& d, const AnnulusCounts& c) {
  validate(d);
  if (c.counts.size() != d.levels()) throw InputError("radial_bb_bound: one count per annulus required");
  if (c.total < 1) throw InputError("radial_bb_bound: total count must be >= 1");
  std::int64_t sum = 0;
  for (auto v : c.counts) {
    if (v < 0) throw InputError("radial_bb_bound: negative count");
    sum += v;
  }
  if (sum != c.total) throw InputError("radial_bb_bound: counts do not sum to the total");
  const double n = static_cast<double>(c.total);
  const auto masses = multiscaling_masses(d, std::max(n, 2.0));
  RadialFlux f;
  double acc = 0.0;
  for (std::size_t l = 0; l < d.levels(); ++l) {
    if (!(masses[l] > 0.0)) throw InputError("radial_bb_bound: zero-mass annulus");
    f.inner.push_back(acc);
    const double own = masses[l] - static_cast<double>(c.counts[l]) / n;
    f.own.push_back(own);
    acc += own;
  }
  return f;
}
}  // namespace detail

/// Benamou-Brenier bound for W_2^2 between the multiscaling density at
/// n = counts.total and its reweighting by the observed annulus counts:
/// 4 sum_l (1/rho_l) int_{s_l}^{s_{l+1}} F(r)^2 / (2 pi r) dr, where F(r) is
/// the net mass inside radius r.
inline double radial_bb_bound(const Multiscaling& d, const AnnulusCounts& counts) {
  const auto flux = detail::radial_flux(d, counts);
  const auto masses = multiscaling_masses(d, std::max(static_cast<double>(counts.total), 2.0));
  double total = 0.0;
  for (std::size_t l = 0; l < d.levels(); ++l) {
    const double s0 = d.radii[l], s1 = d.radii[l + 1];
    const double a = flux.inner[l], b = flux.own[l];
    if (a == 0.0 && b == 0.0) continue;
    const double span = s1 * s1 - s0 * s0;
    auto integrand = [&](double r) {
      const double f = a + b * (r * r - s0 * s0) / span;
      return r > 0.0 ? f * f / (2.0 * numerics::kPi * r) : 0.0;
    };
    const double rho_l = masses[l] / d.annulus_area(l);
    total += numerics::integrate(integrand, s0, s1) / rho_l;
  }
  return 4.0 * total;
}

/// sum over cells of |Q| log(n rho_N(Q)).
inline double cell_entropy_sum(const GridPartition& part, double n) {
  double total = 0.0;
  for (const auto& c : part.cells) {
    const double expected = n * c.mass;
    if (!(expected > 0.0)) {
      std::ostringstream os;
      os << "cell_entropy_sum: cell (" << c.j << ", " << c.k << ") has expected count " << expected;
      throw NumericalDomainError(os.str());
    }
    total += c.bounds.area() * std::log(expected);
  }
  return total;
}

}  // namespace matchlab
