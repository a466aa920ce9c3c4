#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchlab/core.hpp"
#include "matchlab/cutoff.hpp"
#include "matchlab/numerics.hpp"
#include "matchlab/random.hpp"

namespace matchlab {

// Density families ------------------------------------------------------------

/// Uniform on [0, side]^2.
struct UniformSquare {
  double side = 1.0;
};

/// Uniform on the disk of the given radius centred at the origin.
struct UniformDisk {
  double radius = 1.0;
};

/// Piecewise-constant, n-dependent density on concentric annuli
/// C_l = {radii[l] < |x| <= radii[l+1]} with expected count n^exponents[l] in
/// C_l for l >= 1 and the remainder in the central disk C_0.
struct Multiscaling {
  double radius = 1.0;
  std::vector<double> radii;      // 0 = s_0 < s_1 < ... < s_L = radius
  std::vector<double> exponents;  // 1 = alpha_0 > alpha_1 > ... > alpha_{L-1} > 0

  std::size_t levels() const { return exponents.size(); }
  double annulus_area(std::size_t l) const {
    return numerics::kPi * (radii[l + 1] * radii[l + 1] - radii[l] * radii[l]);
  }
};

/// Standard planar Gaussian, pdf (1/2pi) exp(-|x|^2/2).
struct Gaussian2D {};

/// Unit-covariance planar Gaussian centred at `mean`.
struct ShiftedGaussian {
  Point2 mean;
};

/// Uniform on [0,1] in x1 times a standard normal in x2.
struct Maxwellian {};

/// Standard Gaussian restricted to the square cover E_N of the cut-off disk
/// and renormalised. The cover is built once for the stored (n, alpha, eps).
struct TruncatedGaussian {
  double n = 0.0;
  double alpha = 1.5;
  double eps = 0.5;
  std::shared_ptr<const GaussianCutoff> cutoff;
};

using Density = std::variant<UniformSquare, UniformDisk, Multiscaling, Gaussian2D, ShiftedGaussian,
                             Maxwellian, TruncatedGaussian>;

enum class PredictorMode { Semidiscrete, Bipartite };

inline double predictor_prefactor(PredictorMode mode) {
  return mode == PredictorMode::Bipartite ? 1.0 / (2.0 * numerics::kPi) : 1.0 / (4.0 * numerics::kPi);
}

/// Samples with provenance. `density_id` is the compact JSON descriptor.
struct PointCloud {
  std::vector<Point2> points;
  std::uint64_t seed = 0;
  std::string density_id;
  std::size_t n = 0;
};

inline PointCloud make_cloud(std::vector<Point2> points) {
  PointCloud c;
  c.n = points.size();
  c.points = std::move(points);
  return c;
}

// Regions ----------------------------------------------------------------------

/// {inner < |x| <= outer}
struct Annulus {
  double inner = 0.0;
  double outer = 0.0;
};

using Region = std::variant<Annulus, Rect>;

// Construction and validation ----------------------------------------------------

inline const char* family_name(const Density& d) {
  return std::visit(
      [](const auto& v) -> const char* {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) return "uniform_square";
        if constexpr (std::is_same_v<T, UniformDisk>) return "uniform_disk";
        if constexpr (std::is_same_v<T, Multiscaling>) return "multiscaling";
        if constexpr (std::is_same_v<T, Gaussian2D>) return "gaussian";
        if constexpr (std::is_same_v<T, ShiftedGaussian>) return "shifted_gaussian";
        if constexpr (std::is_same_v<T, Maxwellian>) return "maxwellian";
        if constexpr (std::is_same_v<T, TruncatedGaussian>) return "truncated_gaussian";
      },
      d);
}

inline void validate(const Multiscaling& m) {
  const std::size_t levels = m.exponents.size();
  if (!(m.radius > 0.0) || !std::isfinite(m.radius)) throw ConfigError("multiscaling: radius must be > 0");
  if (levels == 0) throw ConfigError("multiscaling: at least one annulus required");
  if (m.radii.size() != levels + 1) throw ConfigError("multiscaling: need exactly levels + 1 radii");
  if (m.radii.front() != 0.0) throw ConfigError("multiscaling: radii must start at 0");
  if (m.radii.back() != m.radius) throw ConfigError("multiscaling: last radius must equal the outer radius");
  for (std::size_t i = 0; i + 1 < m.radii.size(); ++i) {
    if (!(m.radii[i + 1] > m.radii[i])) throw ConfigError("multiscaling: radii must be strictly increasing");
  }
  if (m.exponents.front() != 1.0) throw ConfigError("multiscaling: first exponent must be 1");
  for (std::size_t i = 0; i + 1 < levels; ++i) {
    if (!(m.exponents[i + 1] < m.exponents[i])) {
      throw ConfigError("multiscaling: exponents must be strictly decreasing");
    }
  }
  if (!(m.exponents.back() > 0.0)) throw ConfigError("multiscaling: exponents must be positive");
}

inline void validate(const Density& d) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          if (!(v.side > 0.0) || !std::isfinite(v.side)) throw ConfigError("uniform_square: side must be > 0");
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          if (!(v.radius > 0.0) || !std::isfinite(v.radius)) throw ConfigError("uniform_disk: radius must be > 0");
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          validate(v);
        } else if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          if (!is_finite(v.mean)) throw ConfigError("shifted_gaussian: mean must be finite");
        } else if constexpr (std::is_same_v<T, TruncatedGaussian>) {
          if (!v.cutoff) throw ConfigError("truncated_gaussian: cut-off geometry missing");
        }
      },
      d);
}

inline Multiscaling make_multiscaling(double radius, std::vector<double> radii, std::vector<double> exponents) {
  Multiscaling m{radius, std::move(radii), std::move(exponents)};
  validate(m);
  return m;
}

/// Gaussian restricted to E_N for the given cut-off parameters.
inline TruncatedGaussian make_truncated_gaussian(double n, double alpha, double eps) {
  auto cutoff = std::make_shared<const GaussianCutoff>(GaussianCutoff::build(n, alpha, eps));
  return TruncatedGaussian{n, alpha, eps, std::move(cutoff)};
}

/// Multiscaling configuration with c_l = l/L, s_l = c_l S, alpha_l = 1 - c_l^2.
inline Multiscaling riemann_multiscaling_config(std::size_t levels, double radius) {
  if (levels < 1) throw ConfigError("riemann config needs at least one level");
  if (!(radius > 0.0)) throw ConfigError("riemann config needs a positive radius");
  std::vector<double> radii(levels + 1);
  std::vector<double> exponents(levels);
  for (std::size_t l = 0; l <= levels; ++l) {
    const double c = static_cast<double>(l) / static_cast<double>(levels);
    radii[l] = l == levels ? radius : c * radius;
    if (l < levels) exponents[l] = 1.0 - c * c;
  }
  return make_multiscaling(radius, std::move(radii), std::move(exponents));
}

/// Sum over annuli of alpha_l |C_l|: the multiscaling growth coefficient.
inline double multiscaling_coefficient(const Multiscaling& m) {
  double total = 0.0;
  for (std::size_t l = 0; l < m.levels(); ++l) total += m.exponents[l] * m.annulus_area(l);
  return total;
}

/// Annulus probabilities at sample size n: (n - sum n^alpha_l)/n on C_0 and
/// n^alpha_l / n on C_l.
inline std::vector<double> multiscaling_masses(const Multiscaling& m, double n) {
  if (!(n >= 2.0)) throw ConfigError("multiscaling density needs n >= 2");
  std::vector<double> masses(m.levels());
  double outer = 0.0;
  for (std::size_t l = 1; l < m.levels(); ++l) {
    masses[l] = std::pow(n, m.exponents[l]) / n;
    outer += masses[l];
  }
  masses[0] = 1.0 - outer;
  if (!(masses[0] > 0.0)) {
    std::ostringstream os;
    os << "multiscaling: n=" << n << " too small, outer annuli take all the mass";
    throw ConfigError(os.str());
  }
  return masses;
}

/// Index l of the annulus containing radius r (C_0 includes the origin), or
/// levels() when r lies outside the support.
inline std::size_t multiscaling_annulus(const Multiscaling& m, double r) {
  for (std::size_t l = 0; l < m.levels(); ++l) {
    if (r <= m.radii[l + 1]) return l;
  }
  return m.levels();
}

// pdf ------------------------------------------------------------------------------

inline double pdf(const Density& d, Point2 p, double n = 0.0) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          const bool inside = p.x1 >= 0.0 && p.x1 <= v.side && p.x2 >= 0.0 && p.x2 <= v.side;
          return inside ? 1.0 / (v.side * v.side) : 0.0;
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          return squared_norm(p) <= v.radius * v.radius ? 1.0 / (numerics::kPi * v.radius * v.radius) : 0.0;
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          validate(v);
          const auto masses = multiscaling_masses(v, n);
          const std::size_t l = multiscaling_annulus(v, std::sqrt(squared_norm(p)));
          return l < v.levels() ? masses[l] / v.annulus_area(l) : 0.0;
        } else if constexpr (std::is_same_v<T, Gaussian2D>) {
          return std::exp(-0.5 * squared_norm(p)) / (2.0 * numerics::kPi);
        } else if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          return std::exp(-0.5 * squared_distance(p, v.mean)) / (2.0 * numerics::kPi);
        } else if constexpr (std::is_same_v<T, Maxwellian>) {
          return (p.x1 >= 0.0 && p.x1 <= 1.0) ? numerics::normal_pdf(p.x2) : 0.0;
        } else {
          validate(d);
          if (!v.cutoff->contains(p)) return 0.0;
          return std::exp(-0.5 * squared_norm(p)) / (2.0 * numerics::kPi) / v.cutoff->mass();
        }
      },
      d);
}

// Sampling ---------------------------------------------------------------------------

inline std::string density_id(const Density& d);

/// n i.i.d. draws; N-dependent families (multiscaling) are evaluated at this n.
/// Truncated Gaussians keep the n of their cut-off geometry.
inline PointCloud sample(const Density& d, std::size_t n, std::uint64_t seed) {
  validate(d);
  PointCloud cloud;
  cloud.seed = seed;
  cloud.n = n;
  cloud.density_id = density_id(d);
  cloud.points.reserve(n);
  if (n == 0) return cloud;
  Rng rng(seed);
  auto& pts = cloud.points;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          for (std::size_t i = 0; i < n; ++i) {
            const double a = rng.uniform();
            const double b = rng.uniform();
            pts.push_back({v.side * a, v.side * b});
          }
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          for (std::size_t i = 0; i < n; ++i) {
            const double r = v.radius * std::sqrt(rng.uniform());
            const double t = 2.0 * numerics::kPi * rng.uniform();
            pts.push_back({r * std::cos(t), r * std::sin(t)});
          }
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          const auto masses = multiscaling_masses(v, static_cast<double>(n));
          std::vector<double> cumulative(masses.size());
          std::partial_sum(masses.begin(), masses.end(), cumulative.begin());
          for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform();
            std::size_t l = 0;
            while (l + 1 < cumulative.size() && u >= cumulative[l]) ++l;
            const double s0 = v.radii[l] * v.radii[l];
            const double s1 = v.radii[l + 1] * v.radii[l + 1];
            const double r = std::sqrt(s0 + rng.uniform() * (s1 - s0));
            const double t = 2.0 * numerics::kPi * rng.uniform();
            pts.push_back({r * std::cos(t), r * std::sin(t)});
          }
        } else if constexpr (std::is_same_v<T, Gaussian2D>) {
          for (std::size_t i = 0; i < n; ++i) {
            auto [a, b] = rng.normal_pair();
            pts.push_back({a, b});
          }
        } else if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          for (std::size_t i = 0; i < n; ++i) {
            auto [a, b] = rng.normal_pair();
            pts.push_back({a + v.mean.x1, b + v.mean.x2});
          }
        } else if constexpr (std::is_same_v<T, Maxwellian>) {
          for (std::size_t i = 0; i < n; ++i) {
            const double a = rng.uniform();
            pts.push_back({a, rng.normal()});
          }
        } else {
          while (pts.size() < n) {
            auto [a, b] = rng.normal_pair();
            const Point2 p{a, b};
            if (v.cutoff->contains(p)) pts.push_back(p);
          }
        }
      },
      d);
  return cloud;
}

// Exact masses --------------------------------------------------------------------------

namespace detail {
inline double clip_interval(double lo, double hi, double a, double b) {
  return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

[[noreturn]] inline void unsupported_region(const Density& d, const char* region) {
  std::ostringstream os;
  os << "region_mass: " << region << " regions are not supported for family " << family_name(d);
  throw UnsupportedError(os.str());
}
}  // namespace detail

/// Probability of the region under d (evaluated at n for N-dependent families).
inline double region_mass(const Density& d, const Region& region, double n = 0.0) {
  validate(d);
  if (const auto* ann = std::get_if<Annulus>(&region)) {
    if (!(ann->inner >= 0.0) || !(ann->outer >= ann->inner)) throw InputError("annulus needs 0 <= inner <= outer");
    const double a = ann->inner;
    const double b = ann->outer;
    return std::visit(
        [&](const auto& v) -> double {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, UniformSquare>) {
            const Rect sq{0.0, 0.0, v.side, v.side};
            return numerics::annulus_rect_area(a, b, sq) / (v.side * v.side);
          } else if constexpr (std::is_same_v<T, UniformDisk>) {
            const double s2 = v.radius * v.radius;
            return (std::min(b * b, s2) - std::min(a * a, s2)) / s2;
          } else if constexpr (std::is_same_v<T, Multiscaling>) {
            const auto masses = multiscaling_masses(v, n);
            double total = 0.0;
            for (std::size_t l = 0; l < v.levels(); ++l) {
              const double s0 = v.radii[l] * v.radii[l];
              const double s1 = v.radii[l + 1] * v.radii[l + 1];
              total += masses[l] * detail::clip_interval(s0, s1, a * a, b * b) / (s1 - s0);
            }
            return total;
          } else if constexpr (std::is_same_v<T, Gaussian2D>) {
            // e^{-a^2/2} - e^{-b^2/2} without cancellation
            return -std::exp(-0.5 * a * a) * std::expm1(-0.5 * (b * b - a * a));
          } else {
            detail::unsupported_region(d, "annulus");
          }
        },
        d);
  }
  const Rect& rect = std::get<Rect>(region);
  if (!(rect.hi1 >= rect.lo1) || !(rect.hi2 >= rect.lo2)) throw InputError("rectangle bounds are inverted");
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          return detail::clip_interval(rect.lo1, rect.hi1, 0.0, v.side) *
                 detail::clip_interval(rect.lo2, rect.hi2, 0.0, v.side) / (v.side * v.side);
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          return numerics::disk_rect_area(v.radius, rect) / (numerics::kPi * v.radius * v.radius);
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          const auto masses = multiscaling_masses(v, n);
          double total = 0.0;
          for (std::size_t l = 0; l < v.levels(); ++l) {
            total += masses[l] * numerics::annulus_rect_area(v.radii[l], v.radii[l + 1], rect) / v.annulus_area(l);
          }
          return total;
        } else if constexpr (std::is_same_v<T, Gaussian2D>) {
          return GaussianCutoff::gaussian_mass(rect);
        } else if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          return GaussianCutoff::gaussian_mass(
              {rect.lo1 - v.mean.x1, rect.lo2 - v.mean.x2, rect.hi1 - v.mean.x1, rect.hi2 - v.mean.x2});
        } else if constexpr (std::is_same_v<T, Maxwellian>) {
          return detail::clip_interval(rect.lo1, rect.hi1, 0.0, 1.0) * numerics::normal_interval(rect.lo2, rect.hi2);
        } else {
          return v.cutoff->mass_in(rect) / v.cutoff->mass();
        }
      },
      d);
}

// Predictors ----------------------------------------------------------------------------

/// prefactor(mode) * integral over {rho > 1/n} of log(n rho(x)) dx, by quadrature.
inline double predictor_numeric(const Density& d, double n, PredictorMode mode) {
  if (!(n >= 2.0)) throw ConfigError("predictor needs n >= 2");
  validate(d);
  const double pref = predictor_prefactor(mode);
  const double integral = std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          const double area = v.side * v.side;
          return area * std::max(0.0, std::log(n / area));
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          const double area = numerics::kPi * v.radius * v.radius;
          return area * std::max(0.0, std::log(n / area));
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          const auto masses = multiscaling_masses(v, n);
          auto f = [&](double r) {
            const std::size_t l = std::min(multiscaling_annulus(v, r), v.levels() - 1);
            const double log_count = std::log(n * masses[l] / v.annulus_area(l));
            return 2.0 * numerics::kPi * r * std::max(0.0, log_count);
          };
          double total = 0.0;
          for (std::size_t l = 0; l < v.levels(); ++l) {
            const double lo = v.radii[l];
            const double hi = v.radii[l + 1];
            total += numerics::integrate([&](double r) { return f(std::clamp(r, lo, hi)); }, lo, hi);
          }
          return total;
        } else if constexpr (std::is_same_v<T, Gaussian2D> || std::is_same_v<T, ShiftedGaussian>) {
          const double level = std::log(n / (2.0 * numerics::kPi));
          if (!(level > 0.0)) return 0.0;
          const double boundary = std::sqrt(2.0 * level);
          return numerics::integrate(
              [&](double r) { return 2.0 * numerics::kPi * r * std::max(0.0, level - 0.5 * r * r); }, 0.0,
              boundary);
        } else if constexpr (std::is_same_v<T, Maxwellian>) {
          const double level = std::log(n / std::sqrt(2.0 * numerics::kPi));
          if (!(level > 0.0)) return 0.0;
          const double boundary = std::sqrt(2.0 * level);
          // x1 factor integrates to 1 over [0, 1]
          return 2.0 * numerics::integrate([&](double t) { return std::max(0.0, level - 0.5 * t * t); }, 0.0,
                                           boundary);
        } else {
          const GaussianCutoff& cut = *v.cutoff;
          const double level = std::log(n / (2.0 * numerics::kPi * cut.mass()));
          double total = 0.0;
          for (const auto& row : cut.rows()) {
            const Rect rr = cut.row_rect(row);
            auto inner = [&](double x2) {
              const double q = level - 0.5 * x2 * x2;
              if (!(q > 0.0)) return 0.0;
              const double w = std::sqrt(2.0 * q);
              const double lo = std::max(rr.lo1, -w);
              const double hi = std::min(rr.hi1, w);
              if (!(hi > lo)) return 0.0;
              return q * (hi - lo) - (hi * hi * hi - lo * lo * lo) / 6.0;
            };
            std::vector<double> breaks{rr.lo2, rr.hi2};
            for (double x : {rr.lo1, rr.hi1}) {
              const double q = 2.0 * level - x * x;
              if (q > 0.0) {
                for (double y : {-std::sqrt(q), std::sqrt(q)}) {
                  if (y > rr.lo2 && y < rr.hi2) breaks.push_back(y);
                }
              }
            }
            if (level > 0.0) {
              for (double y : {-std::sqrt(2.0 * level), std::sqrt(2.0 * level)}) {
                if (y > rr.lo2 && y < rr.hi2) breaks.push_back(y);
              }
            }
            total += numerics::integrate_pieces(inner, breaks);
          }
          return total;
        }
      },
      d);
  return pref * integral;
}

/// Leading asymptotic term of the expected matching cost.
inline double predictor_closed_form(const Density& d, double n, PredictorMode mode) {
  if (!(n >= 2.0)) throw ConfigError("predictor needs n >= 2");
  validate(d);
  const double pref = predictor_prefactor(mode);
  const double log_n = std::log(n);
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          return pref * v.side * v.side * log_n;
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          return pref * numerics::kPi * v.radius * v.radius * log_n;
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          return pref * multiscaling_coefficient(v) * log_n;
        } else if constexpr (std::is_same_v<T, Gaussian2D> || std::is_same_v<T, ShiftedGaussian>) {
          return pref * numerics::kPi * log_n * log_n;
        } else if constexpr (std::is_same_v<T, Maxwellian>) {
          return pref * (4.0 * numerics::kSqrt2 / 3.0) * std::pow(log_n, 1.5);
        } else {
          throw UnsupportedError("predictor_closed_form: no closed form for truncated_gaussian");
        }
      },
      d);
}

// JSON -----------------------------------------------------------------------------------

namespace detail {
inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown field '" + it.key() + "' in density descriptor");
  }
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("density descriptor is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("density field '") + key + "': " + e.what());
  }
}
}  // namespace detail

inline nlohmann::json density_to_json(const Density& d) {
  nlohmann::json j;
  j["family"] = family_name(d);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformSquare>) {
          j["side"] = v.side;
        } else if constexpr (std::is_same_v<T, UniformDisk>) {
          j["radius"] = v.radius;
        } else if constexpr (std::is_same_v<T, Multiscaling>) {
          j["radius"] = v.radius;
          j["radii"] = v.radii;
          j["exponents"] = v.exponents;
        } else if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          j["mean"] = {v.mean.x1, v.mean.x2};
        } else if constexpr (std::is_same_v<T, TruncatedGaussian>) {
          j["n"] = v.n;
          j["alpha"] = v.alpha;
          j["eps"] = v.eps;
        }
      },
      d);
  return j;
}

inline Density density_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("density descriptor must be a JSON object");
  const auto family = detail::required<std::string>(j, "family");
  Density d;
  if (family == "uniform_square") {
    detail::reject_unknown(j, {"family", "side"});
    d = UniformSquare{detail::required<double>(j, "side")};
  } else if (family == "uniform_disk") {
    detail::reject_unknown(j, {"family", "radius"});
    d = UniformDisk{detail::required<double>(j, "radius")};
  } else if (family == "multiscaling") {
    detail::reject_unknown(j, {"family", "radius", "radii", "exponents"});
    d = Multiscaling{detail::required<double>(j, "radius"), detail::required<std::vector<double>>(j, "radii"),
                     detail::required<std::vector<double>>(j, "exponents")};
  } else if (family == "gaussian") {
    detail::reject_unknown(j, {"family"});
    d = Gaussian2D{};
  } else if (family == "shifted_gaussian") {
    detail::reject_unknown(j, {"family", "mean"});
    const auto mean = detail::required<std::vector<double>>(j, "mean");
    if (mean.size() != 2) throw ConfigError("shifted_gaussian: mean must have two components");
    d = ShiftedGaussian{{mean[0], mean[1]}};
  } else if (family == "maxwellian") {
    detail::reject_unknown(j, {"family"});
    d = Maxwellian{};
  } else if (family == "truncated_gaussian") {
    detail::reject_unknown(j, {"family", "n", "alpha", "eps"});
    d = make_truncated_gaussian(detail::required<double>(j, "n"), detail::required<double>(j, "alpha"),
                                detail::required<double>(j, "eps"));
  } else {
    throw ConfigError("unknown density family '" + family + "'");
  }
  validate(d);
  return d;
}

inline std::string density_id(const Density& d) { return density_to_json(d).dump(); }

}  // namespace matchlab
