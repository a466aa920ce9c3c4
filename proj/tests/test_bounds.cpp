#include <gtest/gtest.h>

#include <cmath>

#include "matchlab/bounds.hpp"
#include "matchlab/random.hpp"
#include "matchlab/transport.hpp"

using namespace matchlab;
using numerics::kPi;

namespace {
Multiscaling two_annulus() { return make_multiscaling(2.0, {0.0, 1.0, 2.0}, {1.0, 0.5}); }

// Midpoint rule on a fixed grid in r, independent of the library quadrature.
double midpoint_radial_bb(const Multiscaling& d, const AnnulusCounts& c, int steps) {
  const double n = static_cast<double>(c.total);
  const auto masses = multiscaling_masses(d, n);
  double inner = 0.0, total = 0.0;
  for (std::size_t l = 0; l < d.levels(); ++l) {
    const double s0 = d.radii[l], s1 = d.radii[l + 1];
    const double own = masses[l] - c.counts[l] / n;
    const double rho = masses[l] / (kPi * (s1 * s1 - s0 * s0));
    const double h = (s1 - s0) / steps;
    double acc = 0.0;
    for (int i = 0; i < steps; ++i) {
      const double r = s0 + (i + 0.5) * h;
      const double f = inner + own * (r * r - s0 * s0) / (s1 * s1 - s0 * s0);
      acc += f * f / (2.0 * kPi * r) * h;
    }
    total += acc / rho;
    inner += own;
  }
  return 4.0 * total;
}
}  // namespace

TEST(Talagrand, ClosedFormsMatchQuadratureOfRelativeEntropy) {
  // 2 KL by 50-digit quadrature
  EXPECT_EQ(talagrand_bound(Gaussian2D{}), 0.0);
  EXPECT_NEAR(talagrand_bound(UniformSquare{1.0}), 4.34242079948535763, 1e-12);
  EXPECT_NEAR(talagrand_bound(UniformSquare{2.0}), 3.56983207724557640, 1e-12);
  EXPECT_NEAR(talagrand_bound(UniformDisk{1.0}), 1.88629436111989062, 1e-12);
  EXPECT_NEAR(talagrand_bound(UniformDisk{2.0}), 0.613705638880109381, 1e-12);
  EXPECT_NEAR(talagrand_bound(Maxwellian{}), 2.17121039974267882, 1e-12);
  EXPECT_NEAR(talagrand_bound(two_annulus(), 1e4), 1.77231904663683374, 1e-12);
}

TEST(Talagrand, ShiftedGaussianEqualityCase) {
  for (Point2 v : {Point2{1.0, 0.0}, Point2{-0.3, 2.5}, Point2{0.0, 0.0}}) {
    EXPECT_NEAR(talagrand_bound(ShiftedGaussian{v}), squared_norm(v), 1e-15);
  }
}

TEST(Talagrand, TruncatedGaussianIsTwiceLogInverseMass) {
  const auto tg = make_truncated_gaussian(1e4, 1.5, 0.5);
  EXPECT_NEAR(talagrand_bound(tg), 4.054958e-3, 1e-8);
  EXPECT_NEAR(talagrand_bound(tg), cutoff_bound(1e4, 1.5, 0.5), 1e-15);
}

TEST(Talagrand, NonnegativeOnParametricFamilies) {
  for (double s : {0.5, 1.0, 2.0, 2.5, 4.0}) {
    EXPECT_GT(talagrand_bound(UniformSquare{s}), 0.0);
    EXPECT_GT(talagrand_bound(UniformDisk{s}), 0.0);
  }
  EXPECT_GT(talagrand_bound(ShiftedGaussian{{1e-3, 0.0}}), 0.0);
}

TEST(CutoffBound, Examples) {
  const double b = cutoff_bound(1e4, 1.5, 1.0);
  EXPECT_GE(b, 0.0);
  EXPECT_LE(b, 2.0 * std::log(1.0 / (1.0 - std::pow(std::log(1e4), 1.5) / 1e4)));
  EXPECT_NEAR(b, 2.989745e-3, 1e-8);
  double prev = 1e9;
  for (double n : {1e4, 1e5, 1e6, 1e7}) {
    const double v = cutoff_bound(n, 1.5, 0.5);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_NEAR(cutoff_bound(1e7, 1.5, 0.5), 9.7527e-6, 1e-9);
  EXPECT_LT(cutoff_bound(1e6, 1.2, 0.5), cutoff_bound(1e6, 1.8, 0.5));
}

TEST(CutoffBound, DegenerateIsAnInputError) {
  EXPECT_THROW(cutoff_bound(2.0, 1.5, 0.5), InputError);
  EXPECT_THROW(cutoff_bound(1.0, 1.5, 0.5), InputError);
  EXPECT_THROW(cutoff_bound(1e4, 2.5, 0.5), ConfigError);
}

TEST(RadialBB, ZeroWhenCountsMatchExpectations) {
  EXPECT_EQ(radial_bb_bound(two_annulus(), {{9900, 100}, 10000}), 0.0);
  const auto disk = make_multiscaling(1.0, {0.0, 1.0}, {1.0});
  EXPECT_EQ(radial_bb_bound(disk, {{37}, 37}), 0.0);
}

TEST(RadialBB, ExampleMatchesAnalyticAndMidpointOracles) {
  const AnnulusCounts c{{9950, 50}, 10000};
  const double v = radial_bb_bound(two_annulus(), c);
  EXPECT_GT(v, 0.0);
  // exact antiderivative in t = r^2, 50 digits
  EXPECT_NEAR(v, 4.74655107755813754e-3, 1e-13);
  const double mid = midpoint_radial_bb(two_annulus(), c, 20000);
  EXPECT_NEAR(v / mid, 1.0, 1e-4);
}

TEST(RadialBB, Errors) {
  EXPECT_THROW(radial_bb_bound(two_annulus(), {{10, 5}, 16}), InputError);
  EXPECT_THROW(radial_bb_bound(two_annulus(), {{10}, 10}), InputError);
  EXPECT_THROW(radial_bb_bound(two_annulus(), {{0, 0}, 0}), InputError);
}

TEST(RadialBB, DominatesDiscretizedTransportCost) {
  // W2^2 between the density at n and its reweighting by the counts, both on
  // a fine polar grid; the grid bias is bounded by the squared cell diameter.
  const auto d = two_annulus();
  const double n = 1e4;
  const auto masses = multiscaling_masses(d, n);
  const int nr = 12, nt = 24;
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto outer = static_cast<std::int64_t>(100 + std::lround(30.0 * (2.0 * rng.uniform() - 1.0)));
    const AnnulusCounts c{{10000 - outer, outer}, 10000};
    WeightedCloud a, b;
    double diam2 = 0.0;
    for (std::size_t l = 0; l < 2; ++l) {
      const double s0 = d.radii[l], s1 = d.radii[l + 1];
      const double w_new = static_cast<double>(c.counts[l]) / n;
      for (int i = 0; i < nr; ++i) {
        const double t0 = s0 * s0 + (s1 * s1 - s0 * s0) * i / nr, t1 = s0 * s0 + (s1 * s1 - s0 * s0) * (i + 1) / nr;
        const double r = std::sqrt(0.5 * (t0 + t1));
        diam2 = std::max(diam2, std::pow(std::sqrt(t1) - std::sqrt(t0), 2) + std::pow(2 * M_PI / nt * std::sqrt(t1), 2));
        for (int k = 0; k < nt; ++k) {
          const double th = 2.0 * M_PI * (k + 0.5) / nt;
          a.points.push_back({r * std::cos(th), r * std::sin(th)});
          a.weights.push_back(masses[l] / (nr * nt));
          b.points.push_back(a.points.back());
          b.weights.push_back(w_new / (nr * nt));
        }
      }
    }
    const double w = ot_cost(a, b).cost;
    EXPECT_LE(w, radial_bb_bound(d, c) + diam2) << "outer count " << outer;
  }
}

TEST(RadialBB, VarianceIdentityOfAnnulusCounts) {
  const auto d = two_annulus();
  const double n = 1e4;
  const double m1 = multiscaling_masses(d, n)[1];
  const int trials = 2000;
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto cloud = sample(d, 10000, 500 + t);
    const auto c = annulus_counts(d, cloud.points);
    EXPECT_EQ(c.total, 10000);
    const double dev = n * m1 - static_cast<double>(c.counts[1]);
    acc += dev * dev / (n * n);
  }
  const double expected = m1 * (1.0 - m1) / n;
  // sampling error of a mean of squared normals over 2000 trials is about 3%
  EXPECT_NEAR(acc / trials / expected, 1.0, 0.1);
}

TEST(CellEntropy, SingleCellFixture) {
  GridPartition p;
  p.n = 1000.0;
  p.cells.push_back({0, 0, Rect{0.0, 0.0, 0.5, 0.4}, 1.0});
  EXPECT_NEAR(cell_entropy_sum(p, 1000.0), 0.2 * std::log(1000.0), 1e-15);
  p.cells.front().mass = 0.0;
  EXPECT_THROW(cell_entropy_sum(p, 1000.0), NumericalDomainError);
}

TEST(CellEntropy, RatioSweepMatchesDirectEvaluation) {
  // 30-digit evaluation of sum |Q| log(n rho_N(Q)) / (pi (log n)^2)
  const double expected[] = {0.0617098, 0.1780029, 0.2685297, 0.3396360};
  const double ns[] = {1e4, 1e5, 1e6, 1e7};
  double prev = -1.0;
  for (int i = 0; i < 4; ++i) {
    const auto p = build_gaussian_partition(ns[i], 1.5, 0.5);
    const double ratio = cell_entropy_sum(p, ns[i]) / (kPi * std::pow(std::log(ns[i]), 2));
    EXPECT_NEAR(ratio, expected[i], 2e-7);
    EXPECT_GT(ratio, prev);
    prev = ratio;
  }
  EXPECT_NEAR(cell_entropy_sum(build_gaussian_partition(1e4, 1.5, 1.0), 1e4) / (kPi * std::pow(std::log(1e4), 2)),
              0.2548375, 2e-7);
}
