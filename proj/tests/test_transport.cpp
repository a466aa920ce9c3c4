#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matchlab/densities.hpp"
#include "matchlab/random.hpp"
#include "matchlab/transport.hpp"

using namespace matchlab;

namespace {

std::vector<Point2> uniform_points(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<Point2> v(n);
  for (auto& p : v) p = {scale * rng.uniform(), scale * rng.uniform()};
  return v;
}

WeightedCloud random_weighted(Rng& rng, std::size_t n, double mass = 1.0) {
  WeightedCloud c;
  c.points = uniform_points(rng, n, 2.0);
  for (std::size_t i = 0; i < n; ++i) c.weights.push_back(0.05 + rng.uniform());
  const double t = c.total_mass();
  for (double& w : c.weights) w *= mass / t;
  return c;
}

void expect_plan_valid(const TransportPlan& plan, const WeightedCloud& a, const WeightedCloud& b) {
  std::vector<double> out(a.points.size(), 0.0), in(b.points.size(), 0.0);
  double cost = 0.0;
  for (const auto& f : plan.flows) {
    EXPECT_GE(f.mass, 0.0);
    out[f.source] += f.mass;
    in[f.sink] += f.mass;
    cost += f.mass * squared_distance(a.points[f.source], b.points[f.sink]);
  }
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], a.weights[i], 1e-9);
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_NEAR(in[i], b.weights[i], 1e-9);
  EXPECT_NEAR(cost, plan.cost, 1e-9 * std::max(1.0, cost));
}

}  // namespace

TEST(Assignment, SmallExamples) {
  const auto r = assignment_solve(std::vector<Point2>{{0, 0}, {3, 0}}, std::vector<Point2>{{3, 0}, {0, 0}});
  EXPECT_EQ(r.cost_sum, 0.0);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{1, 0}));
  const auto c = assignment_solve(std::vector<Point2>{{0, 0}, {1, 0}}, std::vector<Point2>{{0, 1}, {1, 1}});
  EXPECT_DOUBLE_EQ(c.cost_sum, 2.0);
  EXPECT_DOUBLE_EQ(c.cost_w2sq, 1.0);
  EXPECT_EQ(c.assignment, (std::vector<std::size_t>{0, 1}));
  const auto one = assignment_solve(std::vector<Point2>{{0.5, 2}}, std::vector<Point2>{{-1, 0}});
  EXPECT_DOUBLE_EQ(one.cost_sum, 1.5 * 1.5 + 4.0);
  EXPECT_EQ(one.n, 1u);
}

TEST(Assignment, InputErrors) {
  EXPECT_THROW(assignment_solve(std::vector<Point2>{{0, 0}}, std::vector<Point2>{}), InputError);
  EXPECT_THROW(assignment_solve(std::vector<Point2>{}, std::vector<Point2>{}), InputError);
  EXPECT_THROW(assignment_solve(std::vector<Point2>{{NAN, 0}}, std::vector<Point2>{{0, 0}}), InputError);
  EXPECT_THROW(brute_force_solve(std::vector<Point2>(11), std::vector<Point2>(11)), ResourceError);
}

TEST(BruteForce, ExamplesAndTieBreak) {
  const auto c = brute_force_solve(std::vector<Point2>{{0, 0}, {1, 0}}, std::vector<Point2>{{0, 1}, {1, 1}});
  EXPECT_DOUBLE_EQ(c.cost_sum, 2.0);
  const std::vector<Point2> same(4, Point2{0.25, 0.75});
  const auto t = brute_force_solve(same, same);
  EXPECT_EQ(t.cost_sum, 0.0);
  EXPECT_EQ(t.assignment, (std::vector<std::size_t>{0, 1, 2, 3}));
  std::vector<Point2> xs = {{0.1, 0.2}, {0.9, 0.4}, {0.3, 0.8}, {0.5, 0.5}};
  std::vector<Point2> ys = {xs[2], xs[0], xs[3], xs[1]};
  EXPECT_EQ(brute_force_solve(xs, ys).cost_sum, 0.0);
}

TEST(Assignment, AgreesWithBruteForce) {
  Rng rng(2024);
  for (int inst = 0; inst < 300; ++inst) {
    const std::size_t n = 2 + inst % 7;
    const auto xs = uniform_points(rng, n), ys = uniform_points(rng, n);
    const auto a = assignment_solve(xs, ys);
    const auto b = brute_force_solve(xs, ys);
    ASSERT_NEAR(a.cost_sum, b.cost_sum, 1e-9) << "instance " << inst;
    std::vector<std::size_t> perm = a.assignment;
    std::sort(perm.begin(), perm.end());
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(perm[i], i);
  }
}

TEST(Assignment, CostIsRecomputedFromAssignment) {
  Rng rng(8);
  const auto xs = uniform_points(rng, 300), ys = uniform_points(rng, 300);
  const auto r = assignment_solve(xs, ys);
  double c = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) c += squared_distance(xs[i], ys[r.assignment[i]]);
  EXPECT_NEAR(r.cost_sum, c, 1e-12 * c);
  EXPECT_NEAR(r.cost_w2sq * 300.0, r.cost_sum, 1e-12 * c);
}

TEST(Assignment, InvariantUnderScalingTranslationAndPermutation) {
  Rng rng(77);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 50 + 10 * inst;
    auto xs = uniform_points(rng, n), ys = uniform_points(rng, n);
    const double base = assignment_solve(xs, ys).cost_sum;
    for (double g : {0.1, 3.0, 17.0}) {
      std::vector<Point2> gx, gy;
      for (auto p : xs) gx.push_back(g * p);
      for (auto p : ys) gy.push_back(g * p);
      EXPECT_NEAR(assignment_solve(gx, gy).cost_sum, g * g * base, 1e-9 * g * g * base);
    }
    std::vector<Point2> tx, ty;
    for (auto p : xs) tx.push_back(p + Point2{5.0, -3.0});
    for (auto p : ys) ty.push_back(p + Point2{5.0, -3.0});
    EXPECT_NEAR(assignment_solve(tx, ty).cost_sum, base, 1e-9);
    std::reverse(xs.begin(), xs.end());
    std::rotate(ys.begin(), ys.begin() + 7, ys.end());
    EXPECT_NEAR(assignment_solve(xs, ys).cost_sum, base, 1e-9);
  }
}

TEST(Assignment, LargerInstanceMatchesTransportSolver) {
  Rng rng(5);
  for (std::size_t n : {200u, 500u}) {
    const auto xs = uniform_points(rng, n), ys = uniform_points(rng, n);
    const double a = assignment_solve(xs, ys).cost_sum;
    const double o = ot_cost(uniform_weights(xs), uniform_weights(ys)).cost;
    EXPECT_NEAR(o, a / static_cast<double>(n), 1e-9);
  }
}

TEST(Assignment, HandlesDuplicatesAndClusters) {
  std::vector<Point2> xs, ys;
  for (int i = 0; i < 100; ++i) {
    xs.push_back({0.0, 0.0});
    ys.push_back({i % 2 ? 1.0 : 0.0, 0.0});
  }
  EXPECT_DOUBLE_EQ(assignment_solve(xs, ys).cost_sum, 50.0);
  Rng rng(1);
  xs.clear();
  ys.clear();
  for (int i = 0; i < 400; ++i) {
    xs.push_back({rng.uniform() * 1e-3, rng.uniform() * 1e-3});
    ys.push_back({10.0 + rng.uniform(), rng.uniform() * 100.0});
  }
  const double o = ot_cost(uniform_weights(xs), uniform_weights(ys)).cost;
  EXPECT_NEAR(assignment_solve(xs, ys).cost_sum / 400.0, o, 1e-9 * o);
}

TEST(Monotone1D, Examples) {
  EXPECT_NEAR(monotone_1d_cost({0.1, 0.5}, {0.6, 0.2}), 0.02, 1e-15);
  EXPECT_EQ(monotone_1d_cost({0.3, 0.1, 0.7}, {0.7, 0.3, 0.1}), 0.0);
  EXPECT_THROW(monotone_1d_cost({0.1}, {0.1, 0.2}), InputError);
}

TEST(Monotone1D, MatchesAssignmentOnTheLine) {
  Rng rng(31);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<double> x(100), y(100);
    std::vector<Point2> px, py;
    for (int i = 0; i < 100; ++i) {
      x[i] = rng.uniform();
      y[i] = rng.uniform();
      px.push_back({x[i], 0.0});
      py.push_back({y[i], 0.0});
    }
    EXPECT_NEAR(monotone_1d_cost(x, y), assignment_solve(px, py).cost_sum, 1e-9);
  }
}

TEST(OtCost, Examples) {
  WeightedCloud a{{{0.0, 0.0}}, {1.0}};
  WeightedCloud b{{{2.0, 1.0}}, {1.0}};
  EXPECT_NEAR(ot_cost(a, b).cost, 5.0, 1e-12);
  WeightedCloud split{{{1.0, 0.0}, {-1.0, 0.0}}, {0.5, 0.5}};
  const auto plan = ot_cost(a, split);
  EXPECT_NEAR(plan.cost, 1.0, 1e-12);
  expect_plan_valid(plan, a, split);
}

TEST(OtCost, MassMismatchIsAnInputError) {
  WeightedCloud a{{{0.0, 0.0}}, {1.0}};
  WeightedCloud b{{{1.0, 0.0}}, {1.1}};
  EXPECT_THROW(ot_cost(a, b), InputError);
  WeightedCloud neg{{{1.0, 0.0}, {2.0, 0.0}}, {1.5, -0.5}};
  EXPECT_THROW(ot_cost(a, neg), InputError);
}

TEST(OtCost, PlansAreFeasibleAndMatchAssignment) {
  Rng rng(404);
  for (int inst = 0; inst < 30; ++inst) {
    const std::size_t m = 1 + inst % 13, k = 1 + (inst * 7) % 11;
    const auto a = random_weighted(rng, m), b = random_weighted(rng, k);
    expect_plan_valid(ot_cost(a, b), a, b);
  }
  for (int inst = 0; inst < 30; ++inst) {
    const std::size_t n = 2 + inst % 7;
    const auto xs = uniform_points(rng, n), ys = uniform_points(rng, n);
    EXPECT_NEAR(ot_cost(uniform_weights(xs), uniform_weights(ys)).cost,
                brute_force_solve(xs, ys).cost_sum / static_cast<double>(n), 1e-9);
  }
}

TEST(OtCost, TriangleInequality) {
  Rng rng(9);
  for (int inst = 0; inst < 30; ++inst) {
    const auto a = random_weighted(rng, 6), b = random_weighted(rng, 8), c = random_weighted(rng, 5);
    const double ab = std::sqrt(ot_cost(a, b).cost), bc = std::sqrt(ot_cost(b, c).cost);
    const double ac = std::sqrt(ot_cost(a, c).cost);
    EXPECT_LE(ac, ab + bc + 1e-7);
  }
}

TEST(OtCost, ProductWithCommonFactorDoesNotIncreaseCost) {
  Rng rng(13);
  auto measure_1d = [&](std::size_t n) {
    std::vector<std::pair<double, double>> v;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back({rng.uniform() * 3.0, 0.1 + rng.uniform()});
      t += v.back().second;
    }
    for (auto& p : v) p.second /= t;
    return v;
  };
  auto embed = [](const std::vector<std::pair<double, double>>& mu) {
    WeightedCloud c;
    for (auto [x, w] : mu) {
      c.points.push_back({x, 0.0});
      c.weights.push_back(w);
    }
    return c;
  };
  auto product = [](const std::vector<std::pair<double, double>>& mu, const std::vector<std::pair<double, double>>& nu) {
    WeightedCloud c;
    for (auto [x, w] : mu) {
      for (auto [y, v] : nu) {
        c.points.push_back({x, y});
        c.weights.push_back(w * v);
      }
    }
    return c;
  };
  for (int inst = 0; inst < 20; ++inst) {
    const auto mu = measure_1d(3 + inst % 4), lambda = measure_1d(2 + inst % 5), nu = measure_1d(2 + inst % 3);
    const double lhs = ot_cost(product(mu, nu), product(lambda, nu)).cost;
    const double rhs = ot_cost(embed(mu), embed(lambda)).cost;
    EXPECT_LE(lhs, rhs + 1e-9);
  }
}

TEST(OtCost, NodeBudgetIsAResourceError) {
  Rng rng(1);
  const auto a = random_weighted(rng, 50), b = random_weighted(rng, 50);
  TransportOptions opt;
  opt.node_budget = 64;
  EXPECT_THROW(ot_cost(a, b, opt), ResourceError);
}

TEST(Wb2, Examples) {
  const Rect unit{0, 0, 1, 1};
  EXPECT_NEAR(wb2_cost(std::vector<Point2>{{0.5, 0.5}}, std::vector<Point2>{}, unit), 0.25, 1e-12);
  EXPECT_NEAR(wb2_cost(std::vector<Point2>{{0.01, 0.5}}, std::vector<Point2>{{0.99, 0.5}}, unit), 0.0002, 1e-12);
  EXPECT_THROW(wb2_cost(std::vector<Point2>{{1.5, 0.5}}, std::vector<Point2>{}, unit), InputError);
  EXPECT_EQ(wb2_cost(std::vector<Point2>{}, std::vector<Point2>{}, unit), 0.0);
}

TEST(Wb2, NeverExceedsTheMatchingCost) {
  Rng rng(55);
  const Rect unit{0, 0, 1, 1};
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 1 + inst % 30;
    const auto xs = uniform_points(rng, n), ys = uniform_points(rng, n);
    const double w2 = assignment_solve(xs, ys).cost_w2sq;
    EXPECT_LE(wb2_cost(xs, ys, unit), w2 + 1e-9);
  }
}

TEST(Wb2, UnequalSizes) {
  Rng rng(3);
  const Rect unit{0, 0, 1, 1};
  const auto xs = uniform_points(rng, 20), ys = uniform_points(rng, 7);
  const double w = wb2_cost(xs, ys, unit);
  EXPECT_GE(w, 0.0);
  double all_out = 0.0;
  for (auto p : xs) all_out += unit.squared_distance_to_boundary(p);
  for (auto p : ys) all_out += unit.squared_distance_to_boundary(p);
  EXPECT_LE(w, all_out / 20.0 + 1e-12);
}

TEST(Semidiscrete, SinglePointAtTheCentre) {
  const auto x = make_cloud({{0.5, 0.5}});
  const double h = 1.0 / 64.0;
  const double est = semidiscrete_estimate(x, UniformSquare{1.0}, 64);
  EXPECT_NEAR(est, 1.0 / 6.0, 2.0 * h * h);
}

TEST(Semidiscrete, ResolutionDoublingStaysWithinBiasBound) {
  const auto x = sample(UniformSquare{1.0}, 256, 21);
  const double h32 = 1.0 / 32.0;
  const double a = semidiscrete_estimate(x, UniformSquare{1.0}, 32);
  const double b = semidiscrete_estimate(x, UniformSquare{1.0}, 64);
  EXPECT_LE(std::abs(a - b), 4.0 * h32 * h32);
}

TEST(Semidiscrete, ScalesQuadratically) {
  const auto x = sample(UniformSquare{1.0}, 128, 4);
  const double base = semidiscrete_estimate(x, UniformSquare{1.0}, 16);
  for (double g : {0.1, 3.0, 17.0}) {
    std::vector<Point2> gx;
    for (auto p : x.points) gx.push_back(g * p);
    EXPECT_NEAR(semidiscrete_estimate(gx, UniformSquare{g}, 16), g * g * base, 1e-9 * g * g * base);
  }
}

TEST(Semidiscrete, Errors) {
  const auto x = sample(UniformSquare{1.0}, 16, 1);
  EXPECT_THROW(semidiscrete_estimate(x, UniformSquare{1.0}, 4), ConfigError);
  EXPECT_THROW(semidiscrete_estimate(x, UniformSquare{1.0}, 1024), ResourceError);
}

TEST(Semidiscrete, UnboundedFamiliesUseTheEffectiveSupport) {
  for (const Density& d : std::vector<Density>{Gaussian2D{}, Maxwellian{}, make_truncated_gaussian(64, 1.5, 0.5)}) {
    const auto x = sample(d, 64, 2);
    const double est = semidiscrete_estimate(x, d, 24);
    EXPECT_GT(est, 0.0) << family_name(d);
    EXPECT_LT(est, 2.0) << family_name(d);
  }
}
