#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fibrefix/detfix.hpp"
#include "fibrefix/error.hpp"
#include "generators.hpp"

namespace fibrefix {
namespace {

FibreMap scalar_map(FibreSet set, double (*f)(double)) {
  return FibreMap("test", std::move(set), [f](std::span<const double> u, std::span<double> out) { out[0] = f(u[0]); });
}

FibreMap half(double r = 10.0) {
  return scalar_map(FibreSet::ball(1, r), [](double x) { return x / 2; });
}
FibreMap rational(double r = 1.0) {
  return scalar_map(FibreSet::ball(1, r), [](double x) { return x / (1 + std::abs(x)); });
}
FibreMap identity(FibreSet set) {
  return FibreMap("identity", std::move(set),
                  [](std::span<const double> u, std::span<double> out) { std::ranges::copy(u, out.begin()); });
}

// Oracle: sup over recorded i, j >= n of |x_i - x_j| by direct enumeration.
double brute_tail(std::span<const Point> points, std::size_t n) {
  double b = 0.0;
  for (std::size_t i = n; i < points.size(); ++i) {
    for (std::size_t j = n; j < points.size(); ++j) b = std::max(b, distance(points[i], points[j]));
  }
  return b;
}

TEST(FiveTermMax, Examples) {
  EXPECT_DOUBLE_EQ(five_term_max(half(), Point{2.0}, Point{0.0}), 2.0);
  EXPECT_EQ(five_term_max(half(), Point{0.0}, Point{0.0}), 0.0);
  const auto id = identity(FibreSet::ball(1, 5));
  EXPECT_DOUBLE_EQ(five_term_max(id, Point{1.5}, Point{-2.0}), 3.5);
}

TEST(Orbit, RationalClosedForm) {
  const auto trace = orbit(rational(), Point{1.0}, {.n_max = 1000, .full_storage = true});
  ASSERT_EQ(trace.points.size(), 1001u);
  for (std::size_t n = 0; n <= 1000; ++n) {
    EXPECT_NEAR(trace.points[n][0], 1.0 / (1.0 + n), 1e-12);
  }
  // Recorded tail diameters sup over the prefix: 1/(1+n) - 1/(1+last).
  for (std::size_t n = 0; n <= 1000; n += 37) {
    EXPECT_NEAR(trace.b(n), 1.0 / (1.0 + n) - 1.0 / 1001.0, 1e-12);
  }
}

TEST(Orbit, ConstantAndHalving) {
  const auto c = scalar_map(FibreSet::ball(1, 2), [](double) { return 0.75; });
  const auto ct = orbit(c, Point{-1.0}, {.n_max = 10});
  EXPECT_EQ(ct.points[1][0], 0.75);
  EXPECT_EQ(ct.b(1), 0.0);
  EXPECT_EQ(ct.b(0), 1.75);

  const auto ht = orbit(half(), Point{1.0}, {.n_max = 30});
  for (std::size_t n = 0; n <= 30; ++n) {
    EXPECT_DOUBLE_EQ(ht.b(n), std::ldexp(1.0, -static_cast<int>(n)) - std::ldexp(1.0, -30));
    EXPECT_DOUBLE_EQ(ht.b(n), brute_tail(ht.points, n));
  }
}

TEST(Orbit, WindowDropsHead) {
  const auto t = orbit(half(), Point{1.0}, {.n_max = 100, .window = 16});
  EXPECT_EQ(t.points.size(), 16u);
  EXPECT_EQ(t.offset, 85u);
  EXPECT_EQ(t.last_index(), 100u);
  EXPECT_EQ(t.steps.size(), 100u);
}

TEST(Orbit, DomainEscape) {
  const auto doubling = scalar_map(FibreSet::ball(1, 1), [](double x) { return 2 * x; });
  EXPECT_THROW(orbit(doubling, Point{0.75}, {.n_max = 5}), DomainEscape);
  EXPECT_THROW(orbit(half(1.0), Point{3.0}, {.n_max = 5}), DomainEscape);
}

TEST(TailInequality, RationalHoldsWithSlackEps) {
  const auto trace = orbit(rational(), Point{1.0}, {.n_max = 500, .full_storage = true});
  const double eps = 1e-3;
  const auto ledger = verify_tail_inequality(trace, PsiFunction::rational(1.0), eps, 1);
  EXPECT_TRUE(ledger.ok());
  EXPECT_GE(ledger.worst_slack, eps - 1e-12);
  EXPECT_EQ(ledger.rows.size(), 500u);
}

TEST(TailInequality, ConstantMapAlwaysHolds) {
  const auto c = scalar_map(FibreSet::ball(1, 2), [](double) { return 0.5; });
  const auto trace = orbit(c, Point{2.0}, {.n_max = 20});
  EXPECT_TRUE(verify_tail_inequality(trace, PsiFunction::linear(0.5), 1e-6, 1).ok());
}

TEST(TailInequality, IsometryViolates) {
  // x -> -x keeps b_n = b_0 = 2, so b_{n+1} <= b_n / 2 + eps fails for eps < 1.
  const auto flip = scalar_map(FibreSet::ball(1, 1), [](double x) { return -x; });
  const auto trace = orbit(flip, Point{1.0}, {.n_max = 20});
  const auto bad = verify_tail_inequality(trace, PsiFunction::linear(0.5), 0.5, 1);
  EXPECT_FALSE(bad.ok());
  EXPECT_NEAR(bad.worst_slack, -0.5, 1e-15);
  EXPECT_TRUE(verify_tail_inequality(trace, PsiFunction::linear(0.5), 1.0, 1).ok());
}

TEST(TailInequality, ShortTraceThrows) {
  const auto trace = orbit(half(), Point{1.0}, {.n_max = 3});
  EXPECT_THROW(verify_tail_inequality(trace, PsiFunction::linear(0.5), 0.1, 4), InvalidArgument);
}

TEST(SolveFibre, AffineClosedForm) {
  const auto affine = scalar_map(FibreSet::ball(1, 10), [](double x) { return 0.5 * x + 1; });
  const auto sol = solve_fibre(affine, Point{-10.0}, {.tol = 1e-12});
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.z[0], 2.0, 1e-11);
  EXPECT_LE(sol.residual, 1e-12);
}

TEST(SolveFibre, IdentityOnTwoPointSetStopsAtStart) {
  const auto set = FibreSet::ball_union({{{0.0}, 0.0}, {{0.7}, 0.0}});
  const auto sol = solve_fibre(identity(set), Point{0.7});
  ASSERT_TRUE(sol.converged);
  EXPECT_EQ(sol.z[0], 0.7);
  EXPECT_EQ(sol.residual, 0.0);
}

TEST(SolveFibre, SublinearOrbitAndIterationCap) {
  const double tol = 1e-6;
  const auto sol = solve_fibre(rational(), Point{1.0}, {.tol = tol});
  ASSERT_TRUE(sol.converged);
  EXPECT_LE(sol.residual, tol);
  // The residual x^2 / (1 + x) <= tol pins z within sqrt(tol) of 0, not tol.
  EXPECT_LE(sol.z[0], 2.0 * std::sqrt(tol));
  EXPECT_GT(sol.z[0], tol);

  const auto capped = solve_fibre(rational(), Point{1.0}, {.tol = 1e-12, .max_iter = 1000, .keep_trace = true});
  EXPECT_FALSE(capped.converged);
  EXPECT_EQ(capped.iterations, 1000u);
  EXPECT_EQ(capped.trace.steps.size(), 1000u);
  EXPECT_FALSE(capped.trace.points.empty());
}

TEST(LocateUniformityN, Examples) {
  const BoundFamily geometric = [](std::size_t n, std::span<const double> u, std::span<const double> v) {
    return std::pow(0.5, static_cast<double>(n)) * distance(u, v);
  };
  const LimitBound zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  const std::vector<Point> unit{{0.0}, {0.5}, {1.0}};
  const auto r = locate_uniformity_N(geometric, zero, unit, 1e-3);
  ASSERT_TRUE(r.horizon);
  EXPECT_EQ(*r.horizon, static_cast<std::size_t>(std::ceil(std::log(1e-3 / 1.0) / std::log(0.5))));

  const BoundFamily flat = [](std::size_t, std::span<const double> u, std::span<const double> v) {
    return distance(u, v);
  };
  const LimitBound same = [](std::span<const double> u, std::span<const double> v) { return distance(u, v); };
  EXPECT_EQ(locate_uniformity_N(flat, same, unit, 1e-3).horizon, 1u);

  const BoundFamily hyperbolic = [](std::size_t n, std::span<const double> u, std::span<const double> v) {
    const double nn = static_cast<double>(n);
    return std::abs(u[0] - v[0]) / ((1 + nn * u[0]) * (1 + nn * v[0]));
  };
  std::vector<Point> grid;
  for (int i = 0; i <= 64; ++i) grid.push_back({i / 64.0});
  const auto h = locate_uniformity_N(hyperbolic, zero, grid, 0.01);
  ASSERT_TRUE(h.horizon);
  EXPECT_LE(*h.horizon, 100u);
  // Brute-force check of minimality on the same grid.
  auto sup_at = [&](std::size_t n) {
    double s = 0;
    for (const auto& u : grid) {
      for (const auto& v : grid) s = std::max(s, hyperbolic(n, u, v));
    }
    return s;
  };
  EXPECT_LT(sup_at(*h.horizon), 0.01);
  EXPECT_GE(sup_at(*h.horizon - 1), 0.01);
}

TEST(LocateUniformityN, CapExhausted) {
  const BoundFamily stuck = [](std::size_t, std::span<const double>, std::span<const double>) { return 1.0; };
  const LimitBound zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  const std::vector<Point> region{{0.0}};
  const auto r = locate_uniformity_N(stuck, zero, region, 0.5, 64);
  EXPECT_FALSE(r.horizon);
  EXPECT_EQ(r.sup, 1.0);
}

TEST(DetfixProperties, TailDiametersMatchBruteForceAndDecrease) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point> points;
    const std::size_t n = 1 + rng.index(40);
    for (std::size_t i = 0; i < n; ++i) points.push_back(testing::random_point(rng, 2, 3));
    const auto b = tail_diameters(points);
    ASSERT_EQ(b.size(), n);
    for (std::size_t k = 0; k < n; ++k) {
      EXPECT_EQ(b[k], brute_tail(points, k));
      if (k > 0) EXPECT_LE(b[k], b[k - 1]);
    }
  }
}

TEST(DetfixProperties, FiveTermMaxDominatesDistance) {
  Rng rng(22);
  const auto map = rational(3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Point u{rng.uniform(-3, 3)};
    const Point v{rng.uniform(-3, 3)};
    EXPECT_GE(five_term_max(map, u, v), distance(u, v));
  }
}

TEST(DetfixProperties, AffineSolvesAreUniqueAndResidualBounded) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    // A residual stop leaves each start within tol / (1 - alpha) of the fixed
    // point, so 10 tol pairwise needs alpha <= 0.8.
    const double alpha = rng.uniform(0.1, 0.8);
    const Point b = testing::random_point(rng, 2, (1 - alpha) * 2);
    const FibreMap map("affine", FibreSet::box({-3, -3}, {3, 3}),
                       [alpha, b](std::span<const double> u, std::span<double> out) {
                         for (std::size_t i = 0; i < 2; ++i) out[i] = alpha * u[i] + b[i];
                       });
    const double tol = 1e-8;
    std::vector<Point> zs;
    for (int s = 0; s < 10; ++s) {
      const auto sol = solve_fibre(map, testing::random_point(rng, 2, 3), {.tol = tol});
      ASSERT_TRUE(sol.converged);
      EXPECT_LE(distance(map(sol.z), sol.z), tol);
      zs.push_back(sol.z);
    }
    for (const auto& a : zs) {
      for (const auto& c : zs) EXPECT_LE(distance(a, c), 10 * tol);
    }
  }
}

}  // namespace
}  // namespace fibrefix
