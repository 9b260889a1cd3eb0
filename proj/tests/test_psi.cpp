#include <gtest/gtest.h>

#include <algorithm>

#include "fibrefix/error.hpp"
#include "fibrefix/psi.hpp"
#include "fibrefix/random.hpp"

namespace fibrefix {
namespace {

using Kind = PsiViolation::Kind;

TEST(Psi, EvalExamples) {
  EXPECT_DOUBLE_EQ(PsiFunction::rational(1.0)(1.0), 0.5);
  EXPECT_DOUBLE_EQ(PsiFunction::linear(0.5)(4.0), 2.0);
  EXPECT_DOUBLE_EQ(PsiFunction::shifted()(1.0), 0.5);
  for (const auto& psi : {PsiFunction::linear(0.3), PsiFunction::rational(2.0), PsiFunction::shifted(),
                          PsiFunction::table({{0, 0}, {1, 0.5}})}) {
    EXPECT_EQ(psi(0.0), 0.0) << psi.describe();
    EXPECT_THROW(psi(-1.0), InvalidArgument);
  }
}

TEST(Psi, TableConstructionRules) {
  EXPECT_THROW(PsiFunction::table({{0, 0.1}, {1, 0.5}}), InvalidArgument);
  EXPECT_THROW(PsiFunction::table({{0, 0}, {2, 1}, {1, 0.5}}), InvalidArgument);
  EXPECT_THROW(PsiFunction::table({{0, 0}, {1, 0.2}, {1, 0.3}, {1, 0.4}}), InvalidArgument);
  EXPECT_THROW(PsiFunction::table({{0, 0}, {0, 0.5}}), InvalidArgument);
}

TEST(Psi, TableJumpConventions) {
  const std::vector<PsiFunction::Breakpoint> up{{0, 0}, {1, 0.5}, {1, 0.8}, {4, 2}};
  const auto right = PsiFunction::table(up);
  const auto left = PsiFunction::table(up, PsiFunction::Jump::kLeftContinuous);
  EXPECT_DOUBLE_EQ(right(1.0), 0.8);
  EXPECT_DOUBLE_EQ(left(1.0), 0.5);
  EXPECT_DOUBLE_EQ(right(0.5), 0.25);
  EXPECT_DOUBLE_EQ(right(10.0), 2.0);
}

TEST(VerifyBoydWong, LinearPasses) {
  const auto audit = verify_boyd_wong(PsiFunction::linear(0.9), {});
  EXPECT_TRUE(audit.ok());
  EXPECT_NEAR(audit.min_relative_margin, 0.1, 1e-12);
}

TEST(VerifyBoydWong, IdentityViolatesStrictGapEverywhere) {
  const PsiGrid grid{};
  const auto audit = verify_boyd_wong(PsiFunction::linear(1.0), grid);
  EXPECT_EQ(audit.count(Kind::kStrictGap), audit.grid_size);
}

TEST(VerifyBoydWong, JumpDirections) {
  const PsiGrid grid{.t_max = 4.0};
  // Drop just after t = 1: psi(1) is the larger value, so the right limit
  // stays below psi(1). Semicontinuity holds; monotonicity does not.
  const auto drop = PsiFunction::table({{0, 0}, {1, 0.8}, {1, 0.5}, {4, 2}}, PsiFunction::Jump::kLeftContinuous);
  const auto drop_audit = verify_boyd_wong(drop, grid);
  EXPECT_EQ(drop_audit.count(Kind::kUpperSemicontinuity), 0u);
  EXPECT_GT(drop_audit.count(Kind::kMonotone), 0u);

  // Upward jump taken after t = 1: psi(1+) exceeds psi(1).
  const auto rise = PsiFunction::table({{0, 0}, {1, 0.5}, {1, 0.8}, {4, 2}}, PsiFunction::Jump::kLeftContinuous);
  const auto rise_audit = verify_boyd_wong(rise, grid);
  ASSERT_GT(rise_audit.count(Kind::kUpperSemicontinuity), 0u);
  const auto& v = *std::ranges::find_if(rise_audit.violations,
                                        [](const PsiViolation& x) { return x.kind == Kind::kUpperSemicontinuity; });
  EXPECT_DOUBLE_EQ(v.t, 1.0);

  // The same table under the file convention is a valid Boyd-Wong function.
  EXPECT_TRUE(verify_boyd_wong(PsiFunction::table({{0, 0}, {1, 0.5}, {1, 0.8}, {4, 2}}), grid).ok());
}

TEST(VerifyBoydWong, GridContainsKinks) {
  const auto psi = PsiFunction::table({{0, 0}, {0.37, 0.2}, {3, 1}});
  const auto grid = make_grid(psi, {.t_max = 4.0, .points = 16});
  EXPECT_NE(std::ranges::find(grid, 0.37), grid.end());
  EXPECT_TRUE(std::ranges::is_sorted(grid));
}

TEST(PsiProperties, BuiltinsBelowIdentityAndMonotone) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = PsiFunction::linear(rng.uniform(0.0, 0.99));
    const auto b = PsiFunction::rational(rng.uniform(0.01, 10.0));
    for (const auto& psi : {a, b, PsiFunction::shifted(), PsiFunction::min_of({a, b}), PsiFunction::compose(a, b)}) {
      double previous = 0.0;
      for (int i = 1; i <= 200; ++i) {
        const double t = 0.05 * i;
        const double v = psi(t);
        EXPECT_LT(v, t) << psi.describe();
        EXPECT_GE(v + 1e-12, previous) << psi.describe();
        previous = v;
      }
    }
  }
}

TEST(PsiProperties, MinOfBoydWongIsBoydWong) {
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    const auto psi = PsiFunction::min_of(
        {PsiFunction::linear(rng.uniform(0.1, 0.95)), PsiFunction::rational(rng.uniform(0.1, 5.0))});
    EXPECT_TRUE(verify_boyd_wong(psi, {.t_max = 8.0}).ok()) << psi.describe();
  }
}

}  // namespace
}  // namespace fibrefix
