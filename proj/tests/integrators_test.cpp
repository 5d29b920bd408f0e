#include <gtest/gtest.h>

#include <cmath>

#include "conlearn/integrators.hpp"
#include "conlearn/random.hpp"

namespace {

using namespace conlearn;
using namespace conlearn::integrate;
using V = std::vector<double>;

V random_vec(Rng& rng, std::size_t n) {
  V v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

TEST(Project, HandExample) {
  auto p = project({1, 0}, {-1, 1});
  EXPECT_TRUE(p.fired);
  EXPECT_NEAR(p.v[0], 0.5, 1e-12);
  EXPECT_NEAR(p.v[1], 0.5, 1e-12);
  EXPECT_NEAR(dot(p.v, {-1, 1}), 0.0, 1e-12);
}

TEST(Project, NonConflictingUnchanged) {
  auto p = project({1, 2}, {1, 0});
  EXPECT_FALSE(p.fired);
  EXPECT_EQ(p.v, (V{1, 2}));
  EXPECT_EQ(project({0, 1}, {1, 0}).v, (V{0, 1}));  // orthogonal already
}

TEST(Project, AntiParallelCancels) {
  auto p = project({-2, 4, 6}, {1, -2, -3});
  for (double x : p.v) EXPECT_NEAR(x, 0.0, 1e-15);
}

TEST(Project, TinyReferenceSkipped) {
  auto p = project({1, 1}, {-1e-14, 0});
  EXPECT_FALSE(p.fired);
  EXPECT_TRUE(p.ref_too_small);
  EXPECT_EQ(p.v, (V{1, 1}));
}

TEST(Project, LengthMismatch) { EXPECT_THROW(project({1, 2}, {1}), ContractViolation); }

TEST(Project, RandomPairsOrthogonalIdempotentNonExpanding) {
  auto rng = make_rng(31);
  int fired = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform_int(rng, 0, 40));
    auto v = random_vec(rng, n);
    auto r = random_vec(rng, n);
    auto p = project(v, r);
    fired += p.fired;
    if (p.fired) {
      EXPECT_LT(std::abs(dot(p.v, r)), 1e-9 * norm(p.v) * norm(r) + 1e-300);
    }
    EXPECT_LE(norm(p.v), norm(v) * (1 + 1e-15));
    auto pp = project(p.v, r);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(pp.v[j], p.v[j], 1e-9);
  }
  EXPECT_GT(fired, 300);
}

TEST(Combine, StaticZeroConstraintWeightIsSupervised) {
  IntegratorState s({Mechanism::Static, 1.0, 0.0, 0.01}, 3);
  V g_sup{0.25, -1.5, 3.0};
  for (int step = 0; step < 3; ++step) {
    auto out = s.combine(g_sup, {7.0, -2.0, 0.1}, 0.4);
    EXPECT_EQ(out.combined, g_sup);
  }
}

TEST(Combine, StaticWeights) {
  IntegratorState s({Mechanism::Static, 0.5, 2.0, 0.01}, 2);
  EXPECT_EQ(s.combine({2, 4}, {1, -1}, 0).combined, (V{3, 0}));
}

TEST(Combine, MonotoneStartsAtZeroAndGrows) {
  IntegratorState s({Mechanism::Monotone, 1.0, 1.0, 0.1}, 2);
  auto first = s.combine({1, 2}, {5, 5}, 0.5);
  EXPECT_EQ(first.combined, (V{1, 2}));
  EXPECT_EQ(first.diag.lambda, 0.0);
  EXPECT_GT(s.lambda(), 0.0);
  EXPECT_DOUBLE_EQ(s.lambda(), 0.05);
  auto second = s.combine({1, 2}, {5, 5}, 0.0);
  EXPECT_DOUBLE_EQ(second.combined[0], 1 + 0.05 * 5);
  EXPECT_DOUBLE_EQ(s.lambda(), 0.05);  // c = 0 leaves it
}

TEST(Combine, MonotoneLambdaNonDecreasing) {
  auto rng = make_rng(4);
  IntegratorState s({Mechanism::Monotone, 1.0, 1.0, 0.05}, 4);
  double prev = s.lambda();
  EXPECT_EQ(prev, 0.0);
  for (int i = 0; i < 200; ++i) {
    s.combine(random_vec(rng, 4), random_vec(rng, 4), uniform01(rng));
    EXPECT_GE(s.lambda(), prev);
    prev = s.lambda();
  }
}

TEST(Combine, NegativeConstraintValueRejected) {
  IntegratorState s({Mechanism::Monotone, 1.0, 1.0, 0.05}, 1);
  EXPECT_THROW(s.combine({1}, {1}, -0.1), ContractViolation);
}

TEST(Combine, ProjBothHandExample) {
  IntegratorState s({Mechanism::ProjBoth, 1.0, 1.0, 0.01}, 2);
  // first step: zero references, nothing fires; references become the gradients
  auto first = s.combine({1, 0}, {-1, 1}, 0);
  EXPECT_TRUE(first.diag.ref_too_small);
  EXPECT_FALSE(first.diag.con_projected || first.diag.sup_projected);
  EXPECT_EQ(first.combined, (V{0, 1}));
  auto out = s.combine({1, 0}, {-1, 1}, 0);
  EXPECT_TRUE(out.diag.con_projected);
  EXPECT_TRUE(out.diag.sup_projected);
  EXPECT_EQ(out.diag.con_dot_sup_ref, -1.0);
  EXPECT_EQ(out.diag.sup_dot_con_ref, -1.0);
  EXPECT_NEAR(out.combined[0], 0.5, 1e-12);
  EXPECT_NEAR(out.combined[1], 1.5, 1e-12);
}

TEST(Combine, ProjSupOnlyTouchesConstraintGradient) {
  IntegratorState s({Mechanism::ProjSup, 1.0, 1.0, 0.01}, 2);
  s.combine({1, 0}, {-1, 1}, 0);
  auto out = s.combine({1, 0}, {-1, 1}, 0);
  EXPECT_TRUE(out.diag.con_projected);
  EXPECT_FALSE(out.diag.sup_projected);
  EXPECT_NEAR(out.combined[0], 1.0, 1e-12);
  EXPECT_NEAR(out.combined[1], 1.0, 1e-12);
}

TEST(Combine, ProjConOnlyTouchesSupervisedGradient) {
  IntegratorState s({Mechanism::ProjCon, 1.0, 1.0, 0.01}, 2);
  s.combine({1, 0}, {-1, 1}, 0);
  auto out = s.combine({1, 0}, {-1, 1}, 0);
  EXPECT_FALSE(out.diag.con_projected);
  EXPECT_TRUE(out.diag.sup_projected);
  EXPECT_NEAR(out.combined[0], -0.5, 1e-12);
  EXPECT_NEAR(out.combined[1], 1.5, 1e-12);
}

TEST(Combine, ReferencesAreRunningMeans) {
  IntegratorState s({Mechanism::Static, 1.0, 1.0, 0.01}, 2);
  s.combine({1, 2}, {0, 4}, 0);
  s.combine({3, 4}, {2, 0}, 0);
  s.combine({5, 0}, {1, 2}, 0);
  EXPECT_EQ(s.sup_updates(), 3u);
  EXPECT_EQ(s.con_updates(), 3u);
  EXPECT_DOUBLE_EQ(s.sup_reference()[0], 3.0);
  EXPECT_DOUBLE_EQ(s.sup_reference()[1], 2.0);
  EXPECT_DOUBLE_EQ(s.con_reference()[0], 1.0);
  EXPECT_DOUBLE_EQ(s.con_reference()[1], 2.0);
}

TEST(Combine, FiredProjectionsAreOrthogonalOnRandomRuns) {
  auto rng = make_rng(9);
  IntegratorState s({Mechanism::ProjBoth, 1.0, 1.0, 0.01}, 16);
  for (int i = 0; i < 300; ++i) {
    auto out = s.combine(random_vec(rng, 16), random_vec(rng, 16), 0.0);
    EXPECT_LT(out.diag.orthogonality_residual, 1e-9);
    for (double x : out.combined) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Combine, LengthMismatch) {
  IntegratorState s({Mechanism::Static, 1.0, 1.0, 0.01}, 2);
  EXPECT_THROW(s.combine({1, 2}, {1}, 0), ContractViolation);
}

TEST(Mechanism, ParseRoundTrip) {
  for (auto m : {Mechanism::Static, Mechanism::Monotone, Mechanism::ProjSup, Mechanism::ProjCon, Mechanism::ProjBoth})
    EXPECT_EQ(parse_mechanism(to_string(m)), m);
  EXPECT_THROW(parse_mechanism("dual"), ConfigError);
}

}  // namespace
