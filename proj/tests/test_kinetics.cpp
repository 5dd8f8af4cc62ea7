#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles/finite_difference.hpp"
#include "pattern_duet/kinetics.hpp"
#include "pattern_duet/presets.hpp"

using namespace pattern_duet;

namespace {

// Bisection in long double, independent of the production solver.
long double oracle_u_star(long double m, long double a, long double b) {
  long double lo = 1e-12L, hi = 1.0L;
  auto g = [&](long double u) { return 1 - u - m * u / ((1 + a * u) * (1 + b * u)); };
  for (int i = 0; i < 200; ++i) {
    long double mid = (lo + hi) / 2;
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Equilibrium, SetOneMatchesPrintedDensity) {
  auto eq = find_interior_equilibrium(preset(1).params);
  EXPECT_NEAR(eq.u_star, 0.245, 5e-4);
  EXPECT_EQ(eq.u_star, eq.v_star);
}

TEST(Equilibrium, SetTwoMatchesPrintedDensity) {
  auto eq = find_interior_equilibrium(preset(2).params);
  EXPECT_NEAR(eq.u_star, 0.2716, 5e-5);
}

TEST(Equilibrium, AgreesWithExtendedPrecisionBisection) {
  for (int id : {1, 2}) {
    auto p = preset(id).params;
    auto eq = find_interior_equilibrium(p);
    EXPECT_NEAR(eq.u_star, double(oracle_u_star(p.m, p.a, p.b)), 1e-14);
    Vec2 r = crowley_martin_field(p, eq.vec());
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Equilibrium, NoPredationGivesLogisticState) {
  auto p = preset(1).params;
  p.m = 0;
  auto eq = find_interior_equilibrium(p);
  EXPECT_EQ(eq.u_star, 1.0);
  EXPECT_EQ(eq.v_star, 1.0);
}

TEST(Equilibrium, RejectsInvalidParameters) {
  auto p = preset(1).params;
  p.d2 = -1;
  try {
    find_interior_equilibrium(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(Equilibrium, ViolatedExistenceConditionWithUniqueRootOnlyWarns) {
  auto p = preset(1).params;
  p.a = 3;
  p.b = 2;  // a + b < ab
  auto eq = find_interior_equilibrium(p);
  EXPECT_GT(eq.u_star, 0);
  EXPECT_LT(eq.u_star, 1);
}

TEST(Linearize, PrintedValuesWithinHalfPercent) {
  auto p1 = preset(1).params, p2 = preset(2).params;
  auto l1 = linearize(p1, find_interior_equilibrium(p1));
  auto l2 = linearize(p2, find_interior_equilibrium(p2));
  EXPECT_LT(rel(l1.s0, 0.0748), 5e-3);
  EXPECT_LT(rel(l1.sigma, -0.673), 5e-3);
  EXPECT_LT(rel(l2.s0, 0.0555), 5e-3);
  EXPECT_LT(rel(l2.sigma, -0.7092), 5e-3);
}

TEST(Linearize, MatchesExtendedPrecisionEvaluation) {
  for (int id : {1, 2}) {
    auto p = preset(id).params;
    long double u = oracle_u_star(p.m, p.a, p.b);
    long double s0 = u * (p.a * p.m * u / ((1 + p.a * u) * (1 + p.a * u) * (1 + p.b * u)) - 1);
    long double sg = -p.m * u / ((1 + p.a * u) * (1 + p.b * u) * (1 + p.b * u));
    auto lin = linearize(p, find_interior_equilibrium(p));
    EXPECT_NEAR(lin.s0, double(s0), 1e-14);
    EXPECT_NEAR(lin.sigma, double(sg), 1e-14);
    EXPECT_LT(lin.sigma, 0);
  }
}

TEST(Linearize, LinearPartIsTheJacobianAtEquilibrium) {
  for (int id : {1, 2}) {
    auto p = preset(id).params;
    auto eq = find_interior_equilibrium(p);
    auto lin = linearize(p, eq);
    EXPECT_LT((lin.L0 - crowley_martin_jacobian(p, eq.vec())).cwiseAbs().maxCoeff(), 1e-14);
    oracle::Field f = [&](const Vec2& w) { return crowley_martin_field(p, w); };
    for (int j = 0; j < 2; ++j) {
      Vec2 col = oracle::d1(f, eq.vec(), Vec2::Unit(j), 1e-4);
      EXPECT_LT((col - lin.L0.col(j)).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

class Forms : public ::testing::TestWithParam<int> {};

TEST_P(Forms, QuadraticFormFirstComponentOnUnitVector) {
  auto p = preset(GetParam()).params;
  auto eq = find_interior_equilibrium(p);
  auto model = crowley_martin_model(p, eq);
  const double u = eq.u_star, v = eq.v_star, A = p.a * u + 1, B = p.b * v + 1;
  const double expect = -2 + 2 * p.m * v * p.a / (A * A * B) - 2 * p.m * u * v * p.a * p.a / (A * A * A * B);
  Vec2 e1 = Vec2::Unit(0);
  EXPECT_NEAR(model.Q(e1, e1)[0], expect, 1e-13);
  EXPECT_NEAR(model.C(e1, e1, e1)[1], 6 * p.s * v * v / (u * u * u * u), 1e-11);
}

TEST_P(Forms, ExactSymmetryOnRandomArguments) {
  auto p = preset(GetParam()).params;
  auto model = crowley_martin_model(p, find_interior_equilibrium(p));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  for (int t = 0; t < 200; ++t) {
    Vec2 x(N(rng), N(rng)), y(N(rng), N(rng)), z(N(rng), N(rng));
    EXPECT_EQ(model.Q(x, y), model.Q(y, x));
    Vec2 c = model.C(x, y, z);
    EXPECT_EQ(c, model.C(x, z, y));
    EXPECT_EQ(c, model.C(y, x, z));
    EXPECT_EQ(c, model.C(y, z, x));
    EXPECT_EQ(c, model.C(z, x, y));
    EXPECT_EQ(c, model.C(z, y, x));
  }
}

TEST_P(Forms, AgreeWithFiniteDifferences) {
  auto p = preset(GetParam()).params;
  auto eq = find_interior_equilibrium(p);
  auto model = crowley_martin_model(p, eq);
  oracle::Field f = [&](const Vec2& w) { return crowley_martin_field(p, w); };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int t = 0; t < 20; ++t) {
    Vec2 x(U(rng), U(rng)), y(U(rng), U(rng)), z(U(rng), U(rng));
    Vec2 q = model.Q(x, y), qf = oracle::d2(f, eq.vec(), x, y, 1e-4);
    EXPECT_LT((q - qf).norm() / std::max(1.0, q.norm()), 1e-6);
    Vec2 c = model.C(x, y, z), cf = oracle::d3(f, eq.vec(), x, y, z, 2e-3);
    EXPECT_LT((c - cf).norm() / std::max(1.0, c.norm()), 1e-5);
  }
}

TEST_P(Forms, GenericModelReproducesClosedForms) {
  auto p = preset(GetParam()).params;
  auto eq = find_interior_equilibrium(p);
  auto model = crowley_martin_model(p, eq);
  auto [Le, De] = parameter_derivatives(p);
  auto generic = make_generic_model([p](const Vec2& w) { return crowley_martin_field(p, w); }, eq.vec(), Le, De);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int t = 0; t < 20; ++t) {
    Vec2 x(U(rng), U(rng)), y(U(rng), U(rng)), z(U(rng), U(rng));
    EXPECT_LT((model.Q(x, y) - generic.Q(x, y)).norm(), 1e-6 * std::max(1.0, model.Q(x, y).norm()));
    EXPECT_LT((model.C(x, y, z) - generic.C(x, y, z)).norm(), 1e-5 * std::max(1.0, model.C(x, y, z).norm()));
  }
  EXPECT_LT((model.jacobian(eq.vec()) - generic.jacobian(eq.vec())).norm(), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(BothSets, Forms, ::testing::Values(1, 2));

TEST(ParameterDerivatives, DiffusionAndGrowthDirections) {
  auto [L, D] = parameter_derivatives(preset(1).params);
  Mat2 Ls;
  Ls << 0, 0, 1, -1;
  EXPECT_EQ(L[0], Mat2::Zero());
  EXPECT_EQ(L[1], Ls);
  EXPECT_EQ(D[0], Mat2(Eigen::Vector2d(1, 0).asDiagonal()));
  EXPECT_EQ(D[1], Mat2::Zero());
}

TEST(ParameterDerivatives, GrowthDerivativeMatchesFiniteDifferenceInS) {
  auto p = preset(1).params;
  auto eq = find_interior_equilibrium(p);
  const double h = 1e-5;
  auto pp = p, pm = p;
  pp.s += h;
  pm.s -= h;
  Mat2 fd = (crowley_martin_jacobian(pp, eq.vec()) - crowley_martin_jacobian(pm, eq.vec())) / (2 * h);
  EXPECT_LT((fd - parameter_derivatives(p).first[1]).norm(), 1e-9);
}
