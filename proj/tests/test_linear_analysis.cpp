#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "pattern_duet/linear_analysis.hpp"
#include "pattern_duet/presets.hpp"

using namespace pattern_duet;

namespace {

struct Setup {
  ModelParams p;
  Linearization lin;
  TTPoint tt;
};

Setup setup(int id) {
  auto pr = preset(id);
  auto lin = linearize(pr.params, find_interior_equilibrium(pr.params));
  return {pr.params, lin, tt_point(pr.params, lin, pr.k1, pr.k2)};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Numeric intersection of two Turing curves by bisection on their difference.
double bisect_intersection(const TuringCurve& a, const TuringCurve& b, double lo, double hi) {
  auto f = [&](double d) { return a(d) - b(d); };
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi), fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Dispersion, ZeroModeReducesToReactionPart) {
  auto [p, lin, tt] = setup(1);
  auto d = dispersion(p, lin, 0);
  EXPECT_DOUBLE_EQ(d.theta, lin.s0 - p.s);
  EXPECT_DOUBLE_EQ(d.delta, -p.s * (lin.s0 + lin.sigma));
}

TEST(Dispersion, VanishesForBothModesAtTheInteractionPoint) {
  for (int id : {1, 2}) {
    auto [p, lin, tt] = setup(id);
    p.d1 = tt.d_star;
    p.s = tt.s_star;
    EXPECT_LT(std::abs(dispersion(p, lin, tt.k1).delta), 1e-10);
    EXPECT_LT(std::abs(dispersion(p, lin, tt.k2).delta), 1e-10);
    EXPECT_LT(dispersion(p, lin, tt.k1).theta, 0);
    EXPECT_LT(dispersion(p, lin, tt.k2).theta, 0);
    for (int k = tt.k2 + 1; k <= 50; ++k) EXPECT_GT(dispersion(p, lin, k).delta, 0);
  }
}

TEST(TuringCurve, SetOneMatchesPrintedRationalForm) {
  auto [p, lin, tt] = setup(1);
  for (int k : {1, 2, 3}) {
    auto curve = turing_curve(p, lin, k);
    for (auto [d1, s] : curve.sample(10)) {
      double printed = (-0.7 * d1 * k * k * k * k + 0.0524 * k * k) / (d1 * k * k + 0.598);
      EXPECT_LT(std::abs(s - printed), 2e-3 * std::max(1.0, std::abs(printed)));
    }
  }
}

TEST(TuringCurve, DeterminantVanishesAlongCurve) {
  for (int id : {1, 2}) {
    auto [p, lin, tt] = setup(id);
    for (int k = 1; k <= 4; ++k) {
      auto curve = turing_curve(p, lin, k);
      double worst = 0;
      for (auto [d1, s] : curve.sample(100))
        worst = std::max(worst, std::abs(dispersion_at(k, d1, s, p.d2, p.l, lin.s0, lin.sigma).delta));
      EXPECT_LT(worst, 1e-10);
    }
  }
}

TEST(TuringCurve, RejectsOutsideWindow) {
  auto [p, lin, tt] = setup(1);
  auto curve = turing_curve(p, lin, 2);
  EXPECT_THROW(curve(curve.d1_max() * 1.01), Error);
  EXPECT_THROW(curve(-1e-3), Error);
}

TEST(TTPoint, PrintedValuesWithinOnePercent) {
  auto s1 = setup(1), s2 = setup(2);
  EXPECT_LT(rel(s1.tt.d_star, 0.0056), 1e-2);
  EXPECT_LT(rel(s1.tt.s_star, 0.2364), 1e-2);
  EXPECT_LT(rel(s2.tt.d_star, 0.01095), 1e-2);
  EXPECT_LT(rel(s2.tt.s_star, 0.2679), 1e-2);
}

TEST(TTPoint, FrozenReferenceValues) {
  auto s1 = setup(1), s2 = setup(2);
  EXPECT_NEAR(s1.tt.d_star, 0.0056071292, 1e-9);
  EXPECT_NEAR(s1.tt.s_star, 0.23639711, 1e-8);
  EXPECT_NEAR(s2.tt.d_star, 0.010946932, 1e-9);
  EXPECT_NEAR(s2.tt.s_star, 0.26793056, 1e-8);
}

TEST(TTPoint, CoincidesWithNumericCurveIntersection) {
  for (int id : {1, 2}) {
    auto [p, lin, tt] = setup(id);
    auto a = turing_curve(p, lin, tt.k1), b = turing_curve(p, lin, tt.k2);
    double hi = std::min(a.d1_max(), b.d1_max()) * (1 - 1e-9);
    double d = bisect_intersection(a, b, tt.d_star * 0.5, std::min(hi, tt.d_star * 1.5));
    EXPECT_NEAR(d, tt.d_star, 1e-10);
    EXPECT_NEAR(a(d), tt.s_star, 1e-10);
  }
}

TEST(TTPoint, HypothesisViolationsAreReported) {
  auto [p, lin, tt] = setup(1);
  Linearization bad = lin;
  bad.sigma = -0.5 * lin.s0;
  try {
    tt_point(p, bad, 2, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HypothesisViolated);
  }
  EXPECT_THROW(tt_point(p, lin, 2, 2), Error);
}

TEST(CriticalModeIndex, BuiltinSets) {
  auto s1 = setup(1), s2 = setup(2);
  EXPECT_EQ(critical_mode_index(s1.p, s1.lin), 2);
  EXPECT_EQ(critical_mode_index(s2.p, s2.lin), 1);
  for (auto* s : {&s1, &s2}) {
    int k0 = critical_mode_index(s->p, s->lin);
    for (int k = k0 + 1; k <= 50; ++k)
      EXPECT_LT(critical_diffusion(s->p, s->lin, k), critical_diffusion(s->p, s->lin, k0));
  }
}

TEST(CriticalEigenvectors, FrozenValuesAndResiduals) {
  auto [p, lin, tt] = setup(1);
  auto c = critical_eigenvectors(p, lin, tt);
  EXPECT_NEAR(c.phi1[1], 0.07785448, 1e-8);
  EXPECT_NEAR(c.phi2[1], 0.03616627, 1e-8);
  EXPECT_NEAR(c.psi1[0], 1.01754593, 1e-8);
  EXPECT_NEAR(c.psi1[1], -0.22536829, 1e-8);
  EXPECT_NEAR(c.psi2[0], 1.00373492, 1e-8);
  EXPECT_NEAR(c.psi2[1], -0.1032709, 1e-7);
  EXPECT_NEAR(c.phi1[1], 0.0779, 5e-5);
  EXPECT_NEAR(c.phi2[1], 0.0362, 5e-5);
}

TEST(CriticalEigenvectors, NullResidualsAndNormalization) {
  for (int id : {1, 2}) {
    auto [p, lin, tt] = setup(id);
    auto c = critical_eigenvectors(p, lin, tt);
    for (int j : {1, 2}) {
      Mat2 D = c.char_matrix(c.mode(j));
      EXPECT_LT((D * c.phi(j)).norm(), 1e-10);
      EXPECT_LT((c.psi(j).transpose() * D).norm(), 1e-10);
      EXPECT_NEAR(c.psi(j).dot(c.phi(j)), 1.0, 1e-12);
    }
  }
}

TEST(CriticalEigenvectors, GeneralNullVectorsAgreeWithClosedForm) {
  for (int id : {1, 2}) {
    auto [p, lin, tt] = setup(id);
    auto c = critical_eigenvectors(p, lin, tt);
    auto g = critical_data_from_matrices(tt.k1, tt.k2, p.l, c.D0, c.L0);
    EXPECT_LT((g.phi1 - c.phi1).norm(), 1e-10);
    EXPECT_LT((g.phi2 - c.phi2).norm(), 1e-10);
    EXPECT_LT((g.psi1 - c.psi1).norm(), 1e-10);
    EXPECT_LT((g.psi2 - c.psi2).norm(), 1e-10);
  }
}

TEST(SpectrumCheck, OnlyInteractingModesAreCritical) {
  for (int id : {1, 2}) {
    auto [p, lin, tt] = setup(id);
    auto rep = spectrum_check(p, lin, tt, 50);
    EXPECT_TRUE(rep.ok);
    ASSERT_EQ(rep.zero_modes.size(), 2u);
    EXPECT_EQ(rep.zero_modes[0], tt.k1);
    EXPECT_EQ(rep.zero_modes[1], tt.k2);
    EXPECT_GT(rep.margin, 0);

    // independent scan with a general eigen solver
    auto c = critical_eigenvectors(p, lin, tt);
    for (int k = 0; k <= 50; ++k) {
      Eigen::EigenSolver<Mat2> es(-c.char_matrix(k));
      double mx = es.eigenvalues().real().maxCoeff();
      if (k == tt.k1 || k == tt.k2)
        EXPECT_LT(std::abs(mx), 1e-9);
      else
        EXPECT_LT(mx, -rep.margin + 1e-12);
    }
  }
}

TEST(SpectrumCheck, PerturbationBreaksDoubleZero) {
  auto [p, lin, tt] = setup(1);
  TTPoint off = tt;
  off.s_star += 0.05;
  auto rep = spectrum_check(p, lin, off, 50);
  EXPECT_FALSE(rep.ok);
  EXPECT_FALSE(rep.offending.empty());
  EXPECT_THROW(rep.raise_if_failed(), Error);
}
