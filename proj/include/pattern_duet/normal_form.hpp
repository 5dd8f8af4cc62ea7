#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kinetics.hpp"
#include "linear_analysis.hpp"

namespace pattern_duet {

enum class ResonanceCase { Generic, OneTwo, OneThree };

constexpr std::string_view to_string(ResonanceCase c) {
  switch (c) {
    case ResonanceCase::Generic: return "Generic";
    case ResonanceCase::OneTwo: return "OneTwo";
    case ResonanceCase::OneThree: return "OneThree";
  }
  return "Generic";
}

inline ResonanceCase classify_resonance(int k1, int k2) {
  if (k1 < 1 || k2 <= k1) fail(ErrorKind::InvalidModePair, "mode pair must satisfy k2 > k1 >= 1");
  if (k2 == 2 * k1) return ResonanceCase::OneTwo;
  if (k2 == 3 * k1) return ResonanceCase::OneThree;
  return ResonanceCase::Generic;
}

inline double condition_number(const Mat2& M) {
  Eigen::JacobiSVD<Mat2> svd(M);
  const auto& sv = svd.singularValues();
  return sv[1] == 0 ? std::numeric_limits<double>::infinity() : sv[0] / sv[1];
}

inline Vec2 solve_block_nonresonant(int k, const Vec2& rhs, const CriticalData& c) {
  const Mat2 M = c.char_matrix(k);
  if (!(condition_number(M) < 1e12))
    fail(ErrorKind::UnexpectedSingularity, "near-singular block at mode " + std::to_string(k));
  return M.partialPivLu().solve(rhs);
}

inline Vec2 project_out(int j, const Vec2& rhs, const CriticalData& c) {
  return rhs - c.phi(j) * c.psi(j).dot(rhs);
}

// Bordered solve at a critical mode; enforces psi_j . h = 0.
inline Vec2 solve_block_resonant(int j, const Vec2& rhs, const CriticalData& c) {
  if (j != 1 && j != 2) fail(ErrorKind::InvalidInput, "critical index must be 1 or 2");
  Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
  B.topLeftCorner<2, 2>() = c.char_matrix(c.mode(j));
  B.block<2, 1>(0, 2) = c.phi(j);
  B.block<1, 2>(2, 0) = c.psi(j).transpose();
  Eigen::Vector3d r;
  r << project_out(j, rhs, c), 0.0;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(B);
  if (!lu.isInvertible()) fail(ErrorKind::BorderedSolveFailed, "bordered matrix is singular");
  Eigen::Vector3d x = lu.solve(r);
  return x.head<2>();
}

// Routes a block to the bordered solver when its mode is critical.
inline Vec2 solve_block(int k, const Vec2& rhs, const CriticalData& c) {
  if (k == c.k1) return solve_block_resonant(1, rhs, c);
  if (k == c.k2) return solve_block_resonant(2, rhs, c);
  return solve_block_nonresonant(k, rhs, c);
}

struct CenterManifoldBlocks {
  Vec2 h_2000_0, h_0200_0;
  Vec2 h_2000_2k1, h_0200_2k2;
  Vec2 h_1100_diff, h_1100_sum;
};

inline CenterManifoldBlocks center_manifold_blocks(const CriticalData& c, const KineticsModel& model) {
  const double r2 = std::sqrt(2.0);
  const Vec2 Q11 = model.Q(c.phi1, c.phi1), Q22 = model.Q(c.phi2, c.phi2), Q12 = model.Q(c.phi1, c.phi2);
  CenterManifoldBlocks h;
  h.h_2000_0 = solve_block(0, Q11, c);
  h.h_0200_0 = solve_block(0, Q22, c);
  h.h_2000_2k1 = solve_block(2 * c.k1, Q11 / r2, c);
  h.h_0200_2k2 = solve_block(2 * c.k2, Q22 / r2, c);
  h.h_1100_diff = solve_block(c.k2 - c.k1, Q12 / r2, c);
  h.h_1100_sum = solve_block(c.k1 + c.k2, Q12 / r2, c);
  return h;
}

struct NFCoefficients {
  ResonanceCase rcase = ResonanceCase::Generic;
  int k1 = 0, k2 = 0;
  double d_star = 0, s_star = 0;
  // [[g1010_11, g1001_11], [g0110_12, g0101_12]]
  Mat2 lin = Mat2::Zero();
  std::optional<double> g1100_11, g2000_12;
  double g3000_11 = 0, g1200_11 = 0, g2100_12 = 0, g0300_12 = 0;
  std::optional<double> g2100_11, g3000_12;

  std::vector<std::pair<std::string, double>> raw() const {
    std::vector<std::pair<std::string, double>> r{{"g1010_11", lin(0, 0)}, {"g1001_11", lin(0, 1)},
                                                  {"g0110_12", lin(1, 0)}, {"g0101_12", lin(1, 1)}};
    if (g1100_11) r.emplace_back("g1100_11", *g1100_11);
    if (g2000_12) r.emplace_back("g2000_12", *g2000_12);
    r.emplace_back("g3000_11", g3000_11);
    r.emplace_back("g1200_11", g1200_11);
    r.emplace_back("g2100_12", g2100_12);
    r.emplace_back("g0300_12", g0300_12);
    if (g2100_11) r.emplace_back("g2100_11", *g2100_11);
    if (g3000_12) r.emplace_back("g3000_12", *g3000_12);
    return r;
  }
};

// Polynomial coefficients of the displayed normal form, i.e. the raw g
// values divided by their factorial weights. Monomial keys read
// "<eq>:<z1 power><z2 power>", e.g. "1:12" is the z1 z2^2 term of dz1/dt.
inline std::vector<std::pair<std::string, double>> display_coefficients(const NFCoefficients& nf) {
  std::vector<std::pair<std::string, double>> d{{"1:eps1", nf.lin(0, 0)}, {"1:eps2", nf.lin(0, 1)},
                                                {"2:eps1", nf.lin(1, 0)}, {"2:eps2", nf.lin(1, 1)}};
  if (nf.g1100_11) d.emplace_back("1:11", *nf.g1100_11);
  if (nf.g2000_12) d.emplace_back("2:20", *nf.g2000_12 / 2);
  d.emplace_back("1:30", nf.g3000_11 / 6);
  d.emplace_back("1:12", nf.g1200_11 / 2);
  d.emplace_back("2:21", nf.g2100_12 / 2);
  d.emplace_back("2:03", nf.g0300_12 / 6);
  if (nf.g2100_11) d.emplace_back("1:21", *nf.g2100_11 / 2);
  if (nf.g3000_12) d.emplace_back("2:30", *nf.g3000_12 / 6);
  return d;
}

inline NFCoefficients compute_nf(const TTPoint& tt, const CriticalData& c, const KineticsModel& model) {
  if (tt.k1 != c.k1 || tt.k2 != c.k2) fail(ErrorKind::InvalidInput, "critical data does not match the TT point");
  const double r2 = std::sqrt(2.0);
  NFCoefficients nf;
  nf.rcase = classify_resonance(tt.k1, tt.k2);
  nf.k1 = tt.k1;
  nf.k2 = tt.k2;
  nf.d_star = tt.d_star;
  nf.s_star = tt.s_star;

  const Vec2 &p1 = c.phi1, &p2 = c.phi2, &q1 = c.psi1, &q2 = c.psi2;
  for (int i = 0; i < 2; ++i) {
    nf.lin(0, i) = q1.dot(model.L_eps(i) * p1 - c.mu1 * model.D_eps(i) * p1);
    nf.lin(1, i) = q2.dot(model.L_eps(i) * p2 - c.mu2 * model.D_eps(i) * p2);
  }

  const CenterManifoldBlocks h = center_manifold_blocks(c, model);
  auto Q = [&](const Vec2& x, const Vec2& y) { return model.Q(x, y); };
  auto C = [&](const Vec2& x, const Vec2& y, const Vec2& z) { return model.C(x, y, z); };
  const Vec2 cross = h.h_1100_diff + h.h_1100_sum;

  nf.g3000_11 = 1.5 * q1.dot(C(p1, p1, p1)) + 3 * q1.dot(Q(p1, h.h_2000_0 + h.h_2000_2k1 / r2));
  nf.g1200_11 = q1.dot(C(p1, p2, p2)) + 2 / r2 * q1.dot(Q(p2, cross)) + q1.dot(Q(p1, h.h_0200_0));
  nf.g2100_12 = q2.dot(C(p1, p1, p2)) + 2 / r2 * q2.dot(Q(p1, cross)) + q2.dot(Q(p2, h.h_2000_0));
  nf.g0300_12 = 1.5 * q2.dot(C(p2, p2, p2)) + 3 * q2.dot(Q(p2, h.h_0200_0 + h.h_0200_2k2 / r2));

  switch (nf.rcase) {
    case ResonanceCase::OneTwo:
      nf.g1100_11 = q1.dot(Q(p1, p2)) / r2;
      nf.g2000_12 = q2.dot(Q(p1, p1)) / r2;
      break;
    case ResonanceCase::OneThree:
      nf.g2100_11 = 0.5 * q1.dot(C(p1, p1, p2)) + 2 / r2 * q1.dot(Q(p1, h.h_1100_diff)) +
                    1 / r2 * q1.dot(Q(p2, h.h_2000_2k1));
      nf.g3000_12 = 0.5 * q2.dot(C(p1, p1, p1)) + 3 / r2 * q2.dot(Q(p1, h.h_2000_2k1));
      break;
    case ResonanceCase::Generic:
      break;
  }

  for (const auto& [name, v] : nf.raw())
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteCoefficient, name + " is not finite");
  return nf;
}

}  // namespace pattern_duet
