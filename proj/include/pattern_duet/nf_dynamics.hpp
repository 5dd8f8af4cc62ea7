#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "continuation.hpp"
#include "linear_analysis.hpp"
#include "normal_form.hpp"

namespace pattern_duet {

// Displayed normal form
//   z1' = a1 z1 + q z1 z2 + A z1^3 + B z1 z2^2 + E z1^2 z2
//   z2' = a2 z2 + p z1^2 + C z1^2 z2 + D z2^3 + F z1^3
// with (a1, a2) = lin * eps.
struct NFPolynomial {
  ResonanceCase rcase = ResonanceCase::Generic;
  Mat2 lin = Mat2::Zero();
  double q = 0, p = 0;
  double A = 0, B = 0, C = 0, D = 0;
  double E = 0, F = 0;

  static NFPolynomial from(const NFCoefficients& nf) {
    NFPolynomial P;
    P.rcase = nf.rcase;
    P.lin = nf.lin;
    P.q = nf.g1100_11.value_or(0.0);
    P.p = nf.g2000_12.value_or(0.0) / 2;
    P.A = nf.g3000_11 / 6;
    P.B = nf.g1200_11 / 2;
    P.C = nf.g2100_12 / 2;
    P.D = nf.g0300_12 / 6;
    P.E = nf.g2100_11.value_or(0.0) / 2;
    P.F = nf.g3000_12.value_or(0.0) / 6;
    return P;
  }
};

class TruncatedNF {
 public:
  TruncatedNF(NFPolynomial poly, Vec2 eps) : P_(poly), eps_(eps), alpha_(poly.lin * eps) {}

  const NFPolynomial& poly() const { return P_; }
  const Vec2& epsilon() const { return eps_; }
  const Vec2& alpha() const { return alpha_; }

  Vec2 rhs(const Vec2& z) const {
    const double x = z[0], y = z[1];
    return {x * (alpha_[0] + P_.q * y + P_.A * x * x + P_.B * y * y + P_.E * x * y),
            alpha_[1] * y + P_.p * x * x + P_.C * x * x * y + P_.D * y * y * y + P_.F * x * x * x};
  }

  Mat2 jacobian(const Vec2& z) const {
    const double x = z[0], y = z[1];
    Mat2 J;
    J(0, 0) = alpha_[0] + P_.q * y + 3 * P_.A * x * x + P_.B * y * y + 2 * P_.E * x * y;
    J(0, 1) = P_.q * x + 2 * P_.B * x * y + P_.E * x * x;
    J(1, 0) = 2 * P_.p * x + 2 * P_.C * x * y + 3 * P_.F * x * x;
    J(1, 1) = alpha_[1] + P_.C * x * x + 3 * P_.D * y * y;
    return J;
  }

 private:
  NFPolynomial P_;
  Vec2 eps_;
  Vec2 alpha_;
};

enum class Stability { Stable, Saddle, Unstable, Degenerate };

constexpr std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Saddle: return "saddle";
    case Stability::Unstable: return "unstable";
    case Stability::Degenerate: return "degenerate";
  }
  return "degenerate";
}

enum class EqKind { A0, A1, A2, A3, Mixed };

struct EquilibriumLabel {
  EqKind kind = EqKind::A0;
  int sign1 = 0, sign2 = 0;

  std::string str() const {
    auto sg = [](int s) { return s > 0 ? "+" : "-"; };
    switch (kind) {
      case EqKind::A0: return "A0";
      case EqKind::A1: return std::string("A1") + sg(sign1);
      case EqKind::A2: return std::string("A2") + sg(sign2);
      case EqKind::A3: return std::string("A3") + sg(sign1) + sg(sign2);
      case EqKind::Mixed: return std::string("M") + sg(sign1) + sg(sign2);
    }
    return "A0";
  }
};

struct NFEquilibrium {
  Vec2 z;
  EquilibriumLabel label;
  std::complex<double> lambda1, lambda2;
  Stability stability = Stability::Degenerate;
};

struct StabilityResult {
  std::complex<double> lambda1, lambda2;
  Stability stability;
};

inline StabilityResult nf_stability(const TruncatedNF& nf, const Vec2& z, double margin = 1e-10) {
  if (!(nf.rhs(z).norm() < 1e-9)) fail(ErrorKind::InvalidInput, "point is not an equilibrium");
  auto [l1, l2] = eig2(nf.jacobian(z));
  auto cls = [&](double r) { return r < -margin ? -1 : (r > margin ? 1 : 0); };
  int a = cls(l1.real()), b = cls(l2.real());
  Stability s;
  if (a == 0 || b == 0)
    s = Stability::Degenerate;
  else if (a < 0 && b < 0)
    s = Stability::Stable;
  else if (a > 0 && b > 0)
    s = Stability::Unstable;
  else
    s = Stability::Saddle;
  return {l1, l2, s};
}

// Real roots of c[3] t^3 + c[2] t^2 + c[1] t + c[0].
inline std::vector<double> real_roots(std::array<double, 4> c) {
  double scale = 0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  if (scale == 0) return {};
  int deg = 3;
  while (deg > 0 && std::abs(c[deg]) <= 1e-14 * scale) --deg;
  std::vector<double> roots;
  if (deg == 0) return roots;
  if (deg == 1) return {-c[0] / c[1]};
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 0; i < deg; ++i) M(0, i) = -c[deg - 1 - i] / c[deg];
  for (int i = 1; i < deg; ++i) M(i, i - 1) = 1;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  for (int i = 0; i < deg; ++i) {
    auto r = es.eigenvalues()[i];
    if (std::abs(r.imag()) > 1e-7 * (1 + std::abs(r.real()))) continue;
    double t = r.real();
    for (int it = 0; it < 20; ++it) {
      double f = 0, df = 0;
      for (int k = deg; k >= 0; --k) {
        df = df * t + f;
        f = f * t + c[k];
      }
      if (df == 0) break;
      double dt = f / df;
      t -= dt;
      if (std::abs(dt) <= 1e-16 * (1 + std::abs(t))) break;
    }
    roots.push_back(t);
  }
  return roots;
}

namespace detail {

inline std::optional<Vec2> newton_polish(const TruncatedNF& nf, Vec2 z) {
  for (int it = 0; it < 60; ++it) {
    Vec2 f = nf.rhs(z);
    if (f.cwiseAbs().maxCoeff() < 1e-15) break;
    Mat2 J = nf.jacobian(z);
    if (std::abs(J.determinant()) < 1e-300) break;
    Vec2 dz = J.partialPivLu().solve(f);
    z -= dz;
    if (!z.allFinite()) return std::nullopt;
    if (dz.norm() <= 1e-17 * (1 + z.norm())) break;
  }
  if (!(nf.rhs(z).cwiseAbs().maxCoeff() < 1e-12)) return std::nullopt;
  return z;
}

inline EquilibriumLabel label_for(const Vec2& z, ResonanceCase rc) {
  auto sg = [](double v) { return v > 0 ? 1 : -1; };
  const bool z1 = z[0] == 0, z2 = z[1] == 0;
  if (z1 && z2) return {EqKind::A0, 0, 0};
  if (z2) return {EqKind::A1, sg(z[0]), 0};
  if (z1) return {EqKind::A2, 0, sg(z[1])};
  return {rc == ResonanceCase::Generic ? EqKind::A3 : EqKind::Mixed, sg(z[0]), sg(z[1])};
}

}  // namespace detail

inline std::vector<NFEquilibrium> nf_equilibria(const TruncatedNF& nf) {
  const NFPolynomial& P = nf.poly();
  const double a1 = nf.alpha()[0], a2 = nf.alpha()[1];
  struct Seed {
    Vec2 z;
    bool strict;
  };
  std::vector<Seed> seeds{{Vec2::Zero(), true}};

  auto add_pm = [&](double w, double z2_over_z1, bool strict) {
    if (!(w > 0)) return;
    double r = std::sqrt(w);
    seeds.push_back({Vec2(r, z2_over_z1 * r), strict});
    seeds.push_back({Vec2(-r, -z2_over_z1 * r), strict});
  };

  // z2 axis (z1 = 0 is invariant in every case)
  if (P.D != 0) {
    double w = -a2 / P.D;
    if (w > 0) {
      seeds.push_back({Vec2(0, std::sqrt(w)), true});
      seeds.push_back({Vec2(0, -std::sqrt(w)), true});
    }
  }
  // z1 axis, invariant when the z2 equation has no pure z1 terms
  if (P.p == 0 && P.F == 0 && P.A != 0) {
    double w = -a1 / P.A;
    if (w > 0) {
      seeds.push_back({Vec2(std::sqrt(w), 0), true});
      seeds.push_back({Vec2(-std::sqrt(w), 0), true});
    }
  }

  switch (P.rcase) {
    case ResonanceCase::Generic: {
      const double det = P.A * P.D - P.B * P.C;
      if (det != 0) {
        double w1 = (-a1 * P.D + P.B * a2) / det;
        double w2 = (-P.A * a2 + P.C * a1) / det;
        if (w1 > 0 && w2 > 0) {
          double r1 = std::sqrt(w1), r2 = std::sqrt(w2);
          for (int s1 : {1, -1})
            for (int s2 : {1, -1}) seeds.push_back({Vec2(s1 * r1, s2 * r2), true});
        }
      }
      break;
    }
    case ResonanceCase::OneTwo: {
      const double a = P.A, b = P.B, c = P.C, d = P.D, p = P.p, q = P.q;
      if (a == 0) fail(ErrorKind::DegenerateCubic, "vanishing z1^3 coefficient");
      auto roots = real_roots({-p * a1, a * a2 - p * q - c * a1, -(p * b + c * q), a * d - c * b});
      for (double z2 : roots) {
        if (z2 == 0) continue;
        double w = -(a1 + q * z2 + b * z2 * z2) / a;
        if (w > 0) {
          seeds.push_back({Vec2(std::sqrt(w), z2), true});
          seeds.push_back({Vec2(-std::sqrt(w), z2), true});
        }
      }
      break;
    }
    case ResonanceCase::OneThree: {
      const double A = P.A, B = P.B, E = P.E, F = P.F, G = P.C, H = P.D;
      auto roots = real_roots({-a1 * F, a2 * A - a1 * G, a2 * E, a2 * B - a1 * H});
      for (double t : roots) {
        double K = A + B * t * t + E * t;
        if (K != 0) add_pm(-a1 / K, t, true);
      }
      if (a1 == 0) {
        for (double t : real_roots({A, E, B, 0})) {
          double M = F + G * t + H * t * t * t;
          if (M != 0) add_pm(-a2 * t / M, t, true);
        }
      }
      break;
    }
  }

  std::vector<NFEquilibrium> out;
  for (const auto& s : seeds) {
    auto z = detail::newton_polish(nf, s.z);
    if (!z) {
      if (s.strict)
        fail(ErrorKind::RootFindingFailed,
             "Newton failed from seed (" + std::to_string(s.z[0]) + ", " + std::to_string(s.z[1]) + ")");
      continue;
    }
    bool dup = false;
    for (const auto& e : out)
      if ((e.z - *z).norm() < 1e-9) dup = true;
    if (dup) continue;
    NFEquilibrium e;
    e.z = *z;
    e.label = detail::label_for(*z, P.rcase);
    auto st = nf_stability(nf, *z);
    e.lambda1 = st.lambda1;
    e.lambda2 = st.lambda2;
    e.stability = st.stability;
    out.push_back(e);
  }
  return out;
}

struct UnfoldingClass {
  int d0 = 1;
  int sign_b0 = 1, sign_c0 = 1, sign_dmb0c0 = 1;
  double b0 = 0, c0 = 0;
  bool time_reversed = false;
  std::string case_label;
};

inline UnfoldingClass classify_unfolding(const NFPolynomial& P) {
  if (P.rcase != ResonanceCase::Generic)
    fail(ErrorKind::NotApplicable, "unfolding table applies to the non-resonant cubic normal form");
  if (std::abs(P.A) < 1e-10 || std::abs(P.D) < 1e-10)
    fail(ErrorKind::DegenerateCubic, "diagonal cubic coefficient vanishes");
  UnfoldingClass u;
  const double tau = P.A > 0 ? 1.0 : -1.0;
  u.time_reversed = tau < 0;
  u.b0 = tau * P.B / std::abs(P.D);
  u.c0 = tau * P.C / std::abs(P.A);
  u.d0 = int(tau) * (P.D > 0 ? 1 : -1);
  const double disc = u.d0 - u.b0 * u.c0;
  if (std::abs(u.b0) < 1e-10 || std::abs(u.c0) < 1e-10 || std::abs(disc) < 1e-10)
    fail(ErrorKind::DegenerateCubic, "unfolding lies on a boundary of the sign table");
  u.sign_b0 = u.b0 > 0 ? 1 : -1;
  u.sign_c0 = u.c0 > 0 ? 1 : -1;
  u.sign_dmb0c0 = disc > 0 ? 1 : -1;
  static const std::map<std::array<int, 4>, const char*> table{
      {{1, 1, 1, 1}, "Ia"},     {{1, 1, 1, -1}, "Ib"},   {{1, 1, -1, 1}, "II"},    {{1, -1, 1, 1}, "III"},
      {{1, -1, -1, 1}, "IVa"},  {{1, -1, -1, -1}, "IVb"}, {{-1, 1, 1, -1}, "V"},    {{-1, 1, -1, 1}, "VIa"},
      {{-1, 1, -1, -1}, "VIb"}, {{-1, -1, 1, 1}, "VIIa"}, {{-1, -1, 1, -1}, "VIIb"}, {{-1, -1, -1, -1}, "VIII"}};
  auto it = table.find({u.d0, u.sign_b0, u.sign_c0, u.sign_dmb0c0});
  if (it == table.end()) fail(ErrorKind::DegenerateCubic, "sign tuple outside the unfolding table");
  u.case_label = it->second;
  return u;
}

struct BifurcationLine {
  std::string name;
  std::string kind;  // "primary" or "secondary"
  Vec2 normal;       // zero set: normal . eps = 0
  Vec2 direction;    // unit direction in the eps plane
  bool ray = false;  // only eps = t * direction, t >= 0
  double slope() const {
    return direction[0] == 0 ? std::numeric_limits<double>::infinity() : direction[1] / direction[0];
  }
};

struct BifurcationCurve {
  std::string name;
  std::vector<Vec2> eps;  // polyline in (eps1, eps2)
};

struct BifurcationSet {
  std::vector<BifurcationLine> lines;
  std::vector<BifurcationCurve> curves;
};

struct EpsWindow {
  double eps1 = 2e-3, eps2 = 5e-2;
  bool contains(const Vec2& e) const { return std::abs(e[0]) <= eps1 && std::abs(e[1]) <= eps2; }
};

namespace detail {

inline BifurcationLine line_from_normal(std::string name, std::string kind, Vec2 n) {
  BifurcationLine L;
  L.name = std::move(name);
  L.kind = std::move(kind);
  L.normal = n;
  L.direction = Vec2(-n[1], n[0]).normalized();
  if (L.direction[0] < 0 || (L.direction[0] == 0 && L.direction[1] < 0)) L.direction = -L.direction;
  return L;
}

// Secondary curve family whose equations are linear in (eps1, eps2, w) for
// fixed tau. Unknown vector x = (eps1, eps2, w, tau).
struct LinearFamily {
  std::string name;
  std::function<Eigen::Vector3d(const Eigen::Vector4d&)> residual;
  std::function<std::optional<Eigen::Vector3d>(double)> solve;
  bool need_positive_w = true;
};

inline std::vector<BifurcationCurve> trace_family(const LinearFamily& fam, const EpsWindow& win, double tau_max,
                                                  const ContinuationOptions& opt) {
  std::vector<BifurcationCurve> curves;
  double seed_sign = 0;
  auto ok = [&](const Eigen::VectorXd& x) {
    return win.contains(Vec2(x[0], x[1])) && (!fam.need_positive_w || x[2] > 0) && std::abs(x[3]) <= tau_max &&
           x[3] * seed_sign > 0;
  };
  const int n = 4000;
  std::vector<bool> covered(n + 1, false);
  auto index_of = [&](double tau) { return int(std::lround((tau + tau_max) / (2 * tau_max) * n)); };
  auto H = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::Vector4d y = x;
    return fam.residual(y);
  };
  for (int i = 0; i <= n; ++i) {
    if (covered[i]) continue;
    double tau = -tau_max + 2 * tau_max * i / n;
    auto s = fam.solve(tau);
    if (!s) continue;
    Eigen::VectorXd x0(4);
    x0 << (*s)[0], (*s)[1], (*s)[2], tau;
    seed_sign = tau > 0 ? 1.0 : -1.0;
    if (!ok(x0)) continue;
    Eigen::VectorXd dir = Eigen::VectorXd::Unit(4, 3);
    auto fwd = continue_curve(H, x0, dir, ok, opt);
    auto bwd = continue_curve(H, x0, -dir, ok, opt);
    BifurcationCurve c;
    c.name = fam.name + (tau > 0 ? "+" : "-");
    for (auto it = bwd.rbegin(); it != bwd.rend(); ++it) c.eps.emplace_back((*it)[0], (*it)[1]);
    for (size_t k = 1; k < fwd.size(); ++k) c.eps.emplace_back(fwd[k][0], fwd[k][1]);
    for (const auto* part : {&fwd, &bwd})
      for (const auto& x : *part) {
        int j = index_of(x[3]);
        if (j >= 0 && j <= n) covered[j] = true;
      }
    covered[i] = true;
    curves.push_back(std::move(c));
  }
  return curves;
}

inline std::optional<Eigen::Vector3d> solve3(const Eigen::Matrix3d& M, const Eigen::Vector3d& r) {
  Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
  if (!lu.isInvertible()) return std::nullopt;
  return lu.solve(r);
}

}  // namespace detail

inline BifurcationSet nf_bifurcation_lines(const NFPolynomial& P, int k1, int k2, const EpsWindow& win = {},
                                           const ContinuationOptions& opt = {}) {
  BifurcationSet set;
  set.lines.push_back(detail::line_from_normal("L" + std::to_string(k1), "primary", P.lin.row(0)));
  set.lines.push_back(detail::line_from_normal("L" + std::to_string(k2), "primary", P.lin.row(1)));

  const Eigen::RowVector2d r1 = P.lin.row(0), r2 = P.lin.row(1);
  if (P.rcase == ResonanceCase::Generic) {
    const double det = P.A * P.D - P.B * P.C;
    if (det == 0) fail(ErrorKind::DegenerateCubic, "singular mixed-mode system");
    // z1^2 and z2^2 of A3 are linear in eps; each vanishes on a half-line.
    Vec2 n1 = (-P.D * r1 + P.B * r2).transpose() / det;
    Vec2 n2 = (P.C * r1 - P.A * r2).transpose() / det;
    auto T1 = detail::line_from_normal("T1", "secondary", n1);
    if (n2.dot(T1.direction) < 0) T1.direction = -T1.direction;
    T1.ray = true;
    auto T2 = detail::line_from_normal("T2", "secondary", n2);
    if (n1.dot(T2.direction) < 0) T2.direction = -T2.direction;
    T2.ray = true;
    set.lines.push_back(T1);
    set.lines.push_back(T2);
    return set;
  }

  using V4 = Eigen::Vector4d;
  using V3 = Eigen::Vector3d;
  const Mat2 lin = P.lin;
  std::vector<detail::LinearFamily> fams;
  if (P.rcase == ResonanceCase::OneTwo) {
    const double a = P.A, b = P.B, c = P.C, d = P.D, p = P.p, q = P.q;
    // mixed branch meeting the z2 axis: w = 0, tau = z2
    fams.push_back({"T_axis",
                    [=](const V4& x) {
                      Vec2 al = lin * Vec2(x[0], x[1]);
                      double z = x[3];
                      return V3(al[0] + q * z + b * z * z, al[1] + d * z * z, x[2]);
                    },
                    [=](double z) -> std::optional<V3> {
                      Mat2 M = lin;
                      if (std::abs(M.determinant()) == 0) return std::nullopt;
                      Vec2 e = M.partialPivLu().solve(Vec2(-(q * z + b * z * z), -d * z * z));
                      return V3(e[0], e[1], 0.0);
                    },
                    false});
    // fold of mixed equilibria in (w, z2) = (z1^2, z2)
    fams.push_back({"T_fold",
                    [=](const V4& x) {
                      Vec2 al = lin * Vec2(x[0], x[1]);
                      double w = x[2], z = x[3];
                      return V3(al[0] + q * z + a * w + b * z * z, al[1] * z + p * w + c * w * z + d * z * z * z,
                                a * (al[1] + c * w + 3 * d * z * z) - (q + 2 * b * z) * (p + c * z));
                    },
                    [=](double z) -> std::optional<V3> {
                      Eigen::Matrix3d M;
                      M << lin(0, 0), lin(0, 1), a, z * lin(1, 0), z * lin(1, 1), p + c * z, a * lin(1, 0),
                          a * lin(1, 1), a * c;
                      V3 r(-(q * z + b * z * z), -d * z * z * z, -(3 * a * d * z * z - (q + 2 * b * z) * (p + c * z)));
                      return detail::solve3(M, r);
                    },
                    true});
  } else {
    // Without quadratic terms the truncation is invariant under
    // z -> r z, eps -> r^2 eps, so both secondary sets are rays.
    const double A = P.A, B = P.B, E = P.E, F = P.F, G = P.C, Hc = P.D;
    if (std::abs(lin.determinant()) > 0) {
      Vec2 e = -lin.partialPivLu().solve(Vec2(B, Hc));
      if (e.norm() > 0) {
        auto L = detail::line_from_normal("T_axis", "secondary", Vec2(-e[1], e[0]));
        L.direction = e.normalized();
        L.ray = true;
        set.lines.push_back(L);
      }
    }
    auto fold_matrix = [=](double t) {
      double K = A + B * t * t + E * t, M = F + G * t + Hc * t * t * t;
      Eigen::Matrix3d Mx;
      Mx << lin(0, 0), lin(0, 1), K, t * lin(1, 0), t * lin(1, 1), M, K * lin(1, 0), K * lin(1, 1),
          K * (G + 3 * Hc * t * t) - M * (2 * B * t + E);
      return Mx;
    };
    auto det = [&](double t) { return fold_matrix(t).determinant(); };
    const int n = 20000;
    const double tmax = 50;
    double prev_t = -tmax, prev = det(prev_t);
    int idx = 0;
    for (int i = 1; i <= n; ++i) {
      double t = -tmax + 2 * tmax * i / n, cur = det(t);
      if ((prev > 0) != (cur > 0)) {
        double lo = prev_t, hi = t, flo = prev;
        for (int it = 0; it < 200; ++it) {
          double mid = 0.5 * (lo + hi), fm = det(mid);
          if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(fold_matrix(0.5 * (lo + hi)));
        lu.setThreshold(1e-8);
        Eigen::MatrixXd K = lu.kernel();
        if (K.cols() >= 1) {
          Eigen::Vector3d v = K.col(0);
          if (v[2] < 0) v = -v;
          if (v[2] > 0) {
            auto L = detail::line_from_normal("T_fold" + std::to_string(++idx), "secondary", Vec2(-v[1], v[0]));
            L.direction = Vec2(v[0], v[1]).normalized();
            L.ray = true;
            set.lines.push_back(L);
          }
        }
      }
      prev_t = t;
      prev = cur;
    }
    return set;
  }
  for (const auto& fam : fams)
    for (auto& c : detail::trace_family(fam, win, 1.0, opt)) set.curves.push_back(std::move(c));
  return set;
}


struct GridSpec {
  double d1_lo = 0, d1_hi = 0, s_lo = 0, s_hi = 0;
  int n_d1 = 0, n_s = 0;

  void validate() const {
    if (n_d1 < 1 || n_s < 1) fail(ErrorKind::InvalidInput, "grid must have at least one cell per axis");
    if (!(d1_hi > d1_lo) || !(s_hi > s_lo)) fail(ErrorKind::InvalidInput, "grid bounds must be increasing");
  }
  // cell centres, row-major with s outer and d1 inner
  double d1(int i) const { return d1_lo + (d1_hi - d1_lo) * (i + 0.5) / n_d1; }
  double s(int j) const { return s_lo + (s_hi - s_lo) * (j + 0.5) / n_s; }

  static GridSpec around(double d_star, double s_star, double half_d1, double half_s, int n) {
    return {d_star - half_d1, d_star + half_d1, s_star - half_s, s_star + half_s, n, n};
  }
};

struct Census {
  std::vector<std::pair<std::string, Stability>> entries;  // sorted by label
  bool failed = false;

  int count(Stability s) const {
    return int(std::count_if(entries.begin(), entries.end(), [&](auto& e) { return e.second == s; }));
  }
  std::string fingerprint() const {
    if (failed) return "Unknown";
    std::string out;
    for (const auto& [l, s] : entries) {
      if (!out.empty()) out += '|';
      out += l + ':' + std::string(to_string(s)).substr(0, 2);
    }
    return out;
  }
};

inline Census census_of(const std::vector<NFEquilibrium>& eqs) {
  Census c;
  for (const auto& e : eqs) c.entries.emplace_back(e.label.str(), e.stability);
  std::sort(c.entries.begin(), c.entries.end(), [](auto& a, auto& b) {
    return a.first != b.first ? a.first < b.first : int(a.second) < int(b.second);
  });
  return c;
}

enum class RegionAtlas { None, Set1, Set2 };

namespace detail {

inline std::optional<Stability> find_stab(const Census& c, const std::string& label) {
  for (auto& [l, s] : c.entries)
    if (l == label) return s;
  return std::nullopt;
}

inline std::string atlas_label(const Census& c, RegionAtlas atlas) {
  if (c.failed) return "";
  using S = Stability;
  const auto a0 = find_stab(c, "A0");
  if (atlas == RegionAtlas::Set1) {
    auto a1p = find_stab(c, "A1+"), a1m = find_stab(c, "A1-"), a2p = find_stab(c, "A2+"), a2m = find_stab(c, "A2-");
    int n3 = 0, n3x = 0;
    for (auto& [l, s] : c.entries)
      if (l.rfind("A3", 0) == 0) {
        ++n3;
        n3x += s == S::Saddle;
      }
    const bool has1 = a1p && a1m, has2 = a2p && a2m;
    const bool no1 = !a1p && !a1m, no2 = !a2p && !a2m;
    auto both = [](auto x, auto y, S s) { return x && y && *x == s && *y == s; };
    if (a0 == S::Stable && no1 && no2 && n3 == 0) return "D1";
    if (a0 == S::Saddle && no1 && both(a2p, a2m, S::Stable) && n3 == 0) return "D2";
    if (a0 == S::Unstable && both(a1p, a1m, S::Saddle) && both(a2p, a2m, S::Stable) && n3 == 0) return "D3";
    if (a0 == S::Unstable && both(a1p, a1m, S::Stable) && both(a2p, a2m, S::Stable) && n3 == 4 && n3x == 4)
      return "D4";
    if (a0 == S::Unstable && both(a1p, a1m, S::Stable) && both(a2p, a2m, S::Saddle) && n3 == 0) return "D5";
    if (a0 == S::Saddle && both(a1p, a1m, S::Stable) && no2 && n3 == 0) return "D6";
    (void)has1;
    (void)has2;
    return "";
  }
  if (atlas == RegionAtlas::Set2) {
    auto a2p = find_stab(c, "A2+"), a2m = find_stab(c, "A2-");
    int m_stable = 0, m_other = 0;
    for (auto& [l, s] : c.entries)
      if (l[0] == 'M') (s == S::Stable ? m_stable : m_other)++;
    const bool no2 = !a2p && !a2m;
    const bool a0s = a0 == S::Stable;
    const int n2s = (a2p == S::Stable) + (a2m == S::Stable);
    const bool has2 = a2p && a2m;
    if (m_stable != 2) return "";
    if (a0s && no2 && m_other == 2) return "D1";
    if (a0s) return "";
    if (has2 && n2s == 2 && m_other == 2) return "D2";
    if (has2 && n2s == 1 && m_other == 0) return "D3";
    if (has2 && n2s == 1 && m_other == 2) return "D4";
    if (has2 && n2s == 0 && m_other == 0) return "D5";
    if (no2 && m_other == 0) return "D6";
    return "";
  }
  return "";
}

}  // namespace detail

struct RegionCell {
  double d1 = 0, s = 0, eps1 = 0, eps2 = 0;
  std::string fingerprint;
  std::string region_label;
  int n_stable = 0, n_saddle = 0, n_unstable = 0;
};

struct RegionMap {
  GridSpec grid;
  std::vector<RegionCell> cells;  // row-major, s outer
  std::vector<std::string> fingerprints;  // in order of first appearance

  const RegionCell& at(int i, int j) const { return cells[size_t(j) * grid.n_d1 + i]; }
};

inline Census census_at(const NFPolynomial& P, const Vec2& eps) {
  try {
    return census_of(nf_equilibria(TruncatedNF(P, eps)));
  } catch (const Error&) {
    Census c;
    c.failed = true;
    return c;
  }
}

inline RegionMap region_classify(const NFPolynomial& P, double d_star, double s_star, const GridSpec& grid,
                                 RegionAtlas atlas = RegionAtlas::None, int jobs = 1) {
  grid.validate();
  RegionMap map;
  map.grid = grid;
  const size_t n = size_t(grid.n_d1) * grid.n_s;
  map.cells.resize(n);
  std::vector<Census> census(n);
  auto work = [&](size_t begin, size_t step) {
    for (size_t idx = begin; idx < n; idx += step) {
      int i = int(idx % grid.n_d1), j = int(idx / grid.n_d1);
      RegionCell& c = map.cells[idx];
      c.d1 = grid.d1(i);
      c.s = grid.s(j);
      c.eps1 = c.d1 - d_star;
      c.eps2 = c.s - s_star;
      census[idx] = census_at(P, Vec2(c.eps1, c.eps2));
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(work, size_t(t), size_t(jobs));
    for (auto& t : pool) t.join();
  }
  std::map<std::string, int> ids;
  for (size_t idx = 0; idx < n; ++idx) {
    RegionCell& c = map.cells[idx];
    c.fingerprint = census[idx].fingerprint();
    if (!ids.count(c.fingerprint)) {
      int id = int(ids.size()) + 1;
      ids[c.fingerprint] = id;
      map.fingerprints.push_back(c.fingerprint);
    }
    c.n_stable = census[idx].count(Stability::Stable);
    c.n_saddle = census[idx].count(Stability::Saddle);
    c.n_unstable = census[idx].count(Stability::Unstable);
    std::string lab = census[idx].failed ? "Unknown" : detail::atlas_label(census[idx], atlas);
    c.region_label = lab.empty() ? "F" + std::to_string(ids[c.fingerprint]) : lab;
  }
  return map;
}

struct TrajectorySample {
  double t;
  Vec2 z;
};

inline std::vector<TrajectorySample> nf_trajectory(const TruncatedNF& nf, const Vec2& z0, double T, double dt,
                                                   int samples = 1000) {
  if (!(T > 0) || !(dt > 0) || !z0.allFinite()) fail(ErrorKind::InvalidInput, "trajectory needs T, dt > 0");
  auto run = [&](double h, std::vector<TrajectorySample>* out) {
    const long steps = long(std::ceil(T / h));
    h = T / steps;
    const long stride = std::max(1L, steps / std::max(1, samples));
    Vec2 z = z0;
    if (out) out->push_back({0.0, z});
    for (long k = 1; k <= steps; ++k) {
      Vec2 k1 = nf.rhs(z), k2 = nf.rhs(z + 0.5 * h * k1), k3 = nf.rhs(z + 0.5 * h * k2), k4 = nf.rhs(z + h * k3);
      z += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      if (!z.allFinite()) fail(ErrorKind::BlowUp, "trajectory left the finite range");
      if (out && (k % stride == 0 || k == steps)) out->push_back({k * h, z});
    }
    return z;
  };
  double h = dt;
  while (true) {
    if (h < 1e-12 * T) fail(ErrorKind::StepSizeUnderflow, "step halving did not reach the drift tolerance");
    Vec2 a = run(h, nullptr), b = run(h / 2, nullptr);
    if ((a - b).norm() <= 1e-8 * std::max(b.norm(), 1e-12)) break;
    h /= 2;
  }
  std::vector<TrajectorySample> out;
  run(h, &out);
  return out;
}

}  // namespace pattern_duet
