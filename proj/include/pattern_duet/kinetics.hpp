#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "errors.hpp"

namespace pattern_duet {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct ModelParams {
  double m = 0, a = 0, b = 0, s = 0, d1 = 0, d2 = 0;
  double l = 1.0;

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) fail(ErrorKind::InvalidInput, std::string("parameter constraint violated: ") + what);
    };
    need(std::isfinite(m) && m >= 0, "m >= 0");
    need(std::isfinite(a) && a >= 0, "a >= 0");
    need(std::isfinite(b) && b >= 0, "b >= 0");
    need(std::isfinite(s) && s > 0, "s > 0");
    need(std::isfinite(d1) && d1 > 0, "d1 > 0");
    need(std::isfinite(d2) && d2 > 0, "d2 > 0");
    need(std::isfinite(l) && l > 0, "l > 0");
  }
  bool existence_condition() const { return a + b >= a * b; }
};

struct Equilibrium {
  double u_star = 0, v_star = 0;
  Vec2 vec() const { return {u_star, v_star}; }
};

inline Vec2 crowley_martin_field(const ModelParams& p, const Vec2& w) {
  const double u = w[0], v = w[1];
  const double pred = p.m * u * v / ((1 + p.a * u) * (1 + p.b * v));
  return {u * (1 - u) - pred, p.s * v * (1 - v / u)};
}

namespace detail {

inline double equilibrium_residual(const ModelParams& p, double u) {
  return 1 - u - p.m * u / ((1 + p.a * u) * (1 + p.b * u));
}

inline double equilibrium_residual_du(const ModelParams& p, double u) {
  const double A = 1 + p.a * u, B = 1 + p.b * u;
  return -1 - p.m * (1 - p.a * p.b * u * u) / (A * A * B * B);
}

}  // namespace detail

inline Equilibrium find_interior_equilibrium(const ModelParams& p) {
  p.validate();
  if (p.m == 0) return {1.0, 1.0};

  double lo = 1e-12, hi = 1.0;
  auto g = [&](double u) { return detail::equilibrium_residual(p, u); };

  if (!p.existence_condition()) {
    int changes = 0;
    double prev = g(lo);
    const int n = 4000;
    for (int i = 1; i <= n; ++i) {
      double u = lo + (hi - lo) * i / n;
      double cur = g(u);
      if ((prev > 0) != (cur > 0)) ++changes;
      prev = cur;
    }
    if (changes != 1)
      fail(ErrorKind::ExistenceConditionViolated,
           "a + b < ab and the interior equilibrium is not unique");
    spdlog::warn("a + b < ab; continuing with the single interior root found");
  }

  double glo = g(lo), ghi = g(hi);
  if ((glo > 0) == (ghi > 0))
    fail(ErrorKind::NoInteriorEquilibrium, "no sign change of the equilibrium function on (0, 1)");

  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 5; ++it) {
    double du = g(u) / detail::equilibrium_residual_du(p, u);
    if (!std::isfinite(du)) break;
    u -= du;
  }
  Equilibrium eq{u, u};
  Vec2 r = crowley_martin_field(p, eq.vec());
  if (!(r.cwiseAbs().maxCoeff() < 1e-12))
    fail(ErrorKind::NoInteriorEquilibrium, "equilibrium residual above tolerance");
  return eq;
}

struct Linearization {
  double s0 = 0, sigma = 0;
  Mat2 L0 = Mat2::Zero();
  Equilibrium eq;
};

inline Linearization linearize(const ModelParams& p, const Equilibrium& eq) {
  const double u = eq.u_star, v = eq.v_star;
  if (!(u > 0 && v > 0)) fail(ErrorKind::InvalidInput, "equilibrium is not interior");
  const double A = 1 + p.a * u, B = 1 + p.b * v;
  Linearization lin;
  lin.s0 = u * (p.a * p.m * v / (A * A * B) - 1);
  lin.sigma = -p.m * u / (A * B * B);
  lin.L0 << lin.s0, lin.sigma, p.s, -p.s;
  lin.eq = eq;
  return lin;
}

// Symmetric second and third derivative tensors of a planar field.
struct DerivativeTensors {
  std::array<Mat2, 2> H{Mat2::Zero(), Mat2::Zero()};
  // T[c][i](j, k) = d^3 f_c / dw_i dw_j dw_k
  std::array<std::array<Mat2, 2>, 2> T{};
};

inline DerivativeTensors crowley_martin_derivatives(const ModelParams& p, const Vec2& w) {
  const double u = w[0], v = w[1], m = p.m, a = p.a, b = p.b, s = p.s;
  const double A = 1 + a * u, B = 1 + b * v;
  DerivativeTensors d;
  const double f1uu = 2 * (-a * a * m * u * v + a * m * v * A - A * A * A * B) / (A * A * A * B);
  const double f1uv = -m / (A * A * B * B);
  const double f1vv = 2 * b * m * u / (A * B * B * B);
  const double f2uu = -2 * s * v * v / (u * u * u);
  const double f2uv = 2 * s * v / (u * u);
  const double f2vv = -2 * s / u;
  d.H[0] << f1uu, f1uv, f1uv, f1vv;
  d.H[1] << f2uu, f2uv, f2uv, f2vv;

  const double t1[4] = {-6 * a * a * m * v / (A * A * A * A * B), 2 * a * m / (A * A * A * B * B),
                        2 * b * m / (A * A * B * B * B), -6 * b * b * m * u / (A * B * B * B * B)};
  const double t2[4] = {6 * s * v * v / (u * u * u * u), -4 * s * v / (u * u * u), 2 * s / (u * u), 0.0};
  for (int c = 0; c < 2; ++c) {
    const double* t = c == 0 ? t1 : t2;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) d.T[c][i](j, k) = t[i + j + k];
  }
  return d;
}

namespace detail {

inline bool vec_less(const Vec2& x, const Vec2& y) {
  return x[0] < y[0] || (x[0] == y[0] && x[1] < y[1]);
}

}  // namespace detail

class KineticsModel {
 public:
  using Field = std::function<Vec2(const Vec2&)>;
  using JacobianFn = std::function<Mat2(const Vec2&)>;

  KineticsModel(Field field, JacobianFn jac, Vec2 equilibrium, DerivativeTensors tensors,
                std::array<Mat2, 2> L_eps, std::array<Mat2, 2> D_eps)
      : field_(std::move(field)),
        jac_(std::move(jac)),
        eq_(std::move(equilibrium)),
        d_(std::move(tensors)),
        L_eps_(std::move(L_eps)),
        D_eps_(std::move(D_eps)) {}

  Vec2 reaction(const Vec2& w) const { return field_(w); }
  Mat2 jacobian(const Vec2& w) const { return jac_(w); }
  const Vec2& equilibrium() const { return eq_; }
  const DerivativeTensors& tensors() const { return d_; }
  const Mat2& L_eps(int i) const { return L_eps_.at(i); }
  const Mat2& D_eps(int i) const { return D_eps_.at(i); }

  // Arguments are put in a canonical order first so that the result is
  // bitwise independent of argument order.
  Vec2 Q(Vec2 x, Vec2 y) const {
    if (detail::vec_less(y, x)) std::swap(x, y);
    Vec2 r;
    for (int c = 0; c < 2; ++c) {
      const Mat2& H = d_.H[c];
      r[c] = H(0, 0) * x[0] * y[0] + H(0, 1) * (x[0] * y[1] + x[1] * y[0]) + H(1, 1) * x[1] * y[1];
    }
    return r;
  }

  Vec2 C(const Vec2& x, const Vec2& y, const Vec2& z) const {
    std::array<Vec2, 3> v{x, y, z};
    std::sort(v.begin(), v.end(), detail::vec_less);
    Vec2 r = Vec2::Zero();
    for (int c = 0; c < 2; ++c) {
      double acc = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) acc += d_.T[c][i](j, k) * v[0][i] * v[1][j] * v[2][k];
      r[c] = acc;
    }
    return r;
  }

 private:
  Field field_;
  JacobianFn jac_;
  Vec2 eq_;
  DerivativeTensors d_;
  std::array<Mat2, 2> L_eps_;
  std::array<Mat2, 2> D_eps_;
};

inline Mat2 crowley_martin_jacobian(const ModelParams& p, const Vec2& w) {
  const double u = w[0], v = w[1];
  const double A = 1 + p.a * u, B = 1 + p.b * v;
  Mat2 J;
  J << 1 - 2 * u - p.m * v / (A * A * B), -p.m * u / (A * B * B),
      p.s * v * v / (u * u), p.s * (1 - 2 * v / u);
  return J;
}

// Bifurcation parameters are (d1, s) = (d* + eps1, s* + eps2).
inline std::pair<std::array<Mat2, 2>, std::array<Mat2, 2>> parameter_derivatives(const ModelParams&) {
  Mat2 Ls, Dd;
  Ls << 0, 0, 1, -1;
  Dd << 1, 0, 0, 0;
  return {{Mat2::Zero(), Ls}, {Dd, Mat2::Zero()}};
}

inline KineticsModel crowley_martin_model(const ModelParams& p, const Equilibrium& eq) {
  auto [L_eps, D_eps] = parameter_derivatives(p);
  return KineticsModel([p](const Vec2& w) { return crowley_martin_field(p, w); },
                       [p](const Vec2& w) { return crowley_martin_jacobian(p, w); }, eq.vec(),
                       crowley_martin_derivatives(p, eq.vec()), L_eps, D_eps);
}

namespace detail {

template <class F>
Mat2 fd_jacobian(const F& f, const Vec2& w, double h) {
  auto once = [&](double hh) {
    Mat2 J;
    for (int j = 0; j < 2; ++j) {
      Vec2 e = Vec2::Unit(j) * hh;
      J.col(j) = (f(w + e) - f(w - e)) / (2 * hh);
    }
    return J;
  };
  return (4 * once(h / 2) - once(h)) / 3;
}

template <class F>
DerivativeTensors fd_tensors(const F& f, const Vec2& w, double h, double h3) {
  auto hess = [&](const Vec2& at, double hh) {
    std::array<Mat2, 2> H;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Vec2 ei = Vec2::Unit(i) * hh, ej = Vec2::Unit(j) * hh;
        Vec2 val = (f(at + ei + ej) - f(at + ei - ej) - f(at - ei + ej) + f(at - ei - ej)) / (4 * hh * hh);
        H[0](i, j) = val[0];
        H[1](i, j) = val[1];
      }
    return H;
  };
  auto rich_hess = [&](const Vec2& at) {
    auto H1 = hess(at, h), H2 = hess(at, h / 2);
    return std::array<Mat2, 2>{(4 * H2[0] - H1[0]) / 3, (4 * H2[1] - H1[1]) / 3};
  };
  DerivativeTensors d;
  d.H = rich_hess(w);
  auto third = [&](double hh) {
    std::array<std::array<Mat2, 2>, 2> T;
    for (int i = 0; i < 2; ++i) {
      Vec2 e = Vec2::Unit(i) * hh;
      auto Hp = hess(w + e, hh), Hm = hess(w - e, hh);
      for (int c = 0; c < 2; ++c) T[c][i] = (Hp[c] - Hm[c]) / (2 * hh);
    }
    return T;
  };
  auto T1 = third(h3), T2 = third(h3 / 2);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 2; ++i) d.T[c][i] = (4 * T2[c][i] - T1[c][i]) / 3;
  // symmetrize over all index permutations
  for (int c = 0; c < 2; ++c) {
    Mat2 Hs = 0.5 * (d.H[c] + d.H[c].transpose());
    d.H[c] = Hs;
    double t[4] = {0, 0, 0, 0};
    int n[4] = {0, 0, 0, 0};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          t[i + j + k] += d.T[c][i](j, k);
          ++n[i + j + k];
        }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) d.T[c][i](j, k) = t[i + j + k] / n[i + j + k];
  }
  return d;
}

}  // namespace detail

// Generic kinetics: only the reaction field is supplied; Jacobian, Q and C
// come from Richardson-extrapolated central differences. Third derivatives
// use the wider step h3.
template <class F>
KineticsModel make_generic_model(F field, const Vec2& equilibrium, std::array<Mat2, 2> L_eps,
                                 std::array<Mat2, 2> D_eps, double h = 1e-4, double h3 = 2e-3) {
  DerivativeTensors d = detail::fd_tensors(field, equilibrium, h, h3);
  KineticsModel::Field fn = field;
  return KineticsModel(
      fn, [field, h](const Vec2& w) { return detail::fd_jacobian(field, w, h); }, equilibrium, d,
      L_eps, D_eps);
}

}  // namespace pattern_duet
