#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace pattern_duet {

struct ContinuationOptions {
  double step = 1e-4;
  double tol = 1e-10;
  double min_step = 1e-9;
  int max_steps = 200000;
  int max_newton = 20;
};

namespace detail {

template <class F>
Eigen::MatrixXd fd_jacobian_n(const F& f, const Eigen::VectorXd& x, int rows) {
  Eigen::MatrixXd J(rows, x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-7 * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

inline Eigen::VectorXd tangent_of(const Eigen::MatrixXd& J) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
  Eigen::MatrixXd K = lu.kernel();
  Eigen::VectorXd t = K.col(0);
  return t / t.norm();
}

}  // namespace detail

// Pseudo-arclength continuation of the zero set of H: R^n -> R^(n-1),
// starting at x0 and moving along +direction until inside(x) fails.
template <class H, class Inside>
std::vector<Eigen::VectorXd> continue_curve(const H& residual, Eigen::VectorXd x0, const Eigen::VectorXd& direction,
                                            const Inside& inside, const ContinuationOptions& opt = {}) {
  const int n = int(x0.size());
  std::vector<Eigen::VectorXd> pts;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd t = detail::tangent_of(detail::fd_jacobian_n(residual, x, n - 1));
  if (t.dot(direction) < 0) t = -t;
  pts.push_back(x);
  double h = opt.step;
  for (int step = 0; step < opt.max_steps; ++step) {
    bool ok = false;
    Eigen::VectorXd y;
    while (!ok) {
      y = x + h * t;
      for (int it = 0; it < opt.max_newton; ++it) {
        Eigen::VectorXd F(n);
        F.head(n - 1) = residual(y);
        F[n - 1] = t.dot(y - x) - h;
        if (F.lpNorm<Eigen::Infinity>() < opt.tol) {
          ok = true;
          break;
        }
        Eigen::MatrixXd J(n, n);
        J.topRows(n - 1) = detail::fd_jacobian_n(residual, y, n - 1);
        J.row(n - 1) = t.transpose();
        y -= J.fullPivLu().solve(F);
        if (!y.allFinite()) break;
      }
      if (!ok) {
        h /= 2;
        if (h < opt.min_step) fail(ErrorKind::ContinuationStalled, "continuation stalled");
      }
    }
    Eigen::VectorXd tn = detail::tangent_of(detail::fd_jacobian_n(residual, y, n - 1));
    if (tn.dot(t) < 0) tn = -tn;
    x = y;
    t = tn;
    h = std::min(opt.step, 2 * h);
    if (!inside(x)) break;
    pts.push_back(x);
  }
  return pts;
}

}  // namespace pattern_duet
