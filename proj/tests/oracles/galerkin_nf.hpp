#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "pattern_duet/kinetics.hpp"
#include "pattern_duet/linear_analysis.hpp"

namespace oracle {

using pattern_duet::CriticalData;
using pattern_duet::KineticsModel;
using pattern_duet::Mat2;
using pattern_duet::Vec2;

// Centre-manifold reduction carried out directly on a quadrature grid:
// the PDE is projected on cos modes, the quadratic graph is solved mode by
// mode and the cubic coefficients are read off as monomial coefficients of
// psi_j <f(E + u0 + h), beta_kj>. Returns coefficients of the reduced
// polynomial field, keyed like "1:30" (equation 1, z1^3 z2^0).
class GalerkinNormalForm {
 public:
  GalerkinNormalForm(const CriticalData& c, const KineticsModel& model, int quad_points = 4096)
      : c_(c), model_(model), M_(quad_points) {
    const double L = std::numbers::pi * c.l;
    x_.resize(M_);
    for (int m = 0; m < M_; ++m) x_[m] = (m + 0.5) * L / M_;
  }

  double beta(int k, double x) const { return k == 0 ? 1.0 : std::sqrt(2.0) * std::cos(k * x / c_.l); }

  double inner(const std::vector<int>& modes) const {
    double acc = 0;
    for (double x : x_) {
      double p = 1;
      for (int k : modes) p *= beta(k, x);
      acc += p;
    }
    return acc / M_;
  }

  std::map<std::string, double> compute() const {
    const int km[3] = {0, c_.k1, c_.k2};
    const Vec2 ph[3] = {Vec2::Zero(), c_.phi1, c_.phi2};
    const Vec2 ps[3] = {Vec2::Zero(), c_.psi1, c_.psi2};
    const int nmax = 2 * c_.k2 + 2;

    // h[n][q] for q = (z1^2, z1 z2, z2^2)
    std::vector<std::array<Vec2, 3>> h(nmax + 1);
    const int qa[3][2] = {{1, 1}, {1, 2}, {2, 2}};
    const double qmult[3] = {1, 2, 1};
    for (int n = 0; n <= nmax; ++n) {
      for (int q = 0; q < 3; ++q) {
        int a = qa[q][0], b = qa[q][1];
        Vec2 rhs = 0.5 * qmult[q] * model_.Q(ph[a], ph[b]) * inner({km[a], km[b], n});
        int j = n == c_.k1 ? 1 : (n == c_.k2 ? 2 : 0);
        Mat2 D = c_.char_matrix(n);
        if (j == 0) {
          h[n][q] = D.fullPivLu().solve(rhs);
        } else {
          rhs -= ph[j] * ps[j].dot(rhs);
          Eigen::CompleteOrthogonalDecomposition<Mat2> cod(D);
          Vec2 x = cod.pseudoInverse() * rhs;
          x -= ph[j] * (ps[j].dot(x) / ps[j].dot(ph[j]));
          h[n][q] = x;
        }
      }
    }

    std::map<std::string, double> out;
    for (int j = 1; j <= 2; ++j) {
      std::map<std::pair<int, int>, double> cub;
      for (int a = 1; a <= 2; ++a)
        for (int b = 1; b <= 2; ++b)
          for (int e = 1; e <= 2; ++e) {
            double w = inner({km[a], km[b], km[e], km[j]});
            int p1 = (a == 1) + (b == 1) + (e == 1);
            cub[{p1, 3 - p1}] += ps[j].dot(model_.C(ph[a], ph[b], ph[e])) * w / 6;
          }
      for (int a = 1; a <= 2; ++a)
        for (int n = 0; n <= nmax; ++n)
          for (int q = 0; q < 3; ++q) {
            double w = inner({km[a], n, km[j]});
            if (w == 0) continue;
            int p1 = (a == 1) + (qa[q][0] == 1) + (qa[q][1] == 1);
            cub[{p1, 3 - p1}] += ps[j].dot(model_.Q(ph[a], h[n][q])) * w;
          }
      for (auto& [pw, v] : cub) out[std::to_string(j) + ":" + std::to_string(pw.first) + std::to_string(pw.second)] = v;

      for (int a = 1; a <= 2; ++a)
        for (int b = a; b <= 2; ++b) {
          double w = inner({km[a], km[b], km[j]});
          double mult = a == b ? 0.5 : 1.0;
          int p1 = (a == 1) + (b == 1);
          out[std::to_string(j) + ":" + std::to_string(p1) + std::to_string(2 - p1)] +=
              mult * ps[j].dot(model_.Q(ph[a], ph[b])) * w;
        }
    }
    return out;
  }

 private:
  const CriticalData& c_;
  const KineticsModel& model_;
  int M_;
  std::vector<double> x_;
};

}  // namespace oracle
