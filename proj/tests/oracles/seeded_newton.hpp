#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pattern_duet/nf_dynamics.hpp"

namespace oracle {

// Newton from every node of an n x n vertex grid on [-R, R]^2 with a
// finite-difference Jacobian; converged points are deduplicated.
inline std::vector<Eigen::Vector2d> brute_force_equilibria(const pattern_duet::TruncatedNF& nf, int n, double R) {
  using V = Eigen::Vector2d;
  std::vector<V> found;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      V z(-R + 2 * R * i / (n - 1), -R + 2 * R * j / (n - 1));
      bool ok = false;
      for (int it = 0; it < 80; ++it) {
        V f = nf.rhs(z);
        if (f.cwiseAbs().maxCoeff() < 1e-14) {
          ok = true;
          break;
        }
        Eigen::Matrix2d J;
        for (int c = 0; c < 2; ++c) {
          V h = V::Unit(c) * 1e-7;
          J.col(c) = (nf.rhs(z + h) - nf.rhs(z - h)) / 2e-7;
        }
        V dz = J.fullPivLu().solve(f);
        if (!dz.allFinite()) break;
        z -= dz;
        if (z.norm() > 10 * R) break;
      }
      if (!ok && z.allFinite() && nf.rhs(z).cwiseAbs().maxCoeff() < 1e-12) ok = true;
      if (!ok) continue;
      bool dup = false;
      for (auto& g : found)
        if ((g - z).norm() < 1e-7) dup = true;
      if (!dup) found.push_back(z);
    }
  return found;
}

}  // namespace oracle
