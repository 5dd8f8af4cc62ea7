#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <sstream>
#include <utility>
#include <vector>

#include "kinetics.hpp"

namespace pattern_duet {

inline double mode_mu(int k, double l) { return double(k) * k / (l * l); }

struct DispersionPoint {
  int k = 0;
  double theta = 0, delta = 0;
};

inline DispersionPoint dispersion_at(int k, double d1, double s, double d2, double l, double s0,
                                     double sigma) {
  const double mu = mode_mu(k, l);
  return {k, s0 - s - (d1 + d2) * mu, d1 * d2 * mu * mu + (s * d1 - s0 * d2) * mu - s * (s0 + sigma)};
}

inline DispersionPoint dispersion(const ModelParams& p, const Linearization& lin, int k) {
  return dispersion_at(k, p.d1, p.s, p.d2, p.l, lin.s0, lin.sigma);
}

class TuringCurve {
 public:
  TuringCurve(const ModelParams& p, const Linearization& lin, int k)
      : k_(k), s0_(lin.s0), sigma_(lin.sigma), d2_(p.d2), mu_(mode_mu(k, p.l)) {
    if (k < 1) fail(ErrorKind::DomainError, "Turing curve needs k >= 1");
  }

  int k() const { return k_; }
  double d1_max() const { return s0_ / mu_; }
  bool in_window(double d1) const { return d1 > 0 && d1 < d1_max(); }

  double operator()(double d1) const {
    if (!in_window(d1)) fail(ErrorKind::DomainError, "d1 outside the Turing curve window (0, s0 k^-2)");
    return (s0_ * d2_ * mu_ - d1 * d2_ * mu_ * mu_) / (d1 * mu_ - (s0_ + sigma_));
  }

  // n interior samples of the open window
  std::vector<std::pair<double, double>> sample(int n) const {
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    for (int i = 1; i <= n; ++i) {
      double d1 = d1_max() * i / (n + 1);
      out.emplace_back(d1, (*this)(d1));
    }
    return out;
  }

 private:
  int k_;
  double s0_, sigma_, d2_, mu_;
};

inline TuringCurve turing_curve(const ModelParams& p, const Linearization& lin, int k) {
  return TuringCurve(p, lin, k);
}

struct TTPoint {
  int k1 = 0, k2 = 0;
  double d_star = 0, s_star = 0;
};

inline TTPoint tt_point(const ModelParams& p, const Linearization& lin, int i, int j) {
  if (i < 1 || j < 1 || i == j) fail(ErrorKind::InvalidModePair, "tt_point needs distinct positive modes");
  if (!(lin.s0 > 0) || !(lin.s0 + lin.sigma < 0))
    fail(ErrorKind::HypothesisViolated, "Turing conditions require s0 > 0 and s0+sigma < 0; got s0 = " +
                                            std::to_string(lin.s0) + ", s0+sigma = " + std::to_string(lin.s0 + lin.sigma));
  if (i > j) std::swap(i, j);
  const double mi = mode_mu(i, p.l), mj = mode_mu(j, p.l);
  const double S = lin.s0 + lin.sigma;
  const double disc = (mi + mj) * (mi + mj) * S * S - 4 * mi * mj * S * lin.s0;
  const double d = ((mi + mj) * S + std::sqrt(disc)) / (2 * mi * mj);
  const double s = (lin.s0 * p.d2 * mi - d * p.d2 * mi * mi) / (d * mi - S);
  if (!(d > 0) || !(s > 0)) {
    std::ostringstream os;
    os << "non-positive critical value (d*=" << d << ", s*=" << s << ")";
    fail(ErrorKind::NegativeCritical, os.str());
  }
  return {i, j, d, s};
}

inline double critical_diffusion(const ModelParams& p, const Linearization& lin, int k) {
  const double mu = mode_mu(k, p.l);
  return lin.s0 / mu * (1 + lin.sigma / (p.d2 * mu + lin.s0));
}

inline int critical_mode_index(const ModelParams& p, const Linearization& lin, int K_cut = 50) {
  if (!(lin.s0 > 0) || !(lin.s0 + lin.sigma < 0))
    fail(ErrorKind::HypothesisViolated, "requires s0 > 0 and s0+sigma < 0");
  int best = 1;
  double best_val = critical_diffusion(p, lin, 1);
  for (int k = 2; k <= K_cut; ++k) {
    double v = critical_diffusion(p, lin, k);
    if (v >= best_val) {
      best_val = v;
      best = k;
    }
  }
  return best;
}

struct CriticalData {
  int k1 = 0, k2 = 0;
  double l = 1;
  double mu1 = 0, mu2 = 0;
  Vec2 phi1, phi2;
  Vec2 psi1, psi2;  // row vectors
  Mat2 D0, L0;

  Mat2 char_matrix(int k) const { return mode_mu(k, l) * D0 - L0; }
  const Vec2& phi(int j) const { return j == 1 ? phi1 : phi2; }
  const Vec2& psi(int j) const { return j == 1 ? psi1 : psi2; }
  int mode(int j) const { return j == 1 ? k1 : k2; }
};

inline std::pair<Mat2, Mat2> critical_matrices(const ModelParams& p, const Linearization& lin,
                                               const TTPoint& tt) {
  Mat2 D0 = Mat2::Zero(), L0;
  D0(0, 0) = tt.d_star;
  D0(1, 1) = p.d2;
  L0 << lin.s0, lin.sigma, tt.s_star, -tt.s_star;
  return {D0, L0};
}

inline CriticalData critical_eigenvectors(const ModelParams& p, const Linearization& lin, const TTPoint& tt) {
  CriticalData c;
  c.k1 = tt.k1;
  c.k2 = tt.k2;
  c.l = p.l;
  c.mu1 = mode_mu(tt.k1, p.l);
  c.mu2 = mode_mu(tt.k2, p.l);
  std::tie(c.D0, c.L0) = critical_matrices(p, lin, tt);
  const double d = tt.d_star, s = tt.s_star;
  auto build = [&](double mu, Vec2& phi, Vec2& psi) {
    phi = Vec2(1.0, s / (p.d2 * mu + s));
    const double N = 1 + (d * mu - lin.s0) / (p.d2 * mu + s);
    if (!(std::abs(N) > 1e-12)) fail(ErrorKind::SingularNormalizer, "critical eigenvector normalizer vanishes");
    psi = Vec2(1.0, (d * mu - lin.s0) / s) / N;
  };
  build(c.mu1, c.phi1, c.psi1);
  build(c.mu2, c.phi2, c.psi2);
  return c;
}

// Null vectors of an arbitrary singular 2x2 matrix; phi(0) = 1 and psi.phi = 1.
inline std::pair<Vec2, Vec2> null_vectors(const Mat2& M) {
  int r = M.row(0).norm() >= M.row(1).norm() ? 0 : 1;
  int c = M.col(0).norm() >= M.col(1).norm() ? 0 : 1;
  Vec2 phi(-M(r, 1), M(r, 0));
  Vec2 psi(-M(1, c), M(0, c));
  if (!(std::abs(phi[0]) > 1e-14 * phi.norm()))
    fail(ErrorKind::SingularNormalizer, "right null vector has vanishing first component");
  phi /= phi[0];
  const double n = psi.dot(phi);
  if (!(std::abs(n) > 1e-14 * psi.norm())) fail(ErrorKind::SingularNormalizer, "psi.phi vanishes");
  return {phi, psi / n};
}

inline CriticalData critical_data_from_matrices(int k1, int k2, double l, const Mat2& D0, const Mat2& L0) {
  CriticalData c;
  c.k1 = k1;
  c.k2 = k2;
  c.l = l;
  c.mu1 = mode_mu(k1, l);
  c.mu2 = mode_mu(k2, l);
  c.D0 = D0;
  c.L0 = L0;
  std::tie(c.phi1, c.psi1) = null_vectors(c.char_matrix(k1));
  std::tie(c.phi2, c.psi2) = null_vectors(c.char_matrix(k2));
  return c;
}

struct ModeSpectrum {
  int k = 0;
  std::complex<double> lambda1, lambda2;
  double max_re() const { return std::max(lambda1.real(), lambda2.real()); }
};

struct SpectrumReport {
  std::vector<ModeSpectrum> modes;
  std::vector<int> zero_modes;
  std::vector<int> offending;
  double margin = 0;
  bool ok = false;

  void raise_if_failed() const {
    if (ok) return;
    std::ostringstream os;
    os << "side conditions fail at modes:";
    for (int k : offending) os << ' ' << k;
    fail(ErrorKind::SideConditionFailed, os.str());
  }
};

inline std::pair<std::complex<double>, std::complex<double>> eig2(const Mat2& A) {
  const double tr = A.trace(), det = A.determinant();
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4 - det));
  std::complex<double> l1 = tr / 2 + disc, l2 = tr / 2 - disc;
  // recompute the small root from the product when the roots are real
  if (disc.imag() == 0 && std::abs(l1) > 0 && std::abs(l2) < std::abs(l1)) l2 = det / l1;
  if (disc.imag() == 0 && std::abs(l2) > 0 && std::abs(l1) < std::abs(l2)) l1 = det / l2;
  return {l1, l2};
}

inline SpectrumReport spectrum_check(const ModelParams& p, const Linearization& lin, const TTPoint& tt,
                                     int K_cut = 50, double required_margin = 1e-10,
                                     double zero_tol = 1e-9) {
  auto [D0, L0] = critical_matrices(p, lin, tt);
  SpectrumReport rep;
  rep.margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= K_cut; ++k) {
    Mat2 A = L0 - mode_mu(k, p.l) * D0;
    auto [a, b] = eig2(A);
    ModeSpectrum ms{k, a, b};
    rep.modes.push_back(ms);
    const bool critical = k == tt.k1 || k == tt.k2;
    const bool has_zero = std::min(std::abs(a), std::abs(b)) < zero_tol;
    if (has_zero) rep.zero_modes.push_back(k);
    double rest;
    if (has_zero) {
      rest = std::abs(a) < std::abs(b) ? b.real() : a.real();
    } else {
      rest = ms.max_re();
    }
    if (critical != has_zero) {
      rep.offending.push_back(k);
      continue;
    }
    if (!(rest < -required_margin)) {
      rep.offending.push_back(k);
      continue;
    }
    rep.margin = std::min(rep.margin, -rest);
  }
  rep.ok = rep.offending.empty();
  return rep;
}

}  // namespace pattern_duet
