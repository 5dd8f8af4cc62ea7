#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <spdlog/spdlog.h>

#include "pattern_duet/errors.hpp"
#include "pattern_duet/kinetics.hpp"

namespace pattern_duet {

// Vertex grid on [0, l*pi] including both endpoints.
struct Grid1D {
  int N = 256;
  double l = 1.0;

  void validate() const {
    if (N < 64) fail(ErrorKind::InvalidInput, "grid needs N >= 64");
    if (!(l > 0) || !std::isfinite(l)) fail(ErrorKind::InvalidInput, "grid scale l must be positive");
  }
  double length() const { return l * std::numbers::pi; }
  double dx() const { return length() / (N - 1); }
  double x(int i) const { return length() * i / (N - 1); }
  Eigen::VectorXd nodes() const {
    Eigen::VectorXd v(N);
    for (int i = 0; i < N; ++i) v[i] = x(i);
    return v;
  }
  // nested refinement: every node of *this is a node of the result
  Grid1D refined() const { return {2 * N - 1, l}; }
};

enum class Integrator { IMEX, Explicit };

struct SimConfig {
  double dt = 0.1;
  double T_max = 2e4;
  double steady_tol = 1e-9;
  Integrator integrator = Integrator::IMEX;
  int snapshot_stride = 0;
  double blowup = 1e6;
  int stencil_order = 4;

  void validate(const ModelParams& p, const Grid1D& g) const {
    if (!(dt > 0) || !std::isfinite(dt)) fail(ErrorKind::InvalidInput, "dt must be positive");
    if (!(T_max > 0)) fail(ErrorKind::InvalidInput, "T_max must be positive");
    if (!(steady_tol > 0)) fail(ErrorKind::InvalidInput, "steady_tol must be positive");
    if (snapshot_stride < 0) fail(ErrorKind::InvalidInput, "snapshot_stride must be >= 0");
    if (stencil_order != 2 && stencil_order != 4) fail(ErrorKind::InvalidInput, "stencil_order must be 2 or 4");
    if (integrator == Integrator::Explicit) {
      const double bound = 0.4 * g.dx() * g.dx() / std::max(p.d1, p.d2);
      if (dt > bound)
        fail(ErrorKind::InvalidInput, "explicit dt " + std::to_string(dt) + " exceeds diffusive bound " +
                                          std::to_string(bound));
    }
  }
};

struct FieldState {
  double t = 0;
  Eigen::VectorXd u, v;
};

struct SimResult {
  FieldState final;
  std::vector<FieldState> history;
  bool steady = false;
  double residual = 0;
  long steps = 0;
};

inline FieldState reflect(const FieldState& s) { return {s.t, s.u.reverse(), s.v.reverse()}; }

namespace detail {

// Neumann second difference (times dx^2) as a sparse matrix; ghost nodes are even reflections.
inline Eigen::SparseMatrix<double> neumann_laplacian(int N, int order) {
  std::vector<Eigen::Triplet<double>> t;
  auto fold = [N](int j) {
    if (j < 0) return -j;
    if (j > N - 1) return 2 * (N - 1) - j;
    return j;
  };
  const std::vector<std::pair<int, double>> stencil =
      order == 2 ? std::vector<std::pair<int, double>>{{-1, 1.0}, {0, -2.0}, {1, 1.0}}
                 : std::vector<std::pair<int, double>>{
                       {-2, -1.0 / 12}, {-1, 16.0 / 12}, {0, -30.0 / 12}, {1, 16.0 / 12}, {2, -1.0 / 12}};
  for (int i = 0; i < N; ++i)
    for (auto [o, w] : stencil) t.emplace_back(i, fold(i + o), w);
  Eigen::SparseMatrix<double> L(N, N);
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

// (I - r L) w = b, made exactly reflection-equivariant by averaging with the mirrored solve.
class ImplicitDiffusion {
 public:
  ImplicitDiffusion(const Eigen::SparseMatrix<double>& L, double r) {
    Eigen::SparseMatrix<double> I(L.rows(), L.cols());
    I.setIdentity();
    A_ = I - r * L;
    lu_.compute(A_);
    if (lu_.info() != Eigen::Success) fail(ErrorKind::InvalidInput, "implicit diffusion matrix is singular");
  }

  // constants are solved exactly: the end-point mean is split off first
  void solve(const Eigen::VectorXd& b, Eigen::VectorXd& out) const {
    const double c = 0.5 * (b[0] + b[b.size() - 1]);
    Eigen::VectorXd d = b.array() - c;
    Eigen::VectorXd a = lu_.solve(d);
    Eigen::VectorXd rd = d.reverse();
    Eigen::VectorXd r = lu_.solve(rd);
    out = (0.5 * (a + r.reverse())).array() + c;
  }

 private:
  Eigen::SparseMatrix<double> A_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

// Stencil applied with mirrored neighbours summed first, so reflection commutes exactly.
inline void apply_laplacian(int order, const Eigen::VectorXd& w, double inv_dx2, Eigen::VectorXd& out) {
  const int N = int(w.size());
  auto at = [&](int j) { return w[j < 0 ? -j : (j > N - 1 ? 2 * (N - 1) - j : j)]; };
  out.resize(N);
  for (int i = 0; i < N; ++i) {
    const double n1 = at(i - 1) + at(i + 1);
    if (order == 2) {
      out[i] = (n1 - 2 * w[i]) * inv_dx2;
    } else {
      const double n2 = at(i - 2) + at(i + 2);
      out[i] = ((16 * n1 - n2) - 30 * w[i]) / 12 * inv_dx2;
    }
  }
}

inline void reaction(const ModelParams& p, const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& fu,
                     Eigen::VectorXd& fv) {
  const int N = int(u.size());
  fu.resize(N);
  fv.resize(N);
  for (int i = 0; i < N; ++i) {
    Vec2 f = crowley_martin_field(p, Vec2(u[i], v[i]));
    fu[i] = f[0];
    fv[i] = f[1];
  }
}

}  // namespace detail

inline SimResult integrate(const ModelParams& p, const Grid1D& g, const SimConfig& cfg, const FieldState& initial) {
  p.validate();
  g.validate();
  cfg.validate(p, g);
  if (initial.u.size() != g.N || initial.v.size() != g.N)
    fail(ErrorKind::InvalidInput, "initial state does not match the grid");
  if (!initial.u.allFinite() || !initial.v.allFinite()) fail(ErrorKind::InvalidInput, "initial state is not finite");

  const double inv_dx2 = 1.0 / (g.dx() * g.dx());
  const double dt = cfg.dt;
  const auto L = detail::neumann_laplacian(g.N, cfg.stencil_order);
  std::optional<detail::ImplicitDiffusion> Iu, Iv;
  if (cfg.integrator == Integrator::IMEX) {
    Iu.emplace(L, dt * p.d1 * inv_dx2);
    Iv.emplace(L, dt * p.d2 * inv_dx2);
  }

  SimResult res;
  FieldState s = initial;
  res.history.push_back(s);
  Eigen::VectorXd fu, fv, lu, lv, un, vn;
  bool warned = false;
  const long max_steps = long(std::ceil(cfg.T_max / dt - 1e-9));

  auto rhs = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& du, Eigen::VectorXd& dv) {
    detail::reaction(p, u, v, du, dv);
    detail::apply_laplacian(cfg.stencil_order, u, inv_dx2, lu);
    detail::apply_laplacian(cfg.stencil_order, v, inv_dx2, lv);
    du += p.d1 * lu;
    dv += p.d2 * lv;
  };

  for (long n = 1; n <= max_steps; ++n) {
    if (cfg.integrator == Integrator::IMEX) {
      detail::reaction(p, s.u, s.v, fu, fv);
      Iu->solve(s.u + dt * fu, un);
      Iv->solve(s.v + dt * fv, vn);
    } else {
      Eigen::VectorXd k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
      rhs(s.u, s.v, k1u, k1v);
      rhs(s.u + 0.5 * dt * k1u, s.v + 0.5 * dt * k1v, k2u, k2v);
      rhs(s.u + 0.5 * dt * k2u, s.v + 0.5 * dt * k2v, k3u, k3v);
      rhs(s.u + dt * k3u, s.v + dt * k3v, k4u, k4v);
      un = s.u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      vn = s.v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    if (!un.allFinite() || !vn.allFinite() || un.cwiseAbs().maxCoeff() > cfg.blowup ||
        vn.cwiseAbs().maxCoeff() > cfg.blowup)
      fail(ErrorKind::BlowUp, "field exceeded " + std::to_string(cfg.blowup) + " at t = " + std::to_string(s.t + dt));
    if (!warned && std::min(un.minCoeff(), vn.minCoeff()) < -1e-8) {
      spdlog::warn("negative density {:.3g} at t = {:.6g}", std::min(un.minCoeff(), vn.minCoeff()), s.t + dt);
      warned = true;
    }
    res.residual = std::max((un - s.u).cwiseAbs().maxCoeff(), (vn - s.v).cwiseAbs().maxCoeff()) / dt;
    s.u.swap(un);
    s.v.swap(vn);
    s.t = n * dt;
    res.steps = n;
    if (res.residual < cfg.steady_tol) {
      res.steady = true;
      break;
    }
    if (cfg.snapshot_stride > 0 && n % cfg.snapshot_stride == 0) res.history.push_back(s);
  }
  if (res.history.back().t != s.t) res.history.push_back(s);
  res.final = s;
  return res;
}

// Coefficients a_k = (1/(l pi)) int (w - w*) beta_k dx with beta_0 = 1, beta_k = sqrt2 cos(kx/l).
inline std::vector<double> modal_coefficients(const Eigen::VectorXd& w, double w_star, const Grid1D& g, int K) {
  std::vector<double> a(K + 1, 0.0);
  const int N = g.N;
  for (int k = 0; k <= K; ++k) {
    double acc = 0;
    for (int i = 0; i < N; ++i) {
      const double wt = (i == 0 || i == N - 1) ? 0.5 : 1.0;
      const double beta = k == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(k * g.x(i) / g.l);
      acc += wt * (w[i] - w_star) * beta;
    }
    a[k] = acc * g.dx() / g.length();
  }
  return a;
}

struct ModalSignature {
  std::vector<double> au, av;

  int K() const { return int(au.size()) - 1; }
  double energy(int k) const { return au[k] * au[k] + av[k] * av[k]; }
  double total_energy() const {
    double e = 0;
    for (int k = 1; k <= K(); ++k) e += energy(k);
    return e;
  }
};

inline ModalSignature modal_signature(const FieldState& s, const Equilibrium& eq, const Grid1D& g, int K_sig = 8) {
  return {modal_coefficients(s.u, eq.u_star, g, K_sig), modal_coefficients(s.v, eq.v_star, g, K_sig)};
}

inline bool distinct(const ModalSignature& a, const ModalSignature& b, double tol = 1e-4) {
  const int K = std::min(a.K(), b.K());
  for (int k = 0; k <= K; ++k)
    if (std::abs(a.au[k] - b.au[k]) > tol || std::abs(a.av[k] - b.av[k]) > tol) return true;
  return false;
}

enum class AttractorKind { ConstantEq, PureMode, Superposition, NonStationary, Unresolved };

struct AttractorLabel {
  AttractorKind kind = AttractorKind::Unresolved;
  std::vector<int> modes;
  int sign = 0;

  std::string str() const {
    const char* sg = sign > 0 ? "+" : "-";
    switch (kind) {
      case AttractorKind::ConstantEq:
        return "ConstantEq";
      case AttractorKind::PureMode:
        return "PureMode(" + std::to_string(modes.at(0)) + "," + sg + ")";
      case AttractorKind::Superposition: {
        std::string s = "Superposition{";
        for (size_t i = 0; i < modes.size(); ++i) s += (i ? "," : "") + std::to_string(modes[i]);
        return s + "}(" + sg + ")";
      }
      case AttractorKind::NonStationary:
        return "NonStationary";
      case AttractorKind::Unresolved:
        return "Unresolved";
    }
    return "Unresolved";
  }
  bool operator==(const AttractorLabel&) const = default;
};

inline AttractorLabel classify_attractor(const ModalSignature& sig, bool steady) {
  AttractorLabel L;
  if (!steady) {
    L.kind = AttractorKind::NonStationary;
    return L;
  }
  double amax = 0;
  for (int k = 0; k <= sig.K(); ++k) amax = std::max({amax, std::abs(sig.au[k]), std::abs(sig.av[k])});
  if (amax < 1e-6) {
    L.kind = AttractorKind::ConstantEq;
    return L;
  }
  const double E = sig.total_energy();
  if (!(E > 0)) return L;
  int dom = 1;
  for (int k = 1; k <= sig.K(); ++k)
    if (sig.energy(k) > sig.energy(dom)) dom = k;
  // a state in the invariant subspace of multiples of dom >= 2 keeps its harmonics
  bool locked = dom >= 2;
  for (int k = 1; k <= sig.K() && locked; ++k)
    if (k % dom != 0 && std::max(std::abs(sig.au[k]), std::abs(sig.av[k])) >= 1e-6) locked = false;
  if (sig.energy(dom) >= 0.9 * E || locked) {
    L.kind = AttractorKind::PureMode;
    L.modes = {dom};
    L.sign = sig.au[dom] >= 0 ? 1 : -1;
    return L;
  }
  int second = 0;
  for (int k = 1; k <= sig.K(); ++k)
    if (k != dom && (second == 0 || sig.energy(k) > sig.energy(second))) second = k;
  if (second != 0 && sig.energy(second) >= 0.05 * E) {
    L.kind = AttractorKind::Superposition;
    L.modes = {std::min(dom, second), std::max(dom, second)};
    L.sign = sig.au[L.modes[0]] >= 0 ? 1 : -1;
  }
  return L;
}

// Initial data w(x) = sum_k c[k] cos(kx/l); c[0] is the constant level.
struct InitialCondition {
  std::vector<double> mode_coeffs_u, mode_coeffs_v;

  FieldState sample(const Grid1D& g) const {
    auto eval = [&](const std::vector<double>& c) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(g.N);
      for (int i = 0; i < g.N; ++i)
        for (size_t k = 0; k < c.size(); ++k) w[i] += c[k] * (k == 0 ? 1.0 : std::cos(double(k) * g.x(i) / g.l));
      return w;
    };
    if (mode_coeffs_u.empty() || mode_coeffs_v.empty())
      fail(ErrorKind::InvalidInput, "initial condition needs mode_coeffs_u and mode_coeffs_v");
    return {0.0, eval(mode_coeffs_u), eval(mode_coeffs_v)};
  }

  InitialCondition reflected() const {
    InitialCondition r = *this;
    for (size_t k = 1; k < r.mode_coeffs_u.size(); k += 2) r.mode_coeffs_u[k] = -r.mode_coeffs_u[k];
    for (size_t k = 1; k < r.mode_coeffs_v.size(); k += 2) r.mode_coeffs_v[k] = -r.mode_coeffs_v[k];
    return r;
  }
};

// Fixed-seed perturbation of modes 1..4 in both fields.
inline InitialCondition with_noise(InitialCondition ic, double amplitude, std::uint64_t seed) {
  if (amplitude == 0) return ic;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (auto* c : {&ic.mode_coeffs_u, &ic.mode_coeffs_v}) {
    if (c->size() < 5) c->resize(5, 0.0);
    for (int k = 1; k <= 4; ++k) (*c)[k] += amplitude * U(rng);
  }
  return ic;
}

struct Scenario {
  std::string name;
  ModelParams params;
  InitialCondition ic;
};

inline const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names = {"fig3a", "fig3b", "fig3c", "fig3d", "fig6a", "fig6b", "fig6c", "fig7a",
                                                 "fig7b", "fig7c", "fig7d", "fig8a", "fig8b", "fig8c", "fig8d"};
  return names;
}

inline Scenario builtin_scenario(const std::string& name) {
  const ModelParams set1{6, 3, 0.5, 0.2064, 0.0051, 0.7, 1};
  const ModelParams set2{5, 3, 0.1, 0.2679, 0.01195, 4, 1};
  auto modes = [](double c0, int k, double ck) {
    std::vector<double> c(k + 1, 0.0);
    c[0] = c0;
    c[k] = ck;
    return c;
  };
  auto sym = [&](double c0, int k, double cu, double cv) { return InitialCondition{modes(c0, k, cu), modes(c0, k, cv)}; };
  auto with = [](ModelParams p, double d1, double s) {
    p.d1 = d1;
    p.s = s;
    return p;
  };
  const std::map<std::string, std::pair<ModelParams, InitialCondition>> table = {
      {"fig3a", {set1, sym(0.245, 2, -0.02, 0.05)}},
      {"fig3b", {set1, sym(0.245, 2, 0.02, -0.05)}},
      {"fig3c", {set1, sym(0.245, 3, -0.02, 0.05)}},
      {"fig3d", {set1, sym(0.245, 3, 0.02, -0.05)}},
      {"fig6a", {set2, sym(0.2716, 1, -0.1, -0.1)}},
      {"fig6b", {set2, sym(0.2716, 1, 0.1, 0.1)}},
      {"fig6c", {set2, sym(0.2716, 2, -0.02, -0.05)}},
      {"fig7a", {with(set2, 0.01045, 0.3029), sym(0.2716, 1, -0.1, -0.1)}},
      {"fig7b", {with(set2, 0.01045, 0.3029), sym(0.2716, 1, 0.1, 0.1)}},
      {"fig7c", {with(set2, 0.01045, 0.3029), sym(0.2716, 2, 0.02, 0.05)}},
      {"fig7d", {with(set2, 0.01045, 0.3029), sym(0.2716, 2, -0.02, -0.05)}},
      {"fig8a", {with(set2, 0.01045, 0.2379), sym(0.2716, 1, -0.1, -0.1)}},
      {"fig8b", {with(set2, 0.01045, 0.2379), sym(0.2716, 1, 0.1, 0.1)}},
      {"fig8c", {with(set2, 0.01045, 0.2379), sym(0.2716, 2, 0.02, 0.05)}},
      {"fig8d", {with(set2, 0.01045, 0.2379), sym(0.2716, 2, -0.02, -0.05)}},
  };
  auto it = table.find(name);
  if (it == table.end()) fail(ErrorKind::InvalidInput, "unknown scenario '" + name + "'");
  return {name, it->second.first, it->second.second};
}

struct ScenarioResult {
  Equilibrium eq;
  SimResult sim;
  ModalSignature signature;
  AttractorLabel label;
};

inline ScenarioResult run_ic(const ModelParams& p, const InitialCondition& ic, const Grid1D& g, const SimConfig& cfg,
                             int K_sig = 8) {
  ScenarioResult r;
  r.eq = find_interior_equilibrium(p);
  r.sim = integrate(p, g, cfg, ic.sample(g));
  r.signature = modal_signature(r.sim.final, r.eq, g, K_sig);
  r.label = classify_attractor(r.signature, r.sim.steady);
  return r;
}

inline constexpr double kScenarioNoise = 1e-5;

inline ScenarioResult run_scenario(const Scenario& sc, const Grid1D& g, const SimConfig& cfg, std::uint64_t seed = 0,
                                   double noise = kScenarioNoise) {
  return run_ic(sc.params, with_noise(sc.ic, noise, seed), g, cfg);
}

struct DistinctAttractor {
  AttractorLabel label;
  ModalSignature signature;
  int hits = 0;
};

inline void merge_attractor(std::vector<DistinctAttractor>& set, const ScenarioResult& r) {
  for (auto& a : set)
    if (!distinct(a.signature, r.signature)) {
      ++a.hits;
      return;
    }
  set.push_back({r.label, r.signature, 1});
}

struct SweepCell {
  double d1 = 0, s = 0;
  std::vector<DistinctAttractor> attractors;
  bool blowup = false;
  std::string failure;

  int n_stationary() const {
    int n = 0;
    for (auto& a : attractors) n += a.label.kind != AttractorKind::NonStationary;
    return n;
  }
};

// Seed ICs re-centred on the cell's equilibrium plus random mixes of modes 1..4 (amplitude 0.05).
inline std::vector<InitialCondition> ic_ensemble(const Equilibrium& eq, const std::vector<InitialCondition>& seeds,
                                                 int n_random, std::uint64_t seed) {
  std::vector<InitialCondition> out;
  for (auto ic : seeds) {
    ic.mode_coeffs_u.at(0) = eq.u_star;
    ic.mode_coeffs_v.at(0) = eq.v_star;
    out.push_back(ic);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.05, 0.05);
  for (int r = 0; r < n_random; ++r) {
    InitialCondition ic{std::vector<double>(5, 0.0), std::vector<double>(5, 0.0)};
    ic.mode_coeffs_u[0] = eq.u_star;
    ic.mode_coeffs_v[0] = eq.v_star;
    for (int k = 1; k <= 4; ++k) {
      ic.mode_coeffs_u[k] = U(rng);
      ic.mode_coeffs_v[k] = U(rng);
    }
    out.push_back(ic);
  }
  return out;
}

inline std::vector<SweepCell> sweep(const ModelParams& base, const std::vector<std::pair<double, double>>& cells,
                                    const std::vector<InitialCondition>& seeds, int n_random, const Grid1D& g,
                                    const SimConfig& cfg, std::uint64_t seed = 0, int jobs = 1) {
  if (cells.empty()) fail(ErrorKind::InvalidInput, "sweep grid is empty");
  if (seeds.size() + n_random < 6) fail(ErrorKind::InvalidInput, "sweep ensemble needs at least 6 initial conditions");
  std::vector<SweepCell> out(cells.size());
  auto work = [&](size_t c) {
    SweepCell& cell = out[c];
    cell.d1 = cells[c].first;
    cell.s = cells[c].second;
    ModelParams p = base;
    p.d1 = cell.d1;
    p.s = cell.s;
    try {
      auto eq = find_interior_equilibrium(p);
      for (auto& ic : ic_ensemble(eq, seeds, n_random, seed + c)) merge_attractor(cell.attractors, run_ic(p, ic, g, cfg));
    } catch (const Error& e) {
      cell.blowup = e.kind() == ErrorKind::BlowUp;
      cell.failure = e.what();
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (size_t c = 0; c < cells.size(); ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&, w] {
        for (size_t c = w; c < cells.size(); c += jobs) work(c);
      });
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace pattern_duet
