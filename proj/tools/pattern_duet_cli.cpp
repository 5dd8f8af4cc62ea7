#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pattern_duet/io.hpp"
#include "pattern_duet/linear_analysis.hpp"
#include "pattern_duet/nf_dynamics.hpp"
#include "pattern_duet/normal_form.hpp"
#include "pattern_duet/pde_sim.hpp"
#include "pattern_duet/presets.hpp"

#ifndef PATTERN_DUET_VERSION
#define PATTERN_DUET_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pattern_duet;
using io::Csv;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInput = 2, kHypothesis = 3, kDrift = 4 };

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput:
    case ErrorKind::NoInteriorEquilibrium:
    case ErrorKind::ExistenceConditionViolated:
    case ErrorKind::DomainError:
    case ErrorKind::InvalidModePair:
      return kInput;
    case ErrorKind::HypothesisViolated:
    case ErrorKind::NegativeCritical:
    case ErrorKind::SideConditionFailed:
      return kHypothesis;
    default:
      return kFailure;
  }
}

void report_error(const std::string& kind, const std::string& message, json extra = json::object()) {
  json e = {{"error", kind}, {"message", message}};
  e.update(extra);
  std::cerr << e.dump() << '\n';
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

json cplx(std::complex<double> z) { return json::array({z.real(), z.imag()}); }
json vec2(const Vec2& v) { return json::array({v[0], v[1]}); }

struct Globals {
  std::string model_path;
  int set_id = 0;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int jobs = 1;
  bool check = false;
};

// Collects artifacts in memory; nothing touches the output directory until commit.
class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), g_(g) {}

  void input(const std::string& path, const std::string& content) { inputs_[path] = sha256_hex(content); }
  void param(const std::string& key, json value) { params_[key] = std::move(value); }
  void file(const std::string& name, std::string content) { files_[name] = std::move(content); }
  void json_file(const std::string& name, const json& j) { file(name, j.dump(2) + "\n"); }

  int commit(const std::vector<std::string>& argv, std::chrono::steady_clock::time_point t0) const {
    const fs::path dir(g_.out_dir);
    if (g_.check) {
      json drift = json::array();
      for (const auto& [name, content] : files_) {
        const fs::path p = dir / name;
        std::string old;
        bool present = fs::exists(p);
        if (present) old = io::read_file(p.string());
        if (!present || old != content) drift.push_back(name);
      }
      if (!drift.empty()) {
        report_error("CheckDrift", std::to_string(drift.size()) + " artifact(s) differ from " + dir.string(),
                     {{"files", drift}});
        return kDrift;
      }
      std::cout << "check ok: " << files_.size() << " artifact(s) reproduced in " << dir.string() << '\n';
      return kOk;
    }
    fs::create_directories(dir);
    json outputs = json::array();
    for (const auto& [name, content] : files_) {
      const fs::path p = dir / name;
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      std::ofstream out(p, std::ios::binary);
      out << content;
      if (!out) fail(ErrorKind::InvalidInput, "cannot write '" + p.string() + "'");
      outputs.push_back(name);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest = {{"command", command_},   {"argv", argv},
                     {"version", PATTERN_DUET_VERSION}, {"parameters", params_},
                     {"inputs", inputs_},     {"outputs", outputs},
                     {"seed", g_.seed},       {"jobs", g_.jobs},
                     {"wall_time_s", wall}};
    std::ofstream(dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    std::cout << "wrote " << files_.size() << " artifact(s) to " << dir.string() << '\n';
    return kOk;
  }

 private:
  std::string command_;
  const Globals& g_;
  std::map<std::string, std::string> inputs_;
  json params_ = json::object();
  std::map<std::string, std::string> files_;
};

struct ResolvedModel {
  ModelParams params;
  std::optional<int> set;
};

ResolvedModel resolve_model(const Globals& g, Run& run) {
  if (!g.model_path.empty() && g.set_id != 0) fail(ErrorKind::InvalidInput, "pass either --model or --set, not both");
  ResolvedModel r;
  if (!g.model_path.empty()) {
    const std::string text = io::read_file(g.model_path);
    run.input(g.model_path, text);
    r.params = io::parse_model(io::parse_json_text(text, "model file '" + g.model_path + "'"));
  } else if (g.set_id != 0) {
    r.params = preset(g.set_id).params;
    r.set = g.set_id;
  } else {
    fail(ErrorKind::InvalidInput, "no model: pass --model FILE or --set 1|2");
  }
  run.param("model", io::to_json(r.params));
  if (r.set) run.param("set", *r.set);
  return r;
}

std::pair<int, int> resolve_modes(const ResolvedModel& m, int k1, int k2, Run& run) {
  if (k1 == 0 && k2 == 0) {
    if (!m.set) fail(ErrorKind::InvalidInput, "pass --k1 and --k2 for a model file");
    k1 = preset(*m.set).k1;
    k2 = preset(*m.set).k2;
  }
  if (k1 < 1 || k2 <= k1) fail(ErrorKind::InvalidModePair, "need k2 > k1 >= 1, got k1=" + std::to_string(k1) +
                                                               " k2=" + std::to_string(k2));
  run.param("k1", k1);
  run.param("k2", k2);
  return {k1, k2};
}

RegionAtlas atlas_for(const ResolvedModel& m, int k1, int k2) {
  if (m.set == 1 && k1 == 2 && k2 == 3) return RegionAtlas::Set1;
  if (m.set == 2 && k1 == 1 && k2 == 2) return RegionAtlas::Set2;
  return RegionAtlas::None;
}

struct Reduction {
  Equilibrium eq;
  Linearization lin;
  TTPoint tt;
  CriticalData c;
  SpectrumReport spectrum;
  NFCoefficients nf;
  NFPolynomial P;
};

Reduction reduce(const ModelParams& p, int k1, int k2) {
  Reduction r;
  r.eq = find_interior_equilibrium(p);
  r.lin = linearize(p, r.eq);
  r.tt = tt_point(p, r.lin, k1, k2);
  r.spectrum = spectrum_check(p, r.lin, r.tt);
  r.spectrum.raise_if_failed();
  r.c = critical_eigenvectors(p, r.lin, r.tt);
  ModelParams at = p;
  at.d1 = r.tt.d_star;
  at.s = r.tt.s_star;
  r.nf = compute_nf(r.tt, r.c, crowley_martin_model(at, r.eq));
  r.P = NFPolynomial::from(r.nf);
  return r;
}

json lines_json(const BifurcationSet& set, double d_star, double s_star) {
  json lines = json::array(), curves = json::array();
  for (const auto& l : set.lines)
    lines.push_back({{"name", l.name},
                     {"kind", l.kind},
                     {"normal", vec2(l.normal)},
                     {"direction", vec2(l.direction)},
                     {"ray", l.ray},
                     {"slope", l.slope()}});
  for (const auto& c : set.curves) {
    json pts = json::array();
    for (const auto& e : c.eps) pts.push_back({e[0], e[1], d_star + e[0], s_star + e[1]});
    curves.push_back({{"name", c.name}, {"points_eps1_eps2_d1_s", pts}});
  }
  return {{"d_star", d_star}, {"s_star", s_star}, {"lines", lines}, {"curves", curves}};
}

json equilibria_json(const std::vector<NFEquilibrium>& eqs) {
  json out = json::array();
  for (const auto& e : eqs)
    out.push_back({{"label", e.label.str()},
                   {"z", vec2(e.z)},
                   {"eigenvalues", {cplx(e.lambda1), cplx(e.lambda2)}},
                   {"stability", to_string(e.stability)}});
  return out;
}

json signature_json(const ModalSignature& s) { return {{"a_u", s.au}, {"a_v", s.av}}; }

// ---- subcommands ----

int cmd_equilibrium(const Globals& g, Run& run) {
  auto m = resolve_model(g, run);
  auto eq = find_interior_equilibrium(m.params);
  auto lin = linearize(m.params, eq);
  run.json_file("equilibrium.json", {{"u_star", eq.u_star},
                                     {"v_star", eq.v_star},
                                     {"s0", lin.s0},
                                     {"sigma", lin.sigma},
                                     {"existence_condition", m.params.existence_condition()},
                                     {"params", io::to_json(m.params)}});
  return kOk;
}

int cmd_dispersion(const Globals& g, Run& run, int kmax) {
  if (kmax < 0) fail(ErrorKind::InvalidInput, "--kmax must be >= 0");
  auto m = resolve_model(g, run);
  run.param("kmax", kmax);
  auto lin = linearize(m.params, find_interior_equilibrium(m.params));
  Csv csv({"k", "mu", "trace", "det", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im"});
  for (int k = 0; k <= kmax; ++k) {
    auto d = dispersion(m.params, lin, k);
    const std::complex<double> disc = std::sqrt(std::complex<double>(d.theta * d.theta / 4 - d.delta));
    const auto l1 = d.theta / 2 + disc, l2 = d.theta / 2 - disc;
    csv.row(k, mode_mu(k, m.params.l), d.theta, d.delta, l1.real(), l1.imag(), l2.real(), l2.imag());
  }
  run.file("dispersion.csv", csv.str());
  return kOk;
}

int cmd_turing_curves(const Globals& g, Run& run, int kmax, int samples) {
  if (kmax < 1 || samples < 2) fail(ErrorKind::InvalidInput, "--kmax must be >= 1 and --samples >= 2");
  auto m = resolve_model(g, run);
  run.param("kmax", kmax);
  run.param("samples", samples);
  auto lin = linearize(m.params, find_interior_equilibrium(m.params));
  Csv csv({"k", "d1", "s"});
  json tts = json::array();
  for (int k = 1; k <= kmax; ++k)
    for (auto [d1, s] : turing_curve(m.params, lin, k).sample(samples)) csv.row(k, d1, s);
  for (int k = 1; k < kmax; ++k) {
    try {
      auto tt = tt_point(m.params, lin, k, k + 1);
      tts.push_back({{"k1", k}, {"k2", k + 1}, {"d_star", tt.d_star}, {"s_star", tt.s_star}});
    } catch (const Error& e) {
      spdlog::debug("no interaction point for ({}, {}): {}", k, k + 1, e.what());
    }
  }
  run.file("turing_curves.csv", csv.str());
  run.json_file("interaction_points.json", {{"adjacent_pairs", tts}, {"k0_star", critical_mode_index(m.params, lin)}});
  return kOk;
}

int cmd_tt_point(const Globals& g, Run& run, int k1, int k2) {
  auto m = resolve_model(g, run);
  std::tie(k1, k2) = resolve_modes(m, k1, k2, run);
  auto eq = find_interior_equilibrium(m.params);
  auto lin = linearize(m.params, eq);
  auto tt = tt_point(m.params, lin, k1, k2);
  auto spec = spectrum_check(m.params, lin, tt);
  auto c = critical_eigenvectors(m.params, lin, tt);
  run.json_file("tt_point.json", {{"k1", tt.k1},
                                  {"k2", tt.k2},
                                  {"d_star", tt.d_star},
                                  {"s_star", tt.s_star},
                                  {"k0_star", critical_mode_index(m.params, lin)},
                                  {"phi1", vec2(c.phi1)},
                                  {"phi2", vec2(c.phi2)},
                                  {"psi1", vec2(c.psi1)},
                                  {"psi2", vec2(c.psi2)},
                                  {"spectrum", {{"ok", spec.ok},
                                                {"margin", spec.margin},
                                                {"zero_modes", spec.zero_modes},
                                                {"offending", spec.offending}}}});
  spec.raise_if_failed();
  return kOk;
}

int cmd_normal_form(const Globals& g, Run& run, int k1, int k2) {
  auto m = resolve_model(g, run);
  std::tie(k1, k2) = resolve_modes(m, k1, k2, run);
  auto r = reduce(m.params, k1, k2);
  json raw = json::object(), disp = json::object();
  for (auto& [k, v] : r.nf.raw()) raw[k] = v;
  for (auto& [k, v] : display_coefficients(r.nf)) disp[k] = v;
  json out = {{"resonance", to_string(r.nf.rcase)},
              {"provenance", {{"k1", k1}, {"k2", k2}, {"d_star", r.tt.d_star}, {"s_star", r.tt.s_star}, {"l", m.params.l}}},
              {"coefficients", raw},
              {"display", disp}};
  if (r.nf.rcase == ResonanceCase::Generic) {
    auto u = classify_unfolding(r.P);
    out["unfolding"] = {{"case", u.case_label}, {"b0", u.b0},         {"c0", u.c0},
                        {"d0", u.d0},           {"time_reversed", u.time_reversed}};
  }
  run.json_file("nf.json", out);
  return kOk;
}

struct PhaseOpts {
  int k1 = 0, k2 = 0;
  std::optional<double> d1, s;
  double T = 2000, dt = 0.5;
  int grid = 4, samples = 400;
};

int cmd_nf_phase(const Globals& g, Run& run, const PhaseOpts& o) {
  auto m = resolve_model(g, run);
  auto [k1, k2] = resolve_modes(m, o.k1, o.k2, run);
  if (o.grid < 1 || o.samples < 2 || !(o.T > 0) || !(o.dt > 0))
    fail(ErrorKind::InvalidInput, "--grid >= 1, --samples >= 2, --T > 0 and --dt > 0 are required");
  auto r = reduce(m.params, k1, k2);
  const double d1 = o.d1.value_or(m.params.d1), s = o.s.value_or(m.params.s);
  run.param("point", {d1, s});
  run.param("T", o.T);
  run.param("dt", o.dt);
  run.param("grid", o.grid);
  const Vec2 eps(d1 - r.tt.d_star, s - r.tt.s_star);
  TruncatedNF nf(r.P, eps);
  auto eqs = nf_equilibria(nf);
  double R = 0.01;
  for (auto& e : eqs) R = std::max(R, 1.5 * e.z.cwiseAbs().maxCoeff());
  auto census = census_of(eqs);
  run.json_file("nf_equilibria.json", {{"d1", d1},
                                       {"s", s},
                                       {"eps", vec2(eps)},
                                       {"region", detail::atlas_label(census, atlas_for(m, k1, k2))},
                                       {"fingerprint", census.fingerprint()},
                                       {"equilibria", equilibria_json(eqs)}});
  run.json_file("nf_lines.json", lines_json(nf_bifurcation_lines(r.P, k1, k2), r.tt.d_star, r.tt.s_star));
  Csv index({"trajectory", "z1_0", "z2_0", "file"});
  int id = 0;
  for (int i = 0; i < o.grid; ++i)
    for (int j = 0; j < o.grid; ++j, ++id) {
      const Vec2 z0(-R + 2 * R * (i + 0.5) / o.grid, -R + 2 * R * (j + 0.5) / o.grid);
      Csv csv({"t", "z1", "z2"});
      for (auto& smp : nf_trajectory(nf, z0, o.T, o.dt, o.samples)) csv.row(smp.t, smp.z[0], smp.z[1]);
      char name[64];
      std::snprintf(name, sizeof name, "trajectories/traj_%03d.csv", id);
      run.file(name, csv.str());
      index.row(id, z0[0], z0[1], std::string(name));
    }
  run.file("trajectories/index.csv", index.str());
  return kOk;
}

int cmd_regions(const Globals& g, Run& run, int k1, int k2, std::vector<double> window, int n) {
  auto m = resolve_model(g, run);
  std::tie(k1, k2) = resolve_modes(m, k1, k2, run);
  if (window.size() != 2 || !(window[0] > 0) || !(window[1] > 0))
    fail(ErrorKind::InvalidInput, "--window takes two positive half-widths (d1, s)");
  if (n < 1) fail(ErrorKind::InvalidInput, "--n must be >= 1");
  run.param("window", window);
  run.param("n", n);
  auto r = reduce(m.params, k1, k2);
  auto grid = GridSpec::around(r.tt.d_star, r.tt.s_star, window[0], window[1], n);
  auto map = region_classify(r.P, r.tt.d_star, r.tt.s_star, grid, atlas_for(m, k1, k2), g.jobs);
  Csv csv({"d1", "s", "eps1", "eps2", "fingerprint", "region_label", "n_stable", "n_saddle", "n_unstable"});
  std::map<std::string, int> counts;
  std::map<std::string, std::string> label_of;
  for (const auto& c : map.cells) {
    csv.row(c.d1, c.s, c.eps1, c.eps2, c.fingerprint, c.region_label, c.n_stable, c.n_saddle, c.n_unstable);
    ++counts[c.fingerprint];
    label_of[c.fingerprint] = c.region_label;
  }
  json regions = json::array();
  for (const auto& f : map.fingerprints)
    regions.push_back({{"fingerprint", f}, {"label", label_of[f]}, {"cells", counts[f]}});
  EpsWindow win{window[0], window[1]};
  run.file("regions.csv", csv.str());
  run.json_file("regions.json", {{"d_star", r.tt.d_star},
                                 {"s_star", r.tt.s_star},
                                 {"grid", {{"d1", {grid.d1_lo, grid.d1_hi, grid.n_d1}}, {"s", {grid.s_lo, grid.s_hi, grid.n_s}}}},
                                 {"regions", regions},
                                 {"bifurcation_set", lines_json(nf_bifurcation_lines(r.P, k1, k2, win), r.tt.d_star, r.tt.s_star)}});
  std::cout << map.fingerprints.size() << " distinct fingerprints\n";
  return kOk;
}

struct SimOpts {
  std::string scenario, scenario_file;
  std::optional<int> N, snapshot_stride, stencil_order;
  std::optional<double> dt, T_max, steady_tol, noise;
  std::optional<std::string> integrator;
};

void apply_overrides(const SimOpts& o, SimConfig& cfg, Grid1D& grid) {
  if (o.N) grid.N = *o.N;
  if (o.dt) cfg.dt = *o.dt;
  if (o.T_max) cfg.T_max = *o.T_max;
  if (o.steady_tol) cfg.steady_tol = *o.steady_tol;
  if (o.snapshot_stride) cfg.snapshot_stride = *o.snapshot_stride;
  if (o.stencil_order) cfg.stencil_order = *o.stencil_order;
  if (o.integrator) cfg.integrator = io::parse_integrator(*o.integrator);
}

json config_json(const SimConfig& c, const Grid1D& g) {
  return {{"N", g.N},
          {"l", g.l},
          {"dt", c.dt},
          {"T_max", c.T_max},
          {"steady_tol", c.steady_tol},
          {"integrator", c.integrator == Integrator::IMEX ? "imex" : "explicit"},
          {"stencil_order", c.stencil_order},
          {"snapshot_stride", c.snapshot_stride}};
}

int cmd_simulate(const Globals& g, Run& run, const SimOpts& o) {
  if (o.scenario.empty() == o.scenario_file.empty())
    fail(ErrorKind::InvalidInput, "pass exactly one of --scenario NAME or --scenario-file FILE");
  Scenario sc;
  SimConfig cfg;
  cfg.snapshot_stride = 1000;
  Grid1D grid;
  double noise = kScenarioNoise;
  if (!o.scenario.empty()) {
    sc = builtin_scenario(o.scenario);
  } else {
    const std::string text = io::read_file(o.scenario_file);
    run.input(o.scenario_file, text);
    auto sf = io::parse_scenario(io::parse_json_text(text, "scenario file '" + o.scenario_file + "'"));
    sc = {fs::path(o.scenario_file).stem().string(), sf.params, sf.ic};
    const int stride = cfg.snapshot_stride;
    cfg = sf.config;
    if (cfg.snapshot_stride == 0) cfg.snapshot_stride = stride;
    if (sf.N) grid.N = *sf.N;
    noise = sf.noise.value_or(0.0);
  }
  grid.l = sc.params.l;
  apply_overrides(o, cfg, grid);
  if (o.noise) noise = *o.noise;
  if (!(noise >= 0)) fail(ErrorKind::InvalidInput, "--noise must be >= 0");
  run.param("scenario", sc.name);
  run.param("model", io::to_json(sc.params));
  run.param("config", config_json(cfg, grid));
  run.param("noise", noise);

  auto ic = with_noise(sc.ic, noise, g.seed);
  auto r = run_ic(sc.params, ic, grid, cfg);
  const auto& L = r.label;
  run.json_file("attractor.json", {{"scenario", sc.name},
                                   {"label", L.str()},
                                   {"modes", L.modes},
                                   {"sign", L.sign},
                                   {"steady", r.sim.steady},
                                   {"convergence_time", r.sim.final.t},
                                   {"steps", r.sim.steps},
                                   {"residual", r.sim.residual},
                                   {"equilibrium", {r.eq.u_star, r.eq.v_star}},
                                   {"modal", signature_json(r.signature)},
                                   {"initial_condition", {{"mode_coeffs_u", ic.mode_coeffs_u}, {"mode_coeffs_v", ic.mode_coeffs_v}}}});
  Csv index({"t_index", "t", "file"});
  for (size_t i = 0; i < r.sim.history.size(); ++i) {
    const auto& s = r.sim.history[i];
    Csv snap({"x", "u", "v"});
    for (int n = 0; n < grid.N; ++n) snap.row(grid.x(n), s.u[n], s.v[n]);
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/snap_%05zu.csv", i);
    run.file(name, snap.str());
    index.row(i, s.t, std::string(name));
  }
  run.file("snapshots/index.csv", index.str());
  std::cout << sc.name << ": " << L.str() << '\n';
  return kOk;
}

struct SweepOpts {
  std::vector<double> d1_range, s_range;
  std::vector<std::pair<double, double>> cells;
  std::vector<std::string> seeds;
  int random = 4;
  SimOpts sim;
};

std::vector<double> linspace(const std::vector<double>& r, const char* what) {
  if (r.size() != 3) fail(ErrorKind::InvalidInput, std::string(what) + " takes LO HI COUNT");
  const double n = r[2];
  if (!(n >= 0) || n != std::floor(n)) fail(ErrorKind::InvalidInput, std::string(what) + " COUNT must be a whole number");
  std::vector<double> out;
  for (int i = 0; i < int(n); ++i) out.push_back(n == 1 ? r[0] : r[0] + (r[1] - r[0]) * i / (n - 1));
  return out;
}

int cmd_sweep(const Globals& g, Run& run, const SweepOpts& o) {
  auto m = resolve_model(g, run);
  std::vector<std::pair<double, double>> cells = o.cells;
  if (!o.d1_range.empty() || !o.s_range.empty()) {
    for (double s : linspace(o.s_range, "--s-range"))
      for (double d1 : linspace(o.d1_range, "--d1-range")) cells.emplace_back(d1, s);
  }
  if (cells.empty()) fail(ErrorKind::InvalidInput, "sweep grid is empty");
  std::vector<std::string> seed_names = o.seeds;
  if (seed_names.empty())
    seed_names = m.set == 1 ? std::vector<std::string>{"fig3a", "fig3b", "fig3c", "fig3d"}
                            : std::vector<std::string>{"fig7a", "fig7b", "fig7c", "fig7d"};
  std::vector<InitialCondition> seeds;
  for (auto& n : seed_names) seeds.push_back(builtin_scenario(n).ic);
  SimConfig cfg;
  Grid1D grid;
  grid.l = m.params.l;
  apply_overrides(o.sim, cfg, grid);
  cfg.snapshot_stride = 0;
  run.param("cells", cells);
  run.param("seeds", seed_names);
  run.param("random", o.random);
  run.param("config", config_json(cfg, grid));

  auto out = sweep(m.params, cells, seeds, o.random, grid, cfg, g.seed, g.jobs);
  Csv csv({"d1", "s", "n_attractors", "n_stationary", "labels", "blowup", "failure"});
  json cj = json::array();
  for (const auto& c : out) {
    std::string labels;
    json atts = json::array();
    for (const auto& a : c.attractors) {
      labels += (labels.empty() ? "" : ";") + a.label.str();
      atts.push_back({{"label", a.label.str()}, {"hits", a.hits}, {"modal", signature_json(a.signature)}});
    }
    csv.row(c.d1, c.s, c.attractors.size(), c.n_stationary(), labels, c.blowup, c.failure);
    cj.push_back({{"d1", c.d1}, {"s", c.s}, {"attractors", atts}, {"blowup", c.blowup}, {"failure", c.failure}});
  }
  run.file("sweep.csv", csv.str());
  run.json_file("sweep.json", {{"cells", cj}});
  return kOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("pattern_duet");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PATTERN_DUET_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = std::chrono::steady_clock::now();
  setup_logging();
  std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"Turing-Turing bifurcation analysis and simulation for a diffusive predator-prey model"};
  app.set_version_flag("--version", PATTERN_DUET_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--model", g.model_path, "model JSON {m,a,b,s,d1,d2[,l]}");
  app.add_option("--set", g.set_id, "built-in parameter set")->check(CLI::IsMember({1, 2}));
  app.add_option("--out-dir", g.out_dir, "artifact directory")->capture_default_str();
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--check", g.check, "recompute and diff against existing artifacts");

  auto* eq = app.add_subcommand("equilibrium", "interior equilibrium and linearization");
  int kmax = 10, samples = 200;
  auto* disp = app.add_subcommand("dispersion", "trace/determinant and eigenvalues per mode");
  disp->add_option("--kmax", kmax)->capture_default_str();
  auto* tc = app.add_subcommand("turing-curves", "sampled Turing bifurcation curves");
  int tc_kmax = 6;
  tc->add_option("--kmax", tc_kmax)->capture_default_str();
  tc->add_option("--samples", samples)->capture_default_str();

  int k1 = 0, k2 = 0;
  auto add_modes = [&](CLI::App* c) {
    c->add_option("--k1", k1, "first critical mode");
    c->add_option("--k2", k2, "second critical mode");
  };
  auto* tt = app.add_subcommand("tt-point", "Turing-Turing interaction point");
  add_modes(tt);
  auto* nf = app.add_subcommand("normal-form", "normal-form coefficients at the interaction point");
  add_modes(nf);

  PhaseOpts po;
  auto* ph = app.add_subcommand("nf-phase", "normal-form equilibria, bifurcation set and phase portrait");
  add_modes(ph);
  ph->add_option("--d1", po.d1, "parameter point (defaults to the model's d1)");
  ph->add_option("--s", po.s, "parameter point (defaults to the model's s)");
  ph->add_option("--T", po.T)->capture_default_str();
  ph->add_option("--dt", po.dt)->capture_default_str();
  ph->add_option("--grid", po.grid, "initial points per axis")->capture_default_str();
  ph->add_option("--samples", po.samples)->capture_default_str();

  std::vector<double> window{0.002, 0.05};
  int n = 100;
  auto* rg = app.add_subcommand("regions", "equilibrium census over a (d1, s) window");
  add_modes(rg);
  rg->add_option("--window", window, "half-widths in d1 and s")->expected(2)->capture_default_str();
  rg->add_option("--n", n, "cells per axis")->capture_default_str();

  SimOpts so;
  auto add_sim = [](CLI::App* c, SimOpts& o) {
    c->add_option("--N", o.N);
    c->add_option("--dt", o.dt);
    c->add_option("--T-max", o.T_max);
    c->add_option("--steady-tol", o.steady_tol);
    c->add_option("--integrator", o.integrator, "imex or explicit");
    c->add_option("--stencil-order", o.stencil_order, "2 or 4");
  };
  auto* sim = app.add_subcommand("simulate", "integrate the reaction-diffusion system");
  sim->add_option("--scenario", so.scenario, "built-in scenario (fig3a..fig8d)");
  sim->add_option("--scenario-file", so.scenario_file, "scenario JSON {params, ic, config}");
  sim->add_option("--snapshot-stride", so.snapshot_stride, "steps between snapshots");
  sim->add_option("--noise", so.noise, "amplitude of seeded modes 1-4 perturbation");
  add_sim(sim, so);

  SweepOpts sw;
  auto* swp = app.add_subcommand("sweep", "attractor census over a (d1, s) grid");
  swp->add_option("--d1-range", sw.d1_range, "LO HI COUNT")->expected(3);
  swp->add_option("--s-range", sw.s_range, "LO HI COUNT")->expected(3);
  swp->add_option("--cell", sw.cells, "explicit (d1, s) cell; repeatable");
  swp->add_option("--seeds", sw.seeds, "built-in scenarios whose ICs seed the ensemble")->delimiter(',');
  swp->add_option("--random", sw.random, "random modal mixes per cell")->capture_default_str();
  add_sim(swp, sw.sim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("InvalidInput", e.what());
    return kInput;
  }

  auto* sub = app.get_subcommands().front();
  Run run(sub->get_name(), g);
  try {
    int rc = kOk;
    if (sub == eq) rc = cmd_equilibrium(g, run);
    else if (sub == disp) rc = cmd_dispersion(g, run, kmax);
    else if (sub == tc) rc = cmd_turing_curves(g, run, tc_kmax, samples);
    else if (sub == tt) rc = cmd_tt_point(g, run, k1, k2);
    else if (sub == nf) rc = cmd_normal_form(g, run, k1, k2);
    else if (sub == ph) rc = cmd_nf_phase(g, run, {k1, k2, po.d1, po.s, po.T, po.dt, po.grid, po.samples});
    else if (sub == rg) rc = cmd_regions(g, run, k1, k2, window, n);
    else if (sub == sim) rc = cmd_simulate(g, run, so);
    else if (sub == swp) rc = cmd_sweep(g, run, sw);
    if (rc != kOk) return rc;
    return run.commit(args, t0);
  } catch (const Error& e) {
    report_error(std::string(to_string(e.kind())), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    report_error("InternalError", e.what());
    return kFailure;
  }
}
