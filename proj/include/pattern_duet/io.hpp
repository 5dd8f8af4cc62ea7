#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pattern_duet/errors.hpp"
#include "pattern_duet/kinetics.hpp"
#include "pattern_duet/pde_sim.hpp"

namespace pattern_duet::io {

using nlohmann::json;

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row_strings(header); }

  template <class... T>
  Csv& row(const T&... cells) {
    std::vector<std::string> v{cell(cells)...};
    return row_strings(v);
  }
  Csv& row_strings(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
    return *this;
  }
  const std::string& str() const { return out_; }

 private:
  static std::string cell(double x) { return fmt17(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(long x) { return std::to_string(x); }
  static std::string cell(size_t x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "1" : "0"; }
  static std::string cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  static std::string cell(const char* s) { return cell(std::string(s)); }

  std::string out_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidInput, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidInput, what + " is not valid JSON: " + e.what());
  }
}

namespace detail {

inline double number_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorKind::InvalidInput, where + ": missing key '" + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) fail(ErrorKind::InvalidInput, where + ": key '" + key + "' must be a number");
  return v.get<double>();
}

inline void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::InvalidInput, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      fail(ErrorKind::InvalidInput, where + ": unknown key '" + it.key() + "'");
}

inline std::vector<double> number_list(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorKind::InvalidInput, where + ": missing key '" + key + "'");
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) fail(ErrorKind::InvalidInput, where + ": key '" + key + "' must be a non-empty array");
  std::vector<double> out;
  for (auto& x : v) {
    if (!x.is_number()) fail(ErrorKind::InvalidInput, where + ": key '" + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

inline ModelParams parse_model(const json& j, const std::string& where = "model") {
  detail::reject_unknown(j, {"m", "a", "b", "s", "d1", "d2", "l"}, where);
  ModelParams p;
  p.m = detail::number_field(j, "m", where);
  p.a = detail::number_field(j, "a", where);
  p.b = detail::number_field(j, "b", where);
  p.s = detail::number_field(j, "s", where);
  p.d1 = detail::number_field(j, "d1", where);
  p.d2 = detail::number_field(j, "d2", where);
  if (j.contains("l")) p.l = detail::number_field(j, "l", where);
  p.validate();
  return p;
}

inline json to_json(const ModelParams& p) {
  return {{"m", p.m}, {"a", p.a}, {"b", p.b}, {"s", p.s}, {"d1", p.d1}, {"d2", p.d2}, {"l", p.l}};
}

struct ScenarioFile {
  ModelParams params;
  InitialCondition ic;
  SimConfig config;
  std::optional<int> N;
  std::optional<double> noise;
};

inline Integrator parse_integrator(const std::string& s) {
  if (s == "imex" || s == "IMEX") return Integrator::IMEX;
  if (s == "explicit") return Integrator::Explicit;
  fail(ErrorKind::InvalidInput, "integrator must be 'imex' or 'explicit', got '" + s + "'");
}

inline ScenarioFile parse_scenario(const json& j) {
  detail::reject_unknown(j, {"params", "ic", "config"}, "scenario");
  if (!j.contains("params")) fail(ErrorKind::InvalidInput, "scenario: missing key 'params'");
  if (!j.contains("ic")) fail(ErrorKind::InvalidInput, "scenario: missing key 'ic'");
  ScenarioFile sf;
  sf.params = parse_model(j.at("params"), "scenario.params");
  const json& ic = j.at("ic");
  detail::reject_unknown(ic, {"mode_coeffs_u", "mode_coeffs_v"}, "scenario.ic");
  sf.ic.mode_coeffs_u = detail::number_list(ic, "mode_coeffs_u", "scenario.ic");
  sf.ic.mode_coeffs_v = detail::number_list(ic, "mode_coeffs_v", "scenario.ic");
  if (j.contains("config")) {
    const json& c = j.at("config");
    const std::string w = "scenario.config";
    detail::reject_unknown(c, {"dt", "T_max", "steady_tol", "integrator", "snapshot_stride", "stencil_order", "N", "noise"},
                           w);
    if (c.contains("dt")) sf.config.dt = detail::number_field(c, "dt", w);
    if (c.contains("T_max")) sf.config.T_max = detail::number_field(c, "T_max", w);
    if (c.contains("steady_tol")) sf.config.steady_tol = detail::number_field(c, "steady_tol", w);
    if (c.contains("snapshot_stride")) sf.config.snapshot_stride = int(detail::number_field(c, "snapshot_stride", w));
    if (c.contains("stencil_order")) sf.config.stencil_order = int(detail::number_field(c, "stencil_order", w));
    if (c.contains("N")) sf.N = int(detail::number_field(c, "N", w));
    if (c.contains("noise")) sf.noise = detail::number_field(c, "noise", w);
    if (c.contains("integrator")) {
      if (!c.at("integrator").is_string()) fail(ErrorKind::InvalidInput, w + ": key 'integrator' must be a string");
      sf.config.integrator = parse_integrator(c.at("integrator").get<std::string>());
    }
  }
  return sf;
}

}  // namespace pattern_duet::io
