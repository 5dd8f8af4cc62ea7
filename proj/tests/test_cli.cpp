#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pattern_duet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    const std::string cmd = std::string(PATTERN_DUET_CLI) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(dir_ / "stdout"), slurp(dir_ / "stderr")};
  }
  std::string out(const std::string& sub) { return (dir_ / sub).string(); }
  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_F(Cli, EquilibriumForBothSets) {
  ASSERT_EQ(run("--set 1 --out-dir " + out("a") + " equilibrium").code, 0);
  auto j = json::parse(slurp(out("a") + "/equilibrium.json"));
  EXPECT_NEAR(j["u_star"].get<double>(), 0.245, 5e-4);
  ASSERT_EQ(run("equilibrium --set 2 --out-dir " + out("b")).code, 0);
  j = json::parse(slurp(out("b") + "/equilibrium.json"));
  EXPECT_NEAR(j["u_star"].get<double>(), 0.2716, 5e-5);
  EXPECT_TRUE(j.contains("s0") && j.contains("sigma"));
}

TEST_F(Cli, ModelFileValidation) {
  write("ok.json", R"({"m": 6, "a": 3, "b": 0.5, "s": 0.2064, "d1": 0.0051, "d2": 0.7})");
  EXPECT_EQ(run("--model " + out("ok.json") + " --out-dir " + out("o") + " equilibrium").code, 0);
  write("extra.json", R"({"m": 6, "a": 3, "b": 0.5, "s": 0.2064, "d1": 0.0051, "d2": 0.7, "gamma": 1})");
  auto r = run("--model " + out("extra.json") + " --out-dir " + out("x") + " equilibrium");
  EXPECT_EQ(r.code, 2);
  auto e = json::parse(r.err);
  EXPECT_EQ(e["error"], "InvalidInput");
  EXPECT_NE(e["message"].get<std::string>().find("gamma"), std::string::npos);
  write("missing.json", R"({"m": 6, "a": 3, "b": 0.5, "s": 0.2064, "d2": 0.7})");
  r = run("--model " + out("missing.json") + " --out-dir " + out("x") + " equilibrium");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("d1"), std::string::npos);
  write("type.json", R"({"m": "six", "a": 3, "b": 0.5, "s": 0.2064, "d1": 0.0051, "d2": 0.7})");
  r = run("--model " + out("type.json") + " --out-dir " + out("x") + " equilibrium");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("'m'"), std::string::npos);
  write("broken.json", R"({"m": 6,)");
  EXPECT_EQ(run("--model " + out("broken.json") + " --out-dir " + out("x") + " equilibrium").code, 2);
  EXPECT_EQ(run("--out-dir " + out("x") + " equilibrium").code, 2);
  EXPECT_FALSE(fs::exists(out("x")));
}

TEST_F(Cli, NormalFormSetOne) {
  ASSERT_EQ(run("--set 1 --out-dir " + out("n") + " normal-form --k1 2 --k2 3").code, 0);
  auto j = json::parse(slurp(out("n") + "/nf.json"));
  EXPECT_EQ(j["resonance"], "Generic");
  EXPECT_LT(rel(j["display"]["1:eps1"].get<double>(), -4.0702), 1e-2);
  EXPECT_LT(rel(j["display"]["2:03"].get<double>(), -3.2439), 1e-2);
  EXPECT_EQ(j["unfolding"]["case"], "Ib");
  EXPECT_EQ(j["provenance"]["k2"], 3);
  EXPECT_TRUE(j["coefficients"].contains("g1010_11"));
}

TEST_F(Cli, NormalFormSetTwo) {
  ASSERT_EQ(run("--set 2 --out-dir " + out("n") + " normal-form --k1 1 --k2 2").code, 0);
  auto j = json::parse(slurp(out("n") + "/nf.json"));
  EXPECT_EQ(j["resonance"], "OneTwo");
  EXPECT_LT(rel(j["display"]["1:11"].get<double>(), -0.3461), 1e-2);
  EXPECT_LT(rel(j["display"]["2:21"].get<double>(), 1.2199), 1e-2);
  EXPECT_FALSE(j.contains("unfolding"));
}

TEST_F(Cli, HypothesisViolationExitsThree) {
  write("m.json", R"({"m": 0.5, "a": 3, "b": 0.5, "s": 0.2064, "d1": 0.0051, "d2": 0.7})");
  auto r = run("--model " + out("m.json") + " --out-dir " + out("x") + " normal-form --k1 2 --k2 3");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("s0+sigma < 0"), std::string::npos);
  EXPECT_FALSE(fs::exists(out("x")));
  EXPECT_EQ(run("--set 1 --out-dir " + out("x") + " normal-form --k1 3 --k2 3").code, 2);
}

TEST_F(Cli, RegionsSetOneHasSixFingerprints) {
  ASSERT_EQ(run("regions --set 1 --window 0.002 0.05 --out-dir " + out("r")).code, 0);
  auto j = json::parse(slurp(out("r") + "/regions.json"));
  EXPECT_EQ(j["regions"].size(), 6u);
  std::ifstream csv(out("r") + "/regions.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "d1,s,eps1,eps2,fingerprint,region_label,n_stable,n_saddle,n_unstable");
}

TEST_F(Cli, SimulateBuiltinScenario) {
  auto r = run("simulate --scenario fig3a --out-dir " + out("s"));
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(slurp(out("s") + "/attractor.json"));
  EXPECT_EQ(j["label"], "PureMode(2,-)");
  EXPECT_TRUE(j["steady"].get<bool>());
  EXPECT_EQ(slurp(out("s") + "/snapshots/snap_00000.csv").substr(0, 6), "x,u,v\n");
  EXPECT_EQ(run("simulate --scenario fig9z --out-dir " + out("t")).code, 2);
}

TEST_F(Cli, SimulateScenarioFile) {
  write("sc.json", R"({"params": {"m": 6, "a": 3, "b": 0.5, "s": 0.2064, "d1": 0.0051, "d2": 0.7},
                       "ic": {"mode_coeffs_u": [0.245, 0, 0, 0.02], "mode_coeffs_v": [0.245, 0, 0, -0.05]},
                       "config": {"N": 128, "noise": 1e-5}})");
  ASSERT_EQ(run("simulate --scenario-file " + out("sc.json") + " --out-dir " + out("s")).code, 0);
  EXPECT_EQ(json::parse(slurp(out("s") + "/attractor.json"))["label"], "PureMode(3,+)");
  write("bad.json", R"({"params": {"m": 6, "a": 3, "b": 0.5, "s": 0.2064, "d1": 0.0051, "d2": 0.7},
                        "ic": {"mode_coeffs_u": [0.245], "mode_coeffs_v": [0.245]}, "config": {"stride": 3}})");
  auto r = run("simulate --scenario-file " + out("bad.json") + " --out-dir " + out("t"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("stride"), std::string::npos);
}

TEST_F(Cli, EmptySweepWritesNothing) {
  auto r = run("--set 1 sweep --d1-range 0.005 0.006 0 --s-range 0.2 0.21 3 --out-dir " + out("w"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["error"], "InvalidInput");
  EXPECT_FALSE(fs::exists(out("w")));
}

TEST_F(Cli, SweepSingleCell) {
  auto r = run("--set 1 --jobs 2 sweep --cell 0.0062 0.2364 --random 2 --out-dir " + out("w"));
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(slurp(out("w") + "/sweep.json"));
  ASSERT_EQ(j["cells"].size(), 1u);
  ASSERT_EQ(j["cells"][0]["attractors"].size(), 1u);
  EXPECT_EQ(j["cells"][0]["attractors"][0]["label"], "ConstantEq");
}

TEST_F(Cli, DeterministicOutputsAndCheck) {
  const std::string args = "--set 2 --seed 3 nf-phase --d1 0.01045 --s 0.3029 --grid 2";
  ASSERT_EQ(run(args + " --out-dir " + out("a")).code, 0);
  ASSERT_EQ(run(args + " --out-dir " + out("b")).code, 0);
  int compared = 0;
  for (auto& e : fs::recursive_directory_iterator(out("a"))) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    auto rel_path = fs::relative(e.path(), out("a"));
    EXPECT_EQ(slurp(e.path()), slurp(fs::path(out("b")) / rel_path)) << rel_path;
    ++compared;
  }
  EXPECT_GT(compared, 3);
  auto eq = json::parse(slurp(out("a") + "/nf_equilibria.json"));
  EXPECT_EQ(eq["region"], "D2");
  EXPECT_EQ(run(args + " --check --out-dir " + out("a")).code, 0);
  std::ofstream(out("a") + "/nf_lines.json", std::ios::app) << " ";
  auto r = run(args + " --check --out-dir " + out("a"));
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(json::parse(r.err)["files"][0], "nf_lines.json");
}

TEST_F(Cli, ManifestListsOutputsAndHashes) {
  write("m.json", R"({"m": 5, "a": 3, "b": 0.1, "s": 0.2679, "d1": 0.01195, "d2": 4})");
  ASSERT_EQ(run("--model " + out("m.json") + " --out-dir " + out("d") + " dispersion --kmax 4").code, 0);
  auto m = json::parse(slurp(out("d") + "/manifest.json"));
  EXPECT_EQ(m["command"], "dispersion");
  for (auto& f : m["outputs"]) EXPECT_TRUE(fs::exists(fs::path(out("d")) / f.get<std::string>()));
  ASSERT_EQ(m["inputs"].size(), 1u);
  const std::string hash = m["inputs"].begin().value();
  EXPECT_EQ(hash.size(), 64u);
  run("sh -c true; sha256sum " + out("m.json"));
  EXPECT_EQ(slurp(dir_ / "stdout").substr(0, 64), hash);
  EXPECT_TRUE(m.contains("wall_time_s") && m.contains("version") && m.contains("parameters"));
  std::ifstream csv(out("d") + "/dispersion.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, "k,mu,trace,det,lambda1_re,lambda1_im,lambda2_re,lambda2_im");
  EXPECT_EQ(row.find('\r'), std::string::npos);
}

TEST_F(Cli, TtPointAndTuringCurves) {
  ASSERT_EQ(run("--set 1 --out-dir " + out("t") + " tt-point").code, 0);
  auto j = json::parse(slurp(out("t") + "/tt_point.json"));
  EXPECT_LT(rel(j["d_star"].get<double>(), 0.0056), 1e-2);
  EXPECT_EQ(j["k0_star"], 2);
  EXPECT_TRUE(j["spectrum"]["ok"].get<bool>());
  ASSERT_EQ(run("--set 2 --out-dir " + out("c") + " turing-curves --kmax 3 --samples 20").code, 0);
  EXPECT_TRUE(fs::exists(out("c") + "/turing_curves.csv"));
}
