// Copyright 2026 The gridtopo Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kCli = GRIDTOPO_CLI;
const std::string kFixtures = GRIDTOPO_FIXTURES;

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (const std::size_t n = fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const std::string& name) { return kFixtures + "/" + name; }

// Value printed after "label: " on its own line.
double reported(const std::string& out, const std::string& label) {
  const auto at = out.find(label + ": ");
  if (at == std::string::npos) return std::nan("");
  return std::stod(out.substr(at + label.size() + 2));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gridtopo_cli_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, EvaluatePathUnderCoherence) {
  const Outcome r = run("evaluate " + fixture("path3.json") + " --metric coherence");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("topology term: 1.333333333\n"), std::string::npos) << r.out;
}

TEST_F(Cli, EvaluateTriangleUnderLosses) {
  const Outcome r = run("evaluate " + fixture("triangle.json") + " --metric losses");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("topology term: 2.000000000\n"), std::string::npos) << r.out;
}

TEST_F(Cli, EvaluateGramianAgrees) {
  const Outcome r = run("evaluate " + fixture("triangle.json") + " --gramian --metric frequency");
  ASSERT_EQ(r.code, 0) << r.out;
  const double closed = reported(r.out, "H2 squared cost");
  const double gram = reported(r.out, "gramian H2 squared cost");
  EXPECT_NEAR(closed, gram, 1e-8 * closed);
}

TEST_F(Cli, SingleBusEnergyIsScalarIntegral) {
  // s0 / (2 M d) with s0 = 3, M = 2, d = 0.5.
  const double expected = 3.0 / (2.0 * 2.0 * 0.5);
  const Outcome e = run("evaluate " + fixture("single_bus.json"));
  ASSERT_EQ(e.code, 0) << e.out;
  EXPECT_NEAR(reported(e.out, "H2 squared cost"), expected, 1e-9);
  const Outcome s = run("simulate " + fixture("single_bus.json") +
                        " --impulse-bus 7 --horizon 100 --dt 0.01");
  ASSERT_EQ(s.code, 0) << s.out;
  EXPECT_NEAR(reported(s.out, "output energy"), expected, 1e-6 * expected);
}

TEST_F(Cli, ExitCodesFollowTheContract) {
  EXPECT_EQ(run("evaluate " + fixture("split.json")).code, 2);
  EXPECT_EQ(run("design " + fixture("split.json") + " --mode augment --budget 1").code, 2);
  for (const char* f : {"missing_reference.json", "duplicate_line.json",
                        "nonpositive_susceptance.json", "zero_inertia.json"}) {
    EXPECT_EQ(run("evaluate " + fixture(std::string("malformed/") + f)).code, 3) << f;
  }
  EXPECT_EQ(run("design " + fixture("four_node.json") + " --mode radial --budget 4").code, 3);
  EXPECT_EQ(run("design " + fixture("split.json") + " --mode mesh --budget 3").code, 4);
  EXPECT_EQ(run("simulate " + fixture("path3.json") + " --impulse-bus 2 --dt 5").code, 5);
  EXPECT_EQ(run("evaluate " + fixture("malformed/truncated.json")).code, 1);
  EXPECT_EQ(run("evaluate " + fixture("absent.json")).code, 1);
  EXPECT_EQ(run("evaluate " + fixture("path3.json") + " --metric nonsense").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, RadialDesignKeepsBridgeAndRoundTrips) {
  const std::string out = path("radial.json");
  const Outcome r =
      run("design " + fixture("four_node.json") + " --mode radial --out " + out);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto doc = nlohmann::json::parse(slurp(out));
  bool bridge = false;
  for (const auto& l : doc["solution"]["lines"]) {
    bridge = bridge || (l["from"] == 0 && l["to"] == 1);
  }
  EXPECT_TRUE(bridge);
  EXPECT_EQ(doc["solution"]["selected"].size(), 3u);

  // The three spanning trees all contain line 0; the oracle picks the best.
  const double stored = doc["solution"]["objective"].get<double>();
  const Outcome brute = run("design " + fixture("four_node.json") +
                            " --mode radial --solver brute --out " + path("brute.json"));
  ASSERT_EQ(brute.code, 0) << brute.out;
  const auto bdoc = nlohmann::json::parse(slurp(path("brute.json")));
  EXPECT_EQ(bdoc["solution"]["selected"], doc["solution"]["selected"]);
  EXPECT_NEAR(bdoc["solution"]["objective"].get<double>(), stored, 1e-9);

  const Outcome again =
      run("evaluate " + fixture("four_node.json") + " --lines-from " + out);
  ASSERT_EQ(again.code, 0) << again.out;
  char expect[64];
  std::snprintf(expect, sizeof expect, "topology term: %.9f\n", stored);
  EXPECT_NE(again.out.find(expect), std::string::npos) << again.out;
}

TEST_F(Cli, LooseBoundsReachTheSameOptimum) {
  const std::string base = "design " + fixture("four_node.json") + " --mode radial";
  ASSERT_EQ(run(base + " --out " + path("auto.json")).code, 0);
  ASSERT_EQ(run(base + " --bounds loose --tighten off --out " + path("loose.json")).code, 0);
  const auto a = nlohmann::json::parse(slurp(path("auto.json")));
  const auto l = nlohmann::json::parse(slurp(path("loose.json")));
  EXPECT_EQ(a["solution"]["selected"], l["solution"]["selected"]);
  EXPECT_EQ(l["problem"]["bounds"], "loose");
  EXPECT_FALSE(l["problem"]["tighten"].get<bool>());
}

TEST_F(Cli, MeshDesignOnTriangle) {
  const Outcome r = run("design " + fixture("triangle.json") +
                        " --mode mesh --budget 2 --metric coherence --out " + path("m.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto doc = nlohmann::json::parse(slurp(path("m.json")));
  // All three trees tie at 4/3; the lexicographically smallest selection wins.
  EXPECT_NEAR(doc["solution"]["objective"].get<double>(), 4.0 / 3.0, 1e-9);
  EXPECT_EQ(doc["solution"]["selected"], nlohmann::json({1, 2}));
}

TEST_F(Cli, ExportModelWritesLpFormat) {
  const Outcome r = run("design " + fixture("four_node.json") +
                        " --mode radial --export-model " + path("m.lp"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string lp = slurp(path("m.lp"));
  for (const char* section : {"Minimize", "Subject To", "Bounds", "Binaries", "End"}) {
    EXPECT_NE(lp.find(section), std::string::npos) << section;
  }
}

TEST_F(Cli, SimulationCsvIsDeterministic) {
  const std::string args = "simulate " + fixture("path3.json") +
                           " --impulse-bus 2 --horizon 20 --dt 0.01 --stride 10 --out ";
  ASSERT_EQ(run(args + path("a.csv")).code, 0);
  ASSERT_EQ(run(args + path("b.csv")).code, 0);
  const std::string a = slurp(path("a.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "t,theta_0,theta_1,theta_2,omega_0,omega_1,omega_2,fc,f");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 200 + 1);
}

TEST_F(Cli, HalvingTheStepBarelyMovesTheEnergy) {
  const std::string args = "simulate " + fixture("path3.json") + " --impulse-bus 1 --horizon 60";
  const double coarse = reported(run(args + " --dt 0.02").out, "output energy");
  const double fine = reported(run(args + " --dt 0.01").out, "output energy");
  ASSERT_TRUE(std::isfinite(coarse) && std::isfinite(fine));
  EXPECT_LT(std::abs(coarse - fine), 1e-3 * fine);
}

TEST_F(Cli, CompareListsEveryTopology) {
  ASSERT_EQ(run("design " + fixture("triangle.json") + " --mode mesh --budget 2 --out " +
                path("d.json")).code,
            0);
  const Outcome r = run("compare " + fixture("triangle.json") + " " + path("d.json") +
                        " --impulse-bus 1 --horizon 30");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("existing"), std::string::npos);
  EXPECT_NE(r.out.find("d.json"), std::string::npos);
  EXPECT_NE(r.out.find("peak |omega|"), std::string::npos);
}

}  // namespace
