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

#include <sstream>

#include "gridtopo/io.hpp"

namespace gridtopo {
namespace {

const std::string kFixtures = GRIDTOPO_FIXTURES;
const std::string kData = GRIDTOPO_DATA;

nlohmann::json minimal() {
  return nlohmann::json::parse(R"({
    "schema": 1,
    "defaults": {"inertia": 2.0, "damping": 0.5},
    "buses": [{"id": 10, "is_reference": true}, {"id": 20}, {"id": 30, "inertia": 4.0}],
    "lines": [{"from": 10, "to": 20, "susceptance": 1.5},
              {"from": 20, "to": 30, "susceptance": 2.0, "status": "candidate"}]
  })");
}

ErrorKind kind_of(const nlohmann::json& doc) {
  try {
    parse_network(doc);
  } catch (const GridError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "document was accepted";
  return ErrorKind::numeric;
}

TEST(ParseNetwork, MapsIdsDefaultsAndStatus) {
  const PowerNetwork net = parse_network(minimal());
  EXPECT_EQ(net.n_buses(), 3);
  EXPECT_EQ(net.ids, (std::vector<int>{10, 20, 30}));
  EXPECT_EQ(net.reference, 0);
  EXPECT_DOUBLE_EQ(net.machines.inertia(0), 2.0);
  EXPECT_DOUBLE_EQ(net.machines.inertia(2), 4.0);
  EXPECT_DOUBLE_EQ(net.machines.damping(1), 0.5);
  ASSERT_EQ(net.lines.size(), 2u);
  EXPECT_EQ(net.lines[1].from, 1);
  EXPECT_EQ(net.lines[1].to, 2);
  EXPECT_EQ(net.lines[0].status, LineStatus::existing);
  EXPECT_EQ(net.lines[1].status, LineStatus::candidate);
  EXPECT_EQ(net.existing_lines().size(), 1u);
  EXPECT_EQ(net.index_of(30), 2);
  EXPECT_THROW(net.index_of(40), GridError);
}

TEST(ParseNetwork, DefaultMetricIsCoherenceAndOverrideWins) {
  const PowerNetwork net = parse_network(minimal());
  EXPECT_EQ(net.metric_name(std::nullopt), "coherence");
  const auto lines = net.existing_lines();
  const CoherenceSpec c = net.metric(std::nullopt, lines);
  const CoherenceSpec f = net.metric(MetricPreset::frequency, lines);
  EXPECT_DOUBLE_EQ(c.W(0, 0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.s(1), 1.0);
  EXPECT_EQ(net.metric_name(MetricPreset::losses), "losses");
}

TEST(ParseNetwork, ExplicitMetricBuildsLaplacianWeights) {
  nlohmann::json doc = minimal();
  doc["metric"] = nlohmann::json::parse(
      R"({"w": [{"from": 10, "to": 30, "weight": 2.5}], "s": [{"bus": 20, "weight": 0.25}]})");
  const PowerNetwork net = parse_network(doc);
  ASSERT_TRUE(net.explicit_metric.has_value());
  const CoherenceSpec& m = *net.explicit_metric;
  EXPECT_DOUBLE_EQ(m.W(0, 0), 2.5);
  EXPECT_DOUBLE_EQ(m.W(2, 2), 2.5);
  EXPECT_DOUBLE_EQ(m.W(0, 2), -2.5);
  EXPECT_DOUBLE_EQ(m.W(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(m.s(1), 0.25);
  EXPECT_EQ(net.metric_name(std::nullopt), "explicit");
}

TEST(ParseNetwork, RejectsStructuralProblems) {
  auto with = [](auto edit) {
    nlohmann::json doc = minimal();
    edit(doc);
    return kind_of(doc);
  };
  EXPECT_EQ(with([](auto& d) { d.erase("schema"); }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["schema"] = 2; }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["buses"][0]["is_reference"] = false; }),
            ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["buses"][1]["is_reference"] = true; }),
            ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["buses"][1]["id"] = 10; }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["lines"][0]["to"] = 99; }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["lines"][0]["to"] = 10; }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["lines"][0]["status"] = "planned"; }),
            ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["lines"][0]["susceptance"] = "1"; }),
            ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["metric"] = 3; }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["metric"] = "bogus"; }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d.erase("defaults"); }), ErrorKind::invalid_input);
  EXPECT_EQ(with([](auto& d) { d["buses"][1]["damping"] = -1.0; }), ErrorKind::assumption);
}

TEST(ParseNetwork, MalformedCorpusFiles) {
  const std::vector<std::pair<std::string, ErrorKind>> cases{
      {"missing_reference.json", ErrorKind::invalid_input},
      {"duplicate_line.json", ErrorKind::invalid_input},
      {"nonpositive_susceptance.json", ErrorKind::invalid_input},
      {"zero_inertia.json", ErrorKind::assumption},
  };
  for (const auto& [file, kind] : cases) {
    SCOPED_TRACE(file);
    EXPECT_EQ(kind_of(read_json_file(kFixtures + "/malformed/" + file)), kind);
  }
  EXPECT_THROW(read_json_file(kFixtures + "/malformed/truncated.json"), IoError);
  EXPECT_THROW(read_json_file(kFixtures + "/does_not_exist.json"), IoError);
}

TEST(ParseNetwork, ShippedBenchmarkFixtures) {
  const PowerNetwork full = load_network(kData + "/ieee39.json");
  EXPECT_EQ(full.n_buses(), 39);
  EXPECT_EQ(full.ids[full.reference], 31);
  EXPECT_EQ(full.existing_lines().size(), 46u);
  EXPECT_EQ(full.lines.size(), 56u);
  EXPECT_TRUE(is_connected(full.existing_lines(), full.n_buses()));
  ASSERT_TRUE(full.machines.uniform_damping().has_value());
  EXPECT_DOUBLE_EQ(*full.machines.uniform_damping(), 0.025);
  int light = 0;
  for (int i = 0; i < full.n_buses(); ++i) light += full.machines.inertia(i) == 1e-4;
  EXPECT_EQ(light, 29);

  const PowerNetwork west = load_network(kData + "/ieee39_west15.json");
  EXPECT_EQ(west.n_buses(), 15);
  EXPECT_TRUE(west.existing_lines().empty());
  EXPECT_TRUE(is_connected(west.lines, west.n_buses()));
}

DesignProblem radial_problem(const PowerNetwork& net) {
  DesignProblem p;
  p.n_buses = net.n_buses();
  p.reference = net.reference;
  p.candidates = net.lines;
  p.mode = DesignMode::radial;
  p.budget = net.n_buses() - 1;
  p.spec = net.metric(std::nullopt, net.lines);
  return p;
}

TEST(ResultFile, RoundTripReproducesObjective) {
  const PowerNetwork net = load_network(kFixtures + "/four_node.json");
  const DesignProblem p = radial_problem(net);
  DesignOptions opt;
  opt.bnb.params = net.machines;
  const DesignRun run = solve_design(p, opt);
  const nlohmann::json doc = result_json(net, p, run, {"four_node.json", "coherence", "auto", "bnb", true});

  const nlohmann::json back = nlohmann::json::parse(doc.dump());
  const std::vector<bool> z = selection_from_result(net, back);
  EXPECT_EQ(z, run.solution.z);
  const double stored = back["solution"]["objective"].get<double>();
  const double again = *evaluate_topology(p, z);
  EXPECT_LE(std::abs(stored - again), 1e-9 * std::max(1.0, std::abs(again)));

  EXPECT_EQ(back["tool"], "gridtopo");
  EXPECT_EQ(back["version"], GRIDTOPO_VERSION);
  EXPECT_EQ(back["problem"]["mode"], "radial");
  EXPECT_EQ(back["problem"]["budget_total"], 3);
  EXPECT_TRUE(back["solution"]["certified"].get<bool>());
  EXPECT_EQ(back["bounds"]["upper"].size(), 3u);
  EXPECT_EQ(back["stats"]["nodes_explored"], run.solution.stats.nodes_explored);
  EXPECT_NEAR(back["solution"]["h2_cost"].get<double>(), run.solution.h2->cost, 1e-15);
}

TEST(ResultFile, SelectionOutsideNetworkIsRejected) {
  const PowerNetwork net = load_network(kFixtures + "/path3.json");
  EXPECT_THROW(selection_from_result(net, {{"solution", {{"selected", {0, 5}}}}}), GridError);
  EXPECT_THROW(selection_from_result(net, {{"answer", 1}}), GridError);
  const auto z = selection_from_result(net, {{"solution", {{"selected", {1}}}}});
  EXPECT_EQ(z, (std::vector<bool>{false, true}));
}

}  // namespace
}  // namespace gridtopo
