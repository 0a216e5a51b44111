#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "darp/bench.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace darp;

namespace {

// A fast-to-run scenario for compare smoke tests.
ScenarioDocument tiny_scenario() {
  ScenarioDocument doc;
  doc.seed = 5;
  doc.width_cells = 2;
  doc.height_cells = 2;
  doc.destination = {2, 2};
  doc.agent.episodes = 10;
  doc.agent.t_max = 20;
  doc.agent.batch_size = 8;
  doc.agent.buffer_capacity = 64;
  doc.agent.hidden_dim = 8;
  doc.agent.eval_every = 0;
  doc.eval_runs = 3;
  doc.eval_t_max = 60;
  return doc;
}

}  // namespace

TEST_CASE("scenario defaults carry the benchmark values") {
  ScenarioDocument doc;
  CHECK(doc.width_cells == 5);
  CHECK(doc.height_cells == 5);
  CHECK(doc.dist_range == std::pair<double, double>{100.0, 1000.0});
  CHECK(doc.flows.base_flow_range == std::pair<double, double>{200.0, 1000.0});
  CHECK(doc.flows.congested_mean == 5000.0);
  CHECK(doc.flows.congested_var == 1000.0);
  CHECK(doc.reward.w_r == 1e-3);
  CHECK(doc.reward.time_unit == 60.0);
  CHECK(doc.agent.gamma == 0.95);
  CHECK(doc.agent.batch_size == 32);
  CHECK(doc.agent.buffer_capacity == 10000);
  CHECK(doc.agent.replay == ReplayMode::prioritized);
  CHECK(doc.flows.arima.ar_order == 1);
  CHECK(doc.flows.arima.ma_order == 0);

  const auto net = doc.build_network();
  CHECK(net.node_count() == 36);
  CHECK(net.edge_count() == 60);
  CHECK(net.free_speed() == 1.34);
}

TEST_CASE("scenario validation names the offending field") {
  ScenarioDocument doc;
  doc.dist_range = {800.0, 100.0};
  try {
    doc.validate();
    FAIL("expected a validation error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("dist_range") != std::string::npos);
  }

  ScenarioDocument same;
  same.origin = same.destination;
  CHECK_THROWS_AS(same.validate(), std::invalid_argument);

  ScenarioDocument off;
  off.flows.congested_nodes = {99};
  CHECK_THROWS_AS(off.validate(), std::invalid_argument);
}

TEST_CASE("scenario json round trip is exact") {
  ScenarioDocument doc;
  doc.seed = 123456789012345ULL;
  doc.flows.congested_nodes = {3, 17, 22};
  doc.flows.arima.ar_coeffs = {0.637281964502117};  // awkward double
  doc.flows.arima.noise_var = 123.45600000000002;
  doc.reward.sign = RewardConfig::ShapingSign::paper_literal;
  doc.agent.replay = ReplayMode::uniform;

  const std::string text = doc.to_json_string();
  const ScenarioDocument back = ScenarioDocument::from_json_string(text);
  CHECK(back.to_json_string() == text);
  CHECK(back.seed == doc.seed);
  CHECK(back.flows.arima.ar_coeffs[0] == doc.flows.arima.ar_coeffs[0]);
  CHECK(back.flows.arima.noise_var == doc.flows.arima.noise_var);
  CHECK(back.reward.sign == RewardConfig::ShapingSign::paper_literal);
  CHECK(back.agent.replay == ReplayMode::uniform);
}

TEST_CASE("scenario parsing reports missing and malformed fields") {
  CHECK_THROWS_AS(ScenarioDocument::from_json_string("not json"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ScenarioDocument::from_json_string("{}"),
                  std::invalid_argument);

  ScenarioDocument doc;
  std::string text = doc.to_json_string();
  // drop the grid section
  const auto pos = text.find("\"grid\"");
  REQUIRE(pos != std::string::npos);
  try {
    const auto end = text.find("},", pos) + 2;
    ScenarioDocument::from_json_string(text.substr(0, pos) +
                                       text.substr(end));
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("grid") != std::string::npos);
  }
}

TEST_CASE("congested node draws are deterministic and distinct") {
  const auto a = pick_congested_nodes(4, 36, 9);
  const auto b = pick_congested_nodes(4, 36, 9);
  CHECK(a == b);
  CHECK(a.size() == 4);
  const std::set<NodeId> unique(a.begin(), a.end());
  CHECK(unique.size() == 4);
  for (NodeId v : a) {
    CHECK(v >= 0);
    CHECK(v < 36);
  }
  CHECK(pick_congested_nodes(4, 36, 10) != a);
  CHECK_THROWS_AS(pick_congested_nodes(37, 36, 1), std::invalid_argument);
}

TEST_CASE("compare runs methods on identical traces") {
  const ScenarioDocument doc = tiny_scenario();
  CompareOptions options;
  options.methods = {"shortest", "random", "oracle"};
  options.runs = 3;
  options.seed = 11;

  const ResultsDocument results = run_compare(doc, nullptr, options);
  REQUIRE(results.methods.size() == 3);
  REQUIRE(results.trace_hashes.size() == 3);
  CHECK(results.artifact_version == kArtifactVersion);

  const MethodResult* oracle = nullptr;
  for (const MethodResult& m : results.methods) {
    CHECK(m.runs.size() == 3);
    if (m.name == "oracle") {
      oracle = &m;
    }
  }
  REQUIRE(oracle != nullptr);
  CHECK(oracle->failures == 0);

  // the oracle lower-bounds every completed run on the same trace
  for (const MethodResult& m : results.methods) {
    for (std::size_t r = 0; r < m.runs.size(); ++r) {
      if (m.runs[r].completed) {
        CHECK(oracle->runs[r].seconds <= m.runs[r].seconds + 1e-9);
      }
    }
  }
}

TEST_CASE("compare is deterministic and round-trips through json") {
  const ScenarioDocument doc = tiny_scenario();
  CompareOptions options;
  options.methods = {"shortest", "oracle", "tabular"};
  options.runs = 2;
  options.seed = 21;

  const ResultsDocument a = run_compare(doc, nullptr, options);
  const ResultsDocument b = run_compare(doc, nullptr, options);
  CHECK(a.to_json_string() == b.to_json_string());

  const ResultsDocument back =
      ResultsDocument::from_json_string(a.to_json_string());
  CHECK(back.to_json_string() == a.to_json_string());
}

TEST_CASE("compare with darp computes savings against every baseline") {
  const ScenarioDocument doc = tiny_scenario();
  const DuelingNet net =
      DuelingNet::glorot_init(2, doc.agent.hidden_dim, 4, 3);
  CompareOptions options;
  options.methods = {"darp", "shortest", "oracle"};
  options.runs = 2;
  options.seed = 31;

  const ResultsDocument results = run_compare(doc, &net, options);
  REQUIRE(results.savings.size() == 2);
  CHECK(results.savings[0].first == "darp_vs_shortest");
  CHECK(results.savings[1].first == "darp_vs_oracle");

  double darp_mean = 0.0, shortest_mean = 0.0;
  for (const MethodResult& m : results.methods) {
    if (m.name == "darp") darp_mean = m.mean_seconds;
    if (m.name == "shortest") shortest_mean = m.mean_seconds;
  }
  if (!std::isnan(darp_mean) && !std::isnan(shortest_mean)) {
    CHECK(results.savings[0].second ==
          doctest::Approx((shortest_mean - darp_mean) / shortest_mean));
  }

  CHECK_THROWS_AS(run_compare(doc, nullptr, options), std::invalid_argument);

  CompareOptions bad = options;
  bad.methods = {"telepath"};
  CHECK_THROWS_AS(run_compare(doc, &net, bad), std::invalid_argument);
}

TEST_CASE("metrics csv round trip") {
  std::vector<EpisodeMetrics> rows{{0, -12.5, 3400.25, 40, false},
                                   {1, -7.0625, 2000.0, 17, true}};
  std::stringstream buf;
  write_metrics_csv(buf, rows);
  const auto back = read_metrics_csv(buf);
  REQUIRE(back.size() == 2);
  CHECK(back[0].cumulative_reward == rows[0].cumulative_reward);
  CHECK(back[1].seconds == rows[1].seconds);
  CHECK(back[1].reached);
  CHECK(!back[0].reached);

  std::stringstream bad("episode\nnot,a,row\n");
  CHECK_THROWS_AS(read_metrics_csv(bad), std::runtime_error);
}

TEST_CASE("eval curve csv round trip") {
  std::vector<EvalPoint> rows{{0, 9, 5123.75, 1}, {1, 19, 4100.5, 0}};
  std::stringstream buf;
  write_eval_curve_csv(buf, rows);
  const auto back = read_eval_curve_csv(buf);
  REQUIRE(back.size() == 2);
  CHECK(back[0].mean_seconds == rows[0].mean_seconds);
  CHECK(back[1].episode == 19);
}

TEST_CASE("compare csv lists every run of every method") {
  const ScenarioDocument doc = tiny_scenario();
  CompareOptions options;
  options.methods = {"shortest", "random"};
  options.runs = 2;
  options.seed = 41;
  const ResultsDocument results = run_compare(doc, nullptr, options);
  std::stringstream buf;
  write_compare_csv(buf, results);
  int lines = 0;
  std::string line;
  while (std::getline(buf, line)) {
    ++lines;
  }
  CHECK(lines == 1 + 2 * 2);
}

TEST_CASE("scenario and results files save and load") {
  const ScenarioDocument doc = tiny_scenario();
  const std::string dir = "bench_test_tmp";
  std::filesystem::create_directories(dir);
  doc.save(dir + "/scenario.json");
  const auto loaded = ScenarioDocument::load(dir + "/scenario.json");
  CHECK(loaded.to_json_string() == doc.to_json_string());

  CompareOptions options;
  options.methods = {"shortest"};
  options.runs = 1;
  const ResultsDocument results = run_compare(doc, nullptr, options);
  results.save(dir + "/results.json");
  const auto results_back = ResultsDocument::load(dir + "/results.json");
  CHECK(results_back.to_json_string() == results.to_json_string());

  CHECK_THROWS_AS(ScenarioDocument::load(dir + "/missing.json"),
                  std::runtime_error);
  std::filesystem::remove_all(dir);
}
