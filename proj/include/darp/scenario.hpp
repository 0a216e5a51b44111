#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "darp/agent.hpp"
#include "darp/flow_dynamics.hpp"
#include "darp/rl_env.hpp"

namespace darp {

// A self-contained experiment description: document plus a seed determines
// the network, the flow process, and every training/evaluation draw.
struct ScenarioDocument {
  int version = 1;
  std::uint64_t seed = 1;

  int width_cells = 5;
  int height_cells = 5;
  std::pair<double, double> dist_range{100.0, 1000.0};

  ScenarioConfig flows{};  // flows.seed is derived per env, not stored

  GridCoord origin{0, 0};
  GridCoord destination{5, 5};

  RewardConfig reward{};
  AgentConfig agent{};

  int eval_runs = 10;
  int eval_t_max = 2000;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  RoadNetwork build_network() const;

  // Single-episode env factories over a prebuilt network (which must
  // outlive them): training uses agent.t_max, evaluation eval_t_max.
  EnvFactory make_train_factory(const RoadNetwork& net) const;
  EnvFactory make_eval_factory(const RoadNetwork& net) const;

  std::string to_json_string() const;
  static ScenarioDocument from_json_string(const std::string& text);

  void save(const std::string& path) const;
  static ScenarioDocument load(const std::string& path);
};

// Draws `count` distinct congested nodes for a scenario seed.
std::vector<NodeId> pick_congested_nodes(int count, int node_count,
                                         std::uint64_t seed);

struct MethodRun {
  std::uint64_t seed = 0;
  double seconds = 0.0;
  int steps = 0;
  bool completed = false;
};

struct MethodResult {
  std::string name;
  std::vector<MethodRun> runs;
  double mean_seconds = 0.0;  // completed runs only; NaN if none
  int failures = 0;
};

// Comparison output with enough data to regenerate the curves offline.
struct ResultsDocument {
  int version = 1;
  std::string artifact_version;
  ScenarioDocument scenario;
  std::uint64_t compare_seed = 0;
  int runs = 0;
  int eval_t_max = 0;
  std::vector<std::uint64_t> trace_hashes;  // one per run, method-invariant
  std::vector<MethodResult> methods;
  // "(t_base - t_darp) / t_base" per baseline, when darp was compared.
  std::vector<std::pair<std::string, double>> savings;
  std::vector<EvalPoint> training_curve;  // echoed when available

  std::string to_json_string() const;
  static ResultsDocument from_json_string(const std::string& text);

  void save(const std::string& path) const;
  static ResultsDocument load(const std::string& path);
};

}  // namespace darp
