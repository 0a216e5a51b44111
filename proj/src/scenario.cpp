#include "darp/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace darp {

using nlohmann::json;

namespace {

// Pulls a required key, rethrowing with the field path on type errors.
template <typename T>
T require(const json& j, const char* section, const char* key) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string("scenario: missing field ") +
                                section + "." + key);
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("scenario: bad value for ") +
                                section + "." + key);
  }
}

// nlohmann emits NaN as null; means over zero completed runs come back.
double require_double_or_nan(const json& j, const char* section,
                             const char* key) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string("results: missing field ") +
                                section + "." + key);
  }
  const json& v = j.at(key);
  if (v.is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (!v.is_number()) {
    throw std::invalid_argument(std::string("results: bad value for ") +
                                section + "." + key);
  }
  return v.get<double>();
}

json coord_json(GridCoord c) { return json::array({c.x, c.y}); }

GridCoord coord_from(const json& j, const char* section, const char* key) {
  const json v = require<json>(j, section, key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer()) {
    throw std::invalid_argument(std::string("scenario: ") + section + "." +
                                key + " must be [x, y]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

void ScenarioDocument::validate() const {
  if (width_cells < 1 || height_cells < 1) {
    throw std::invalid_argument("scenario: grid cells must be >= 1");
  }
  if (dist_range.first < 0.0 || dist_range.second < dist_range.first) {
    throw std::invalid_argument("scenario: grid.dist_range is inverted");
  }
  flows.validate();
  reward.validate();
  agent.validate();
  const int w = width_cells + 1;
  const int h = height_cells + 1;
  auto on_grid = [&](GridCoord c) {
    return c.x >= 0 && c.x < w && c.y >= 0 && c.y < h;
  };
  if (!on_grid(origin) || !on_grid(destination)) {
    throw std::invalid_argument("scenario: route endpoint off the grid");
  }
  if (origin == destination) {
    throw std::invalid_argument("scenario: origin equals destination");
  }
  for (NodeId v : flows.congested_nodes) {
    if (v < 0 || v >= w * h) {
      throw std::invalid_argument("scenario: congested node off the grid");
    }
  }
  if (eval_runs < 1 || eval_t_max < 1) {
    throw std::invalid_argument("scenario: eval runs/t_max must be >= 1");
  }
}

RoadNetwork ScenarioDocument::build_network() const {
  return RoadNetwork::build_grid(width_cells, height_cells, dist_range, seed);
}

EnvFactory ScenarioDocument::make_train_factory(const RoadNetwork& net) const {
  return [&net, cfg = flows, o = origin, d = destination, r = reward,
          t = agent.t_max](std::uint64_t s) {
    return RouteEnv(net, cfg, o, d, r, t, s);
  };
}

EnvFactory ScenarioDocument::make_eval_factory(const RoadNetwork& net) const {
  return [&net, cfg = flows, o = origin, d = destination, r = reward,
          t = eval_t_max](std::uint64_t s) {
    return RouteEnv(net, cfg, o, d, r, t, s);
  };
}

std::vector<NodeId> pick_congested_nodes(int count, int node_count,
                                         std::uint64_t seed) {
  if (count < 0 || count > node_count) {
    throw std::invalid_argument("scenario: congested node count out of range");
  }
  std::vector<NodeId> ids(node_count);
  for (int i = 0; i < node_count; ++i) {
    ids[i] = i;
  }
  Rng rng(derive_seed(seed, seed_stream::congested_pick));
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<int> pick(k, node_count - 1);
    std::swap(ids[k], ids[pick(rng)]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string ScenarioDocument::to_json_string() const {
  json j;
  j["schema"] = "darp-scenario";
  j["version"] = version;
  j["seed"] = seed;
  j["grid"] = {{"width_cells", width_cells},
               {"height_cells", height_cells},
               {"dist_range", {dist_range.first, dist_range.second}}};
  j["flows"] = {
      {"base_range", {flows.base_flow_range.first, flows.base_flow_range.second}},
      {"congested_nodes", flows.congested_nodes},
      {"congested_mean", flows.congested_mean},
      {"congested_var", flows.congested_var},
      {"var_is_std", flows.var_is_std}};
  j["arima"] = {{"ar_order", flows.arima.ar_order},
                {"ma_order", flows.arima.ma_order},
                {"diff_order", flows.arima.diff_order},
                {"ar_coeffs", flows.arima.ar_coeffs},
                {"ma_coeffs", flows.arima.ma_coeffs},
                {"noise_var", flows.arima.noise_var},
                {"mean_drift", flows.arima.mean_drift}};
  j["route"] = {{"origin", coord_json(origin)},
                {"destination", coord_json(destination)}};
  j["reward"] = {
      {"w_r", reward.w_r},
      {"goal_bonus", reward.goal_bonus},
      {"shaping",
       reward.sign == RewardConfig::ShapingSign::toward_positive
           ? "toward_positive"
           : "paper_literal"},
      {"time_unit", reward.time_unit}};
  j["agent"] = {{"gamma", agent.gamma},
                {"epsilon", agent.epsilon},
                {"batch_size", agent.batch_size},
                {"buffer_capacity", agent.buffer_capacity},
                {"learning_rate", agent.learning_rate},
                {"rms_decay", agent.rms_decay},
                {"rms_damping", agent.rms_damping},
                {"rms_raw_denominator", agent.rms_raw_denominator},
                {"target_sync_period", agent.target_sync_period},
                {"episodes", agent.episodes},
                {"t_max", agent.t_max},
                {"replay", agent.replay == ReplayMode::prioritized
                               ? "prioritized"
                               : "uniform"},
                {"priority_exponent", agent.priority_exponent},
                {"priority_floor", agent.priority_floor},
                {"beta_start", agent.beta_start},
                {"hidden_dim", agent.hidden_dim},
                {"eval_every", agent.eval_every},
                {"eval_runs", agent.eval_runs}};
  j["eval"] = {{"runs", eval_runs}, {"t_max", eval_t_max}};
  return j.dump(2) + "\n";
}

ScenarioDocument ScenarioDocument::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: not valid json: ") +
                                e.what());
  }
  if (require<std::string>(j, "", "schema") != "darp-scenario") {
    throw std::invalid_argument("scenario: wrong schema tag");
  }
  ScenarioDocument doc;
  doc.version = require<int>(j, "", "version");
  if (doc.version != 1) {
    throw std::invalid_argument("scenario: unsupported version");
  }
  doc.seed = require<std::uint64_t>(j, "", "seed");

  const json grid = require<json>(j, "", "grid");
  doc.width_cells = require<int>(grid, "grid", "width_cells");
  doc.height_cells = require<int>(grid, "grid", "height_cells");
  const auto range = require<std::vector<double>>(grid, "grid", "dist_range");
  if (range.size() != 2) {
    throw std::invalid_argument("scenario: grid.dist_range must be [lo, hi]");
  }
  doc.dist_range = {range[0], range[1]};

  const json flows = require<json>(j, "", "flows");
  const auto base = require<std::vector<double>>(flows, "flows", "base_range");
  if (base.size() != 2) {
    throw std::invalid_argument("scenario: flows.base_range must be [lo, hi]");
  }
  doc.flows.base_flow_range = {base[0], base[1]};
  doc.flows.congested_nodes =
      require<std::vector<NodeId>>(flows, "flows", "congested_nodes");
  doc.flows.congested_mean = require<double>(flows, "flows", "congested_mean");
  doc.flows.congested_var = require<double>(flows, "flows", "congested_var");
  doc.flows.var_is_std = require<bool>(flows, "flows", "var_is_std");

  const json arima = require<json>(j, "", "arima");
  doc.flows.arima.ar_order = require<int>(arima, "arima", "ar_order");
  doc.flows.arima.ma_order = require<int>(arima, "arima", "ma_order");
  doc.flows.arima.diff_order = require<int>(arima, "arima", "diff_order");
  doc.flows.arima.ar_coeffs =
      require<std::vector<double>>(arima, "arima", "ar_coeffs");
  doc.flows.arima.ma_coeffs =
      require<std::vector<double>>(arima, "arima", "ma_coeffs");
  doc.flows.arima.noise_var = require<double>(arima, "arima", "noise_var");
  doc.flows.arima.mean_drift = require<double>(arima, "arima", "mean_drift");

  const json route = require<json>(j, "", "route");
  doc.origin = coord_from(route, "route", "origin");
  doc.destination = coord_from(route, "route", "destination");

  const json reward = require<json>(j, "", "reward");
  doc.reward.w_r = require<double>(reward, "reward", "w_r");
  doc.reward.goal_bonus = require<double>(reward, "reward", "goal_bonus");
  const auto shaping = require<std::string>(reward, "reward", "shaping");
  if (shaping == "toward_positive") {
    doc.reward.sign = RewardConfig::ShapingSign::toward_positive;
  } else if (shaping == "paper_literal") {
    doc.reward.sign = RewardConfig::ShapingSign::paper_literal;
  } else {
    throw std::invalid_argument("scenario: reward.shaping must be "
                                "toward_positive or paper_literal");
  }
  doc.reward.time_unit = require<double>(reward, "reward", "time_unit");

  const json agent = require<json>(j, "", "agent");
  doc.agent.gamma = require<double>(agent, "agent", "gamma");
  doc.agent.epsilon = require<double>(agent, "agent", "epsilon");
  doc.agent.batch_size = require<int>(agent, "agent", "batch_size");
  doc.agent.buffer_capacity = require<int>(agent, "agent", "buffer_capacity");
  doc.agent.learning_rate = require<double>(agent, "agent", "learning_rate");
  doc.agent.rms_decay = require<double>(agent, "agent", "rms_decay");
  doc.agent.rms_damping = require<double>(agent, "agent", "rms_damping");
  doc.agent.rms_raw_denominator =
      require<bool>(agent, "agent", "rms_raw_denominator");
  doc.agent.target_sync_period =
      require<int>(agent, "agent", "target_sync_period");
  doc.agent.episodes = require<int>(agent, "agent", "episodes");
  doc.agent.t_max = require<int>(agent, "agent", "t_max");
  const auto replay = require<std::string>(agent, "agent", "replay");
  if (replay == "prioritized") {
    doc.agent.replay = ReplayMode::prioritized;
  } else if (replay == "uniform") {
    doc.agent.replay = ReplayMode::uniform;
  } else {
    throw std::invalid_argument(
        "scenario: agent.replay must be prioritized or uniform");
  }
  doc.agent.priority_exponent =
      require<double>(agent, "agent", "priority_exponent");
  doc.agent.priority_floor = require<double>(agent, "agent", "priority_floor");
  doc.agent.beta_start = require<double>(agent, "agent", "beta_start");
  doc.agent.hidden_dim = require<int>(agent, "agent", "hidden_dim");
  doc.agent.eval_every = require<int>(agent, "agent", "eval_every");
  doc.agent.eval_runs = require<int>(agent, "agent", "eval_runs");

  const json eval = require<json>(j, "", "eval");
  doc.eval_runs = require<int>(eval, "eval", "runs");
  doc.eval_t_max = require<int>(eval, "eval", "t_max");

  doc.validate();
  return doc;
}

void ScenarioDocument::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("scenario: cannot open " + path + " for write");
  }
  out << to_json_string();
  if (!out) {
    throw std::runtime_error("scenario: write failed for " + path);
  }
}

ScenarioDocument ScenarioDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("scenario: cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

namespace {

json method_json(const MethodResult& m) {
  json runs = json::array();
  for (const MethodRun& r : m.runs) {
    runs.push_back({{"seed", r.seed},
                    {"seconds", r.seconds},
                    {"steps", r.steps},
                    {"completed", r.completed}});
  }
  return {{"name", m.name},
          {"runs", runs},
          {"mean_seconds", m.mean_seconds},
          {"failures", m.failures}};
}

MethodResult method_from(const json& j) {
  MethodResult m;
  m.name = require<std::string>(j, "methods[]", "name");
  m.mean_seconds = require_double_or_nan(j, "methods[]", "mean_seconds");
  m.failures = require<int>(j, "methods[]", "failures");
  for (const json& r : require<json>(j, "methods[]", "runs")) {
    m.runs.push_back({require<std::uint64_t>(r, "runs[]", "seed"),
                      require<double>(r, "runs[]", "seconds"),
                      require<int>(r, "runs[]", "steps"),
                      require<bool>(r, "runs[]", "completed")});
  }
  return m;
}

}  // namespace

std::string ResultsDocument::to_json_string() const {
  json j;
  j["schema"] = "darp-results";
  j["version"] = version;
  j["artifact_version"] = artifact_version;
  j["scenario"] = json::parse(scenario.to_json_string());
  j["compare_seed"] = compare_seed;
  j["runs"] = runs;
  j["eval_t_max"] = eval_t_max;
  j["trace_hashes"] = trace_hashes;
  json ms = json::array();
  for (const MethodResult& m : methods) {
    ms.push_back(method_json(m));
  }
  j["methods"] = ms;
  json sv = json::object();
  for (const auto& [key, value] : savings) {
    sv[key] = value;
  }
  j["savings"] = sv;
  json curve = json::array();
  for (const EvalPoint& p : training_curve) {
    curve.push_back({{"checkpoint", p.checkpoint},
                     {"episode", p.episode},
                     {"mean_seconds", p.mean_seconds},
                     {"failures", p.failures}});
  }
  j["training_curve"] = curve;
  return j.dump(2) + "\n";
}

ResultsDocument ResultsDocument::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("results: not valid json: ") +
                                e.what());
  }
  if (require<std::string>(j, "", "schema") != "darp-results") {
    throw std::invalid_argument("results: wrong schema tag");
  }
  ResultsDocument doc;
  doc.version = require<int>(j, "", "version");
  doc.artifact_version = require<std::string>(j, "", "artifact_version");
  doc.scenario =
      ScenarioDocument::from_json_string(require<json>(j, "", "scenario").dump());
  doc.compare_seed = require<std::uint64_t>(j, "", "compare_seed");
  doc.runs = require<int>(j, "", "runs");
  doc.eval_t_max = require<int>(j, "", "eval_t_max");
  doc.trace_hashes =
      require<std::vector<std::uint64_t>>(j, "", "trace_hashes");
  for (const json& m : require<json>(j, "", "methods")) {
    doc.methods.push_back(method_from(m));
  }
  for (const auto& [key, value] : require<json>(j, "", "savings").items()) {
    doc.savings.emplace_back(
        key, value.is_null() ? std::numeric_limits<double>::quiet_NaN()
                             : value.get<double>());
  }
  for (const json& p : require<json>(j, "", "training_curve")) {
    doc.training_curve.push_back(
        {require<int>(p, "training_curve[]", "checkpoint"),
         require<int>(p, "training_curve[]", "episode"),
         require_double_or_nan(p, "training_curve[]", "mean_seconds"),
         require<int>(p, "training_curve[]", "failures")});
  }
  return doc;
}

void ResultsDocument::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("results: cannot open " + path + " for write");
  }
  out << to_json_string();
  if (!out) {
    throw std::runtime_error("results: write failed for " + path);
  }
}

ResultsDocument ResultsDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("results: cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

}  // namespace darp
