#include "darp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace darp {

bool is_known_method(const std::string& name) {
  return name == "darp" || name == "shortest" || name == "random" ||
         name == "oracle" || name == "tabular";
}

namespace {

double mean_over_completed(const std::vector<MethodRun>& runs, int* failures) {
  double sum = 0.0;
  int completed = 0;
  *failures = 0;
  for (const MethodRun& r : runs) {
    if (r.completed) {
      sum += r.seconds;
      ++completed;
    } else {
      ++*failures;
    }
  }
  return completed > 0 ? sum / completed
                       : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ResultsDocument run_compare(const ScenarioDocument& scenario,
                            const DuelingNet* net,
                            const CompareOptions& options) {
  scenario.validate();
  if (options.runs < 1) {
    throw std::invalid_argument("compare: runs must be >= 1");
  }
  if (options.methods.empty()) {
    throw std::invalid_argument("compare: no methods requested");
  }
  for (const std::string& m : options.methods) {
    if (!is_known_method(m)) {
      throw std::invalid_argument("compare: unknown method " + m);
    }
  }
  const bool wants_darp =
      std::find(options.methods.begin(), options.methods.end(), "darp") !=
      options.methods.end();
  if (wants_darp && net == nullptr) {
    throw std::invalid_argument("compare: method darp needs a checkpoint");
  }
  const bool wants_tabular =
      std::find(options.methods.begin(), options.methods.end(), "tabular") !=
      options.methods.end();

  const RoadNetwork road = scenario.build_network();
  const EnvFactory make_env = scenario.make_eval_factory(road);
  const NodeId origin = road.node_id(scenario.origin);
  const NodeId destination = road.node_id(scenario.destination);

  // The distance-shortest baseline plans once and never replans.
  const PlannedRoute shortest = a_star(road, origin, destination);

  QTable table;
  if (wants_tabular) {
    TabularQConfig tcfg;
    tcfg.gamma = scenario.agent.gamma;
    table = tabular_q_train(scenario.make_train_factory(road), tcfg,
                            derive_seed(options.seed, seed_stream::tabular))
                .table;
  }

  ResultsDocument results;
  results.artifact_version = kArtifactVersion;
  results.scenario = scenario;
  results.compare_seed = options.seed;
  results.runs = options.runs;
  results.eval_t_max = scenario.eval_t_max;

  const std::uint64_t run_base = derive_seed(options.seed, seed_stream::run);
  std::vector<std::uint64_t> env_seeds;
  for (int r = 0; r < options.runs; ++r) {
    const std::uint64_t env_seed = derive_seed(run_base, r);
    env_seeds.push_back(env_seed);
    results.trace_hashes.push_back(
        realize_trace(road, scenario.flows, scenario.eval_t_max, env_seed)
            .hash());
  }

  for (const std::string& name : options.methods) {
    MethodResult method;
    method.name = name;
    for (int r = 0; r < options.runs; ++r) {
      const std::uint64_t env_seed = env_seeds[r];
      RouteEnv env = make_env(env_seed);
      ExecutionResult exec;
      if (name == "darp") {
        exec = execute_policy(env, net_policy(*net));
      } else if (name == "shortest") {
        exec = execute_policy(env, route_follower(shortest));
      } else if (name == "random") {
        const std::uint64_t policy_seed =
            derive_seed(derive_seed(options.seed, seed_stream::method_random),
                        r);
        exec = execute_policy(env, random_policy(policy_seed));
      } else if (name == "oracle") {
        const FlowTrace trace = realize_trace(road, scenario.flows,
                                              scenario.eval_t_max, env_seed);
        const OracleResult oracle =
            time_expanded_optimal(road, trace, origin, destination);
        if (!oracle.feasible) {
          method.runs.push_back({env_seed, 0.0, 0, false});
          continue;
        }
        exec = execute_policy(env, route_follower(oracle.route));
      } else {  // tabular
        exec = execute_policy(env, table_policy(table));
      }
      method.runs.push_back(
          {env_seed, exec.seconds, exec.steps, exec.completed});
    }
    method.mean_seconds = mean_over_completed(method.runs, &method.failures);
    results.methods.push_back(std::move(method));
  }

  if (wants_darp) {
    double darp_mean = std::numeric_limits<double>::quiet_NaN();
    for (const MethodResult& m : results.methods) {
      if (m.name == "darp") {
        darp_mean = m.mean_seconds;
      }
    }
    for (const MethodResult& m : results.methods) {
      if (m.name == "darp") {
        continue;
      }
      results.savings.emplace_back(
          "darp_vs_" + m.name, (m.mean_seconds - darp_mean) / m.mean_seconds);
    }
  }
  return results;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out,
                       const std::vector<EpisodeMetrics>& rows) {
  out << "episode,cumulative_reward,seconds,steps,reached\n";
  for (const EpisodeMetrics& m : rows) {
    out << m.episode << ',' << fmt_double(m.cumulative_reward) << ','
        << fmt_double(m.seconds) << ',' << m.steps << ','
        << (m.reached ? 1 : 0) << '\n';
  }
}

std::vector<EpisodeMetrics> read_metrics_csv(std::istream& in) {
  std::vector<EpisodeMetrics> rows;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("metrics csv: empty file");
  }
  while (std::getline(in, line)) {
    EpisodeMetrics m;
    int reached = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%d,%d", &m.episode,
                    &m.cumulative_reward, &m.seconds, &m.steps,
                    &reached) != 5) {
      throw std::runtime_error("metrics csv: malformed row: " + line);
    }
    m.reached = reached != 0;
    rows.push_back(m);
  }
  return rows;
}

void write_eval_curve_csv(std::ostream& out,
                          const std::vector<EvalPoint>& rows) {
  out << "checkpoint,episode,mean_seconds,failures\n";
  for (const EvalPoint& p : rows) {
    out << p.checkpoint << ',' << p.episode << ','
        << fmt_double(p.mean_seconds) << ',' << p.failures << '\n';
  }
}

std::vector<EvalPoint> read_eval_curve_csv(std::istream& in) {
  std::vector<EvalPoint> rows;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("eval curve csv: empty file");
  }
  while (std::getline(in, line)) {
    EvalPoint p;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%d", &p.checkpoint, &p.episode,
                    &p.mean_seconds, &p.failures) != 4) {
      throw std::runtime_error("eval curve csv: malformed row: " + line);
    }
    rows.push_back(p);
  }
  return rows;
}

void write_compare_csv(std::ostream& out, const ResultsDocument& results) {
  out << "method,run,seed,seconds,steps,completed\n";
  for (const MethodResult& m : results.methods) {
    for (std::size_t r = 0; r < m.runs.size(); ++r) {
      const MethodRun& run = m.runs[r];
      out << m.name << ',' << r << ',' << run.seed << ','
          << fmt_double(run.seconds) << ',' << run.steps << ','
          << (run.completed ? 1 : 0) << '\n';
    }
  }
}

}  // namespace darp
