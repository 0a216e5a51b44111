#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "darp/baselines.hpp"
#include "darp/scenario.hpp"

namespace darp {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Methods the comparison harness understands.
//   darp     - greedy policy of a trained dueling network
//   shortest - A* minimum-distance route, planned once, never replanned
//   random   - uniform random valid step
//   oracle   - time-expanded optimum over the realized flow trace
//   tabular  - greedy policy of a tabular Q-learner trained on the scenario
bool is_known_method(const std::string& name);

struct CompareOptions {
  std::vector<std::string> methods{"darp", "shortest", "random", "oracle"};
  int runs = 10;
  std::uint64_t seed = 1;
};

// Evaluates each method over `runs` seeded episodes. Every method in one
// run faces the identical flow trace (the flow process is exogenous and
// seed-determined); the trace hash per run is recorded as evidence.
// Requires a trained net iff "darp" is requested; trains the tabular
// reference internally iff "tabular" is requested.
ResultsDocument run_compare(const ScenarioDocument& scenario,
                            const DuelingNet* net,
                            const CompareOptions& options);

// Per-episode training metrics as CSV (deterministic formatting).
void write_metrics_csv(std::ostream& out,
                       const std::vector<EpisodeMetrics>& rows);
std::vector<EpisodeMetrics> read_metrics_csv(std::istream& in);

// Greedy-checkpoint curve as CSV.
void write_eval_curve_csv(std::ostream& out,
                          const std::vector<EvalPoint>& rows);
std::vector<EvalPoint> read_eval_curve_csv(std::istream& in);

// Per-run comparison rows as CSV.
void write_compare_csv(std::ostream& out, const ResultsDocument& results);

}  // namespace darp
