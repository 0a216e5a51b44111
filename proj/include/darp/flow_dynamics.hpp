#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "darp/grid_network.hpp"
#include "darp/rng.hpp"

namespace darp {

// ARIMA(O1, d, O2) parameters for the per-edge pedestrian flow process.
// The differenced series w = diff^d(p) follows
//   w(t) = mean_drift + sum_k ar_coeffs[k] * w(t-1-k) + eps(t),
// with eps(t) ~ Gaussian(0, noise_var). The benchmark runs O1 = 1, O2 = 0;
// MA coefficients are stored but never drive the recursion.
struct ArimaParams {
  int ar_order = 1;    // O1
  int ma_order = 0;    // O2
  int diff_order = 1;  // d
  std::vector<double> ar_coeffs{0.6};  // lambda_k
  std::vector<double> ma_coeffs{};     // mu_k
  double noise_var = 400.0;            // delta^2
  double mean_drift = 0.0;             // constant term of the differenced process

  // AR(1) stationarity; vacuously true for pure-noise models.
  bool stationary() const;

  // Smallest history (in flow levels) the recursion can run from.
  int min_history() const;
};

// Benchmark default when no fitted series is supplied.
ArimaParams default_arima();

// Diagnostics from fit_ar, for tolerance bookkeeping.
struct ArFitStats {
  double lambda_se = 0.0;  // standard error of the AR coefficient
  int n_obs = 0;           // regression pairs used
};

// Applies the difference operator `order` times; order 0 is the identity.
// Throws if the series is too short.
std::vector<double> difference(const std::vector<double>& series, int order);

// Least-squares fit of w(t) = c + lambda_1 w(t-1) + eps on the d-times
// differenced series. Residual variance uses the unbiased (n-2) estimator.
// Throws std::invalid_argument on short input and DegenerateSeriesError when
// the differenced series has (numerically) zero variance.
ArimaParams fit_ar(const std::vector<double>& series, int diff_order,
                   ArFitStats* stats = nullptr);

struct DegenerateSeriesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterates the AR recursion `horizon` steps past the end of `history`
// (flow levels) and re-integrates back to levels, clamping at zero.
// with_noise = false gives the deterministic conditional-mean forecast.
std::vector<double> forecast(const ArimaParams& params,
                             const std::vector<double>& history, int horizon,
                             bool with_noise, std::uint64_t seed);

// Scenario knobs for flow initialization: uniform base flows everywhere,
// Gaussian-heavy flows on every edge touching a congested node.
struct ScenarioConfig {
  std::pair<double, double> base_flow_range{200.0, 1000.0};
  std::vector<NodeId> congested_nodes{};
  double congested_mean = 5000.0;
  double congested_var = 1000.0;
  bool var_is_std = false;  // reinterpret congested_var as a std deviation
  ArimaParams arima = default_arima();
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument with the field name
};

// Directional pedestrian-flow state over a road network. Mirrors the
// distance matrix's sentinel structure; p_ij and p_ji evolve independently.
class FlowState {
 public:
  double flow(NodeId i, NodeId j) const {
    return flows_[static_cast<std::size_t>(i) * n_ + j];
  }
  int time_slot() const { return t_; }
  int directed_edge_count() const { return static_cast<int>(edges_.size()); }

  // Raw matrix (n*n row-major, -1 sentinels), for hashing and traces.
  const std::vector<double>& matrix() const { return flows_; }

  // Level history of a directed edge, oldest first (test hook).
  const std::vector<double>& history(NodeId i, NodeId j) const;

  friend FlowState init_flows(const RoadNetwork& net,
                              const ScenarioConfig& cfg);
  friend void step_flows(FlowState& state, const ArimaParams& params,
                         Rng& rng);

 private:
  struct DirectedEdge {
    NodeId from = 0;
    NodeId to = 0;
    std::vector<double> history;  // last levels, oldest first
  };

  int n_ = 0;
  int t_ = 0;
  std::vector<double> flows_;
  std::vector<DirectedEdge> edges_;
};

// Builds the initial flow matrix from the scenario: every directed edge gets
// a uniform draw from the base range; edges incident to a congested node get
// a Gaussian(congested_mean, congested_var) draw, clamped at zero. History
// buffers are back-cast constant at the initial level.
FlowState init_flows(const RoadNetwork& net, const ScenarioConfig& cfg);

// Advances every directed edge one time slot through the AR recursion with
// noise from `rng` (one Gaussian per directed edge, fixed edge order).
void step_flows(FlowState& state, const ArimaParams& params, Rng& rng);

// One-column CSV of counts, optional header row, one value per line.
// Throws std::runtime_error on empty or malformed input.
std::vector<double> read_flow_csv(std::istream& in);

}  // namespace darp
