#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "darp/rl_env.hpp"

namespace darp {

// A node sequence from origin to destination on the static network.
struct PlannedRoute {
  std::vector<NodeId> nodes;
  double planned_distance = 0.0;  // meters over the sequence
};

// Uniform draw over the actions valid at the env's current position.
Action random_policy_step(const RouteEnv& env, Rng& rng);

// A self-seeding random-walk policy for execute_policy.
PolicyFn random_policy(std::uint64_t seed);

// Follows a precomputed route edge by edge.
PolicyFn route_follower(const PlannedRoute& route);

struct DijkstraResult {
  std::vector<double> dist;    // label per node; +inf when unreachable
  std::vector<NodeId> pred;    // -1 at the origin / unreachable nodes
};

// Per-edge cost override; defaults to the segment length.
using EdgeCostFn = std::function<double(NodeId, NodeId)>;

// Exact single-source shortest distances over the road graph.
DijkstraResult dijkstra(const RoadNetwork& net, NodeId origin,
                        const EdgeCostFn& cost = {});

// Shortest path between two nodes extracted from a Dijkstra run.
PlannedRoute extract_route(const RoadNetwork& net, const DijkstraResult& run,
                           NodeId origin, NodeId destination);

// Minimum total-distance path via A*. The heuristic is the straight-line
// lattice distance scaled by the shortest segment length (admissible);
// ties break on lexicographic node order.
PlannedRoute a_star(const RoadNetwork& net, NodeId origin, NodeId destination);

// The realized pedestrian-flow matrices of a seeded scenario, one per time
// slot. slot(t) is the matrix in force for a departure at slot t. An env
// built with the same seed realizes exactly this sequence, whatever route
// is driven through it.
class FlowTrace {
 public:
  FlowTrace(int node_count, int slot_count)
      : n_(node_count), slots_(slot_count) {}

  int node_count() const { return n_; }
  int slot_count() const { return static_cast<int>(slots_.size()); }
  double flow(int t, NodeId i, NodeId j) const {
    return slots_[t][static_cast<std::size_t>(i) * n_ + j];
  }
  std::vector<double>& slot(int t) { return slots_[t]; }
  const std::vector<double>& slot(int t) const { return slots_[t]; }

  // FNV-1a over the raw matrix bytes, for cross-method trace assertions.
  std::uint64_t hash() const;

 private:
  int n_;
  std::vector<std::vector<double>> slots_;
};

// Runs the scenario's flow process for `slot_count` slots under `env_seed`,
// recording the matrix in force at each slot.
FlowTrace realize_trace(const RoadNetwork& net, const ScenarioConfig& scenario,
                        int slot_count, std::uint64_t env_seed);

struct OracleResult {
  bool feasible = false;
  double seconds = 0.0;
  PlannedRoute route;
  int arrival_slot = 0;
};

// Exact minimum realized travel time over the given flow trace: dynamic
// program on (node, slot) states where traversing edge (i, j) at slot t
// costs edge_travel_time(d_ij, p_ij(t)) and consumes one slot. Infeasible
// when the destination cannot be reached within the trace horizon.
OracleResult time_expanded_optimal(const RoadNetwork& net,
                                   const FlowTrace& trace, NodeId origin,
                                   NodeId destination);

struct ExecutionResult {
  double seconds = 0.0;
  int steps = 0;
  bool completed = false;
  double cumulative_reward = 0.0;
};

// Drives the environment with the policy until the episode ends. All
// methods are timed through this single code path.
ExecutionResult execute_policy(RouteEnv& env, const PolicyFn& policy);

}  // namespace darp
