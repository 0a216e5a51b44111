#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "darp/flow_dynamics.hpp"
#include "darp/grid_network.hpp"
#include "darp/rng.hpp"

namespace darp {

// The action space is the compass move set {up, down, right, left}.
using Action = Direction;

class RouteEnv;

// A step policy: picks the next action given the live environment.
using PolicyFn = std::function<Action(RouteEnv&)>;

// Reward shaping knobs. The time term is -travel_seconds / time_unit; the
// shaping term rewards progress toward the destination when sign is
// toward_positive, or reproduces the literal formula (positive for moving
// away) when sign is paper_literal.
struct RewardConfig {
  enum class ShapingSign { toward_positive, paper_literal };

  double w_r = 1e-3;
  double goal_bonus = 1.0;
  ShapingSign sign = ShapingSign::toward_positive;
  double time_unit = 60.0;  // seconds per reward unit

  void validate() const;
};

// Straight-line distance in meters between two lattice nodes, with the
// lattice pitch taken as the network's mean segment length.
double potential(GridCoord a, GridCoord b, const RoadNetwork& net);

// One executed step, for offline verification of episode accounting.
struct StepRecord {
  int t = 0;  // time slot at departure
  GridCoord from{};
  Action action = Action::up;
  GridCoord to{};
  double reward = 0.0;
  double flow = 0.0;     // p_ij used for the cost
  double seconds = 0.0;  // c_ij realized
};

// Episode environment over a road network with evolving pedestrian flows.
// One env instance runs one episode: reset() rebuilds the flow state from
// the seed, so a (seed, scenario) pair fully determines the episode's
// exogenous dynamics. The flow process is independent of the agent's moves,
// so two envs with the same seed realize identical flow traces regardless
// of the routes taken through them.
class RouteEnv {
 public:
  // The network must outlive the env. Throws std::invalid_argument when
  // origin equals destination or either lies off the grid.
  RouteEnv(const RoadNetwork& net, const ScenarioConfig& scenario,
           GridCoord origin, GridCoord destination, RewardConfig reward,
           int t_max, std::uint64_t seed);

  void reset();
  void reset(std::uint64_t seed);

  struct StepResult {
    GridCoord next{};
    double reward = 0.0;
    bool done = false;
    bool arrived = false;
    double seconds = 0.0;
  };

  // Moves the agent one node. The action must be valid at the current
  // position (callers mask); an off-grid action throws std::logic_error,
  // as does stepping a finished episode. The reward uses the flow at
  // departure time; flows advance one slot afterwards.
  StepResult step(Action action);

  std::vector<Action> valid_actions() const;
  static std::vector<Action> valid_actions(const RoadNetwork& net,
                                           GridCoord pos);

  GridCoord position() const { return pos_; }
  GridCoord origin() const { return origin_; }
  GridCoord destination() const { return destination_; }
  int time_slot() const { return t_; }
  int t_max() const { return t_max_; }
  bool done() const { return done_; }
  bool arrived() const { return arrived_; }
  double total_seconds() const { return total_seconds_; }
  double cumulative_reward() const { return cumulative_reward_; }
  std::uint64_t seed() const { return seed_; }

  double potential_to_goal(GridCoord pos) const {
    return potential(pos, destination_, *net_);
  }

  const RoadNetwork& network() const { return *net_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const RewardConfig& reward_config() const { return reward_; }
  const FlowState& flow_state() const { return flow_; }

  const std::vector<StepRecord>& trace() const { return trace_; }
  void write_trace_csv(std::ostream& out) const;

 private:
  const RoadNetwork* net_;
  ScenarioConfig scenario_;
  GridCoord origin_{};
  GridCoord destination_{};
  RewardConfig reward_{};
  int t_max_ = 100;
  std::uint64_t seed_ = 0;

  FlowState flow_;
  Rng flow_rng_;
  GridCoord pos_{};
  int t_ = 0;
  bool done_ = false;
  bool arrived_ = false;
  double total_seconds_ = 0.0;
  double cumulative_reward_ = 0.0;
  std::vector<StepRecord> trace_;
};

}  // namespace darp
