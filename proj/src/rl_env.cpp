#include "darp/rl_env.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace darp {

void RewardConfig::validate() const {
  if (w_r < 0.0) {
    throw std::invalid_argument("reward: w_r must be >= 0");
  }
  if (time_unit <= 0.0) {
    throw std::invalid_argument("reward: time_unit must be > 0");
  }
}

double potential(GridCoord a, GridCoord b, const RoadNetwork& net) {
  return net.mean_edge_length() * std::hypot(double(a.x - b.x),
                                             double(a.y - b.y));
}

RouteEnv::RouteEnv(const RoadNetwork& net, const ScenarioConfig& scenario,
                   GridCoord origin, GridCoord destination,
                   RewardConfig reward, int t_max, std::uint64_t seed)
    : net_(&net),
      scenario_(scenario),
      origin_(origin),
      destination_(destination),
      reward_(reward),
      t_max_(t_max),
      seed_(seed) {
  if (!net.in_bounds(origin) || !net.in_bounds(destination)) {
    throw std::invalid_argument("env: origin/destination off the grid");
  }
  if (origin == destination) {
    throw std::invalid_argument("env: origin equals destination");
  }
  if (t_max_ < 1) {
    throw std::invalid_argument("env: t_max must be >= 1");
  }
  reward_.validate();
  reset();
}

void RouteEnv::reset() {
  ScenarioConfig cfg = scenario_;
  cfg.seed = seed_;
  flow_ = init_flows(*net_, cfg);
  flow_rng_.seed(derive_seed(seed_, seed_stream::flow_step));
  pos_ = origin_;
  t_ = 0;
  done_ = false;
  arrived_ = false;
  total_seconds_ = 0.0;
  cumulative_reward_ = 0.0;
  trace_.clear();
}

void RouteEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  reset();
}

std::vector<Action> RouteEnv::valid_actions(const RoadNetwork& net,
                                            GridCoord pos) {
  std::vector<Action> out;
  out.reserve(4);
  for (int d = 0; d < kDirectionCount; ++d) {
    const auto a = static_cast<Action>(d);
    if (net.move(pos, a)) {
      out.push_back(a);
    }
  }
  return out;
}

std::vector<Action> RouteEnv::valid_actions() const {
  return valid_actions(*net_, pos_);
}

RouteEnv::StepResult RouteEnv::step(Action action) {
  if (done_) {
    throw std::logic_error("env: step on a finished episode");
  }
  const auto target = net_->move(pos_, action);
  if (!target) {
    throw std::logic_error("env: invalid action (off the grid)");
  }
  const NodeId i = net_->node_id(pos_);
  const NodeId j = *target;
  const GridCoord next = net_->coord(j);

  const double d_ij = net_->distance(i, j);
  const double p_ij = flow_.flow(i, j);
  const double seconds = edge_travel_time(d_ij, p_ij, net_->free_speed());

  const double phi_before = potential_to_goal(pos_);
  const double phi_after = potential_to_goal(next);
  const double delta_phi =
      reward_.sign == RewardConfig::ShapingSign::toward_positive
          ? phi_before - phi_after
          : phi_after - phi_before;

  const bool arrived = (next == destination_);
  const double reward = -seconds / reward_.time_unit +
                        reward_.w_r * delta_phi +
                        (arrived ? reward_.goal_bonus : 0.0);

  trace_.push_back({t_, pos_, action, next, reward, p_ij, seconds});

  // Flows update after the reward is computed.
  step_flows(flow_, scenario_.arima, flow_rng_);

  pos_ = next;
  ++t_;
  arrived_ = arrived;
  done_ = arrived || t_ >= t_max_;
  total_seconds_ += seconds;
  cumulative_reward_ += reward;

  return {next, reward, done_, arrived, seconds};
}

void RouteEnv::write_trace_csv(std::ostream& out) const {
  out << "t,from_x,from_y,action,to_x,to_y,reward,flow,seconds\n";
  char buf[256];
  for (const StepRecord& r : trace_) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%d,%d,%.17g,%.17g,%.17g\n",
                  r.t, r.from.x, r.from.y, static_cast<int>(r.action), r.to.x,
                  r.to.y, r.reward, r.flow, r.seconds);
    out << buf;
  }
}

}  // namespace darp
