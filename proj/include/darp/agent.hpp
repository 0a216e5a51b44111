#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "darp/neural.hpp"
#include "darp/replay.hpp"
#include "darp/rl_env.hpp"

namespace darp {

// Training configuration for the dueling-DQN route planner. The exploration
// rate is fixed for the whole run; at this reward scale the agent needs a
// high one to keep finding the destination, and a learning rate around 1e-3
// for the value head to traverse the return magnitudes within the episode
// budget.
struct AgentConfig {
  double gamma = 0.95;
  double epsilon = 0.95;  // fixed exploration rate
  int batch_size = 32;
  int buffer_capacity = 10000;
  double learning_rate = 1e-3;
  double rms_decay = 0.99;
  double rms_damping = 1e-8;
  bool rms_raw_denominator = false;
  int target_sync_period = 500;  // K, environment steps between syncs
  int episodes = 2000;
  int t_max = 100;
  ReplayMode replay = ReplayMode::prioritized;
  double priority_exponent = 0.6;
  double priority_floor = 1e-2;
  double beta_start = 0.4;  // annealed linearly to 1 over training
  int hidden_dim = 50;
  int eval_every = 10;  // episodes between greedy checkpoints; 0 disables
  int eval_runs = 10;

  void validate() const;
};

// Builds one seeded single-episode environment; training derives a distinct
// seed per episode from its run seed.
using EnvFactory = std::function<RouteEnv(std::uint64_t seed)>;

// One row of the per-episode metrics stream.
struct EpisodeMetrics {
  int episode = 0;
  double cumulative_reward = 0.0;
  double seconds = 0.0;
  int steps = 0;
  bool reached = false;
};

// Greedy-evaluation checkpoint taken during training.
struct EvalPoint {
  int checkpoint = 0;
  int episode = 0;          // last training episode included
  double mean_seconds = 0;  // over completed runs; NaN if none completed
  int failures = 0;
};

// Network input for a grid position: coordinates scaled to [0, 1].
std::array<double, 2> state_input(GridCoord pos, const RoadNetwork& net);

// Masked argmax of the Q-values over the valid actions, lowest action index
// on ties. Throws when `valid` is empty.
Action greedy_action(const DuelingNet& net, std::span<const double> input,
                     std::span<const Action> valid);

// Epsilon-greedy over the valid subset.
Action select_action(const DuelingNet& net, std::span<const double> input,
                     std::span<const Action> valid, double epsilon, Rng& rng);

// Bootstrapped targets from the stale network: y = r for terminal
// transitions, else r + gamma * max over the actions valid at s' of the
// target net's Q(s').
std::vector<double> compute_targets(const DuelingNet& target_net,
                                    std::span<const SampledExperience> batch,
                                    double gamma, const RoadNetwork& road);

// One descent step: sample, target, backward, RMSProp update, and (in
// prioritized mode) a priority refresh from the absolute TD errors.
// Returns the batch loss.
double train_step(DuelingNet& net, const DuelingNet& target_net,
                  ReplayBuffer& buffer, RmsProp& opt, const AgentConfig& cfg,
                  const RoadNetwork& road, double beta, Rng& rng);

struct EvalRun {
  std::uint64_t seed = 0;
  double seconds = 0.0;
  int steps = 0;
  bool completed = false;
};

struct EvalResult {
  std::vector<EvalRun> runs;
  double mean_seconds = 0.0;  // completed runs only; NaN if none
  int failures = 0;
};

// Greedy rollouts on freshly seeded environments. Runs that hit the step
// budget are flagged, counted as failures, and kept out of the mean.
EvalResult evaluate(const DuelingNet& net, const EnvFactory& make_env,
                    int n_runs, std::uint64_t seed);

struct TrainResult {
  DuelingNet net;
  std::vector<EpisodeMetrics> episodes;
  std::vector<EvalPoint> eval_curve;
};

// The full training loop: act epsilon-greedily, store, sample, descend, and
// sync the target every K environment steps. Learning starts once the
// buffer holds a full batch. Fully reproducible for a fixed (cfg, seed).
TrainResult train(const EnvFactory& make_env, const AgentConfig& cfg,
                  std::uint64_t seed);

// Tabular Q-learning reference (for small maps).
struct TabularQConfig {
  double alpha_lr = 0.5;
  double gamma = 0.95;
  double epsilon = 0.2;
  int episodes = 2000;

  void validate() const;
};

using QTable = std::vector<std::array<double, kDirectionCount>>;

struct TabularResult {
  QTable table;
  std::vector<EpisodeMetrics> episodes;
};

// Same masking and epsilon-greedy rules as the deep learner, with the
// classic temporal-difference table update. Refuses maps with more than
// 1000 states.
TabularResult tabular_q_train(const EnvFactory& make_env,
                              const TabularQConfig& cfg, std::uint64_t seed);

// Greedy policies usable with execute_policy.
PolicyFn net_policy(const DuelingNet& net);
PolicyFn table_policy(const QTable& table);

}  // namespace darp
