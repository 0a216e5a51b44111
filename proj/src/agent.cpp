#include "darp/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace darp {

void AgentConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("agent: gamma must lie in [0, 1]");
  }
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("agent: epsilon must lie in [0, 1]");
  }
  if (batch_size < 1 || buffer_capacity < batch_size) {
    throw std::invalid_argument("agent: need capacity >= batch size >= 1");
  }
  if (target_sync_period < 1) {
    throw std::invalid_argument("agent: target sync period must be >= 1");
  }
  if (episodes < 1 || t_max < 1 || hidden_dim < 1) {
    throw std::invalid_argument("agent: episodes, t_max, hidden must be >= 1");
  }
  if (beta_start < 0.0 || beta_start > 1.0) {
    throw std::invalid_argument("agent: beta_start must lie in [0, 1]");
  }
  if (eval_every < 0 || eval_runs < 1) {
    throw std::invalid_argument("agent: bad eval settings");
  }
}

void TabularQConfig::validate() const {
  if (alpha_lr <= 0.0 || alpha_lr > 1.0) {
    throw std::invalid_argument("tabular: alpha must lie in (0, 1]");
  }
  if (gamma < 0.0 || gamma > 1.0 || epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("tabular: gamma/epsilon must lie in [0, 1]");
  }
  if (episodes < 1) {
    throw std::invalid_argument("tabular: episodes must be >= 1");
  }
}

std::array<double, 2> state_input(GridCoord pos, const RoadNetwork& net) {
  return {static_cast<double>(pos.x) / net.width_cells(),
          static_cast<double>(pos.y) / net.height_cells()};
}

Action greedy_action(const DuelingNet& net, std::span<const double> input,
                     std::span<const Action> valid) {
  if (valid.empty()) {
    throw std::invalid_argument("greedy_action: empty valid set");
  }
  const std::vector<double> q = net.forward(input);
  Action best = valid.front();
  double best_q = -std::numeric_limits<double>::infinity();
  for (Action a : valid) {  // ascending action index; strict > keeps lowest
    const double qa = q[static_cast<int>(a)];
    if (qa > best_q) {
      best_q = qa;
      best = a;
    }
  }
  return best;
}

Action select_action(const DuelingNet& net, std::span<const double> input,
                     std::span<const Action> valid, double epsilon, Rng& rng) {
  if (valid.empty()) {
    throw std::invalid_argument("select_action: empty valid set");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0,
                                            static_cast<int>(valid.size()) - 1);
    return valid[pick(rng)];
  }
  return greedy_action(net, input, valid);
}

std::vector<double> compute_targets(const DuelingNet& target_net,
                                    std::span<const SampledExperience> batch,
                                    double gamma, const RoadNetwork& road) {
  if (batch.empty()) {
    throw std::invalid_argument("compute_targets: empty batch");
  }
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const SampledExperience& s : batch) {
    const Experience& e = s.e;
    if (e.done) {
      targets.push_back(e.r);
      continue;
    }
    const auto input = state_input(e.s_next, road);
    const std::vector<double> q = target_net.forward(input);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [node, dir] : road.neighbors(road.node_id(e.s_next))) {
      best = std::max(best, q[static_cast<int>(dir)]);
    }
    targets.push_back(e.r + gamma * best);
  }
  return targets;
}

double train_step(DuelingNet& net, const DuelingNet& target_net,
                  ReplayBuffer& buffer, RmsProp& opt, const AgentConfig& cfg,
                  const RoadNetwork& road, double beta, Rng& rng) {
  const auto batch = buffer.sample(cfg.batch_size, beta, rng);
  const std::vector<double> targets =
      compute_targets(target_net, batch, cfg.gamma, road);

  std::vector<QSample> samples;
  std::vector<double> weights;
  std::vector<int> indices;
  samples.reserve(batch.size());
  weights.reserve(batch.size());
  indices.reserve(batch.size());
  for (const SampledExperience& s : batch) {
    const auto input = state_input(s.e.s, road);
    samples.push_back({{input[0], input[1]}, static_cast<int>(s.e.a)});
    weights.push_back(s.weight);
    indices.push_back(s.index);
  }

  double loss = 0.0;
  std::vector<double> residuals;
  const NetParams grads =
      backward(net, samples, targets, weights, &loss, &residuals);
  opt.update(net.params(), grads);
  buffer.update_priorities(indices, residuals);
  return loss;
}

EvalResult evaluate(const DuelingNet& net, const EnvFactory& make_env,
                    int n_runs, std::uint64_t seed) {
  if (n_runs < 1) {
    throw std::invalid_argument("evaluate: n_runs must be >= 1");
  }
  EvalResult result;
  double sum = 0.0;
  int completed = 0;
  for (int r = 0; r < n_runs; ++r) {
    const std::uint64_t env_seed = derive_seed(seed, r);
    RouteEnv env = make_env(env_seed);
    while (!env.done()) {
      const auto valid = env.valid_actions();
      const auto input = state_input(env.position(), env.network());
      env.step(greedy_action(net, input, valid));
    }
    const bool ok = env.arrived();
    result.runs.push_back({env_seed, env.total_seconds(), env.time_slot(), ok});
    if (ok) {
      sum += env.total_seconds();
      ++completed;
    } else {
      ++result.failures;
    }
  }
  result.mean_seconds = completed > 0
                            ? sum / completed
                            : std::numeric_limits<double>::quiet_NaN();
  return result;
}

TrainResult train(const EnvFactory& make_env, const AgentConfig& cfg,
                  std::uint64_t seed) {
  cfg.validate();

  DuelingNet net = DuelingNet::glorot_init(2, cfg.hidden_dim, kDirectionCount,
                                           seed);
  DuelingNet target = net;
  ReplayBuffer buffer(cfg.replay, cfg.buffer_capacity, cfg.priority_exponent,
                      cfg.priority_floor);
  RmsProp opt({cfg.learning_rate, cfg.rms_decay, cfg.rms_damping,
               cfg.rms_raw_denominator});

  Rng action_rng(derive_seed(seed, seed_stream::action));
  Rng replay_rng(derive_seed(seed, seed_stream::replay));
  const std::uint64_t episode_base = derive_seed(seed, seed_stream::episode);
  const std::uint64_t eval_base = derive_seed(seed, seed_stream::eval);

  TrainResult result{std::move(net), {}, {}};
  long long global_step = 0;
  int checkpoint = 0;

  for (int epi = 0; epi < cfg.episodes; ++epi) {
    const double beta =
        cfg.episodes > 1
            ? cfg.beta_start + (1.0 - cfg.beta_start) * epi / (cfg.episodes - 1)
            : 1.0;
    RouteEnv env = make_env(derive_seed(episode_base, epi));
    const RoadNetwork& road = env.network();

    while (!env.done()) {
      const GridCoord s = env.position();
      const auto valid = env.valid_actions();
      const auto input = state_input(s, road);
      const Action a =
          select_action(result.net, input, valid, cfg.epsilon, action_rng);
      const auto res = env.step(a);
      buffer.push({s, a, res.reward, res.next, res.done});

      if (buffer.size() >= cfg.batch_size) {
        train_step(result.net, target, buffer, opt, cfg, road, beta,
                   replay_rng);
      }
      ++global_step;
      if (global_step % cfg.target_sync_period == 0) {
        target.params() = result.net.params();
      }
    }

    result.episodes.push_back({epi, env.cumulative_reward(),
                               env.total_seconds(), env.time_slot(),
                               env.arrived()});

    if (cfg.eval_every > 0 && (epi + 1) % cfg.eval_every == 0) {
      const EvalResult ev =
          evaluate(result.net, make_env, cfg.eval_runs, eval_base);
      result.eval_curve.push_back(
          {checkpoint++, epi, ev.mean_seconds, ev.failures});
    }
  }
  return result;
}

TabularResult tabular_q_train(const EnvFactory& make_env,
                              const TabularQConfig& cfg, std::uint64_t seed) {
  cfg.validate();

  // Probe the map size before allocating the table.
  RouteEnv probe = make_env(derive_seed(seed, seed_stream::tabular));
  const RoadNetwork& road = probe.network();
  if (road.node_count() > 1000) {
    throw std::invalid_argument(
        "tabular_q_train: map too large for a table (over 1000 states)");
  }

  TabularResult result;
  result.table.assign(road.node_count(), {0.0, 0.0, 0.0, 0.0});
  Rng rng(derive_seed(seed, seed_stream::action));
  const std::uint64_t episode_base = derive_seed(seed, seed_stream::episode);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  auto greedy = [&](NodeId id, const std::vector<Action>& valid) {
    Action best = valid.front();
    double best_q = -std::numeric_limits<double>::infinity();
    for (Action a : valid) {
      const double qa = result.table[id][static_cast<int>(a)];
      if (qa > best_q) {
        best_q = qa;
        best = a;
      }
    }
    return best;
  };

  for (int epi = 0; epi < cfg.episodes; ++epi) {
    RouteEnv env = make_env(derive_seed(episode_base, epi));
    while (!env.done()) {
      const NodeId sid = road.node_id(env.position());
      const auto valid = env.valid_actions();
      Action a;
      if (coin(rng) < cfg.epsilon) {
        std::uniform_int_distribution<int> pick(
            0, static_cast<int>(valid.size()) - 1);
        a = valid[pick(rng)];
      } else {
        a = greedy(sid, valid);
      }
      const auto res = env.step(a);

      double target = res.reward;
      if (!res.done) {
        const NodeId nid = road.node_id(res.next);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& [node, dir] : road.neighbors(nid)) {
          best = std::max(best, result.table[nid][static_cast<int>(dir)]);
        }
        target += cfg.gamma * best;
      }
      double& q = result.table[sid][static_cast<int>(a)];
      q += cfg.alpha_lr * (target - q);
    }
    result.episodes.push_back({epi, env.cumulative_reward(),
                               env.total_seconds(), env.time_slot(),
                               env.arrived()});
  }
  return result;
}

PolicyFn net_policy(const DuelingNet& net) {
  return [&net](RouteEnv& env) {
    const auto valid = env.valid_actions();
    const auto input = state_input(env.position(), env.network());
    return greedy_action(net, input, valid);
  };
}

PolicyFn table_policy(const QTable& table) {
  return [&table](RouteEnv& env) {
    const auto valid = env.valid_actions();
    const NodeId id = env.network().node_id(env.position());
    Action best = valid.front();
    double best_q = -std::numeric_limits<double>::infinity();
    for (Action a : valid) {
      const double qa = table[id][static_cast<int>(a)];
      if (qa > best_q) {
        best_q = qa;
        best = a;
      }
    }
    return best;
  };
}

}  // namespace darp
