#include "darp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>
#include <random>
#include <stdexcept>

namespace darp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Action random_policy_step(const RouteEnv& env, Rng& rng) {
  const auto valid = env.valid_actions();
  std::uniform_int_distribution<int> pick(0,
                                          static_cast<int>(valid.size()) - 1);
  return valid[pick(rng)];
}

PolicyFn random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(derive_seed(seed, seed_stream::method_random));
  return [rng](RouteEnv& env) { return random_policy_step(env, *rng); };
}

PolicyFn route_follower(const PlannedRoute& route) {
  if (route.nodes.size() < 2) {
    throw std::invalid_argument("route_follower: route needs >= 2 nodes");
  }
  auto cursor = std::make_shared<std::size_t>(0);
  std::vector<NodeId> nodes = route.nodes;
  return [cursor, nodes](RouteEnv& env) {
    const RoadNetwork& net = env.network();
    const std::size_t i = *cursor;
    if (i + 1 >= nodes.size()) {
      throw std::logic_error("route_follower: route exhausted");
    }
    if (net.node_id(env.position()) != nodes[i]) {
      throw std::logic_error("route_follower: env diverged from route");
    }
    const GridCoord from = net.coord(nodes[i]);
    const GridCoord to = net.coord(nodes[i + 1]);
    ++*cursor;
    if (to.y == from.y + 1 && to.x == from.x) return Action::up;
    if (to.y == from.y - 1 && to.x == from.x) return Action::down;
    if (to.x == from.x + 1 && to.y == from.y) return Action::right;
    if (to.x == from.x - 1 && to.y == from.y) return Action::left;
    throw std::logic_error("route_follower: non-adjacent hop in route");
  };
}

DijkstraResult dijkstra(const RoadNetwork& net, NodeId origin,
                        const EdgeCostFn& cost) {
  if (!net.valid_node(origin)) {
    throw std::out_of_range("dijkstra: origin out of range");
  }
  const int n = net.node_count();
  DijkstraResult result{std::vector<double>(n, kInf),
                        std::vector<NodeId>(n, -1)};
  result.dist[origin] = 0.0;

  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  heap.push({0.0, origin});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > result.dist[u]) {
      continue;  // stale entry
    }
    for (const auto& [v, dir] : net.neighbors(u)) {
      const double w = cost ? cost(u, v) : net.distance(u, v);
      if (w < 0.0) {
        throw std::invalid_argument("dijkstra: negative edge cost");
      }
      if (d + w < result.dist[v]) {
        result.dist[v] = d + w;
        result.pred[v] = u;
        heap.push({d + w, v});
      }
    }
  }
  return result;
}

PlannedRoute extract_route(const RoadNetwork& net, const DijkstraResult& run,
                           NodeId origin, NodeId destination) {
  if (run.dist[destination] == kInf) {
    throw std::runtime_error("extract_route: destination unreachable");
  }
  PlannedRoute route;
  for (NodeId v = destination; v != -1; v = run.pred[v]) {
    route.nodes.push_back(v);
    if (v == origin) {
      break;
    }
  }
  std::reverse(route.nodes.begin(), route.nodes.end());
  if (route.nodes.front() != origin) {
    throw std::runtime_error("extract_route: predecessor chain broken");
  }
  for (std::size_t i = 0; i + 1 < route.nodes.size(); ++i) {
    route.planned_distance += net.distance(route.nodes[i], route.nodes[i + 1]);
  }
  return route;
}

PlannedRoute a_star(const RoadNetwork& net, NodeId origin, NodeId destination) {
  if (!net.valid_node(origin) || !net.valid_node(destination)) {
    throw std::out_of_range("a_star: node out of range");
  }
  const int n = net.node_count();
  const GridCoord goal = net.coord(destination);
  const double unit = net.min_edge_length();
  auto heuristic = [&](NodeId v) {
    const GridCoord c = net.coord(v);
    return unit * std::hypot(double(c.x - goal.x), double(c.y - goal.y));
  };

  std::vector<double> g(n, kInf);
  std::vector<NodeId> pred(n, -1);
  std::vector<char> closed(n, 0);
  g[origin] = 0.0;

  // (f, node): lexicographic node order breaks f ties.
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  open.push({heuristic(origin), origin});
  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    if (closed[u]) {
      continue;
    }
    closed[u] = 1;
    if (u == destination) {
      break;
    }
    for (const auto& [v, dir] : net.neighbors(u)) {
      const double tentative = g[u] + net.distance(u, v);
      if (tentative < g[v]) {
        g[v] = tentative;
        pred[v] = u;
        open.push({tentative + heuristic(v), v});
      }
    }
  }
  if (g[destination] == kInf) {
    throw std::runtime_error("a_star: destination unreachable");
  }
  return extract_route(net, {std::move(g), std::move(pred)}, origin,
                       destination);
}

std::uint64_t FlowTrace::hash() const {
  // FNV-1a over the raw little-endian bytes of every slot matrix.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& slot : slots_) {
    mix(slot.data(), slot.size() * sizeof(double));
  }
  return h;
}

FlowTrace realize_trace(const RoadNetwork& net, const ScenarioConfig& scenario,
                        int slot_count, std::uint64_t env_seed) {
  if (slot_count < 1) {
    throw std::invalid_argument("realize_trace: need at least one slot");
  }
  ScenarioConfig cfg = scenario;
  cfg.seed = env_seed;
  FlowState state = init_flows(net, cfg);
  Rng rng(derive_seed(env_seed, seed_stream::flow_step));

  FlowTrace trace(net.node_count(), slot_count);
  trace.slot(0) = state.matrix();
  for (int t = 1; t < slot_count; ++t) {
    step_flows(state, cfg.arima, rng);
    trace.slot(t) = state.matrix();
  }
  return trace;
}

OracleResult time_expanded_optimal(const RoadNetwork& net,
                                   const FlowTrace& trace, NodeId origin,
                                   NodeId destination) {
  if (!net.valid_node(origin) || !net.valid_node(destination)) {
    throw std::out_of_range("oracle: node out of range");
  }
  if (origin == destination) {
    throw std::invalid_argument("oracle: origin equals destination");
  }
  const int n = net.node_count();
  const int horizon = trace.slot_count();

  // best[t][v]: minimum seconds to stand at v after t moves.
  std::vector<std::vector<double>> best(horizon + 1,
                                        std::vector<double>(n, kInf));
  std::vector<std::vector<NodeId>> from(horizon + 1,
                                        std::vector<NodeId>(n, -1));
  best[0][origin] = 0.0;

  OracleResult result;
  double best_arrival = kInf;
  int best_slot = -1;
  for (int t = 0; t < horizon; ++t) {
    for (NodeId u = 0; u < n; ++u) {
      const double base = best[t][u];
      if (base == kInf || u == destination) {
        continue;  // arrivals stop; no value in leaving the destination
      }
      for (const auto& [v, dir] : net.neighbors(u)) {
        const double c =
            edge_travel_time(net.distance(u, v), trace.flow(t, u, v),
                             net.free_speed());
        if (base + c < best[t + 1][v]) {
          best[t + 1][v] = base + c;
          from[t + 1][v] = u;
        }
      }
    }
    if (best[t + 1][destination] < best_arrival) {
      best_arrival = best[t + 1][destination];
      best_slot = t + 1;
    }
  }
  if (best_slot < 0) {
    return result;  // infeasible within the horizon
  }

  result.feasible = true;
  result.seconds = best_arrival;
  result.arrival_slot = best_slot;
  NodeId v = destination;
  for (int t = best_slot; t >= 0; --t) {
    result.route.nodes.push_back(v);
    v = t > 0 ? from[t][v] : v;
  }
  std::reverse(result.route.nodes.begin(), result.route.nodes.end());
  for (std::size_t i = 0; i + 1 < result.route.nodes.size(); ++i) {
    result.route.planned_distance +=
        net.distance(result.route.nodes[i], result.route.nodes[i + 1]);
  }
  return result;
}

ExecutionResult execute_policy(RouteEnv& env, const PolicyFn& policy) {
  while (!env.done()) {
    env.step(policy(env));
  }
  return {env.total_seconds(), env.time_slot(), env.arrived(),
          env.cumulative_reward()};
}

}  // namespace darp
