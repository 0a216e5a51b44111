#include "darp/grid_network.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "darp/rng.hpp"

namespace darp {

double velocity(double pedestrians, double distance_m, double free_speed) {
  if (distance_m <= 0.0) {
    throw std::invalid_argument("velocity: segment length must be positive");
  }
  if (pedestrians < 0.0) {
    throw std::invalid_argument("velocity: pedestrian count must be >= 0");
  }
  if (pedestrians == 0.0) {
    return free_speed;  // free-flow cap; the density model diverges at p = 0
  }
  const double density = pedestrians / distance_m;
  return free_speed * std::pow(density, -0.8);
}

double edge_travel_time(double distance_m, double pedestrians,
                        double free_speed) {
  return distance_m / velocity(pedestrians, distance_m, free_speed);
}

RoadNetwork RoadNetwork::build_grid(int width_cells, int height_cells,
                                    std::pair<double, double> dist_range,
                                    std::uint64_t seed, double free_speed) {
  if (width_cells < 1 || height_cells < 1) {
    throw std::invalid_argument("build_grid: need at least one cell per axis");
  }
  if (dist_range.first < 0.0 || dist_range.second < dist_range.first) {
    throw std::invalid_argument("build_grid: inverted or negative range");
  }

  RoadNetwork net;
  net.width_cells_ = width_cells;
  net.height_cells_ = height_cells;
  net.free_speed_ = free_speed;
  net.seed_ = seed;
  const int n = net.node_count();
  net.dist_.assign(static_cast<std::size_t>(n) * n, -1.0);

  Rng rng(derive_seed(seed, seed_stream::grid));
  std::uniform_real_distribution<double> pick(dist_range.first,
                                              dist_range.second);

  // Horizontal roads first, then vertical, row by row. Fixed order keeps the
  // draw sequence reproducible for a given seed.
  for (int y = 0; y < net.nodes_high(); ++y) {
    for (int x = 0; x + 1 < net.nodes_wide(); ++x) {
      const NodeId a = net.node_id({x, y});
      const NodeId b = net.node_id({x + 1, y});
      const double d = pick(rng);
      net.set_distance(a, b, d);
      net.set_distance(b, a, d);
    }
  }
  for (int y = 0; y + 1 < net.nodes_high(); ++y) {
    for (int x = 0; x < net.nodes_wide(); ++x) {
      const NodeId a = net.node_id({x, y});
      const NodeId b = net.node_id({x, y + 1});
      const double d = pick(rng);
      net.set_distance(a, b, d);
      net.set_distance(b, a, d);
    }
  }
  net.recompute_edge_stats();
  return net;
}

void RoadNetwork::recompute_edge_stats() {
  const int n = node_count();
  edge_count_ = 0;
  double sum = 0.0;
  double min_d = std::numeric_limits<double>::infinity();
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double d = distance(i, j);
      if (d >= 0.0) {
        ++edge_count_;
        sum += d;
        min_d = std::min(min_d, d);
      }
    }
  }
  mean_edge_length_ = edge_count_ > 0 ? sum / edge_count_ : 0.0;
  min_edge_length_ = edge_count_ > 0 ? min_d : 0.0;
}

std::optional<NodeId> RoadNetwork::move(GridCoord c, Direction dir) const {
  GridCoord next = c;
  switch (dir) {
    case Direction::up: next.y += 1; break;
    case Direction::down: next.y -= 1; break;
    case Direction::right: next.x += 1; break;
    case Direction::left: next.x -= 1; break;
  }
  if (!in_bounds(next)) {
    return std::nullopt;
  }
  return node_id(next);
}

std::vector<std::pair<NodeId, Direction>> RoadNetwork::neighbors(
    NodeId id) const {
  if (!valid_node(id)) {
    throw std::out_of_range("neighbors: node id out of range");
  }
  std::vector<std::pair<NodeId, Direction>> out;
  out.reserve(4);
  const GridCoord c = coord(id);
  for (int d = 0; d < kDirectionCount; ++d) {
    const auto dir = static_cast<Direction>(d);
    if (auto target = move(c, dir)) {
      out.emplace_back(*target, dir);
    }
  }
  return out;
}

void RoadNetwork::save(std::ostream& out) const {
  out << "darp-network 1\n";
  out << width_cells_ << ' ' << height_cells_ << ' ' << seed_ << '\n';
  out << std::hexfloat << free_speed_ << '\n';
  out << edge_count_ << '\n';
  const int n = node_count();
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double d = distance(i, j);
      if (d >= 0.0) {
        out << i << ' ' << j << ' ' << std::hexfloat << d << '\n';
      }
    }
  }
  out << std::defaultfloat;
}

namespace {

// istream >> double does not accept hexfloat, so parse via strtod.
double read_double_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("network load: missing ") + what);
  }
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) {
    throw std::runtime_error(std::string("network load: bad ") + what);
  }
  return v;
}

}  // namespace

RoadNetwork RoadNetwork::load(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "darp-network" || version != 1) {
    throw std::runtime_error("network load: unrecognized header");
  }
  RoadNetwork net;
  int edge_count = 0;
  if (!(in >> net.width_cells_ >> net.height_cells_ >> net.seed_)) {
    throw std::runtime_error("network load: truncated header");
  }
  net.free_speed_ = read_double_token(in, "free speed");
  if (!(in >> edge_count)) {
    throw std::runtime_error("network load: truncated header");
  }
  if (net.width_cells_ < 1 || net.height_cells_ < 1) {
    throw std::runtime_error("network load: bad grid dims");
  }
  const int n = net.node_count();
  net.dist_.assign(static_cast<std::size_t>(n) * n, -1.0);
  for (int e = 0; e < edge_count; ++e) {
    NodeId i = 0, j = 0;
    if (!(in >> i >> j)) {
      throw std::runtime_error("network load: truncated edge list");
    }
    const double d = read_double_token(in, "edge length");
    if (!net.valid_node(i) || !net.valid_node(j) || d < 0.0) {
      throw std::runtime_error("network load: bad edge record");
    }
    net.set_distance(i, j, d);
    net.set_distance(j, i, d);
  }
  net.recompute_edge_stats();
  if (net.edge_count_ != edge_count) {
    throw std::runtime_error("network load: duplicate edges");
  }
  return net;
}

}  // namespace darp
