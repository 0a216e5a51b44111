#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace darp {

using NodeId = int;

// Node coordinates on the lattice: column loc_x, row loc_y.
struct GridCoord {
  int x = 0;
  int y = 0;

  bool operator==(const GridCoord&) const = default;
};

// Compass move on the lattice. The encoding doubles as the agent's action
// space: {up, down, right, left} = {0, 1, 2, 3}.
enum class Direction : int { up = 0, down = 1, right = 2, left = 3 };

constexpr int kDirectionCount = 4;

// Free pedestrian flow velocity, m/s.
constexpr double kFreeSpeed = 1.34;

// Pedestrian walking speed on a segment of length `distance_m` meters
// carrying `pedestrians` people, from the velocity-density model
// x = x0 * rho^-0.8 with rho = p/d (unit road width). An empty segment
// moves at the free-flow speed.
double velocity(double pedestrians, double distance_m,
                double free_speed = kFreeSpeed);

// Seconds to traverse the segment: distance / velocity.
double edge_travel_time(double distance_m, double pedestrians,
                        double free_speed = kFreeSpeed);

// Immutable rectangular grid road network. Cells are quadrilaterals, so a
// grid of W x H cells has (W+1) x (H+1) intersection nodes. Node ids are
// row-major: id = y * nodes_wide + x. Segment lengths live in a symmetric
// n x n matrix with -1 marking "no road" (including the diagonal).
class RoadNetwork {
 public:
  // Draws each adjacent-pair distance uniformly from dist_range (meters).
  // Throws std::invalid_argument for zero-cell grids or an inverted range.
  static RoadNetwork build_grid(int width_cells, int height_cells,
                                std::pair<double, double> dist_range,
                                std::uint64_t seed,
                                double free_speed = kFreeSpeed);

  int width_cells() const { return width_cells_; }
  int height_cells() const { return height_cells_; }
  int nodes_wide() const { return width_cells_ + 1; }
  int nodes_high() const { return height_cells_ + 1; }
  int node_count() const { return nodes_wide() * nodes_high(); }
  int edge_count() const { return edge_count_; }
  double free_speed() const { return free_speed_; }
  std::uint64_t seed() const { return seed_; }

  bool in_bounds(GridCoord c) const {
    return c.x >= 0 && c.x < nodes_wide() && c.y >= 0 && c.y < nodes_high();
  }
  NodeId node_id(GridCoord c) const { return c.y * nodes_wide() + c.x; }
  GridCoord coord(NodeId id) const {
    return {id % nodes_wide(), id / nodes_wide()};
  }
  bool valid_node(NodeId id) const { return id >= 0 && id < node_count(); }

  // Segment length in meters, or -1 if i and j are not connected.
  double distance(NodeId i, NodeId j) const {
    return dist_[static_cast<std::size_t>(i) * node_count() + j];
  }

  // Target of moving one step from `c`, if it stays on the grid.
  std::optional<NodeId> move(GridCoord c, Direction dir) const;

  // Adjacent nodes with the direction leading to each; 2 for corners,
  // 3 for boundary nodes, 4 for interior. Throws on an invalid id.
  std::vector<std::pair<NodeId, Direction>> neighbors(NodeId id) const;

  // Mean/minimum segment length over all roads (used for the potential
  // lattice pitch and the A* heuristic scale).
  double mean_edge_length() const { return mean_edge_length_; }
  double min_edge_length() const { return min_edge_length_; }

  // Plain-text serialization: dims, seed, free speed, then one line per
  // edge (i, j, d_ij). Doubles are written in hexfloat so the round trip
  // is bit-exact.
  void save(std::ostream& out) const;
  static RoadNetwork load(std::istream& in);

 private:
  RoadNetwork() = default;

  int width_cells_ = 0;
  int height_cells_ = 0;
  int edge_count_ = 0;
  double free_speed_ = kFreeSpeed;
  std::uint64_t seed_ = 0;
  double mean_edge_length_ = 0.0;
  double min_edge_length_ = 0.0;
  std::vector<double> dist_;  // n*n, row-major, -1 sentinel

  void set_distance(NodeId i, NodeId j, double d) {
    dist_[static_cast<std::size_t>(i) * node_count() + j] = d;
  }
  void recompute_edge_stats();
};

}  // namespace darp
