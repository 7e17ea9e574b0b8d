#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace dpcp {

// Undirected communication graph between meters. Edges are stored once with
// first < second; neighborhoods mirror them symmetrically.
struct MeterGraph {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> neighborhoods;
};

// Rebuilds neighborhoods from edges and checks invariants: indices in range,
// no self-loops, no duplicate edges. Throws ValidationError on violation.
// Does not check connectivity; callers that require it use is_connected.
MeterGraph make_graph(int n_nodes, std::vector<std::pair<int, int>> edges);

bool is_connected(const MeterGraph& g);

// Nodes uniform on the unit square, edge when distance < d_c. Positions are
// resampled up to 100 times until the graph is connected; throws
// ValidationError if that budget is exhausted.
MeterGraph random_geometric_graph(int n_nodes, double d_c, std::uint64_t seed);

}  // namespace dpcp
