#include "dpcp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpcp/common.hpp"
#include "dpcp/rng.hpp"

namespace dpcp {

MeterGraph make_graph(int n_nodes, std::vector<std::pair<int, int>> edges) {
  if (n_nodes < 1) throw ValidationError("graph: need at least one node");
  for (auto& [a, b] : edges) {
    if (a == b) throw ValidationError("graph: self-loop at node " + std::to_string(a));
    if (a > b) std::swap(a, b);
    if (a < 0 || b >= n_nodes)
      throw ValidationError("graph: edge (" + std::to_string(a) + "," +
                            std::to_string(b) + ") out of range");
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw ValidationError("graph: duplicate edge");

  MeterGraph g;
  g.n_nodes = n_nodes;
  g.edges = std::move(edges);
  g.neighborhoods.assign(static_cast<std::size_t>(n_nodes), {});
  for (const auto& [a, b] : g.edges) {
    g.neighborhoods[static_cast<std::size_t>(a)].push_back(b);
    g.neighborhoods[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : g.neighborhoods) std::sort(nb.begin(), nb.end());
  return g;
}

bool is_connected(const MeterGraph& g) {
  if (g.n_nodes <= 1) return true;
  std::vector<char> seen(static_cast<std::size_t>(g.n_nodes), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : g.neighborhoods[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == g.n_nodes;
}

MeterGraph random_geometric_graph(int n_nodes, double d_c, std::uint64_t seed) {
  if (n_nodes < 1) throw ValidationError("graph: need at least one node");
  if (!(d_c > 0.0)) throw ValidationError("graph: communication range must be positive");
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<double> px(static_cast<std::size_t>(n_nodes));
    std::vector<double> py(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) {
      px[static_cast<std::size_t>(i)] = rng.uniform();
      py[static_cast<std::size_t>(i)] = rng.uniform();
    }
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_nodes; ++i)
      for (int j = i + 1; j < n_nodes; ++j) {
        const double dx = px[static_cast<std::size_t>(i)] - px[static_cast<std::size_t>(j)];
        const double dy = py[static_cast<std::size_t>(i)] - py[static_cast<std::size_t>(j)];
        if (std::sqrt(dx * dx + dy * dy) < d_c) edges.emplace_back(i, j);
      }
    MeterGraph g = make_graph(n_nodes, std::move(edges));
    if (is_connected(g)) return g;
  }
  throw ValidationError("graph: no connected geometric graph in 100 attempts (d_c=" +
                        std::to_string(d_c) + ")");
}

}  // namespace dpcp
