#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "network.hpp"

namespace covertime::gen {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParamError(what);
}

inline Network complete(std::size_t n) {
  require(n >= 2, "complete: n must be >= 2");
  std::vector<Edge> edges;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) edges.push_back({u, v, 1.0});
  return Network::build(n, edges);
}

inline Network path(std::size_t n) {
  require(n >= 2, "path: n must be >= 2");
  std::vector<Edge> edges;
  for (Vertex u = 0; u + 1 < n; ++u) edges.push_back({u, u + 1, 1.0});
  return Network::build(n, edges);
}

inline Network cycle(std::size_t n) {
  require(n >= 3, "cycle: n must be >= 3");
  std::vector<Edge> edges;
  for (Vertex u = 0; u < n; ++u) edges.push_back({u, (u + 1) % n, 1.0});
  return Network::build(n, edges);
}

// Regular b-ary tree of height h (root at depth 0), (b^{h+1}-1)/(b-1) vertices
// in breadth-first order.
inline Network bary_tree(std::size_t b, std::size_t h) {
  require(b >= 1 && h >= 1, "bary_tree: b and h must be >= 1");
  std::size_t n = 1, level = 1;
  for (std::size_t d = 1; d <= h; ++d) {
    level *= b;
    n += level;
  }
  std::vector<Edge> edges;
  for (Vertex v = 1; v < n; ++v) edges.push_back({(v - 1) / b, v, 1.0});
  return Network::build(n, edges);
}

// rows x cols grid graph, row-major ids.
inline Network grid(std::size_t rows, std::size_t cols) {
  require(rows >= 1 && cols >= 1 && rows * cols >= 2, "grid: needs at least 2 vertices");
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const Vertex v = r * cols + c;
      if (c + 1 < cols) edges.push_back({v, v + 1, 1.0});
      if (r + 1 < rows) edges.push_back({v, v + cols, 1.0});
    }
  return Network::build(rows * cols, edges);
}

// G(n, p) conditioned on connectivity: samples from one seeded stream until a
// connected draw appears.
inline Network erdos_renyi(std::size_t n, double p, std::uint64_t seed,
                           std::size_t max_attempts = 10000) {
  require(n >= 2, "erdos_renyi: n must be >= 2");
  require(p > 0.0 && p <= 1.0, "erdos_renyi: p must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Edge> edges;
    for (Vertex u = 0; u < n; ++u)
      for (Vertex v = u + 1; v < n; ++v)
        if (coin(rng)) edges.push_back({u, v, 1.0});
    if (!edges.empty() && detail::count_components(n, edges) == 1) return Network::build(n, edges);
  }
  throw InvalidParamError("erdos_renyi: no connected sample within attempt budget");
}

// Same topology with conductances drawn uniformly from [lo, hi].
inline Network randomize_conductances(const Network& net, double lo, double hi,
                                      std::uint64_t seed) {
  require(lo > 0.0 && hi >= lo, "randomize_conductances: need 0 < lo <= hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<Edge> edges = net.edges();
  for (auto& e : edges) e.conductance = dist(rng);
  return Network::build(net.size(), edges, net.labels());
}

}  // namespace covertime::gen
