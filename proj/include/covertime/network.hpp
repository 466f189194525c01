#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace covertime {

using Vertex = std::size_t;

struct Edge {
  Vertex u;
  Vertex v;
  double conductance;
};

struct Neighbor {
  Vertex vertex;
  double conductance;
};

// Finite connected electrical network. Edges are stored once with u < v and
// strictly positive conductance; there are no self-loops. Immutable once built.
class Network {
public:
  // Validating constructor; see build_network for the merge rule.
  static Network build(std::size_t n, std::span<const Edge> edges,
                       std::vector<std::string> labels = {});

  std::size_t size() const { return conductance_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  // c_x, the sum of incident edge conductances.
  double conductance(Vertex x) const { return conductance_[x]; }
  const std::vector<double>& conductances() const { return conductance_; }
  // Sum over vertices of c_x.
  double total_conductance() const { return total_; }

  std::span<const Neighbor> neighbors(Vertex x) const {
    return {adjacency_.data() + offsets_[x], adjacency_.data() + offsets_[x + 1]};
  }

  // Conductance of edge {u, v}; zero when absent.
  double edge_conductance(Vertex u, Vertex v) const {
    for (const auto& nb : neighbors(u))
      if (nb.vertex == v) return nb.conductance;
    return 0.0;
  }

  const std::vector<std::string>& labels() const { return labels_; }
  std::string label(Vertex x) const {
    return labels_.empty() ? std::to_string(x) : labels_[x];
  }

  // Vertex of maximum c_x, lowest index on ties.
  Vertex max_conductance_vertex() const {
    return static_cast<Vertex>(std::max_element(conductance_.begin(), conductance_.end()) -
                               conductance_.begin());
  }

private:
  Network() = default;

  std::vector<Edge> edges_;
  std::vector<double> conductance_;
  double total_ = 0.0;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<std::string> labels_;
};

namespace detail {

inline std::size_t count_components(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (const auto& e : edges) {
    auto a = find(e.u), b = find(e.v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components;
}

}  // namespace detail

inline Network Network::build(std::size_t n, std::span<const Edge> edges,
                              std::vector<std::string> labels) {
  if (edges.empty()) throw InvalidParamError("network needs at least one edge");
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n)
      throw InvalidParamError("vertex id out of range 0.." + std::to_string(n - 1));
    if (e.u == e.v) throw SelfLoopError(e.u);
    if (!(e.conductance > 0.0)) throw NonPositiveConductanceError(e.u, e.v, e.conductance);
  }
  if (!labels.empty() && labels.size() != n)
    throw InvalidParamError("label count does not match vertex count");

  // Duplicate (u,v) entries are merged by summing conductances.
  std::map<std::pair<Vertex, Vertex>, double> merged;
  for (const auto& e : edges) merged[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.conductance;

  Network net;
  net.edges_.reserve(merged.size());
  for (const auto& [key, c] : merged) net.edges_.push_back({key.first, key.second, c});

  if (auto k = detail::count_components(n, net.edges_); k != 1) throw DisconnectedError(k);

  net.conductance_.assign(n, 0.0);
  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : net.edges_) {
    net.conductance_[e.u] += e.conductance;
    net.conductance_[e.v] += e.conductance;
    ++degree[e.u];
    ++degree[e.v];
  }
  net.total_ = std::accumulate(net.conductance_.begin(), net.conductance_.end(), 0.0);

  net.offsets_.assign(n + 1, 0);
  for (std::size_t x = 0; x < n; ++x) net.offsets_[x + 1] = net.offsets_[x] + degree[x];
  net.adjacency_.resize(net.offsets_[n]);
  std::vector<std::size_t> fill(net.offsets_.begin(), net.offsets_.end() - 1);
  for (const auto& e : net.edges_) {
    net.adjacency_[fill[e.u]++] = {e.v, e.conductance};
    net.adjacency_[fill[e.v]++] = {e.u, e.conductance};
  }
  net.labels_ = std::move(labels);
  return net;
}

// Vertex count is 1 + the largest id mentioned.
inline Network build_network(std::span<const Edge> edges, std::vector<std::string> labels = {}) {
  std::size_t n = 0;
  for (const auto& e : edges) n = std::max({n, e.u + 1, e.v + 1});
  if (!labels.empty()) n = std::max(n, labels.size());
  return Network::build(n, edges, std::move(labels));
}

inline Network build_network(std::initializer_list<Edge> edges) {
  return build_network(std::span<const Edge>(edges.begin(), edges.size()));
}

// Combinatorial Laplacian D - A, or (D - A) / tr(D) when normalized.
inline Eigen::MatrixXd laplacian(const Network& net, bool normalized = false) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : net.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
    L(u, v) -= e.conductance;
    L(v, u) -= e.conductance;
  }
  // Diagonal as the negated off-diagonal row sum so that L * 1 vanishes exactly
  // up to summation order.
  for (Eigen::Index i = 0; i < n; ++i) L(i, i) = -(L.row(i).sum());
  if (normalized) L /= net.total_conductance();
  return L;
}

struct QuotientNetwork {
  Network network;
  std::vector<Vertex> glued_set;
  // Id of the glued vertex v_S in `network` (always the last id).
  Vertex glued_vertex;
  // original id -> id in `network`; every member of S maps to glued_vertex.
  std::vector<Vertex> relabel;
};

// Glues S into a single vertex v_S; edges inside S are dropped and parallel
// edges into S are summed.
inline QuotientNetwork quotient(const Network& net, std::span<const Vertex> set) {
  const std::size_t n = net.size();
  if (set.empty()) throw InvalidParamError("quotient: glued set is empty");
  std::vector<bool> in_set(n, false);
  for (auto s : set) {
    if (s >= n) throw InvalidParamError("quotient: vertex " + std::to_string(s) + " out of range");
    in_set[s] = true;
  }
  const auto glued_count = static_cast<std::size_t>(std::count(in_set.begin(), in_set.end(), true));
  if (glued_count == n) throw InvalidParamError("quotient: glued set is the full vertex set");

  std::vector<Vertex> glued_set;
  std::vector<Vertex> relabel(n);
  std::vector<std::string> labels;
  Vertex next = 0;
  for (Vertex x = 0; x < n; ++x) {
    if (in_set[x]) {
      glued_set.push_back(x);
      continue;
    }
    relabel[x] = next++;
    if (!net.labels().empty()) labels.push_back(net.labels()[x]);
  }
  const Vertex glued = next;
  for (auto s : glued_set) relabel[s] = glued;
  if (!net.labels().empty()) labels.push_back("S");

  std::vector<Edge> edges;
  for (const auto& e : net.edges()) {
    if (in_set[e.u] && in_set[e.v]) continue;
    edges.push_back({relabel[e.u], relabel[e.v], e.conductance});
  }
  return {Network::build(glued + 1, edges, std::move(labels)), std::move(glued_set), glued,
          std::move(relabel)};
}

struct StarMeshReduction {
  Network network;
  // original[new id] = old id.
  std::vector<Vertex> original;
  // Conductance of the self-loop y -> x -> y that the reduction creates at each
  // survivor (c_xy^2 / c_x). A simple network cannot carry it, so it is
  // reported here; network.conductance(y) + self_loop[y] equals the old c_y.
  std::vector<double> self_loop;
};

// Eliminates x, adding c_xy * c_xz / c_x to every pair of its neighbours.
inline StarMeshReduction star_mesh_reduce(const Network& net, Vertex x) {
  const std::size_t n = net.size();
  if (n < 3) throw InvalidParamError("star-mesh reduction needs at least 3 vertices");
  if (x >= n) throw InvalidParamError("star-mesh: vertex out of range");

  std::vector<Vertex> relabel(n), original;
  for (Vertex y = 0, next = 0; y < n; ++y) {
    if (y == x) continue;
    relabel[y] = next++;
    original.push_back(y);
  }
  std::vector<double> self_loop(n - 1, 0.0);

  std::vector<Edge> edges;
  for (const auto& e : net.edges())
    if (e.u != x && e.v != x) edges.push_back({relabel[e.u], relabel[e.v], e.conductance});

  const double cx = net.conductance(x);
  const auto star = net.neighbors(x);
  for (std::size_t i = 0; i < star.size(); ++i) {
    self_loop[relabel[star[i].vertex]] = star[i].conductance * star[i].conductance / cx;
    for (std::size_t j = i + 1; j < star.size(); ++j)
      edges.push_back({relabel[star[i].vertex], relabel[star[j].vertex],
                       star[i].conductance * star[j].conductance / cx});
  }

  std::vector<std::string> labels;
  if (!net.labels().empty())
    for (auto y : original) labels.push_back(net.labels()[y]);
  return {Network::build(n - 1, edges, std::move(labels)), std::move(original),
          std::move(self_loop)};
}

}  // namespace covertime
