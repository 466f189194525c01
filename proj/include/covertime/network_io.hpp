#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "generators.hpp"
#include "network.hpp"

namespace covertime::io {

namespace detail {

inline bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("");
    return v;
  } catch (const std::exception&) {
    throw ParseError(context + ": cannot parse number '" + s + "'");
  }
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace detail

// Edge-list text: one `u v [c]` per line, `#` starts a comment. When every
// endpoint token is a non-negative integer the tokens are the vertex ids;
// otherwise tokens are labels numbered in order of first appearance.
inline Network read_edge_list(std::istream& in) {
  struct RawEdge {
    std::string u, v;
    double c;
  };
  std::vector<RawEdge> raw;
  std::string line;
  std::size_t lineno = 0;
  bool all_numeric = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (tok.size() < 2 || tok.size() > 3)
      throw ParseError(where + ": expected 'u v [c]', got " + std::to_string(tok.size()) + " fields");
    double c = tok.size() == 3 ? detail::parse_double(tok[2], where) : 1.0;
    std::size_t dummy;
    all_numeric = all_numeric && detail::parse_index(tok[0], dummy) && detail::parse_index(tok[1], dummy);
    raw.push_back({tok[0], tok[1], c});
  }
  if (raw.empty()) throw ParseError("edge list contains no edges");

  std::vector<Edge> edges;
  std::vector<std::string> labels;
  if (all_numeric) {
    for (const auto& r : raw) {
      std::size_t u = 0, v = 0;
      detail::parse_index(r.u, u);
      detail::parse_index(r.v, v);
      edges.push_back({u, v, r.c});
    }
  } else {
    std::unordered_map<std::string, Vertex> ids;
    auto id = [&](const std::string& name) {
      auto [it, fresh] = ids.try_emplace(name, labels.size());
      if (fresh) labels.push_back(name);
      return it->second;
    };
    for (const auto& r : raw) {
      Vertex u = id(r.u);
      edges.push_back({u, id(r.v), r.c});
    }
    try {
      return build_network(edges, labels);
    } catch (const SelfLoopError& e) {
      throw SelfLoopError(e.vertex, labels[e.vertex]);
    }
  }
  return build_network(edges, std::move(labels));
}

// {"edges": [[u, v, c], ...], "labels": {"0": "a", ...}}; c defaults to 1.
inline Network read_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("edges") || !doc["edges"].is_array())
    throw ParseError("JSON network needs an 'edges' array");
  std::vector<Edge> edges;
  try {
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3)
        throw ParseError("each edge must be [u, v] or [u, v, c]");
      if (!e[0].is_number_integer() || !e[1].is_number_integer() || e[0].get<long long>() < 0 ||
          e[1].get<long long>() < 0)
        throw ParseError("edge endpoints must be non-negative integers");
      edges.push_back({e[0].get<Vertex>(), e[1].get<Vertex>(), e.size() == 3 ? e[2].get<double>() : 1.0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid edge entry: ") + e.what());
  }
  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    std::size_t n = 0;
    for (const auto& e : edges) n = std::max({n, e.u + 1, e.v + 1});
    labels.resize(n);
    for (Vertex x = 0; x < n; ++x) labels[x] = std::to_string(x);
    for (const auto& [key, value] : doc["labels"].items()) {
      std::size_t x;
      if (!detail::parse_index(key, x) || x >= n || !value.is_string())
        throw ParseError("bad label entry '" + key + "'");
      labels[x] = value.get<std::string>();
    }
  }
  return build_network(edges, std::move(labels));
}

inline Network read_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return json ? read_json(in) : read_edge_list(in);
}

inline void write_edge_list(std::ostream& out, const Network& net) {
  out.precision(17);
  for (const auto& e : net.edges()) out << net.label(e.u) << ' ' << net.label(e.v) << ' ' << e.conductance << '\n';
}

// Generator specs: complete:n, path:n, cycle:n, bary_tree:b,h (alias tree),
// grid:r,c (grid:k is square), erdos_renyi:n,p,seed (alias er).
inline Network generate(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw ParseError("generator spec '" + spec + "' needs family:params");
  const std::string family = spec.substr(0, colon);
  const auto params = detail::split(std::string_view(spec).substr(colon + 1), ',');
  auto count = [&](std::size_t i) {
    std::size_t v;
    if (i >= params.size() || !detail::parse_index(params[i], v))
      throw ParseError("generator '" + spec + "': parameter " + std::to_string(i + 1) + " must be a count");
    return v;
  };
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi)
      throw ParseError("generator '" + spec + "': wrong number of parameters");
  };
  if (family == "complete" || family == "K") {
    arity(1, 1);
    return gen::complete(count(0));
  }
  if (family == "path") {
    arity(1, 1);
    return gen::path(count(0));
  }
  if (family == "cycle") {
    arity(1, 1);
    return gen::cycle(count(0));
  }
  if (family == "bary_tree" || family == "tree") {
    arity(2, 2);
    return gen::bary_tree(count(0), count(1));
  }
  if (family == "grid") {
    arity(1, 2);
    return gen::grid(count(0), params.size() == 2 ? count(1) : count(0));
  }
  if (family == "erdos_renyi" || family == "er") {
    arity(2, 3);
    const double p = detail::parse_double(params[1], "generator '" + spec + "'");
    return gen::erdos_renyi(count(0), p, params.size() == 3 ? count(2) : 1);
  }
  throw ParseError("unknown generator family '" + family + "'");
}

}  // namespace covertime::io
