#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resistance.hpp"

namespace covertime {

// Finite (pseudo)metric given by a dense distance table. Zero off-diagonal
// entries are allowed and mean coincident points.
class FiniteMetric {
public:
  explicit FiniteMetric(Eigen::MatrixXd d, std::vector<std::string> labels = {},
                        double triangle_slack = 1e-9)
      : d_(std::move(d)), labels_(std::move(labels)) {
    const auto n = d_.rows();
    if (n < 1 || d_.cols() != n) throw InvalidParamError("metric: distance table must be square and nonempty");
    if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != n)
      throw InvalidParamError("metric: label count mismatch");
    const double scale = std::max(1.0, d_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d_(i, i) != 0.0) throw InvalidParamError("metric: nonzero diagonal at " + std::to_string(i));
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!std::isfinite(d_(i, j)) || d_(i, j) < 0.0)
          throw InvalidParamError("metric: distances must be finite and nonnegative");
        if (std::abs(d_(i, j) - d_(j, i)) > 1e-12 * scale) throw InvalidParamError("metric: table is not symmetric");
      }
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
          if (d_(i, k) > d_(i, j) + d_(j, k) + triangle_slack * scale)
            throw InvalidParamError("metric: triangle inequality fails on (" + std::to_string(i) + "," +
                                    std::to_string(j) + "," + std::to_string(k) + ")");
  }

  std::size_t size() const { return static_cast<std::size_t>(d_.rows()); }
  double operator()(std::size_t x, std::size_t y) const {
    return d_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }
  const Eigen::MatrixXd& table() const { return d_; }
  const std::vector<std::string>& labels() const { return labels_; }
  double diameter() const { return d_.maxCoeff(); }

  FiniteMetric scaled(double lambda) const { return FiniteMetric(lambda * d_, labels_); }

private:
  Eigen::MatrixXd d_;
  std::vector<std::string> labels_;
};

// d = sqrt(R_eff), the canonical metric of the Gaussian free field.
inline FiniteMetric resistance_metric(const ResistanceOracle& oracle) {
  return FiniteMetric(oracle.resistance_matrix().cwiseSqrt(), oracle.network().labels());
}

// Dense CSV distance table; an optional first row of non-numeric cells is
// taken as labels.
inline FiniteMetric read_metric_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    std::vector<double> row;
    try {
      for (const auto& c : cells) {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      }
    } catch (const std::exception&) {
      if (first) {
        labels = cells;
        first = false;
        continue;
      }
      throw ParseError("metric CSV: non-numeric cell in row " + std::to_string(rows.size() + 1));
    }
    first = false;
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw ParseError("metric CSV: no rows");
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n)
      throw ParseError("metric CSV: row " + std::to_string(i + 1) + " has wrong length");
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = rows[i][j];
  }
  return FiniteMetric(std::move(d), std::move(labels));
}

inline FiniteMetric read_metric_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_metric_csv(in);
}

// Output of the multiscale approximation. All phi values are in rescaled
// units; multiply by `unit` to return to the input metric.
struct ScaleMaps {
  // How a value phi_j(x) was obtained, recorded for certificate extraction.
  struct Choice {
    enum class Kind { copy_self, copy, branch };
    Kind kind = Kind::copy_self;
    // copy: the maximizing z; copy_self: x itself.
    std::size_t z = 0;
    // branch: y_{l_1}, ..., y_{l_k} achieving the maximum.
    std::vector<std::size_t> children;
  };

  int r = 16;
  int top_scale = 0;  // M
  std::size_t root = 0;
  // Length scale of one rescaled unit in input units.
  double unit = 1.0;
  // Distances in rescaled units on the collapsed point set.
  Eigen::MatrixXd distance;
  // input point -> collapsed point.
  std::vector<std::size_t> representative;
  std::vector<int> active_scales;
  // phi[j] for j in [0, M]; skipped scales share the previous array.
  std::vector<std::shared_ptr<const std::vector<double>>> phi;
  // nets[j] in insertion order, assignment[j][x] = g_j(x); empty for skipped
  // scales and j < 2.
  std::vector<std::vector<std::size_t>> nets;
  std::vector<std::vector<std::size_t>> assignment;
  // choices[j][x] for j >= 2.
  std::vector<std::vector<Choice>> choices;

  std::size_t points() const { return static_cast<std::size_t>(distance.rows()); }
  double power(int j) const { return std::pow(static_cast<double>(r), j); }
  const std::vector<double>& phi_at(int j) const { return *phi[static_cast<std::size_t>(j)]; }
  double value() const { return phi.empty() ? 0.0 : phi_at(top_scale)[root] * unit; }
};

namespace detail {

// Rounds to 40 significant bits so that scaling the input by any lambda
// reproduces the same rescaled table.
inline double quantize(double v) {
  if (v == 0.0) return 0.0;
  int e;
  const double m = std::frexp(v, &e);
  return std::ldexp(std::round(std::ldexp(m, 40)), e - 40);
}

}  // namespace detail

// Deterministic multiscale approximation A(X, d) of the gamma_2 functional.
//
// Coincident points are collapsed, then distances are rescaled so the smallest
// positive one equals r^2 (this makes scales j <= 1, where phi vanishes,
// carry no separated pairs). With M the least integer such that the diameter
// is at most r^M, the maps phi_0 = phi_1 = 0, ..., phi_M are built bottom-up:
//   net N_j: greedy maximal r^{j-1}/3-net taking the uncovered point of
//            largest phi_{j-2} (lowest index on ties);
//   g_j(x):  first net point within r^{j-1}/3 of x;
//   phi_j(x) = phi_{j-1}(x) if B(g_j(x), 4r^j) \ B(g_j(x), r^{j-2}/16) is
//            empty, otherwise the larger of
//              max_k r^j sqrt(log k) + min_{i<=k} phi_{j-2}(y_{l_i})
//            over B(x, 2r^j) ∩ N_j = {y_{l_1}, ...} in net order, and
//              max { phi_{j-1}(z) : d(x, z) <= r^{j-1}/3 }.
// Scales without any pair at distance in [r^{j-3}, r^{j+1}] cannot leave the
// copy case and share phi_{j-1}. Returns phi_M(x_0) in input units, x_0 = 0.
inline ScaleMaps gamma2_maps(const FiniteMetric& metric, int r = 16) {
  if (r < 16) throw InvalidParamError("gamma2: scale base r must be >= 16");
  const std::size_t n_in = metric.size();

  ScaleMaps maps;
  maps.r = r;
  maps.representative.assign(n_in, 0);
  std::vector<std::size_t> reps;
  for (std::size_t x = 0; x < n_in; ++x) {
    auto it = std::find_if(reps.begin(), reps.end(), [&](std::size_t y) { return metric(x, y) == 0.0; });
    if (it == reps.end()) {
      maps.representative[x] = reps.size();
      reps.push_back(x);
    } else {
      maps.representative[x] = static_cast<std::size_t>(it - reps.begin());
    }
  }
  const std::size_t n = reps.size();
  maps.root = maps.representative[0];
  if (n == 1) {
    maps.distance = Eigen::MatrixXd::Zero(1, 1);
    maps.phi.push_back(std::make_shared<const std::vector<double>>(1, 0.0));
    return maps;
  }

  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) dmin = std::min(dmin, metric(reps[a], reps[b]));
  const double base = static_cast<double>(r) * static_cast<double>(r);
  maps.unit = dmin / base;

  auto& D = maps.distance;
  D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> pair_distances;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double s = std::max(detail::quantize(metric(reps[a], reps[b]) / dmin), 1.0) * base;
      D(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
      D(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = s;
      pair_distances.push_back(s);
    }
  std::sort(pair_distances.begin(), pair_distances.end());
  const double diam = pair_distances.back();

  int M = 2;
  while (maps.power(M) < diam) ++M;
  maps.top_scale = M;

  auto d = [&](std::size_t a, std::size_t b) {
    return D(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  };
  auto any_pair_in = [&](double lo, double hi) {
    auto it = std::lower_bound(pair_distances.begin(), pair_distances.end(), lo);
    return it != pair_distances.end() && *it <= hi;
  };

  const auto zeros = std::make_shared<const std::vector<double>>(n, 0.0);
  maps.phi.assign(static_cast<std::size_t>(M) + 1, zeros);
  maps.nets.assign(static_cast<std::size_t>(M) + 1, {});
  maps.assignment.assign(static_cast<std::size_t>(M) + 1, {});
  maps.choices.assign(static_cast<std::size_t>(M) + 1, {});

  for (int j = 2; j <= M; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double rj = maps.power(j);
    const double net_radius = maps.power(j - 1) / 3.0;
    const auto& prev = maps.phi_at(j - 1);
    const auto& prev2 = maps.phi_at(j - 2);

    auto& choices = maps.choices[ju];
    choices.resize(n);
    if (!any_pair_in(maps.power(j - 3), maps.power(j + 1))) {
      maps.phi[ju] = maps.phi[ju - 1];
      for (std::size_t x = 0; x < n; ++x) choices[x] = {ScaleMaps::Choice::Kind::copy_self, x, {}};
      continue;
    }
    maps.active_scales.push_back(j);

    // Greedy net.
    auto& net = maps.nets[ju];
    std::vector<bool> covered(n, false);
    while (true) {
      std::size_t best = n;
      for (std::size_t y = 0; y < n; ++y)
        if (!covered[y] && (best == n || prev2[y] > prev2[best])) best = y;
      if (best == n) break;
      net.push_back(best);
      for (std::size_t y = 0; y < n; ++y)
        if (d(best, y) <= net_radius) covered[y] = true;
    }
    auto& g = maps.assignment[ju];
    g.assign(n, 0);
    for (std::size_t x = 0; x < n; ++x)
      for (auto y : net)
        if (d(x, y) <= net_radius) {
          g[x] = y;
          break;
        }

    // Empty-annulus test per net point.
    const double inner = maps.power(j - 2) / 16.0, outer = 4.0 * rj;
    std::vector<bool> annulus_empty(n, true);
    for (auto y : net)
      for (std::size_t z = 0; z < n; ++z)
        if (d(y, z) > inner && d(y, z) <= outer) {
          annulus_empty[y] = false;
          break;
        }

    auto next = std::make_shared<std::vector<double>>(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      if (annulus_empty[g[x]]) {
        (*next)[x] = prev[x];
        choices[x] = {ScaleMaps::Choice::Kind::copy_self, x, {}};
        continue;
      }
      double branch = -1.0, running_min = std::numeric_limits<double>::infinity();
      std::size_t best_k = 0, k = 0;
      std::vector<std::size_t> ball;
      for (auto y : net) {
        if (d(x, y) > 2.0 * rj) continue;
        ball.push_back(y);
        ++k;
        running_min = std::min(running_min, prev2[y]);
        const double value = rj * std::sqrt(std::log(static_cast<double>(k))) + running_min;
        if (value > branch) {
          branch = value;
          best_k = k;
        }
      }
      double copy = -1.0;
      std::size_t best_z = x;
      for (std::size_t z = 0; z < n; ++z)
        if (d(x, z) <= net_radius && prev[z] > copy) {
          copy = prev[z];
          best_z = z;
        }
      if (branch > copy) {
        (*next)[x] = branch;
        ball.resize(best_k);
        choices[x] = {ScaleMaps::Choice::Kind::branch, x, std::move(ball)};
      } else {
        (*next)[x] = copy;
        choices[x] = {best_z == x ? ScaleMaps::Choice::Kind::copy_self : ScaleMaps::Choice::Kind::copy,
                      best_z, {}};
      }
    }
    maps.phi[ju] = std::move(next);
  }
  return maps;
}

inline double gamma2_approx(const FiniteMetric& metric, int r = 16) { return gamma2_maps(metric, r).value(); }

inline double gamma2_of_network(const ResistanceOracle& oracle, int r = 16) {
  return gamma2_approx(resistance_metric(oracle), r);
}

inline double gamma2_of_network(const Network& net, int r = 16) {
  return gamma2_of_network(ResistanceOracle(net), r);
}

// Exact gamma_2 by enumeration, n <= 10 (after collapsing coincident points).
// With M_2 = 16 >= n the level-2 partition can be all singletons, which zeroes
// every later term, so the value is
//   diam(X) + sqrt(2) * min over partitions P into <= 4 blocks of max diam(P(x)).
inline double brute_force_gamma2(const FiniteMetric& metric) {
  std::vector<std::size_t> pts;
  for (std::size_t x = 0; x < metric.size(); ++x)
    if (std::none_of(pts.begin(), pts.end(), [&](std::size_t y) { return metric(x, y) == 0.0; }))
      pts.push_back(x);
  const std::size_t n = pts.size();
  if (n > 10) throw InvalidParamError("brute_force_gamma2: at most 10 distinct points");
  if (n == 1) return 0.0;

  // Restricted growth strings with at most 4 blocks.
  std::vector<int> block(n, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, int, double)> rec = [&](std::size_t i, int used, double worst) {
    if (worst >= best) return;
    if (i == n) {
      best = worst;
      return;
    }
    for (int b = 0; b <= std::min(used, 3); ++b) {
      double w = worst;
      for (std::size_t k = 0; k < i; ++k)
        if (block[k] == b) w = std::max(w, metric(pts[i], pts[k]));
      block[i] = b;
      rec(i + 1, std::max(used, b + 1), w);
    }
  };
  rec(0, 0, 0.0);
  double diam = 0.0;
  for (auto a : pts)
    for (auto b : pts) diam = std::max(diam, metric(a, b));
  return diam + std::sqrt(2.0) * best;
}

// Lower-bound certificate read off the maximizers of the multiscale maps.
// Maximal runs (x, j0), (x, j0-1), ..., (x, j0-k) collapse to one node with
// scale j0 - k.
struct CertificateTree {
  struct Node {
    std::size_t point;  // input point index (representative)
    int scale;
    std::size_t parent;
    std::vector<std::size_t> children;
  };

  int r = 16;
  double unit = 1.0;
  std::vector<Node> nodes;  // nodes[0] is the root

  // Delta(v) = children + 1.
  std::size_t branching(std::size_t v) const { return nodes[v].children.size() + 1; }

  // inf over leaves of sum over the root path of r^{s(v)} sqrt(log Delta(v)),
  // in input units.
  double value() const {
    std::vector<double> below(nodes.size(), 0.0);
    for (std::size_t i = nodes.size(); i-- > 0;) {
      const auto& node = nodes[i];
      double rest = 0.0;
      if (!node.children.empty()) {
        rest = std::numeric_limits<double>::infinity();
        for (auto c : node.children) rest = std::min(rest, below[c]);
      }
      below[i] = std::pow(static_cast<double>(r), node.scale) *
                     std::sqrt(std::log(static_cast<double>(branching(i)))) +
                 rest;
    }
    return nodes.empty() ? 0.0 : below[0] * unit;
  }
};

inline CertificateTree extract_certificate(const ScaleMaps& maps, std::size_t max_nodes = 5'000'000) {
  CertificateTree tree;
  tree.r = maps.r;
  tree.unit = maps.unit;

  std::vector<std::size_t> input_of(maps.points(), 0);
  for (std::size_t x = maps.representative.size(); x-- > 0;) input_of[maps.representative[x]] = x;

  if (maps.points() == 1 || maps.top_scale < 2) {
    tree.nodes.push_back({input_of[maps.root], 0, 0, {}});
    return tree;
  }

  struct Pending {
    std::size_t point;
    int scale;
    std::size_t parent;
  };
  // Children are always created after their parent, so node order is a
  // topological order (used by value()).
  std::vector<Pending> stack{{maps.root, maps.top_scale, 0}};
  while (!stack.empty()) {
    auto [x, j, parent] = stack.back();
    stack.pop_back();
    // Follow the single-child run at the same point.
    while (j >= 2 && maps.choices[static_cast<std::size_t>(j)][x].kind == ScaleMaps::Choice::Kind::copy_self) --j;
    const std::size_t id = tree.nodes.size();
    if (id >= max_nodes) throw InvalidParamError("extract_certificate: tree exceeds node budget");
    tree.nodes.push_back({input_of[x], std::max(j, 0), parent, {}});
    if (id != 0) tree.nodes[parent].children.push_back(id);
    if (j < 2) continue;
    const auto& choice = maps.choices[static_cast<std::size_t>(j)][x];
    if (choice.kind == ScaleMaps::Choice::Kind::copy) {
      stack.push_back({choice.z, j - 1, id});
    } else {
      for (auto it = choice.children.rbegin(); it != choice.children.rend(); ++it)
        stack.push_back({*it, j - 2, id});
    }
  }
  return tree;
}

}  // namespace covertime
