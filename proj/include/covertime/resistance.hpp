#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "network.hpp"

namespace covertime {

// Exact electrical quantities from a factorization of the grounded Laplacian
// (the combinatorial Laplacian with the ground row and column removed). Its
// inverse is the Green matrix of the walk killed at the ground.
class ResistanceOracle {
public:
  struct Options {
    // Defaults to the vertex of maximum c_x.
    std::optional<Vertex> ground;
    // Above this size the oracle switches to conjugate-gradient solves and
    // keeps no dense Green matrix.
    std::size_t dense_limit = 4000;
    double cg_tolerance = 1e-10;
  };

  explicit ResistanceOracle(const Network& net) : ResistanceOracle(net, Options{}) {}
  ResistanceOracle(const Network& net, Options opt);

  const Network& network() const { return net_; }
  Vertex ground() const { return ground_; }
  bool dense() const { return dense_; }
  // True when the factorization only succeeded after diagonal jitter.
  bool jittered() const { return jittered_; }

  // Position of x among grounded coordinates; x must not be the ground.
  Eigen::Index reduced_index(Vertex x) const {
    return static_cast<Eigen::Index>(x < ground_ ? x : x - 1);
  }

  // Green covariance with the convention that the ground row/column is zero.
  double green(Vertex x, Vertex y) const {
    if (x == ground_ || y == ground_) return 0.0;
    if (dense_) return green_(reduced_index(x), reduced_index(y));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(grounded_size());
    b(reduced_index(y)) = 1.0;
    return solve(b)(reduced_index(x));
  }

  // (n-1)x(n-1) dense Green matrix; dense mode only.
  const Eigen::MatrixXd& green_matrix() const {
    require_dense("green_matrix");
    return green_;
  }

  // Lower factor C of the grounded Laplacian, C * C^T = grounded Laplacian.
  Eigen::MatrixXd cholesky_lower() const {
    require_dense("cholesky_lower");
    return llt_.matrixL();
  }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const {
    require_dense("llt");
    return llt_;
  }

  Eigen::Index grounded_size() const { return static_cast<Eigen::Index>(net_.size()) - 1; }

  // Solves (grounded Laplacian) z = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  double r_eff(Vertex x, Vertex y) const;

  // 1 / R_eff.
  double c_eff(Vertex x, Vertex y) const { return 1.0 / r_eff(x, y); }

  // Expected commute time: total conductance times R_eff.
  double commute(Vertex x, Vertex y) const { return net_.total_conductance() * r_eff(x, y); }

  // n x n table of pairwise effective resistances.
  Eigen::MatrixXd resistance_matrix() const;

  // max over pairs of sqrt(R_eff).
  double resistance_diameter() const { return std::sqrt(resistance_matrix().maxCoeff()); }

private:
  void require_dense(const char* what) const {
    if (!dense_) throw InvalidParamError(std::string(what) + " requires the dense oracle");
  }

  Network net_;
  Vertex ground_;
  bool dense_;
  bool jittered_ = false;
  double cg_tolerance_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd green_;
  Eigen::SparseMatrix<double> sparse_;
};

namespace detail {

inline Eigen::MatrixXd grounded(const Eigen::MatrixXd& L, Vertex ground) {
  const auto n = L.rows();
  const auto g = static_cast<Eigen::Index>(ground);
  Eigen::MatrixXd out(n - 1, n - 1);
  for (Eigen::Index i = 0, ri = 0; i < n; ++i) {
    if (i == g) continue;
    for (Eigen::Index j = 0, rj = 0; j < n; ++j) {
      if (j == g) continue;
      out(ri, rj++) = L(i, j);
    }
    ++ri;
  }
  return out;
}

// Factor A; on failure retry once with 1e-12 * trace(A) added to the diagonal.
inline Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& A, bool& jittered,
                                              const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  jittered = false;
  if (llt.info() == Eigen::Success) return llt;
  Eigen::MatrixXd B = A;
  B.diagonal().array() += 1e-12 * A.trace();
  llt.compute(B);
  if (llt.info() == Eigen::Success) {
    jittered = true;
    return llt;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double cond = ev(0) > 0.0 ? ev(ev.size() - 1) / ev(0) : INFINITY;
  throw FactorizationFailure(what, cond);
}

}  // namespace detail

inline ResistanceOracle::ResistanceOracle(const Network& net, Options opt)
    : net_(net),
      ground_(opt.ground.value_or(net.max_conductance_vertex())),
      dense_(net.size() <= opt.dense_limit),
      cg_tolerance_(opt.cg_tolerance) {
  if (ground_ >= net.size()) throw InvalidParamError("ground vertex out of range");
  if (dense_) {
    llt_ = detail::factor_spd(detail::grounded(laplacian(net), ground_), jittered_,
                              "grounded Laplacian factorization failed");
    green_ = llt_.solve(Eigen::MatrixXd::Identity(grounded_size(), grounded_size()));
    // Symmetrize away round-off.
    green_ = (0.5 * (green_ + green_.transpose())).eval();
    return;
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& e : net.edges()) {
    const bool gu = e.u == ground_, gv = e.v == ground_;
    if (!gu) trips.emplace_back(reduced_index(e.u), reduced_index(e.u), e.conductance);
    if (!gv) trips.emplace_back(reduced_index(e.v), reduced_index(e.v), e.conductance);
    if (!gu && !gv) {
      trips.emplace_back(reduced_index(e.u), reduced_index(e.v), -e.conductance);
      trips.emplace_back(reduced_index(e.v), reduced_index(e.u), -e.conductance);
    }
  }
  sparse_.resize(grounded_size(), grounded_size());
  sparse_.setFromTriplets(trips.begin(), trips.end());
}

inline Eigen::VectorXd ResistanceOracle::solve(const Eigen::VectorXd& b) const {
  if (dense_) return llt_.solve(b);
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(cg_tolerance_);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * grounded_size()));
  cg.compute(sparse_);
  Eigen::VectorXd z = cg.solve(b);
  if (cg.info() != Eigen::Success)
    throw FactorizationFailure("conjugate gradient did not converge", cg.error() / cg_tolerance_);
  return z;
}

inline double ResistanceOracle::r_eff(Vertex x, Vertex y) const {
  if (x == y) return 0.0;
  if (dense_) {
    const double r = green(x, x) + green(y, y) - 2.0 * green(x, y);
    return std::max(r, 0.0);
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(grounded_size());
  if (x != ground_) b(reduced_index(x)) += 1.0;
  if (y != ground_) b(reduced_index(y)) -= 1.0;
  return b.dot(solve(b));
}

inline Eigen::MatrixXd ResistanceOracle::resistance_matrix() const {
  const auto n = static_cast<Eigen::Index>(net_.size());
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = x + 1; y < n; ++y)
      R(x, y) = R(y, x) = r_eff(static_cast<Vertex>(x), static_cast<Vertex>(y));
  return R;
}

// R_eff(v, S): resistance between v and the glued vertex of G/S.
inline double r_eff_set(const Network& net, Vertex v, std::span<const Vertex> set) {
  if (std::find(set.begin(), set.end(), v) != set.end())
    throw InvalidParamError("r_eff_set: vertex lies in the set");
  const auto q = quotient(net, set);
  return ResistanceOracle(q.network).r_eff(q.relabel[v], q.glued_vertex);
}

// R_eff(A, B) for disjoint nonempty sets: glue each side, then measure.
inline double r_eff_sets(const Network& net, std::span<const Vertex> a, std::span<const Vertex> b) {
  for (auto x : a)
    if (std::find(b.begin(), b.end(), x) != b.end())
      throw InvalidParamError("r_eff_sets: sets must be disjoint");
  const auto qa = quotient(net, a);
  std::vector<Vertex> b_relabeled;
  for (auto x : b) b_relabeled.push_back(qa.relabel[x]);
  const auto qb = quotient(qa.network, b_relabeled);
  return ResistanceOracle(qb.network).r_eff(qb.relabel[qa.glued_vertex], qb.glued_vertex);
}

struct HittingTimeTable {
  // H(u, v): expected discrete steps from u to v.
  Eigen::MatrixXd H;
  double t_hit = 0.0;
  // max over pairs of sqrt(R_eff).
  double resistance_diameter = 0.0;
};

// One grounded solve per target v of c_x H(x) - sum_y c_xy H(y) = c_x with
// H(v) = 0. Uses no Green matrix so it can cross-check the oracle.
inline HittingTimeTable hitting_times(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  const Eigen::MatrixXd L = laplacian(net);
  HittingTimeTable table;
  table.H = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index v = 0; v < n; ++v) {
    bool jittered = false;
    auto llt = detail::factor_spd(detail::grounded(L, static_cast<Vertex>(v)), jittered,
                                  "hitting-time factorization failed");
    Eigen::VectorXd rhs(n - 1);
    for (Eigen::Index x = 0, r = 0; x < n; ++x)
      if (x != v) rhs(r++) = net.conductance(static_cast<Vertex>(x));
    const Eigen::VectorXd h = llt.solve(rhs);
    for (Eigen::Index x = 0, r = 0; x < n; ++x)
      if (x != v) table.H(x, v) = h(r++);
  }
  table.t_hit = table.H.maxCoeff();
  // Commute identity gives R_eff without touching the oracle.
  const Eigen::MatrixXd kappa = table.H + table.H.transpose();
  table.resistance_diameter = std::sqrt(kappa.maxCoeff() / net.total_conductance());
  return table;
}

// Same table from one factorization: with P = L^+,
// H(u, v) = sum_x c_x (P_ux - P_uv - P_vx + P_vv).
inline HittingTimeTable hitting_times(const ResistanceOracle& oracle) {
  const Network& net = oracle.network();
  const auto n = static_cast<Eigen::Index>(net.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  const auto g = static_cast<Eigen::Index>(oracle.ground());
  const Eigen::MatrixXd& green = oracle.green_matrix();
  for (Eigen::Index x = 0, rx = 0; x < n; ++x) {
    if (x == g) continue;
    for (Eigen::Index y = 0, ry = 0; y < n; ++y) {
      if (y == g) continue;
      G(x, y) = green(rx, ry++);
    }
    ++rx;
  }
  // L^+ = (I - J/n) G (I - J/n).
  const Eigen::VectorXd row_mean = G.rowwise().mean();
  const double grand = row_mean.mean();
  Eigen::MatrixXd P = G;
  P.colwise() -= row_mean;
  P.rowwise() -= row_mean.transpose();
  P.array() += grand;

  Eigen::VectorXd c(n);
  for (Eigen::Index x = 0; x < n; ++x) c(x) = net.conductance(static_cast<Vertex>(x));
  const Eigen::VectorXd Pc = P * c;
  HittingTimeTable table;
  table.H.resize(n, n);
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = 0; v < n; ++v)
      table.H(u, v) = u == v ? 0.0 : Pc(u) - Pc(v) + net.total_conductance() * (P(v, v) - P(u, v));
  table.t_hit = table.H.maxCoeff();
  const Eigen::MatrixXd kappa = table.H + table.H.transpose();
  table.resistance_diameter = std::sqrt(kappa.maxCoeff() / net.total_conductance());
  return table;
}

// sum_e c_e R_eff(e) - (n - 1); zero by Foster's theorem.
inline double foster_residual(const ResistanceOracle& oracle) {
  double sum = 0.0;
  for (const auto& e : oracle.network().edges()) sum += e.conductance * oracle.r_eff(e.u, e.v);
  return sum - static_cast<double>(oracle.network().size() - 1);
}

inline double foster_residual(const Network& net) { return foster_residual(ResistanceOracle(net)); }

// P_v(walk from v hits u before returning to v) = 1 / (c_v R_eff(u, v)).
inline double escape_probability(const ResistanceOracle& oracle, Vertex v, Vertex u) {
  if (u == v) throw InvalidParamError("escape_probability: u and v must differ");
  return 1.0 / (oracle.network().conductance(v) * oracle.r_eff(u, v));
}

inline double escape_probability(const Network& net, Vertex v, Vertex u) {
  return escape_probability(ResistanceOracle(net), v, u);
}

}  // namespace covertime
