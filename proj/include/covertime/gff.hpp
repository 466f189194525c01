#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "random.hpp"
#include "resistance.hpp"

namespace covertime {

// Monte Carlo mean of a scalar functional with its error bars.
struct SupEstimate {
  double mean = 0.0;
  // min(sample sd, sigma) / sqrt(samples).
  double std_error = 0.0;
  // Plain sample sd / sqrt(samples).
  double sample_stderr = 0.0;
  std::size_t samples = 0;
  // Largest standard deviation of a coordinate of the process.
  double sigma = 0.0;

  // Gaussian concentration: P(|sup - E sup| > alpha) <= 2 exp(-alpha^2 / 2 sigma^2).
  double tail_bound(double alpha) const {
    return sigma > 0.0 ? 2.0 * std::exp(-alpha * alpha / (2.0 * sigma * sigma)) : 0.0;
  }
};

// E ||X||_inf and E ||X||_inf^2 for a centered process without a pinned point.
struct NormEstimate {
  SupEstimate norm;
  SupEstimate norm_squared;
};

namespace detail {

inline constexpr std::size_t kBlock = 256;

inline SupEstimate summarize(const std::vector<double>& values, double sigma) {
  SupEstimate est;
  est.samples = values.size();
  est.sigma = sigma;
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  const double root = std::sqrt(static_cast<double>(values.size()));
  est.sample_stderr = sd / root;
  est.std_error = (sigma > 0.0 ? std::min(sd, sigma) : sd) / root;
  return est;
}

inline Eigen::MatrixXd standard_normals(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

// Evaluates stat(column) for `samples` draws produced block by block.
template <typename DrawBlock, typename Stat>
std::vector<double> monte_carlo(std::size_t samples, std::uint64_t seed, Parallelism par,
                                DrawBlock&& draw_block, Stat&& stat) {
  std::vector<double> values(samples);
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  parallel_for(blocks, par, [&](std::size_t b) {
    const std::size_t first = b * kBlock;
    const std::size_t count = std::min(kBlock, samples - first);
    auto rng = stream(seed, b);
    const Eigen::MatrixXd X = draw_block(rng, static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) values[first + j] = stat(X.col(static_cast<Eigen::Index>(j)));
  });
  return values;
}

}  // namespace detail

// Gaussian free field sampler.
//
// pinned_green draws eta with eta(ground) = 0 and covariance equal to the
// Green matrix, using the oracle's Cholesky factor: if C C^T is the grounded
// Laplacian then C^{-T} g has covariance its inverse. The oracle must outlive
// the sampler.
//
// pseudoroot draws sqrt(L^+) g for the normalized Laplacian L = (D - A)/tr(D),
// so increments have variance equal to the commute time (total conductance
// times R_eff).
class GFFSampler {
public:
  enum class Mode { pinned_green, pseudoroot };

  static GFFSampler pinned(const ResistanceOracle& oracle) {
    GFFSampler s;
    s.mode_ = Mode::pinned_green;
    s.oracle_ = &oracle;
    s.n_ = static_cast<Eigen::Index>(oracle.network().size());
    s.ground_ = static_cast<Eigen::Index>(oracle.ground());
    s.sigma_ = std::sqrt(oracle.green_matrix().diagonal().maxCoeff());
    return s;
  }

  // Eigendecomposition of the normalized Laplacian; eigenvalues below
  // 1e-10 * largest are treated as the kernel.
  static GFFSampler pseudoroot(const Network& net) {
    GFFSampler s;
    s.mode_ = Mode::pseudoroot;
    s.n_ = static_cast<Eigen::Index>(net.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian(net, true));
    const Eigen::VectorXd& lambda = es.eigenvalues();
    const double cutoff = 1e-10 * lambda.maxCoeff();
    Eigen::VectorXd inv_root = Eigen::VectorXd::Zero(s.n_);
    for (Eigen::Index i = 0; i < s.n_; ++i)
      if (lambda(i) > cutoff) inv_root(i) = 1.0 / std::sqrt(lambda(i));
    s.root_ = es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
    s.sigma_ = std::sqrt((s.root_ * s.root_).diagonal().maxCoeff());
    return s;
  }

  Mode mode() const { return mode_; }
  Eigen::Index size() const { return n_; }
  double sigma() const { return sigma_; }

  // Pseudoroot matrix sqrt(L^+); pseudoroot mode only.
  const Eigen::MatrixXd& root() const { return root_; }

  // `count` independent draws as columns of an n x count matrix.
  Eigen::MatrixXd draw(std::mt19937_64& rng, Eigen::Index count) const {
    if (mode_ == Mode::pseudoroot) return root_ * detail::standard_normals(n_, count, rng);
    const Eigen::MatrixXd g = detail::standard_normals(n_ - 1, count, rng);
    const Eigen::MatrixXd reduced = oracle_->llt().matrixU().solve(g);
    Eigen::MatrixXd X(n_, count);
    X.topRows(ground_) = reduced.topRows(ground_);
    X.row(ground_).setZero();
    X.bottomRows(n_ - 1 - ground_) = reduced.bottomRows(n_ - 1 - ground_);
    return X;
  }

  Eigen::VectorXd sample(std::mt19937_64& rng) const { return draw(rng, 1).col(0); }

private:
  GFFSampler() = default;

  Mode mode_ = Mode::pinned_green;
  const ResistanceOracle* oracle_ = nullptr;
  Eigen::Index n_ = 0;
  Eigen::Index ground_ = 0;
  double sigma_ = 0.0;
  Eigen::MatrixXd root_;
};

inline Eigen::VectorXd sample_gff(const GFFSampler& sampler, std::mt19937_64& rng) {
  return sampler.sample(rng);
}

inline Eigen::VectorXd sample_pseudoroot(const Network& net, std::mt19937_64& rng) {
  return GFFSampler::pseudoroot(net).sample(rng);
}

// E max_v eta_v (signed maximum). For pinned fields the ground contributes 0.
inline SupEstimate estimate_sup(const GFFSampler& sampler, std::size_t samples, std::uint64_t seed,
                                Parallelism par = {}) {
  if (samples < 2) throw InvalidParamError("estimate_sup: need at least 2 samples");
  auto values = detail::monte_carlo(
      samples, seed, par, [&](std::mt19937_64& rng, Eigen::Index k) { return sampler.draw(rng, k); },
      [](const auto& col) { return col.maxCoeff(); });
  return detail::summarize(values, sampler.sigma());
}

namespace detail {

inline NormEstimate summarize_norms(const std::vector<double>& norms, double sigma) {
  std::vector<double> squares(norms.size());
  std::transform(norms.begin(), norms.end(), squares.begin(), [](double v) { return v * v; });
  NormEstimate out{summarize(norms, sigma), summarize(squares, 0.0)};
  return out;
}

}  // namespace detail

// E ||sqrt(L^+) g||_inf and E ||sqrt(L^+) g||_inf^2.
inline NormEstimate estimate_sup_norm(const GFFSampler& sampler, std::size_t samples,
                                      std::uint64_t seed, Parallelism par = {}) {
  if (samples < 2) throw InvalidParamError("estimate_sup_norm: need at least 2 samples");
  auto norms = detail::monte_carlo(
      samples, seed, par, [&](std::mt19937_64& rng, Eigen::Index k) { return sampler.draw(rng, k); },
      [](const auto& col) { return col.cwiseAbs().maxCoeff(); });
  return detail::summarize_norms(norms, sampler.sigma());
}

// L2 distance from eta_w to the affine hull of {eta_u : u in S}, from the
// Green covariance via the normal equations of the increments eta_u - eta_s0.
inline double affine_hull_distance(const ResistanceOracle& oracle, Vertex w, std::span<const Vertex> set) {
  if (set.empty()) throw InvalidParamError("affine_hull_distance: empty set");
  if (std::find(set.begin(), set.end(), w) != set.end()) return 0.0;
  const Vertex base = set.front();
  auto cov = [&](Vertex a, Vertex b) {
    return oracle.green(a, b) - oracle.green(a, base) - oracle.green(base, b) + oracle.green(base, base);
  };
  std::vector<Vertex> rest;
  for (auto u : set)
    if (u != base && std::find(rest.begin(), rest.end(), u) == rest.end()) rest.push_back(u);
  double dist2 = cov(w, w);
  if (!rest.empty()) {
    const auto k = static_cast<Eigen::Index>(rest.size());
    Eigen::MatrixXd K(k, k);
    Eigen::VectorXd c(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      c(i) = cov(rest[i], w);
      for (Eigen::Index j = 0; j < k; ++j) K(i, j) = cov(rest[i], rest[j]);
    }
    dist2 -= c.dot(K.ldlt().solve(c));
  }
  return std::sqrt(std::max(dist2, 0.0));
}

// Low-dimensional map Z with kappa(i,j) <= ||Z(e_i - e_j)||^2 <= 2 kappa(i,j).
struct ResistanceSketch {
  enum class PairCheck { all_pairs, sampled };

  Eigen::MatrixXd Z;  // k x n
  Eigen::Index rows = 0;
  bool validated = false;
  PairCheck pair_check = PairCheck::all_pairs;
  // Extremes of ||Z(e_i - e_j)||^2 / kappa(i,j) over the checked pairs.
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  // Scalar applied to the raw projection before validation.
  double calibration = 1.0;
  std::size_t attempts = 0;
};

struct SketchOptions {
  // 0 selects ceil(24 ln n).
  Eigen::Index rows = 0;
  std::size_t attempts_per_size = 8;
  double growth = 1.5;
  std::size_t max_growth_rounds = 8;
  ResistanceSketch::PairCheck pair_check = ResistanceSketch::PairCheck::all_pairs;
  std::size_t sampled_pairs = 20000;
};

namespace detail {

struct PairRatios {
  double lo = INFINITY, hi = 0.0;
  Vertex lo_u = 0, lo_v = 0, hi_u = 0, hi_v = 0;
};

inline PairRatios sketch_ratios(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& kappa,
                                const std::vector<std::pair<Vertex, Vertex>>& pairs) {
  PairRatios out;
  for (auto [u, v] : pairs) {
    const auto a = static_cast<Eigen::Index>(u), b = static_cast<Eigen::Index>(v);
    const double r = (Z.col(a) - Z.col(b)).squaredNorm() / kappa(a, b);
    if (r < out.lo) out = {r, out.hi, u, v, out.hi_u, out.hi_v};
    if (r > out.hi) out = {out.lo, r, out.lo_u, out.lo_v, u, v};
  }
  return out;
}

}  // namespace detail

// Z = sqrt(C) Q W^{1/2} B L0^+ where B is the signed edge-vertex incidence, W
// the edge conductances, L0 the combinatorial Laplacian, C the total
// conductance, and Q a k x m matrix of +-1/sqrt(k). The projection is then
// rescaled so the extreme observed ratios sit symmetrically (in log scale)
// around sqrt(2); the sketch is accepted when every checked pair lands in
// [1, 2]. Failures redraw Q, and after `attempts_per_size` failures k grows.
inline ResistanceSketch build_sketch(const ResistanceOracle& oracle, std::uint64_t seed,
                                     SketchOptions opt = {}) {
  const Network& net = oracle.network();
  const std::size_t n = net.size();
  const std::size_t m = net.edge_count();
  Eigen::Index k = opt.rows > 0 ? opt.rows
                                : static_cast<Eigen::Index>(std::ceil(24.0 * std::log(static_cast<double>(n))));
  k = std::max<Eigen::Index>(k, 1);

  const Eigen::MatrixXd kappa = net.total_conductance() * oracle.resistance_matrix();

  std::vector<std::pair<Vertex, Vertex>> pairs;
  const std::size_t all = n * (n - 1) / 2;
  if (opt.pair_check == ResistanceSketch::PairCheck::all_pairs || all <= opt.sampled_pairs) {
    for (Vertex u = 0; u < n; ++u)
      for (Vertex v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  } else {
    auto rng = stream(seed, ~0ULL);
    std::uniform_int_distribution<Vertex> pick(0, n - 1);
    while (pairs.size() < opt.sampled_pairs) {
      Vertex u = pick(rng), v = pick(rng);
      if (u != v) pairs.emplace_back(std::min(u, v), std::max(u, v));
    }
  }

  ResistanceSketch sketch;
  sketch.pair_check = opt.pair_check;
  detail::PairRatios worst;
  std::size_t attempt = 0;
  for (std::size_t round = 0; round <= opt.max_growth_rounds; ++round) {
    for (std::size_t a = 0; a < opt.attempts_per_size; ++a, ++attempt) {
      auto rng = stream(seed, attempt);
      std::bernoulli_distribution coin(0.5);
      const double entry = 1.0 / std::sqrt(static_cast<double>(k));
      // Y = Q W^{1/2} B, accumulated edge by edge.
      Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(n));
      for (std::size_t e = 0; e < m; ++e) {
        const auto& edge = net.edges()[e];
        const double w = std::sqrt(edge.conductance);
        for (Eigen::Index i = 0; i < k; ++i) {
          const double q = coin(rng) ? entry : -entry;
          Y(i, static_cast<Eigen::Index>(edge.u)) += q * w;
          Y(i, static_cast<Eigen::Index>(edge.v)) -= q * w;
        }
      }
      // Rows of Y are orthogonal to constants, so Y L0^+ is the grounded
      // solution shifted to mean zero.
      Eigen::MatrixXd Z(k, static_cast<Eigen::Index>(n));
      const Vertex g = oracle.ground();
      for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::VectorXd rhs(oracle.grounded_size());
        for (Vertex x = 0; x < n; ++x)
          if (x != g) rhs(oracle.reduced_index(x)) = Y(i, static_cast<Eigen::Index>(x));
        const Eigen::VectorXd z = oracle.solve(rhs);
        Eigen::VectorXd full(static_cast<Eigen::Index>(n));
        for (Vertex x = 0; x < n; ++x)
          full(static_cast<Eigen::Index>(x)) = x == g ? 0.0 : z(oracle.reduced_index(x));
        full.array() -= full.mean();
        Z.row(i) = full.transpose();
      }
      Z *= std::sqrt(net.total_conductance());

      const auto raw = detail::sketch_ratios(Z, kappa, pairs);
      const double calibration = std::sqrt(2.0 / (raw.lo * raw.hi));
      Z *= std::sqrt(calibration);
      worst = detail::sketch_ratios(Z, kappa, pairs);
      if (worst.lo >= 1.0 && worst.hi <= 2.0) {
        sketch.Z = std::move(Z);
        sketch.rows = k;
        sketch.validated = true;
        sketch.min_ratio = worst.lo;
        sketch.max_ratio = worst.hi;
        sketch.calibration = calibration;
        sketch.attempts = attempt + 1;
        return sketch;
      }
    }
    k = static_cast<Eigen::Index>(std::ceil(static_cast<double>(k) * opt.growth));
  }
  if (worst.hi > 2.0) throw SketchValidationFailed(worst.hi, worst.hi_u, worst.hi_v);
  throw SketchValidationFailed(worst.lo, worst.lo_u, worst.lo_v);
}

// A(G) = ||Z^T g||_inf^2 with g a k-dimensional standard Gaussian; the
// process eta_i = <g, Z e_i> has increments ||Z(e_i - e_j)||^2.
inline NormEstimate sketch_sup_estimate(const ResistanceSketch& sketch, std::size_t samples,
                                        std::uint64_t seed, Parallelism par = {}) {
  if (!sketch.validated) throw InvalidParamError("sketch_sup_estimate: sketch is not validated");
  if (samples < 2) throw InvalidParamError("sketch_sup_estimate: need at least 2 samples");
  const Eigen::MatrixXd Zt = sketch.Z.transpose();
  auto norms = detail::monte_carlo(
      samples, seed, par,
      [&](std::mt19937_64& rng, Eigen::Index count) {
        return Eigen::MatrixXd(Zt * detail::standard_normals(sketch.rows, count, rng));
      },
      [](const auto& col) { return col.cwiseAbs().maxCoeff(); });
  const double sigma = std::sqrt(sketch.Z.colwise().squaredNorm().maxCoeff());
  return detail::summarize_norms(norms, sigma);
}

}  // namespace covertime
