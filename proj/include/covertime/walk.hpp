#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gff.hpp"
#include "network.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace covertime {

// Jump chain of the network walk: from x, move to y with probability c_xy / c_x.
class RandomWalk {
public:
  explicit RandomWalk(const Network& net) : net_(&net) {
    cumulative_.reserve(2 * net.edge_count());
    for (Vertex x = 0; x < net.size(); ++x) {
      double acc = 0.0;
      for (const auto& nb : net.neighbors(x)) cumulative_.push_back(acc += nb.conductance);
    }
  }

  const Network& network() const { return *net_; }

  Vertex jump(Vertex x, std::mt19937_64& rng) const {
    const auto nbs = net_->neighbors(x);
    const std::size_t first = static_cast<std::size_t>(nbs.data() - net_->neighbors(0).data());
    const double* begin = cumulative_.data() + first;
    const double* end = begin + nbs.size();
    const double u = std::uniform_real_distribution<double>(0.0, *(end - 1))(rng);
    auto it = std::upper_bound(begin, end, u);
    if (it == end) --it;
    return nbs[static_cast<std::size_t>(it - begin)].vertex;
  }

private:
  const Network* net_;
  std::vector<double> cumulative_;
};

struct LocalTimes {
  // L_v = occupation time at v divided by c_v.
  std::vector<double> L;
  // Visits to v among X_0, ..., X_t.
  std::vector<std::uint64_t> N;
  // c_v / total conductance.
  std::vector<double> pi;
};

struct WalkTrace {
  Vertex start = 0;
  std::uint64_t discrete_steps = 0;
  double continuous_time = 0.0;
  Vertex current = 0;
};

struct StoppingRule {
  enum class Kind { cover, cover_and_return, inverse_local, blanket_weak, blanket_strong, blanket_continuous };
  Kind kind = Kind::cover;
  // t for inverse_local, delta for the blanket rules.
  double parameter = 0.0;
  // Vertex whose local time is inverted (inverse_local only).
  Vertex root = 0;

  static StoppingRule cover() { return {Kind::cover, 0.0, 0}; }
  static StoppingRule cover_and_return() { return {Kind::cover_and_return, 0.0, 0}; }
  static StoppingRule inverse_local(Vertex root, double t) { return {Kind::inverse_local, t, root}; }
  static StoppingRule blanket_weak(double delta) { return {Kind::blanket_weak, delta, 0}; }
  static StoppingRule blanket_strong(double delta) { return {Kind::blanket_strong, delta, 0}; }
  static StoppingRule blanket_continuous(double delta) { return {Kind::blanket_continuous, delta, 0}; }
};

inline std::string to_string(StoppingRule::Kind kind) {
  switch (kind) {
    case StoppingRule::Kind::cover: return "cover";
    case StoppingRule::Kind::cover_and_return: return "cover_and_return";
    case StoppingRule::Kind::inverse_local: return "inverse_local";
    case StoppingRule::Kind::blanket_weak: return "blanket_weak";
    case StoppingRule::Kind::blanket_strong: return "blanket_strong";
    case StoppingRule::Kind::blanket_continuous: return "blanket_continuous";
  }
  return "unknown";
}

struct StoppingReport {
  StoppingRule rule;
  std::uint64_t stop_discrete = 0;
  double stop_continuous = 0.0;
  // Discrete step at which every vertex had been visited (0 if never).
  std::uint64_t cover_discrete = 0;
  double cover_continuous = 0.0;
  LocalTimes local;
  WalkTrace trace;
};

struct WalkOptions {
  std::uint64_t step_budget = 1'000'000'000ULL;
  // Called once per jump with (jump index, vertex entered, holding time spent
  // before the jump).
  std::function<void(std::uint64_t, Vertex, double)> on_jump;
};

namespace detail {

inline void check_rule(const Network& net, Vertex start, const StoppingRule& rule) {
  if (start >= net.size()) throw InvalidParamError("walk: start vertex out of range");
  switch (rule.kind) {
    case StoppingRule::Kind::inverse_local:
      if (!(rule.parameter > 0.0)) throw InvalidParamError("inverse local time needs t > 0");
      if (rule.root >= net.size()) throw InvalidParamError("inverse local time root out of range");
      break;
    case StoppingRule::Kind::blanket_weak:
    case StoppingRule::Kind::blanket_strong:
    case StoppingRule::Kind::blanket_continuous:
      if (!(rule.parameter > 0.0 && rule.parameter < 1.0)) throw InvalidParamError("blanket rules need delta in (0, 1)");
      break;
    default: break;
  }
}

}  // namespace detail

// Exact simulation of the continuous-time walk (Exp(1) holding, jumps
// proportional to conductance) until `rule` fires. Discrete-time rules are
// evaluated after every jump; inverse_local and blanket_continuous stop at the
// exact instant inside a holding interval where their condition first holds.
inline StoppingReport run_until(const RandomWalk& walk, Vertex start, const StoppingRule& rule,
                                std::mt19937_64& rng, const WalkOptions& opt = {}) {
  const Network& net = walk.network();
  detail::check_rule(net, start, rule);
  const std::size_t n = net.size();
  const double total = net.total_conductance();

  StoppingReport rep;
  rep.rule = rule;
  auto& L = rep.local.L;
  auto& N = rep.local.N;
  L.assign(n, 0.0);
  N.assign(n, 0);
  rep.local.pi.resize(n);
  for (Vertex v = 0; v < n; ++v) rep.local.pi[v] = net.conductance(v) / total;

  // Normalized visit counts N_v / pi_v, with running extremes.
  std::vector<double> weight(n);
  for (Vertex v = 0; v < n; ++v) weight[v] = total / net.conductance(v);
  double lo = 0.0, hi = 0.0;
  Vertex lo_at = 0;
  auto refresh_lo = [&] {
    lo = std::numeric_limits<double>::infinity();
    for (Vertex v = 0; v < n; ++v)
      if (static_cast<double>(N[v]) * weight[v] < lo) {
        lo = static_cast<double>(N[v]) * weight[v];
        lo_at = v;
      }
  };

  Vertex x = start;
  N[x] = 1;
  std::size_t visited = 1;
  std::uint64_t steps = 0;
  double time = 0.0;
  bool covered = false;
  refresh_lo();
  hi = weight[x];

  std::exponential_distribution<double> holding(1.0);
  const double delta = rule.parameter;

  auto finish = [&] {
    rep.stop_discrete = steps;
    rep.stop_continuous = time;
    rep.trace = {start, steps, time, x};
    return rep;
  };

  while (true) {
    const double h = holding(rng);
    const double cx = net.conductance(x);

    if (rule.kind == StoppingRule::Kind::inverse_local && x == rule.root && L[x] + h / cx > rule.parameter) {
      time += (rule.parameter - L[x]) * cx;
      L[x] = rule.parameter;
      return finish();
    }
    if (rule.kind == StoppingRule::Kind::blanket_continuous && visited == n) {
      // min(L_x(s), m) >= delta * max(L_x(s), M) with the others frozen holds
      // exactly when m >= delta M and delta M <= L_x(s) <= m / delta.
      double m = std::numeric_limits<double>::infinity(), M = 0.0;
      for (Vertex v = 0; v < n; ++v)
        if (v != x) {
          m = std::min(m, L[v]);
          M = std::max(M, L[v]);
        }
      if (m >= delta * M && L[x] <= m / delta) {
        const double target = std::max(L[x], delta * M);
        if (target <= L[x] + h / cx && m > 0.0) {
          time += (target - L[x]) * cx;
          L[x] = target;
          return finish();
        }
      }
    }

    L[x] += h / cx;
    time += h;
    const Vertex y = walk.jump(x, rng);
    ++steps;
    if (steps > opt.step_budget) throw StepBudgetExceeded(opt.step_budget);
    if (N[y]++ == 0) ++visited;
    x = y;
    if (opt.on_jump) opt.on_jump(steps, y, h);

    if (!covered && visited == n) {
      covered = true;
      rep.cover_discrete = steps;
      rep.cover_continuous = time;
    }
    const double wy = static_cast<double>(N[y]) * weight[y];
    hi = std::max(hi, wy);
    if (y == lo_at) refresh_lo();

    switch (rule.kind) {
      case StoppingRule::Kind::cover:
        if (covered) return finish();
        break;
      case StoppingRule::Kind::cover_and_return:
        if (covered && x == start) return finish();
        break;
      case StoppingRule::Kind::blanket_weak:
        if (covered && lo >= delta * static_cast<double>(steps)) return finish();
        break;
      case StoppingRule::Kind::blanket_strong:
        if (covered && lo >= delta * hi) return finish();
        break;
      default: break;
    }
  }
}

inline StoppingReport run_until(const Network& net, Vertex start, const StoppingRule& rule,
                                std::mt19937_64& rng, const WalkOptions& opt = {}) {
  return run_until(RandomWalk(net), start, rule, rng, opt);
}

struct CoverTimeEstimate {
  MeanSE cover;
  MeanSE cover_and_return;
  // Same walks in continuous time.
  MeanSE cover_continuous;
  // Paired 1/2 * tau_return - tau_cover.
  MeanSE half_gap;
  // mean(return)/2 <= mean(cover) <= mean(return), each within 3 SE.
  bool sandwich_ok = false;
  std::vector<double> cover_samples;
  std::vector<double> return_samples;
};

// Replica i walks from `start` with stream (seed, i) until it has covered and
// returned; both stopping times come from the same path.
inline CoverTimeEstimate estimate_cover_time(const Network& net, Vertex start, std::size_t reps,
                                             std::uint64_t seed, Parallelism par = {},
                                             const WalkOptions& opt = {}) {
  if (reps < 10) throw InvalidParamError("estimate_cover_time: need at least 10 replicas");
  const RandomWalk walk(net);
  std::vector<double> cover(reps), ret(reps), cont(reps), gap(reps);
  parallel_for(reps, par, [&](std::size_t i) {
    auto rng = stream(seed, i);
    const auto r = run_until(walk, start, StoppingRule::cover_and_return(), rng, opt);
    cover[i] = static_cast<double>(r.cover_discrete);
    cont[i] = r.cover_continuous;
    ret[i] = static_cast<double>(r.stop_discrete);
    gap[i] = 0.5 * ret[i] - cover[i];
  });
  CoverTimeEstimate est;
  est.cover = mean_se(cover);
  est.cover_and_return = mean_se(ret);
  est.cover_continuous = mean_se(cont);
  est.half_gap = mean_se(gap);
  est.sandwich_ok = est.half_gap.mean <= 3.0 * est.half_gap.se && est.cover.mean <= est.cover_and_return.mean;
  est.cover_samples = std::move(cover);
  est.return_samples = std::move(ret);
  return est;
}

struct BlanketSample {
  std::uint64_t cover = 0;
  std::uint64_t weak = 0;
  std::uint64_t strong = 0;
};

// One path, run until the strong rule fires, recording the cover and weak
// blanket times along the way.
inline BlanketSample run_blanket(const RandomWalk& walk, Vertex start, double delta, std::mt19937_64& rng,
                                 const WalkOptions& opt = {}) {
  BlanketSample out;
  WalkOptions watch = opt;
  const Network& net = walk.network();
  const std::size_t n = net.size();
  const double total = net.total_conductance();
  std::vector<double> counts(n, 0.0);
  counts[start] = 1.0;
  std::size_t visited = 1;
  watch.on_jump = [&](std::uint64_t step, Vertex y, double h) {
    if (opt.on_jump) opt.on_jump(step, y, h);
    if (counts[y]++ == 0.0) ++visited;
    if (out.weak == 0 && visited == n) {
      bool ok = true;
      for (Vertex v = 0; v < n && ok; ++v)
        ok = counts[v] * total / net.conductance(v) >= delta * static_cast<double>(step);
      if (ok) out.weak = step;
    }
  };
  const auto rep = run_until(walk, start, StoppingRule::blanket_strong(delta), rng, watch);
  out.cover = rep.cover_discrete;
  out.strong = rep.stop_discrete;
  // Strong implies weak at the same step, so the weak time is at most strong.
  if (out.weak == 0) out.weak = out.strong;
  return out;
}

struct BlanketEstimate {
  MeanSE cover;
  MeanSE weak;
  MeanSE strong;
  // cover <= weak <= strong on every replica.
  bool samplewise_ok = true;
  std::vector<BlanketSample> samples;
};

inline BlanketEstimate estimate_blanket_time(const Network& net, Vertex start, double delta, std::size_t reps,
                                             std::uint64_t seed, Parallelism par = {},
                                             const WalkOptions& opt = {}) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParamError("blanket: delta must lie in (0, 1)");
  if (reps < 2) throw InvalidParamError("blanket: need at least 2 replicas");
  const RandomWalk walk(net);
  BlanketEstimate est;
  est.samples.resize(reps);
  parallel_for(reps, par, [&](std::size_t i) {
    auto rng = stream(seed, i);
    est.samples[i] = run_blanket(walk, start, delta, rng, opt);
  });
  std::vector<double> c, w, s;
  for (const auto& b : est.samples) {
    c.push_back(static_cast<double>(b.cover));
    w.push_back(static_cast<double>(b.weak));
    s.push_back(static_cast<double>(b.strong));
    est.samplewise_ok = est.samplewise_ok && b.cover <= b.weak && b.weak <= b.strong;
  }
  est.cover = mean_se(c);
  est.weak = mean_se(w);
  est.strong = mean_se(s);
  return est;
}

// Walk from v0 until its local time exceeds t; local times frozen there.
inline StoppingReport inverse_local_time_run(const RandomWalk& walk, Vertex v0, double t, std::mt19937_64& rng,
                                             const WalkOptions& opt = {}) {
  return run_until(walk, v0, StoppingRule::inverse_local(v0, t), rng, opt);
}

struct InverseLocalTimeStudy {
  double t = 0.0;
  // Per-vertex mean of L^x at tau(t); each should be t.
  std::vector<MeanSE> local_time;
  // tau(t) in continuous time; mean should be total conductance times t.
  MeanSE tau;
  // P(tau(t) <= beta C t) per requested beta, as a mean of indicators.
  std::vector<MeanSE> tail;
  std::vector<double> betas;
};

inline InverseLocalTimeStudy inverse_local_time_study(const Network& net, Vertex v0, double t, std::size_t reps,
                                                      std::uint64_t seed, std::vector<double> betas = {},
                                                      Parallelism par = {}) {
  const RandomWalk walk(net);
  const std::size_t n = net.size();
  std::vector<std::vector<double>> L(n, std::vector<double>(reps));
  std::vector<double> tau(reps);
  parallel_for(reps, par, [&](std::size_t i) {
    auto rng = stream(seed, i);
    const auto r = inverse_local_time_run(walk, v0, t, rng);
    for (Vertex x = 0; x < n; ++x) L[x][i] = r.local.L[x];
    tau[i] = r.stop_continuous;
  });
  InverseLocalTimeStudy out;
  out.t = t;
  for (Vertex x = 0; x < n; ++x) out.local_time.push_back(mean_se(L[x]));
  out.tau = mean_se(tau);
  out.betas = betas;
  for (double beta : betas) {
    std::vector<double> hit(reps);
    for (std::size_t i = 0; i < reps; ++i) hit[i] = tau[i] <= beta * net.total_conductance() * t ? 1.0 : 0.0;
    out.tail.push_back(mean_se(hit));
  }
  return out;
}

struct RayKnightCoordinate {
  Vertex vertex = 0;
  // L^x_{tau(t)} alone; its mean should be t.
  MeanSE local_time;
  // L^x_{tau(t)} + eta_x^2 / 2 and (eta'_x + sqrt(2t))^2 / 2.
  MeanSE lhs, rhs;
  MeanSE lhs_second, rhs_second;
  double mean_z = 0.0;
  double second_z = 0.0;
  double local_time_z = 0.0;
  double ks = 0.0;
  double ks_critical = 0.0;
};

struct RayKnightReport {
  Vertex v0 = 0;
  double t = 0.0;
  std::size_t reps = 0;
  std::vector<RayKnightCoordinate> coordinates;

  bool passes(double mean_threshold = 3.0, double second_threshold = 4.0) const {
    return std::all_of(coordinates.begin(), coordinates.end(), [&](const RayKnightCoordinate& c) {
      return std::abs(c.mean_z) <= mean_threshold && std::abs(c.second_z) <= second_threshold &&
             std::abs(c.local_time_z) <= mean_threshold;
    });
  }
};

// Compares both sides of the generalized second Ray-Knight isomorphism
// coordinatewise. The left side pairs an inverse-local-time walk with an
// independent GFF draw; the right side uses a second independent GFF draw.
inline RayKnightReport rayknight_check(const Network& net, Vertex v0, double t, std::size_t reps,
                                       std::uint64_t seed, Parallelism par = {}) {
  if (!(t > 0.0)) throw InvalidParamError("rayknight: t must be positive");
  if (reps < 2) throw InvalidParamError("rayknight: need at least 2 replicas");
  const ResistanceOracle oracle(net, {.ground = v0});
  const auto sampler = GFFSampler::pinned(oracle);
  const RandomWalk walk(net);
  const std::size_t n = net.size();
  const std::uint64_t walk_seed = derive_seed(seed, 1), lhs_seed = derive_seed(seed, 2), rhs_seed = derive_seed(seed, 3);

  std::vector<std::vector<double>> L(n, std::vector<double>(reps));
  parallel_for(reps, par, [&](std::size_t i) {
    auto rng = stream(walk_seed, i);
    const auto r = inverse_local_time_run(walk, v0, t, rng);
    for (Vertex x = 0; x < n; ++x) L[x][i] = r.local.L[x];
  });
  auto draw_all = [&](std::uint64_t s) {
    Eigen::MatrixXd eta(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(reps));
    const std::size_t blocks = (reps + detail::kBlock - 1) / detail::kBlock;
    parallel_for(blocks, par, [&](std::size_t b) {
      auto rng = stream(s, b);
      const auto first = static_cast<Eigen::Index>(b * detail::kBlock);
      const auto count = static_cast<Eigen::Index>(std::min(detail::kBlock, reps - b * detail::kBlock));
      eta.middleCols(first, count) = sampler.draw(rng, count);
    });
    return eta;
  };
  const Eigen::MatrixXd eta_l = draw_all(lhs_seed), eta_r = draw_all(rhs_seed);

  RayKnightReport report{v0, t, reps, {}};
  const double shift = std::sqrt(2.0 * t);
  for (Vertex x = 0; x < n; ++x) {
    const auto xi = static_cast<Eigen::Index>(x);
    std::vector<double> lhs(reps), rhs(reps), lhs2(reps), rhs2(reps);
    for (std::size_t i = 0; i < reps; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      lhs[i] = L[x][i] + 0.5 * eta_l(xi, ii) * eta_l(xi, ii);
      const double s = eta_r(xi, ii) + shift;
      // eta vanishes at v0, where the right side is t exactly.
      rhs[i] = x == v0 ? t : 0.5 * s * s;
      lhs2[i] = lhs[i] * lhs[i];
      rhs2[i] = rhs[i] * rhs[i];
    }
    RayKnightCoordinate c;
    c.vertex = x;
    c.local_time = mean_se(L[x]);
    c.lhs = mean_se(lhs);
    c.rhs = mean_se(rhs);
    c.lhs_second = mean_se(lhs2);
    c.rhs_second = mean_se(rhs2);
    c.mean_z = z_score(c.lhs, c.rhs);
    c.second_z = z_score(c.lhs_second, c.rhs_second);
    c.local_time_z = c.local_time.se > 0.0 ? (c.local_time.mean - t) / c.local_time.se
                                           : (std::abs(c.local_time.mean - t) <= 1e-12 * t ? 0.0 : INFINITY);
    c.ks = ks_distance(lhs, rhs);
    c.ks_critical = ks_critical(reps, reps);
    report.coordinates.push_back(std::move(c));
  }
  return report;
}

// Fraction of excursions from v that reach u before returning to v.
inline MeanSE empirical_escape_probability(const Network& net, Vertex v, Vertex u, std::size_t reps,
                                           std::uint64_t seed, Parallelism par = {}) {
  if (u == v) throw InvalidParamError("escape: u and v must differ");
  const RandomWalk walk(net);
  std::vector<double> hit(reps);
  parallel_for(reps, par, [&](std::size_t i) {
    auto rng = stream(seed, i);
    Vertex x = walk.jump(v, rng);
    while (x != u && x != v) x = walk.jump(x, rng);
    hit[i] = x == u ? 1.0 : 0.0;
  });
  return mean_se(hit);
}

// Mean number of jumps from u until the walk first reaches v.
inline MeanSE empirical_hitting_time(const Network& net, Vertex u, Vertex v, std::size_t reps, std::uint64_t seed,
                                     Parallelism par = {}) {
  const RandomWalk walk(net);
  std::vector<double> steps(reps);
  parallel_for(reps, par, [&](std::size_t i) {
    auto rng = stream(seed, i);
    Vertex x = u;
    std::uint64_t k = 0;
    while (x != v) {
      x = walk.jump(x, rng);
      ++k;
    }
    steps[i] = static_cast<double>(k);
  });
  return mean_se(steps);
}

// Visit frequencies N_v / (steps + 1) along one long path.
inline std::vector<double> occupation_frequencies(const Network& net, Vertex start, std::uint64_t steps,
                                                  std::uint64_t seed) {
  const RandomWalk walk(net);
  auto rng = stream(seed, 0);
  std::vector<double> freq(net.size(), 0.0);
  Vertex x = start;
  freq[x] += 1.0;
  for (std::uint64_t k = 0; k < steps; ++k) {
    x = walk.jump(x, rng);
    freq[x] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(steps + 1);
  return freq;
}

}  // namespace covertime
