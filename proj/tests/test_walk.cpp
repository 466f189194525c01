#include <gtest/gtest.h>

#include <numeric>

#include <covertime/covertime.hpp>

#include "cover_oracle.hpp"

using namespace covertime;
using covertime::testing::exact_cover_time;

namespace {

double harmonic(std::size_t n) {
  double h = 0.0;
  for (std::size_t k = 1; k <= n; ++k) h += 1.0 / static_cast<double>(k);
  return h;
}

Network weighted_net() { return gen::randomize_conductances(gen::erdos_renyi(9, 0.4, 5), 0.3, 3.0, 6); }

void expect_trace_consistent(const StoppingReport& r) {
  std::uint64_t visits = 0;
  for (auto k : r.local.N) visits += k;
  EXPECT_EQ(visits, r.stop_discrete + 1);
  EXPECT_EQ(r.trace.discrete_steps, r.stop_discrete);
  EXPECT_EQ(r.trace.continuous_time, r.stop_continuous);
}

}  // namespace

TEST(CoverOracle, KnownValues) {
  EXPECT_NEAR(exact_cover_time(gen::complete(3), 0), 3.0, 1e-12);
  EXPECT_NEAR(exact_cover_time(gen::complete(8), 0), 7.0 * harmonic(7), 1e-10);
  for (std::size_t n = 4; n <= 8; ++n)
    EXPECT_NEAR(exact_cover_time(gen::cycle(n), 0), n * (n - 1) / 2.0, 1e-10) << n;
  EXPECT_NEAR(exact_cover_time(gen::path(2), 0), 1.0, 1e-12);
}

TEST(Walk, TwoVertexCoverIsOneStep) {
  const auto net = gen::path(2);
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto rng = stream(1, s);
    const auto r = run_until(net, 0, StoppingRule::cover(), rng);
    EXPECT_EQ(r.stop_discrete, 1u);
    EXPECT_EQ(r.cover_discrete, 1u);
  }
  const auto est = estimate_cover_time(net, 0, 50, 2);
  EXPECT_EQ(est.cover.mean, 1.0);
}

TEST(Walk, TriangleCoverTime) {
  const auto est = estimate_cover_time(gen::complete(3), 0, 200'000, 3);
  EXPECT_LE(std::abs(est.cover.mean - 3.0), 3.0 * est.cover.se);
}

TEST(Walk, CompleteGraphCouponCollector) {
  const auto est = estimate_cover_time(gen::complete(8), 0, 100'000, 4);
  const double ratio = est.cover.mean / (7.0 * harmonic(7));
  EXPECT_GE(ratio, 0.95);
  EXPECT_LE(ratio, 1.05);
  EXPECT_TRUE(est.sandwich_ok);
}

TEST(Walk, CycleCoverTime) {
  const auto est = estimate_cover_time(gen::cycle(16), 0, 20'000, 5);
  EXPECT_LE(std::abs(est.cover.mean - 120.0), 3.0 * est.cover.se);
  EXPECT_TRUE(est.sandwich_ok);
}

TEST(Walk, WeightedCoverMatchesAbsorbingChain) {
  const auto net = weighted_net();
  const auto est = estimate_cover_time(net, 2, 50'000, 6);
  EXPECT_LE(std::abs(est.cover.mean - exact_cover_time(net, 2)), 3.0 * est.cover.se);
}

TEST(Walk, ContinuousAndDiscreteCoverAgreeInMean) {
  const auto est = estimate_cover_time(gen::complete(8), 0, 50'000, 7);
  const auto z = z_score(est.cover_continuous, est.cover);
  // The two means come from the same paths, so the independent-sample z is
  // conservative.
  EXPECT_LE(std::abs(z), 3.0);
}

TEST(Walk, CoverAndReturnEndsAtStart) {
  const auto net = weighted_net();
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = stream(8, s);
    const auto r = run_until(net, 3, StoppingRule::cover_and_return(), rng);
    EXPECT_EQ(r.trace.current, 3u);
    EXPECT_GE(r.stop_discrete, r.cover_discrete);
    for (auto k : r.local.N) EXPECT_GT(k, 0u);
  }
}

TEST(Walk, OccupationIdentityProperty) {
  const auto net = weighted_net();
  const std::vector<StoppingRule> rules{StoppingRule::cover(), StoppingRule::cover_and_return(),
                                        StoppingRule::inverse_local(4, 2.5), StoppingRule::blanket_weak(0.3),
                                        StoppingRule::blanket_strong(0.3), StoppingRule::blanket_continuous(0.3)};
  for (std::size_t i = 0; i < rules.size(); ++i)
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto rng = stream(9 + i, s);
      const auto r = run_until(net, 4, rules[i], rng);
      double occupied = 0.0;
      for (Vertex v = 0; v < net.size(); ++v) occupied += net.conductance(v) * r.local.L[v];
      EXPECT_NEAR(occupied, r.stop_continuous, 1e-9 * r.stop_continuous) << to_string(rules[i].kind);
      expect_trace_consistent(r);
    }
}

TEST(Walk, JumpCallbackSeesEveryHolding) {
  const auto net = weighted_net();
  auto rng = stream(10, 0);
  std::uint64_t calls = 0;
  double held = 0.0;
  WalkOptions opt;
  opt.on_jump = [&](std::uint64_t step, Vertex, double h) {
    EXPECT_EQ(step, ++calls);
    held += h;
  };
  const auto r = run_until(net, 0, StoppingRule::cover(), rng, opt);
  EXPECT_EQ(calls, r.stop_discrete);
  EXPECT_NEAR(held, r.stop_continuous, 1e-12 * held);
}

TEST(Walk, BlanketOrderingsHoldSamplewise) {
  const auto est = estimate_blanket_time(gen::complete(8), 0, 0.5, 2000, 11);
  EXPECT_TRUE(est.samplewise_ok);
  for (const auto& s : est.samples) {
    EXPECT_GE(s.weak, s.cover);
    EXPECT_GE(s.strong, s.weak);
  }
  EXPECT_LE(est.weak.mean / est.cover.mean, 30.0);
}

TEST(Walk, TinyDeltaWeakBlanketIsCover) {
  const auto net = weighted_net();
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = stream(12, s);
    const auto r = run_until(net, 0, StoppingRule::blanket_weak(1e-12), rng);
    EXPECT_EQ(r.stop_discrete, r.cover_discrete);
  }
}

TEST(Walk, WeakBlanketCriterionAtStop) {
  const auto net = weighted_net();
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = stream(13, s);
    const double delta = 0.4;
    const auto r = run_until(net, 0, StoppingRule::blanket_weak(delta), rng);
    const double t = static_cast<double>(r.stop_discrete);
    for (Vertex v = 0; v < net.size(); ++v)
      EXPECT_GE(static_cast<double>(r.local.N[v]), delta * t * r.local.pi[v] * (1 - 1e-12));
  }
}

TEST(Walk, StrongBlanketCriterionAtStop) {
  const auto net = weighted_net();
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = stream(14, s);
    const double delta = 0.4;
    const auto r = run_until(net, 0, StoppingRule::blanket_strong(delta), rng);
    for (Vertex u = 0; u < net.size(); ++u)
      for (Vertex v = 0; v < net.size(); ++v)
        EXPECT_GE(static_cast<double>(r.local.N[u]) / r.local.pi[u],
                  delta * static_cast<double>(r.local.N[v]) / r.local.pi[v] * (1 - 1e-12));
  }
}

TEST(Walk, ContinuousBlanketStopsAtExactCrossing) {
  const auto net = weighted_net();
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = stream(15, s);
    const double delta = 0.3;
    const auto r = run_until(net, 0, StoppingRule::blanket_continuous(delta), rng);
    const double lo = *std::min_element(r.local.L.begin(), r.local.L.end());
    const double hi = *std::max_element(r.local.L.begin(), r.local.L.end());
    EXPECT_GE(lo, delta * hi * (1 - 1e-12));
    EXPECT_GE(r.stop_continuous, r.cover_continuous);
  }
}

TEST(InverseLocalTime, EndsAtRootWithExactLocalTime) {
  const auto net = weighted_net();
  const RandomWalk walk(net);
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = stream(16, s);
    const auto r = inverse_local_time_run(walk, 5, 1.75, rng);
    EXPECT_EQ(r.trace.current, 5u);
    EXPECT_DOUBLE_EQ(r.local.L[5], 1.75);
  }
}

TEST(InverseLocalTime, MeansMatchLocalTimeAndConductance) {
  const auto net = weighted_net();
  const double t = 2.0;
  const auto study = inverse_local_time_study(net, 1, t, 40'000, 17);
  for (Vertex x = 0; x < net.size(); ++x) {
    if (x == 1) {
      EXPECT_DOUBLE_EQ(study.local_time[x].mean, t);
      continue;
    }
    EXPECT_LE(std::abs(study.local_time[x].mean - t), 3.0 * study.local_time[x].se) << x;
  }
  EXPECT_LE(std::abs(study.tau.mean - net.total_conductance() * t), 3.0 * study.tau.se);
}

TEST(InverseLocalTime, LowerTailBound) {
  const auto net = gen::path(6);
  const double D = hitting_times(net).resistance_diameter;
  for (double beta : {0.05, 0.1}) {
    const double t = D * D / (beta * beta);
    const auto study = inverse_local_time_study(net, 0, t, 2000, 18, {beta});
    EXPECT_LE(study.tail[0].mean, 3.0 * beta);
  }
}

TEST(RayKnight, DegenerateRootCoordinate) {
  const auto rep = rayknight_check(gen::path(4), 0, 1.0, 1000, 19);
  const auto& c = rep.coordinates[0];
  EXPECT_DOUBLE_EQ(c.lhs.mean, 1.0);
  EXPECT_EQ(c.rhs.mean, 1.0);
  EXPECT_EQ(c.lhs.se, 0.0);
}

TEST(RayKnight, PathFourAgreesInLaw) {
  const auto rep = rayknight_check(gen::path(4), 0, 1.0, 50'000, 20);
  EXPECT_TRUE(rep.passes(3.0, 4.0));
  const ResistanceOracle o(gen::path(4), {.ground = 0});
  for (const auto& c : rep.coordinates) {
    // Var(eta_x) = R_eff(x, v0) with the field pinned at v0.
    const double want = 1.0 + 0.5 * (c.vertex == 0 ? 0.0 : o.r_eff(c.vertex, 0));
    EXPECT_LE(std::abs(c.rhs.mean - want), 3.0 * c.rhs.se + 1e-12);
    EXPECT_LE(c.ks, c.ks_critical);
  }
}

TEST(RayKnight, WeightedNetwork) {
  const auto rep = rayknight_check(weighted_net(), 3, 0.5, 20'000, 21);
  EXPECT_TRUE(rep.passes(3.0, 4.0));
}

TEST(Walk, StationarityWithinFiveSE) {
  const auto net = weighted_net();
  const RandomWalk walk(net);
  auto rng = stream(22, 0);
  const std::size_t batches = 100, per = 10'000;
  std::vector<std::vector<double>> freq(net.size(), std::vector<double>(batches, 0.0));
  Vertex x = 0;
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t k = 0; k < per; ++k) {
      x = walk.jump(x, rng);
      freq[x][b] += 1.0 / static_cast<double>(per);
    }
  for (Vertex v = 0; v < net.size(); ++v) {
    const auto m = mean_se(freq[v]);
    EXPECT_LE(std::abs(m.mean - net.conductance(v) / net.total_conductance()), 5.0 * m.se) << v;
  }
  const auto f = occupation_frequencies(net, 0, 1'000'000, 23);
  EXPECT_NEAR(std::accumulate(f.begin(), f.end(), 0.0), 1.0, 1e-12);
}

TEST(Walk, EscapeProbabilityMatchesResistance) {
  const auto net = weighted_net();
  const ResistanceOracle o(net);
  for (auto [v, u] : {std::pair<Vertex, Vertex>{0, 8}, {3, 4}, {6, 1}}) {
    const auto m = empirical_escape_probability(net, v, u, 100'000, 24 + v);
    EXPECT_LE(std::abs(m.mean - escape_probability(o, v, u)), 3.0 * m.se) << v << "," << u;
  }
}

TEST(Walk, HittingTimesMatchTable) {
  const auto net = weighted_net();
  const auto table = hitting_times(net);
  for (auto [u, v] : {std::pair<Vertex, Vertex>{0, 8}, {8, 0}, {2, 5}}) {
    const auto m = empirical_hitting_time(net, u, v, 50'000, 30 + u);
    EXPECT_LE(std::abs(m.mean - table.H(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v))), 3.0 * m.se);
  }
}

TEST(Walk, SeedDeterminismAndThreadIndependence) {
  const auto net = weighted_net();
  const auto a = estimate_cover_time(net, 0, 300, 40, {1});
  const auto b = estimate_cover_time(net, 0, 300, 40, {1});
  const auto c = estimate_cover_time(net, 0, 300, 40, {4});
  EXPECT_EQ(a.cover_samples, b.cover_samples);
  EXPECT_EQ(a.cover_samples, c.cover_samples);
  EXPECT_EQ(a.return_samples, c.return_samples);
  EXPECT_EQ(a.cover_continuous.mean, c.cover_continuous.mean);
  const auto d = estimate_cover_time(net, 0, 300, 41, {1});
  EXPECT_NE(a.cover_samples, d.cover_samples);
  const auto ba = estimate_blanket_time(net, 0, 0.5, 50, 42, {1}), bb = estimate_blanket_time(net, 0, 0.5, 50, 42, {3});
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(ba.samples[i].strong, bb.samples[i].strong);
}

TEST(Walk, StepBudgetExceededThrows) {
  auto rng = stream(43, 0);
  WalkOptions opt;
  opt.step_budget = 10;
  EXPECT_THROW(run_until(gen::path(64), 0, StoppingRule::cover(), rng, opt), StepBudgetExceeded);
}

TEST(Walk, InvalidRulesRejected) {
  const auto net = gen::path(3);
  auto rng = stream(44, 0);
  EXPECT_THROW(run_until(net, 0, StoppingRule::blanket_weak(0.0), rng), InvalidParamError);
  EXPECT_THROW(run_until(net, 0, StoppingRule::blanket_strong(1.0), rng), InvalidParamError);
  EXPECT_THROW(run_until(net, 0, StoppingRule::inverse_local(0, -1.0), rng), InvalidParamError);
  EXPECT_THROW(run_until(net, 7, StoppingRule::cover(), rng), InvalidParamError);
  EXPECT_THROW(estimate_cover_time(net, 0, 5, 1), InvalidParamError);
}
