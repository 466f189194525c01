#include <gtest/gtest.h>

#include <sstream>

#include <covertime/covertime.hpp>

#include "random_metrics.hpp"

using namespace covertime;
using covertime::testing::random_metric;
using covertime::testing::uniform_metric;

namespace {

FiniteMetric two_points(double D) { return FiniteMetric((Eigen::MatrixXd(2, 2) << 0, D, D, 0).finished()); }

// All set partitions of {0..n-1} as restricted growth strings.
std::vector<std::vector<int>> partitions(std::size_t n) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int used) {
    if (i == n) {
      out.push_back(a);
      return;
    }
    for (int b = 0; b <= used; ++b) {
      a[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  rec(0, 0);
  return out;
}

int block_count(const std::vector<int>& p) { return p.empty() ? 0 : *std::max_element(p.begin(), p.end()) + 1; }

double block_diam(const FiniteMetric& m, const std::vector<int>& p, std::size_t x) {
  double w = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y)
    if (p[y] == p[x]) w = std::max(w, m(x, y));
  return w;
}

// Admissible sequences A_0 = {X}, |A_1| <= 4, A_2 any refinement of A_1 (at
// most 16 blocks, so always admissible for n <= 16), A_k = singletons for
// k >= 3. Later levels only add nonnegative terms, so this is the exact
// infimum for n <= 6 without assuming A_2 is all singletons.
double full_enumeration_gamma2(const FiniteMetric& m) {
  const auto parts = partitions(m.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p1 : parts) {
    if (block_count(p1) > 4) continue;
    for (const auto& p2 : parts) {
      bool refines = true;
      for (std::size_t x = 0; x < p2.size() && refines; ++x)
        for (std::size_t y = 0; y < p2.size(); ++y)
          if (p2[x] == p2[y] && p1[x] != p1[y]) refines = false;
      if (!refines) continue;
      double worst = 0.0;
      for (std::size_t x = 0; x < m.size(); ++x)
        worst = std::max(worst, m.diameter() + std::sqrt(2.0) * block_diam(m, p1, x) + 2.0 * block_diam(m, p2, x));
      best = std::min(best, worst);
    }
  }
  return best;
}

}  // namespace

TEST(Gamma2, SinglePointIsZero) {
  EXPECT_EQ(gamma2_approx(FiniteMetric(Eigen::MatrixXd::Zero(1, 1))), 0.0);
  EXPECT_EQ(brute_force_gamma2(FiniteMetric(Eigen::MatrixXd::Zero(1, 1))), 0.0);
}

TEST(Gamma2, TwoPointsHomogeneous) {
  const double base = gamma2_approx(two_points(1.0));
  EXPECT_GT(base, 0.0);
  for (double D : {1e-6, 0.3, 2.0, 17.0, 1e5}) EXPECT_NEAR(gamma2_approx(two_points(D)) / D, base, 1e-12 * base);
}

TEST(Gamma2, UniformMetricGrowsLikeSqrtLog) {
  double last = 0.0;
  for (std::size_t n : {4, 16, 64, 256}) {
    const double A = gamma2_approx(uniform_metric(n));
    const double ratio = A / std::sqrt(std::log(static_cast<double>(n)));
    EXPECT_GE(ratio, 0.1) << n;
    EXPECT_LE(ratio, 10.0) << n;
    EXPECT_GE(A, last) << n;
    last = A;
  }
}

TEST(Gamma2, RejectsSmallScaleBase) { EXPECT_THROW(gamma2_approx(two_points(1.0), 8), InvalidParamError); }

TEST(BruteForce, Examples) {
  EXPECT_DOUBLE_EQ(brute_force_gamma2(two_points(1.0)), 1.0);
  EXPECT_DOUBLE_EQ(brute_force_gamma2(uniform_metric(4)), 1.0);
  EXPECT_DOUBLE_EQ(brute_force_gamma2(uniform_metric(5)), 1.0 + std::sqrt(2.0));
}

TEST(BruteForce, UniformFiveConfirmedByFullEnumeration) {
  EXPECT_DOUBLE_EQ(full_enumeration_gamma2(uniform_metric(5)), 1.0 + std::sqrt(2.0));
}

TEST(BruteForce, SingletonLevelTwoArgumentHolds) {
  for (std::size_t i = 0; i < 60; ++i) {
    const auto m = random_metric(i, 6, 100);
    EXPECT_NEAR(brute_force_gamma2(m), full_enumeration_gamma2(m), 1e-12 * m.diameter()) << i;
  }
}

TEST(BruteForce, RejectsLargeMetrics) { EXPECT_THROW(brute_force_gamma2(uniform_metric(11)), InvalidParamError); }

TEST(Gamma2, HomogeneityProperty) {
  for (std::size_t i = 0; i < 40; ++i) {
    const auto m = random_metric(i, 12, 101);
    const double A = gamma2_approx(m);
    for (double lambda : {1e-4, 0.37, 3.0, 2.5e3}) {
      const double B = gamma2_approx(m.scaled(lambda));
      EXPECT_NEAR(B, lambda * A, 1e-12 * lambda * A) << i << " " << lambda;
    }
  }
}

TEST(Gamma2, PhiMonotoneProperty) {
  for (std::size_t i = 0; i < 60; ++i) {
    const auto maps = gamma2_maps(random_metric(i, 30, 102));
    for (int j = 1; j <= maps.top_scale; ++j)
      for (std::size_t x = 0; x < maps.points(); ++x) ASSERT_GE(maps.phi_at(j)[x], maps.phi_at(j - 1)[x]);
  }
}

TEST(Gamma2, NetValidityProperty) {
  for (std::size_t i = 0; i < 60; ++i) {
    const auto maps = gamma2_maps(random_metric(i, 30, 103));
    for (int j = 2; j <= maps.top_scale; ++j) {
      const auto& net = maps.nets[static_cast<std::size_t>(j)];
      if (net.empty()) continue;
      const double radius = maps.power(j - 1) / 3.0;
      auto d = [&](std::size_t a, std::size_t b) {
        return maps.distance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      };
      for (std::size_t a = 0; a < net.size(); ++a)
        for (std::size_t b = a + 1; b < net.size(); ++b) EXPECT_GT(d(net[a], net[b]), radius);
      const auto& g = maps.assignment[static_cast<std::size_t>(j)];
      for (std::size_t x = 0; x < maps.points(); ++x) {
        EXPECT_LE(d(x, g[x]), radius);
        EXPECT_NE(std::find(net.begin(), net.end(), g[x]), net.end());
      }
    }
  }
}

TEST(Gamma2, OracleSandwichProperty) {
  for (std::size_t i = 0; i < 100; ++i) {
    const auto m = random_metric(i, 8, 104);
    const double ratio = gamma2_approx(m) / brute_force_gamma2(m);
    EXPECT_GE(ratio, 1.0 / 50.0) << i;
    EXPECT_LE(ratio, 50.0) << i;
  }
}

TEST(Gamma2, DuplicatePointsCollapse) {
  const auto m = random_metric(4, 7, 105);
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd d(n + 2, n + 2);
  std::vector<Eigen::Index> src(static_cast<std::size_t>(n));
  std::iota(src.begin(), src.end(), 0);
  src.push_back(0);
  src.push_back(n - 1);
  for (Eigen::Index a = 0; a < n + 2; ++a)
    for (Eigen::Index b = 0; b < n + 2; ++b) d(a, b) = m.table()(src[a], src[b]);
  const FiniteMetric dup(d);
  EXPECT_EQ(gamma2_approx(dup), gamma2_approx(m));
  EXPECT_EQ(brute_force_gamma2(dup), brute_force_gamma2(m));
  EXPECT_EQ(gamma2_maps(dup).points(), m.size());
}

TEST(Gamma2, Deterministic) {
  const auto m = random_metric(7, 40, 106);
  EXPECT_EQ(gamma2_approx(m), gamma2_approx(m));
}

TEST(Certificate, TwoPoints) {
  // The branch at the top scale keeps both net points, x_0 included, as
  // leaves one level of r^2 down, so val = r^M sqrt(log 3) with r^M = D.
  const double D = 2.5;
  const auto tree = extract_certificate(gamma2_maps(two_points(D)));
  ASSERT_EQ(tree.nodes.size(), 3u);
  ASSERT_EQ(tree.nodes[0].children.size(), 2u);
  EXPECT_EQ(tree.nodes[tree.nodes[0].children[0]].point, 0u);
  EXPECT_EQ(tree.nodes[tree.nodes[0].children[1]].point, 1u);
  EXPECT_GT(tree.value(), 0.0);
  EXPECT_NEAR(tree.value(), D * std::sqrt(std::log(3.0)), 1e-12 * D);
}

TEST(Certificate, UniformRootBranches) {
  const auto tree = extract_certificate(gamma2_maps(uniform_metric(16)));
  EXPECT_GE(tree.branching(0), 2u);
}

TEST(Certificate, ValueBoundedByMapsProperty) {
  for (std::size_t i = 0; i < 50; ++i) {
    const auto m = random_metric(i, 25, 107);
    const auto maps = gamma2_maps(m);
    const auto tree = extract_certificate(maps);
    EXPECT_LE(tree.value(), maps.value() + maps.r * m.diameter()) << i;
  }
}

TEST(Certificate, StructureProperty) {
  for (std::size_t i = 0; i < 50; ++i) {
    const auto tree = extract_certificate(gamma2_maps(random_metric(i, 25, 108)));
    for (std::size_t v = 0; v < tree.nodes.size(); ++v)
      for (auto c : tree.nodes[v].children) {
        EXPECT_LE(tree.nodes[c].scale, tree.nodes[v].scale - 1);
        EXPECT_EQ(tree.nodes[c].parent, v);
        EXPECT_GT(c, v);
      }
  }
}

TEST(Certificate, ValueIsMinOverLeavesOfPathSums) {
  const auto tree = extract_certificate(gamma2_maps(random_metric(2, 20, 109)));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t leaf = 0; leaf < tree.nodes.size(); ++leaf) {
    if (!tree.nodes[leaf].children.empty()) continue;
    double sum = 0.0;
    for (std::size_t v = leaf;; v = tree.nodes[v].parent) {
      sum += std::pow(tree.r, tree.nodes[v].scale) * std::sqrt(std::log(static_cast<double>(tree.branching(v))));
      if (v == 0) break;
    }
    best = std::min(best, sum * tree.unit);
  }
  EXPECT_NEAR(tree.value(), best, 1e-12 * best);
}

TEST(Gamma2Network, SingleEdgeMatchesTwoPoints) {
  EXPECT_EQ(gamma2_of_network(gen::path(2)), gamma2_approx(two_points(1.0)));
}

TEST(Gamma2Network, PathMetric) {
  const auto m = resistance_metric(ResistanceOracle(gen::path(9)));
  EXPECT_NEAR(m(0, 8), std::sqrt(8.0), 1e-12);
}

TEST(Gamma2Network, CompleteGraphScale) {
  const double ratio = gamma2_of_network(gen::complete(16)) / std::sqrt(2.0 * std::log(16.0) / 16.0);
  EXPECT_GE(ratio, 0.2);
  EXPECT_LE(ratio, 5.0);
}

TEST(Gamma2Network, ComparableToExpectedSupOnStandardFamily) {
  const std::vector<Network> family{gen::path(32), gen::complete(32), gen::bary_tree(2, 5), gen::grid(8, 8),
                                    gen::erdos_renyi(64, 0.1, 1)};
  for (const auto& net : family) {
    const ResistanceOracle o(net);
    const double A = gamma2_of_network(o);
    const auto sup = estimate_sup(GFFSampler::pinned(o), 2000, 110);
    const double ratio = A / sup.mean;
    EXPECT_GE(ratio, 1.0 / 50.0) << net.size();
    EXPECT_LE(ratio, 50.0) << net.size();
  }
}

TEST(MetricCsv, LabelsAndValues) {
  std::istringstream in("a,b,c\n0,1,2\n1,0,1\n2,1,0\n");
  const auto m = read_metric_csv(in);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.labels()[2], "c");
  EXPECT_DOUBLE_EQ(m(0, 2), 2.0);
}

TEST(MetricCsv, Errors) {
  std::istringstream bad("0,1\n1,x\n");
  EXPECT_THROW(read_metric_csv(bad), ParseError);
  std::istringstream ragged("0,1\n1\n");
  EXPECT_THROW(read_metric_csv(ragged), ParseError);
  std::istringstream triangle("0,1,5\n1,0,1\n5,1,0\n");
  EXPECT_THROW(read_metric_csv(triangle), ValidationError);
  std::istringstream asym("0,1\n2,0\n");
  EXPECT_THROW(read_metric_csv(asym), ValidationError);
}
