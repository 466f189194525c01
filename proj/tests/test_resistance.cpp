#include <gtest/gtest.h>

#include <Eigen/LU>

#include <covertime/covertime.hpp>

using namespace covertime;

namespace {

// L^+ = (L + J/n)^{-1} - J/n, by LU.
Eigen::MatrixXd pseudo_inverse(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  const Eigen::MatrixXd J = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  return Eigen::MatrixXd((laplacian(net) + J).fullPivLu().inverse()) - J;
}

double r_eff_lu(const Eigen::MatrixXd& P, Vertex x, Vertex y) {
  const auto a = static_cast<Eigen::Index>(x), b = static_cast<Eigen::Index>(y);
  return P(a, a) + P(b, b) - 2.0 * P(a, b);
}

// H(., v) from the absorbing chain: (I - Q) h = 1 over V \ {v}.
Eigen::VectorXd hitting_column(const Network& net, Vertex v) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n - 1, n - 1);
  auto idx = [&](Vertex x) { return static_cast<Eigen::Index>(x < v ? x : x - 1); };
  for (const auto& e : net.edges()) {
    if (e.u != v && e.v != v) {
      A(idx(e.u), idx(e.v)) -= e.conductance / net.conductance(e.u);
      A(idx(e.v), idx(e.u)) -= e.conductance / net.conductance(e.v);
    }
  }
  const Eigen::VectorXd h = A.fullPivLu().solve(Eigen::VectorXd::Ones(n - 1));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Vertex x = 0; x < net.size(); ++x)
    if (x != v) out(static_cast<Eigen::Index>(x)) = h(idx(x));
  return out;
}

std::vector<Network> random_family(std::uint64_t seed, std::size_t count, std::size_t n_max) {
  std::vector<Network> out;
  auto rng = stream(seed, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = 3 + rng() % (n_max - 2);
    const double p = 0.15 + 0.6 * std::uniform_real_distribution<double>()(rng);
    out.push_back(gen::randomize_conductances(gen::erdos_renyi(n, p, rng()), 0.1, 5.0, rng()));
  }
  return out;
}

}  // namespace

TEST(Oracle, SingleEdgeGreen) {
  const ResistanceOracle o(gen::path(2), {.ground = 0});
  EXPECT_DOUBLE_EQ(o.green(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(o.green(0, 1), 0.0);
}

TEST(Oracle, PathGreen) {
  const ResistanceOracle o(gen::path(3), {.ground = 0});
  // Inverse of [[2,-1],[-1,1]].
  EXPECT_NEAR(o.green(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(o.green(1, 2), 1.0, 1e-14);
  EXPECT_NEAR(o.green(2, 2), 2.0, 1e-14);
}

TEST(Oracle, TriangleGreenDiagonal) {
  const ResistanceOracle o(gen::complete(3), {.ground = 0});
  const Eigen::MatrixXd want = (Eigen::MatrixXd(2, 2) << 2, -1, -1, 2).finished().fullPivLu().inverse();
  EXPECT_NEAR(o.green(1, 1), want(0, 0), 1e-14);
  EXPECT_NEAR(o.green(1, 1), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(o.green(1, 2), want(0, 1), 1e-14);
}

TEST(Oracle, DefaultGroundIsMaxConductance) {
  const auto star = build_network({{0, 1, 1}, {1, 2, 1}, {1, 3, 1}});
  EXPECT_EQ(ResistanceOracle(star).ground(), 1u);
}

TEST(Oracle, GreenMatchesBruteForceInverseProperty) {
  for (const auto& net : random_family(21, 20, 20)) {
    const ResistanceOracle o(net);
    const Eigen::MatrixXd L = laplacian(net);
    const auto g = static_cast<Eigen::Index>(o.ground());
    const auto n = L.rows();
    Eigen::MatrixXd Lg(n - 1, n - 1);
    for (Eigen::Index i = 0, ri = 0; i < n; ++i) {
      if (i == g) continue;
      for (Eigen::Index j = 0, rj = 0; j < n; ++j)
        if (j != g) Lg(ri, rj++) = L(i, j);
      ++ri;
    }
    const Eigen::MatrixXd G = Lg.fullPivLu().inverse();
    EXPECT_LE((G - o.green_matrix()).cwiseAbs().maxCoeff(), 1e-9 * G.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < G.rows(); ++i) EXPECT_GT(o.green_matrix()(i, i), 0.0);
  }
}

TEST(Oracle, GreenIsResistanceCovarianceProperty) {
  for (const auto& net : random_family(22, 10, 15)) {
    const ResistanceOracle o(net);
    const Vertex v0 = o.ground();
    for (Vertex x = 0; x < net.size(); ++x)
      for (Vertex y = 0; y < net.size(); ++y) {
        if (x == v0 || y == v0) continue;
        const double want = 0.5 * (o.r_eff(x, v0) + o.r_eff(v0, y) - o.r_eff(x, y));
        EXPECT_NEAR(o.green(x, y), want, 1e-9 * (1.0 + std::abs(want)));
      }
  }
}

TEST(Reff, Examples) {
  EXPECT_NEAR(ResistanceOracle(gen::path(3)).r_eff(0, 2), 2.0, 1e-14);
  for (std::size_t n : {3, 5, 8, 13}) EXPECT_NEAR(ResistanceOracle(gen::complete(n)).r_eff(0, n - 1), 2.0 / n, 1e-14);
  EXPECT_NEAR(ResistanceOracle(build_network({{0, 1, 1}, {0, 1, 1}})).r_eff(0, 1), 0.5, 1e-15);
  const ResistanceOracle o(gen::cycle(6));
  EXPECT_DOUBLE_EQ(o.r_eff(2, 2), 0.0);
}

TEST(Reff, MatchesPseudoInverseAndIsSymmetricProperty) {
  for (const auto& net : random_family(23, 20, 25)) {
    const ResistanceOracle o(net);
    const auto P = pseudo_inverse(net);
    for (Vertex x = 0; x < net.size(); ++x)
      for (Vertex y = x + 1; y < net.size(); ++y) {
        const double want = r_eff_lu(P, x, y);
        EXPECT_NEAR(o.r_eff(x, y), want, 1e-9 * want);
        EXPECT_DOUBLE_EQ(o.r_eff(x, y), o.r_eff(y, x));
        EXPECT_GT(o.r_eff(x, y), 0.0);
      }
  }
}

TEST(Reff, GroundIndependenceProperty) {
  for (const auto& net : random_family(24, 15, 20)) {
    const ResistanceOracle a(net, {.ground = 0}), b(net, {.ground = net.size() - 1});
    for (Vertex x = 0; x < net.size(); ++x)
      for (Vertex y = x + 1; y < net.size(); ++y) EXPECT_NEAR(a.r_eff(x, y), b.r_eff(x, y), 1e-9 * a.r_eff(x, y));
  }
}

TEST(Reff, SqrtIsAMetricProperty) {
  for (const auto& net : random_family(25, 15, 15)) {
    const auto R = ResistanceOracle(net).resistance_matrix().cwiseSqrt().eval();
    for (Eigen::Index x = 0; x < R.rows(); ++x)
      for (Eigen::Index y = 0; y < R.rows(); ++y)
        for (Eigen::Index z = 0; z < R.rows(); ++z) EXPECT_LE(R(x, z), R(x, y) + R(y, z) + 1e-9);
  }
}

TEST(Reff, SparseModeAgreesWithDense) {
  const auto net = gen::randomize_conductances(gen::grid(6, 7), 0.2, 3.0, 4);
  const ResistanceOracle dense(net), sparse(net, {.dense_limit = 1});
  ASSERT_TRUE(dense.dense());
  ASSERT_FALSE(sparse.dense());
  for (Vertex x = 0; x < net.size(); x += 5)
    for (Vertex y = x + 1; y < net.size(); y += 3) EXPECT_NEAR(sparse.r_eff(x, y), dense.r_eff(x, y), 1e-8);
  EXPECT_NEAR(sparse.green(3, 9), dense.green(3, 9), 1e-8);
  EXPECT_THROW(sparse.green_matrix(), InvalidParamError);
}

TEST(ReffSet, PathMiddleToEnds) {
  const std::vector<Vertex> S{0, 2};
  EXPECT_NEAR(r_eff_set(gen::path(3), 1, S), 0.5, 1e-14);
}

TEST(ReffSet, AdjacentOnlyToSet) {
  // v's neighbours all lie in S: the glued vertex is joined to v by c_v.
  const auto net = gen::randomize_conductances(gen::complete(5), 0.5, 2.0, 9);
  std::vector<Vertex> S{1, 2, 3, 4};
  EXPECT_NEAR(r_eff_set(net, 0, S), 1.0 / net.conductance(0), 1e-12);
}

TEST(ReffSet, RejectsMember) {
  const std::vector<Vertex> S{0, 1};
  EXPECT_THROW(r_eff_set(gen::path(3), 1, S), InvalidParamError);
}

TEST(ReffSet, MonotoneUnderQuotientProperty) {
  auto rng = stream(26, 1);
  for (const auto& net : random_family(26, 20, 15)) {
    const ResistanceOracle o(net);
    const Vertex v = rng() % net.size();
    std::vector<Vertex> S;
    for (Vertex x = 0; x < net.size(); ++x)
      if (x != v && rng() % 2) S.push_back(x);
    if (S.empty()) S.push_back(v == 0 ? 1 : 0);
    double best = INFINITY;
    for (auto s : S) best = std::min(best, o.r_eff(v, s));
    EXPECT_LE(r_eff_set(net, v, S), best + 1e-9);
  }
}

TEST(ReffSet, ThreeSetsInequalityProperty) {
  auto rng = stream(27, 1);
  for (const auto& net : random_family(27, 30, 16)) {
    if (net.size() < 4) continue;
    std::vector<Vertex> A, B1, B2;
    for (Vertex x = 0; x < net.size(); ++x) {
      switch (rng() % 4) {
        case 0: A.push_back(x); break;
        case 1: B1.push_back(x); break;
        case 2: B2.push_back(x); break;
        default: break;
      }
    }
    if (A.empty() || B1.empty() || B2.empty()) continue;
    std::vector<Vertex> B = B1;
    B.insert(B.end(), B2.begin(), B2.end());
    const double r1 = r_eff_sets(net, A, B1), r2 = r_eff_sets(net, A, B2);
    EXPECT_GE(r_eff_sets(net, A, B), r1 * r2 / (r1 + r2) - 1e-9);
  }
}

TEST(Commute, Examples) {
  EXPECT_NEAR(ResistanceOracle(gen::complete(3)).commute(0, 1), 4.0, 1e-13);
  EXPECT_NEAR(ResistanceOracle(gen::path(3)).commute(0, 2), 8.0, 1e-13);
  EXPECT_DOUBLE_EQ(ResistanceOracle(gen::path(3)).commute(1, 1), 0.0);
  EXPECT_NEAR(ResistanceOracle(gen::path(3)).c_eff(0, 2), 0.5, 1e-14);
}

TEST(Hitting, Examples) {
  EXPECT_NEAR(hitting_times(gen::path(2)).H(0, 1), 1.0, 1e-14);
  const auto k3 = hitting_times(gen::complete(3));
  EXPECT_NEAR(k3.H(0, 1), 2.0, 1e-13);
  EXPECT_NEAR(k3.t_hit, 2.0, 1e-13);
  EXPECT_NEAR(hitting_times(gen::cycle(4)).H(0, 2), 4.0, 1e-13);
  EXPECT_NEAR(hitting_column(gen::cycle(4), 2)(0), 4.0, 1e-13);
}

TEST(Hitting, MatchesAbsorbingChainProperty) {
  for (const auto& net : random_family(28, 15, 20)) {
    const auto table = hitting_times(net);
    for (Vertex v = 0; v < net.size(); ++v) {
      const Eigen::VectorXd h = hitting_column(net, v);
      for (Vertex u = 0; u < net.size(); ++u) {
        const double got = table.H(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
        EXPECT_NEAR(got, h(static_cast<Eigen::Index>(u)), 1e-8 * (1.0 + h.maxCoeff()));
        EXPECT_GE(got, 0.0);
      }
    }
  }
}

TEST(Hitting, OracleTableMatchesIndependentSolvesProperty) {
  for (const auto& net : random_family(29, 15, 25)) {
    const auto a = hitting_times(net), b = hitting_times(ResistanceOracle(net));
    EXPECT_LE((a.H - b.H).cwiseAbs().maxCoeff(), 1e-8 * a.t_hit);
    EXPECT_NEAR(a.resistance_diameter, b.resistance_diameter, 1e-9 * a.resistance_diameter);
  }
}

TEST(Hitting, CommuteIdentityProperty) {
  for (const auto& net : random_family(30, 20, 30)) {
    const ResistanceOracle o(net);
    const auto table = hitting_times(net);
    for (Vertex u = 0; u < net.size(); ++u)
      for (Vertex v = u + 1; v < net.size(); ++v) {
        const auto a = static_cast<Eigen::Index>(u), b = static_cast<Eigen::Index>(v);
        const double k = o.commute(u, v);
        EXPECT_NEAR(table.H(a, b) + table.H(b, a), k, 1e-8 * k);
      }
    EXPECT_NEAR(table.resistance_diameter, o.resistance_diameter(), 1e-8 * table.resistance_diameter);
  }
}

TEST(Foster, Examples) {
  EXPECT_NEAR(foster_residual(gen::bary_tree(3, 3)), 0.0, 1e-10);
  const ResistanceOracle k5(gen::complete(5));
  EXPECT_NEAR(10 * k5.r_eff(0, 1), 4.0, 1e-13);
  EXPECT_NEAR(foster_residual(k5), 0.0, 1e-12);
  EXPECT_LE(std::abs(foster_residual(gen::erdos_renyi(20, 0.3, 1))), 1e-8);
}

TEST(Foster, RandomWeightedProperty) {
  for (const auto& net : random_family(31, 30, 40))
    EXPECT_LE(std::abs(foster_residual(net)), 1e-8 * static_cast<double>(net.size()));
}

TEST(Escape, Examples) {
  EXPECT_DOUBLE_EQ(escape_probability(gen::path(2), 0, 1), 1.0);
  EXPECT_NEAR(escape_probability(gen::path(3), 0, 2), 0.5, 1e-14);
  EXPECT_NEAR(escape_probability(gen::complete(3), 0, 1), 0.75, 1e-14);
  EXPECT_THROW(escape_probability(gen::path(3), 1, 1), InvalidParamError);
}

TEST(StarMesh, PreservesResistancesProperty) {
  auto rng = stream(32, 1);
  for (const auto& net : random_family(32, 20, 25)) {
    const Vertex x = rng() % net.size();
    const auto red = star_mesh_reduce(net, x);
    const ResistanceOracle before(net), after(red.network);
    for (Vertex u = 0; u < red.network.size(); ++u)
      for (Vertex v = u + 1; v < red.network.size(); ++v) {
        const double want = before.r_eff(red.original[u], red.original[v]);
        EXPECT_NEAR(after.r_eff(u, v), want, 1e-8 * want);
      }
  }
}

TEST(Quotient, ResistanceToGluedVertexIsDefinitional) {
  const auto net = gen::randomize_conductances(gen::grid(3, 4), 0.5, 2.0, 5);
  const std::vector<Vertex> S{0, 5, 11};
  const auto q = quotient(net, S);
  const double direct = ResistanceOracle(q.network).r_eff(q.relabel[7], q.glued_vertex);
  EXPECT_NEAR(r_eff_set(net, 7, S), direct, 1e-10 * direct);
}
