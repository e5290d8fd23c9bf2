#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <fstream>
#include <random>
#include <sstream>

#include "flexmkt/errors.hpp"
#include "flexmkt/market_model.hpp"
#include "flexmkt/netmodel.hpp"

using namespace flexmkt;
using net::Line;
using net::Network;

namespace {

// Direct DC power flow: solve B theta = p with theta_root = 0 via a full
// pivoting LU on the Laplacian with the root row/column pinned.
Eigen::VectorXd dc_flows(const Network& nw, const Eigen::VectorXd& p) {
  const int n = nw.num_buses(), r = nw.root_index();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& ln : nw.lines()) {
    const int a = nw.index_of(ln.from), b = nw.index_of(ln.to);
    lap(a, a) += 1 / ln.x;
    lap(b, b) += 1 / ln.x;
    lap(a, b) -= 1 / ln.x;
    lap(b, a) -= 1 / ln.x;
  }
  Eigen::VectorXd rhs = p;
  lap.row(r).setZero();
  lap(r, r) = 1.0;
  rhs(r) = 0.0;
  const Eigen::VectorXd theta = lap.fullPivLu().solve(rhs);
  Eigen::VectorXd f(nw.num_lines());
  for (int l = 0; l < nw.num_lines(); ++l) {
    const auto& ln = nw.lines()[l];
    f(l) = (theta(nw.index_of(ln.from)) - theta(nw.index_of(ln.to))) / ln.x;
  }
  return f;
}

Network random_tree(std::mt19937_64& rng, int n) {
  std::vector<int> buses;
  std::vector<Line> lines;
  for (int k = 1; k <= n; ++k) buses.push_back(k);
  for (int k = 2; k <= n; ++k) {
    const int parent = std::uniform_int_distribution<int>(1, k - 1)(rng);
    lines.push_back({parent, k, 0.1});
  }
  return Network(buses, lines, 1);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Sensitivity, TwoBusRadial) {
  Network nw({1, 2}, {Line{1, 2, 0.1}}, 1);
  const auto s = net::build_sensitivity(nw);
  EXPECT_EQ(s(0, 1), -1.0);
  EXPECT_EQ(s(0, 0), 0.0);
  const auto f = net::line_flows(s, Eigen::Vector2d(0.0, -6.0));
  EXPECT_DOUBLE_EQ(f(0), 6.0);
}

TEST(Sensitivity, ChainPathMembership) {
  Network nw({1, 2, 3}, {Line{1, 2, 0.1}, Line{2, 3, 0.1}}, 1);
  const auto s = net::build_sensitivity(nw);
  EXPECT_EQ(s(0, 2), -1.0);
  EXPECT_EQ(s(1, 2), -1.0);
  EXPECT_EQ(s(0, 1), -1.0);
  EXPECT_EQ(s(1, 1), 0.0);
  EXPECT_TRUE(s.col(0).isZero());
}

TEST(Sensitivity, ReversedRadialLineFlipsSign) {
  Network nw({1, 2}, {Line{2, 1, 0.1}}, 1);
  EXPECT_EQ(net::build_sensitivity(nw)(0, 1), 1.0);
  EXPECT_FALSE(net::oriented_from_root(nw));
  const auto o = net::orient_from_root(nw);
  EXPECT_TRUE(net::oriented_from_root(o));
  EXPECT_EQ(net::build_sensitivity(o)(0, 1), -1.0);
}

TEST(Sensitivity, TriangleSplitsTwoThirdsOneThird) {
  // Lines 1-2, 2-3, 1-3 with equal reactance; inject 1 MW at bus 2.
  // Hand solve: reduced Laplacian [[2,-1],[-1,2]] / x, theta = x*(2/3, 1/3).
  Network nw({1, 2, 3}, {Line{1, 2, 0.1}, Line{2, 3, 0.1}, Line{1, 3, 0.1}}, 1);
  const auto s = net::build_sensitivity(nw);
  EXPECT_NEAR(s(0, 1), -2.0 / 3.0, 1e-12);  // 2/3 flows 2 -> 1
  EXPECT_NEAR(s(1, 1), 1.0 / 3.0, 1e-12);   // 1/3 flows 2 -> 3
  EXPECT_NEAR(s(2, 1), -1.0 / 3.0, 1e-12);  // then 3 -> 1
  const Eigen::Vector3d p(-1.0, 1.0, 0.0);
  EXPECT_TRUE(net::line_flows(s, p).isApprox(dc_flows(nw, p), 1e-12));
}

TEST(Sensitivity, DimensionMismatch) {
  Network nw({1, 2}, {Line{1, 2, 0.1}}, 1);
  EXPECT_THROW(net::line_flows(net::build_sensitivity(nw), Eigen::Vector3d::Zero()), ContractError);
  EXPECT_TRUE(net::line_flows(net::build_sensitivity(nw), Eigen::Vector2d::Zero()).isZero());
}

TEST(Network, Invariants) {
  EXPECT_THROW(Network({1, 2, 3}, {Line{1, 2, 0.1}}, 1), TopologyError);  // disconnected
  EXPECT_THROW(Network({1, 2}, {Line{1, 1, 0.1}, Line{1, 2, 0.1}}, 1), TopologyError);
  EXPECT_THROW(Network({1, 2}, {Line{1, 3, 0.1}}, 1), TopologyError);
  EXPECT_THROW(Network({1, 2}, {Line{1, 2, 0.1}}, 5), TopologyError);
  EXPECT_THROW(Network({1, 2}, {Line{1, 2, 0.0}}, 1), ValidationError);
  EXPECT_THROW(Network({1, 2}, {Line{1, 2, 0.1, 1.0, 4.0}}, 1), ValidationError);
}

TEST(Network, Radiality) {
  EXPECT_TRUE(net::is_radial(Network({1, 2}, {Line{1, 2, 0.1}}, 1)));
  EXPECT_FALSE(net::is_radial(Network({1, 2, 3}, {Line{1, 2, 0.1}, Line{2, 3, 0.1}, Line{1, 3, 0.1}}, 1)));
}

TEST(Network, Matpower69IsRadial) {
  std::vector<std::string> warnings;
  const auto nw = market::parse_matpower(slurp(std::string(FLEXMKT_DATA_DIR) + "/matpower/case69.m"), &warnings);
  EXPECT_EQ(nw.num_buses(), 69);
  EXPECT_EQ(nw.num_lines(), 68);
  EXPECT_TRUE(net::is_radial(nw));
  const auto s = net::build_sensitivity(net::orient_from_root(nw));
  EXPECT_LE(s.maxCoeff(), 0.0);
}

TEST(Property, RadialColumnSumsAreMinusDepth) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 40; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 200)(rng);
    const auto nw = random_tree(rng, n);
    const auto s = net::build_sensitivity(nw);
    // Depth by walking parents: in random_tree every line is parent -> child.
    std::vector<int> depth(n + 1, 0), parent(n + 1, 0);
    for (const auto& ln : nw.lines()) parent[ln.to] = ln.from;
    for (int k = 2; k <= n; ++k) depth[k] = depth[parent[k]] + 1;
    for (int k = 1; k <= n; ++k) ASSERT_DOUBLE_EQ(s.col(nw.index_of(k)).sum(), -depth[k]);
    EXPECT_LE(s.maxCoeff(), 0.0);
    EXPECT_EQ(net::depths(nw)[n - 1], depth[n]);
  }
}

TEST(Property, PtdfMatchesDirectDcSolve) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 60; ++t) {
    const int n = std::uniform_int_distribution<int>(3, 30)(rng);
    auto tree = random_tree(rng, n);
    auto lines = tree.lines();
    for (auto& ln : lines) ln.x = 0.02 + 0.3 * u(rng);
    const int extra = 1 + n / 3;
    for (int k = 0; k < extra; ++k) {
      int a = 1 + static_cast<int>(u(rng) * n), b = 1 + static_cast<int>(u(rng) * n);
      if (a == b) continue;
      lines.push_back({a, b, 0.02 + 0.3 * u(rng)});
    }
    const Network nw(tree.buses(), lines, 1);
    const auto s = net::build_sensitivity(nw);
    Eigen::VectorXd p(n);
    for (int k = 0; k < n; ++k) p(k) = -5.0 + 10.0 * u(rng);
    p(0) = 0.0;
    p(0) = -p.sum();  // slack absorbs the balance
    const Eigen::VectorXd diff = net::line_flows(s, p) - dc_flows(nw, p);
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-8) << "instance " << t;
  }
}
