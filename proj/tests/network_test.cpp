#include "dissflow/network.hpp"

#include <gtest/gtest.h>

#include <numeric>

#include "dissflow/steady_solver.hpp"
#include "fixtures.hpp"

using namespace dissflow;
using dissflow::test::node;
using dissflow::test::pipe;

TEST(Validate, ThreeNodePathIsAdmissible) {
  EXPECT_TRUE(validate(test::three_node()).ok());
}

TEST(Validate, ReportsEmptyTerminalSet) {
  Network net({node(1, NodeRole::Source), node(2, NodeRole::Internal), node(3, NodeRole::Internal)},
              {{0, 1, pipe(1.0)}, {1, 2, pipe(1.0)}});
  const auto report = validate(net);
  EXPECT_TRUE(report.has("empty terminal set"));
  EXPECT_EQ(report.issues.size(), 1u);
}

TEST(Validate, ReportsDisconnectedGraph) {
  Network net({node(1, NodeRole::Source), node(2, NodeRole::Internal), node(3, NodeRole::Terminal),
               node(4, NodeRole::Internal)},
              {{0, 1, pipe(1.0)}, {2, 3, pipe(1.0)}});
  EXPECT_TRUE(validate(net).has("graph not connected"));
}

TEST(Validate, ReportsEveryStructuralProblem) {
  Network net({node(1, NodeRole::Source, 2.0, 1.0), node(2, NodeRole::Internal), node(1, NodeRole::Terminal)},
              {{0, 1, pipe(1.0)}, {1, 0, pipe(1.0)}, {2, 2, pipe(1.0)}, {1, 2, nullptr}});
  const auto report = validate(net);
  EXPECT_TRUE(report.has("potential bounds reversed"));
  EXPECT_TRUE(report.has("duplicate edge"));
  EXPECT_TRUE(report.has("self-loop"));
  EXPECT_TRUE(report.has("missing dissipation"));
  EXPECT_TRUE(report.has("duplicate node id"));
  EXPECT_FALSE(report.ok());
}

TEST(Network, CanonicalizesOrientationThroughEdgeInversion) {
  auto law = std::make_shared<GasPipe>(1.0, 0.5, GasPipe::Compressor{{0.0, 1.0}, std::nullopt});
  Network net({node(1, NodeRole::Source), node(2, NodeRole::Terminal)}, {{1, 0, law}});
  const Edge& e = net.edge(0);
  EXPECT_EQ(e.tail, 0u);
  EXPECT_EQ(e.head, 1u);
  for (double x : {-2.0, 0.0, 1.5}) {
    EXPECT_DOUBLE_EQ(net.oriented_drop(1, 0, x), law->value(x));
    EXPECT_DOUBLE_EQ(net.oriented_drop(0, 1, x), -law->value(-x));
  }
}

TEST(Network, SkewSymmetricFlowView) {
  const auto net = test::two_node();
  FlowState s{{0.7}, {2.0, 1.0}, {0.7, -0.7}};
  EXPECT_DOUBLE_EQ(net.oriented_flow(s, 0, 1), 0.7);
  EXPECT_DOUBLE_EQ(net.oriented_flow(s, 1, 0), -0.7);
}

TEST(Residuals, ExactTwoNodeStateHasZeroResiduals) {
  const auto net = test::two_node();
  FlowState s{{1.0}, {2.0, 1.0}, {1.0, -1.0}};
  auto r = residuals(net, s);
  EXPECT_EQ(r.conservation_norm(), 0.0);
  EXPECT_EQ(r.drop_norm(), 0.0);

  s.pi[0] = 2.5;
  r = residuals(net, s);
  EXPECT_DOUBLE_EQ(r.drop[0], -0.5);
  EXPECT_EQ(r.conservation_norm(), 0.0);
}

TEST(Residuals, ZeroFlowIdentity) {
  const auto net = test::triangle();
  FlowState s{{0.0, 0.0, 0.0}, {3.0, 3.0, 3.0}, {0.0, 0.0, 0.0}};
  const auto r = residuals(net, s);
  EXPECT_EQ(r.conservation_norm(), 0.0);
  EXPECT_EQ(r.drop_norm(), 0.0);
}

TEST(Residuals, SumOfConservationResidualsEqualsTotalProduction) {
  const auto net = test::triangle();
  FlowState s{{0.3, -1.1, 2.0}, {1.0, 5.0, -2.0}, {0.4, -0.9, 0.2}};
  const auto r = residuals(net, s);
  const double sr = std::accumulate(r.conservation.begin(), r.conservation.end(), 0.0);
  const double sq = std::accumulate(s.q.begin(), s.q.end(), 0.0);
  EXPECT_NEAR(sr, sq, 1e-15);
}

TEST(Residuals, RejectsDimensionMismatch) {
  const auto net = test::two_node();
  EXPECT_THROW(residuals(net, FlowState{{1.0, 2.0}, {0.0, 0.0}, {0.0, 0.0}}), DimensionMismatch);
}

TEST(CycleLaw, TwoCycleVanishesBySymmetry) {
  auto law = std::make_shared<GasPipe>(1.3, 0.4, GasPipe::Compressor{{0.0, 1.0}, std::nullopt});
  Network net({node(1, NodeRole::Source), node(2, NodeRole::Terminal)}, {{0, 1, law}});
  FlowState s{{0.8}, {0.0, 0.0}, {0.0, 0.0}};
  const std::vector<NodeIndex> cycle{0, 1, 0};
  EXPECT_EQ(cycle_law_check(net, s, cycle), 0.0);
}

TEST(CycleLaw, TriangleSolverOutputAndPerturbations) {
  const auto net = test::triangle();
  auto b = BoundaryData::zeros(net);
  b.injection[0] = 1.0;
  b.injection[1] = -0.3;
  b.terminal_potential[2] = 1.0;
  auto s = solve_steady_state(net, b);
  const std::vector<NodeIndex> cycle{0, 1, 2, 0};
  EXPECT_LE(std::abs(cycle_law_check(net, s, cycle)), 1e-8);

  auto shifted = s;
  shifted.pi[1] += 0.25;
  EXPECT_LE(std::abs(cycle_law_check(net, shifted, cycle)), 1e-8);

  auto bumped = s;
  const double delta = 0.1;
  const double before = net.edge(0).law->value(s.phi[0]);
  bumped.phi[0] += delta;
  const double expected = net.edge(0).law->value(s.phi[0] + delta) - before;
  EXPECT_NEAR(cycle_law_check(net, bumped, cycle), expected, 1e-8);
  EXPECT_GT(std::abs(expected), 0.01);
}

TEST(CycleLaw, RejectsNonCycles) {
  const auto net = test::three_node();
  FlowState s{{0.0, 0.0}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}};
  const std::vector<NodeIndex> open{0, 1, 2};
  const std::vector<NodeIndex> jump{0, 2, 1, 0};
  EXPECT_THROW(cycle_law_check(net, s, open), std::invalid_argument);
  EXPECT_THROW(cycle_law_check(net, s, jump), std::invalid_argument);
}

TEST(CycleBasis, OneCyclePerChord) {
  EXPECT_TRUE(fundamental_cycles(test::three_node()).empty());
  const auto cycles = fundamental_cycles(test::triangle());
  ASSERT_EQ(cycles.size(), 1u);
  EXPECT_EQ(cycles[0].size(), 4u);
  EXPECT_EQ(cycles[0].front(), cycles[0].back());
}
