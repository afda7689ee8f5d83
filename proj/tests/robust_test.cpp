#include "dissflow/robust.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dissflow/oracle.hpp"
#include "fixtures.hpp"

using namespace dissflow;

namespace {

SearchConfig search_for(const test::ThreeNodeInstance&) {
  SearchConfig cfg;
  cfg.source_box.assign(3, std::nullopt);
  cfg.source_box[0] = Interval{0.5, 1.5};
  cfg.terminal_box.assign(3, std::nullopt);
  return cfg;
}

}  // namespace

TEST(CostFunction, AffineAndTabulated) {
  const auto g = CostFunction::affine(2.0, 1.0);
  EXPECT_DOUBLE_EQ(g(3.0), 7.0);
  const auto h = CostFunction::tabulated({{0.0, 0.0}, {1.0, 2.0}, {2.0, 3.0}});
  EXPECT_DOUBLE_EQ(h(0.5), 1.0);
  EXPECT_DOUBLE_EQ(h(1.5), 2.5);
  EXPECT_DOUBLE_EQ(h(-1.0), -2.0);
  EXPECT_DOUBLE_EQ(h(3.0), 4.0);
  EXPECT_TRUE(h.non_decreasing());
  EXPECT_FALSE(CostFunction::tabulated({{0.0, 1.0}, {1.0, 0.0}}).non_decreasing());
  EXPECT_FALSE(CostFunction::affine(-1.0).non_decreasing());
  EXPECT_THROW(CostFunction::tabulated({{0.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(CostFunction::tabulated({{1.0, 1.0}, {1.0, 2.0}}), std::invalid_argument);
}

TEST(CostModel, RejectsDecreasingRevenue) {
  auto t = test::three_node_instance();
  t.cost.terminal_revenue[2] = CostFunction::affine(-1.0);
  EXPECT_THROW(check_cost(t.network, t.cost), std::invalid_argument);
  EXPECT_THROW(robust_feasibility(t.network, t.box, t.op, t.cost), std::invalid_argument);
}

TEST(ScenarioBox, RejectsReversedInterval) {
  auto t = test::three_node_instance();
  t.box.bounds[1] = {0.0, -0.5};
  EXPECT_THROW(check_box(t.network, t.box), std::invalid_argument);
}

TEST(RobustFeasibility, ThreeNodeSlackBounds) {
  const auto t = test::three_node_instance();
  const auto v = robust_feasibility(t.network, t.box, t.op, t.cost);
  ASSERT_EQ(v.status, VerdictStatus::Feasible);
  EXPECT_TRUE(v.violations.empty());
  ASSERT_TRUE(v.upper_state && v.lower_state);
  EXPECT_NEAR(v.upper_state->pi[0], 3.0, 1e-9);
  EXPECT_NEAR(v.upper_state->pi[1], 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(v.upper_state->pi[2], 1.0);
  EXPECT_NEAR(v.lower_state->phi[0], 1.0, 1e-9);
  EXPECT_NEAR(v.lower_state->phi[1], 0.5, 1e-9);
  EXPECT_NEAR(v.lower_state->pi[1], 1.25, 1e-9);
  EXPECT_NEAR(v.lower_state->pi[0], 2.25, 1e-9);
  // g(1) - h(-1) = 1 + 2.
  EXPECT_NEAR(v.worst_cost, 3.0, 1e-8);
}

TEST(RobustFeasibility, TightUpperBoundAtSource) {
  const auto t = test::three_node_instance(2.9);
  const auto v = robust_feasibility(t.network, t.box, t.op, t.cost);
  ASSERT_EQ(v.status, VerdictStatus::Infeasible);
  ASSERT_EQ(v.violations.size(), 1u);
  EXPECT_EQ(v.violations[0].node, 0u);
  EXPECT_EQ(v.violations[0].bound, BoundSide::Upper);
  EXPECT_EQ(v.violations[0].corner, Corner::Upper);
  EXPECT_NEAR(v.violations[0].margin, 0.1, 1e-8);
  EXPECT_NEAR(v.total_violation(), 0.1, 1e-8);
}

TEST(RobustFeasibility, TerminalPotentialOutsideItsBounds) {
  auto t = test::three_node_instance();
  t.op.terminal_potential[2] = 5.0;
  const auto v = robust_feasibility(t.network, t.box, t.op, t.cost);
  ASSERT_EQ(v.status, VerdictStatus::Infeasible);
  const bool fixed = std::any_of(v.violations.begin(), v.violations.end(), [](const Violation& x) {
    return x.node == 2 && x.corner == Corner::Fixed && std::abs(x.margin - 1.0) < 1e-12;
  });
  EXPECT_TRUE(fixed);
}

TEST(RobustFeasibility, LowerBoundCheckedAtLowerCorner) {
  auto t = test::three_node_instance();
  t.network = Network({test::node(1, NodeRole::Source), test::node(2, NodeRole::Internal, 1.3, 4.0),
                       test::node(3, NodeRole::Terminal)},
                      {{0, 1, test::pipe(1.0)}, {1, 2, test::pipe(1.0)}});
  const auto v = robust_feasibility(t.network, t.box, t.op, t.cost);
  ASSERT_EQ(v.status, VerdictStatus::Infeasible);
  ASSERT_EQ(v.violations.size(), 1u);
  EXPECT_EQ(v.violations[0].node, 1u);
  EXPECT_EQ(v.violations[0].bound, BoundSide::Lower);
  EXPECT_EQ(v.violations[0].corner, Corner::Lower);
  EXPECT_NEAR(v.violations[0].margin, 0.05, 1e-8);
}

TEST(RobustFeasibility, DegenerateBoxMatchesDeterministicCheck) {
  for (double pi_max : {4.0, 2.9}) {
    auto t = test::three_node_instance(pi_max);
    t.box.bounds[1] = {-0.25, -0.25};
    const auto v = robust_feasibility(t.network, t.box, t.op, t.cost);
    const auto d = deterministic_solve(t.network, t.box.upper_corner(), t.op, t.cost);
    EXPECT_EQ(v.feasible(), d.feasible) << pi_max;
    EXPECT_DOUBLE_EQ(v.worst_cost, d.cost);
  }
}

TEST(RobustFeasibility, SolverFailureIsIndeterminate) {
  const auto t = test::three_node_instance();
  SolverOptions opts;
  opts.max_iterations = 0;
  opts.tol = 1e-12;
  const auto v = robust_feasibility(t.network, t.box, t.op, t.cost, opts);
  EXPECT_EQ(v.status, VerdictStatus::Indeterminate);
  EXPECT_FALSE(v.feasible());
  EXPECT_FALSE(v.diagnostic.empty());
}

TEST(DeterministicSolve, InteriorScenario) {
  const auto t = test::three_node_instance();
  std::vector<double> q{0.0, -0.25, 0.0};
  const auto d = deterministic_solve(t.network, q, t.op, t.cost);
  EXPECT_NEAR(d.state.pi[1], 1.5625, 1e-9);
  EXPECT_NEAR(d.state.pi[0], 2.5625, 1e-9);
  EXPECT_TRUE(d.feasible);
  EXPECT_NEAR(d.cost, 1.0 + 2.0 * 0.75, 1e-8);
}

TEST(DeterministicSolve, AgreesWithCornerSolves) {
  const auto t = test::three_node_instance();
  const auto v = robust_feasibility(t.network, t.box, t.op, t.cost);
  const auto up = deterministic_solve(t.network, t.box.upper_corner(), t.op, t.cost);
  const auto lo = deterministic_solve(t.network, t.box.lower_corner(), t.op, t.cost);
  EXPECT_EQ(up.cost, v.worst_cost);
  EXPECT_EQ(lo.state.pi, v.lower_state->pi);
}

TEST(Optimize, MatchesGridSearchOverSourceInjection) {
  const auto t = test::three_node_instance();
  const auto r = optimize_operating_point(t.network, t.box, t.cost, t.op, search_for(t));
  ASSERT_EQ(r.status, OptimizationStatus::Feasible);
  double best = 1e300;
  for (int k = 0; k <= 100; ++k) {
    auto op = t.op;
    op.source_injection[0] = 0.5 + 0.01 * k;
    const auto v = robust_feasibility(t.network, t.box, op, t.cost);
    if (v.feasible()) best = std::min(best, v.worst_cost);
  }
  EXPECT_LE(r.verdict.worst_cost, best + 1e-8);
  // The worst case cost is 3 q_1, so the search ends on the lower limit.
  EXPECT_NEAR(r.point.source_injection[0], 0.5, 1e-9);
  EXPECT_TRUE(robust_feasibility(t.network, t.box, r.point, t.cost).feasible());
}

TEST(Optimize, PureCostDrivesInjectionToZero) {
  auto t = test::three_node_instance();
  t.cost.terminal_revenue[2] = CostFunction::affine(0.0);
  t.box.bounds[1] = {0.0, 0.0};
  auto cfg = search_for(t);
  cfg.source_box[0] = Interval{0.0, 1.0};
  const auto r = optimize_operating_point(t.network, t.box, t.cost, t.op, cfg);
  ASSERT_EQ(r.status, OptimizationStatus::Feasible);
  EXPECT_NEAR(r.point.source_injection[0], 0.0, 1e-9);
  EXPECT_NEAR(r.verdict.worst_cost, 0.0, 1e-9);
}

TEST(Optimize, RecoversFeasibilityFromInfeasibleSeed) {
  const auto t = test::three_node_instance(2.5);
  auto cfg = search_for(t);
  cfg.terminal_box[2] = Interval{0.0, 2.0};
  // Seed q_1 = 1.5 puts pi_1 = 1 + 2.25 + 2.25 far above 2.5.
  auto op = t.op;
  op.source_injection[0] = 1.5;
  const auto r = optimize_operating_point(t.network, t.box, t.cost, op, cfg);
  ASSERT_EQ(r.status, OptimizationStatus::Feasible);
  EXPECT_TRUE(robust_feasibility(t.network, t.box, r.point, t.cost).feasible());
}

TEST(Optimize, FollowsBindingBoundAcrossCostPlateau) {
  // At the lower corner pi_2 = pi_3 + (q_1 - 0.5)^2 must reach 2.3, while the
  // upper corner caps pi_1 = pi_3 + 2 q_1^2 - b at 4. The optimum
  // q_1 = 0.5 + sqrt(0.3) needs pi_3 = 2 and b near 1 together.
  auto t = test::three_node_instance();
  t.network = Network({test::node(1, NodeRole::Source), test::node(2, NodeRole::Internal, 2.3, 4.0),
                       test::node(3, NodeRole::Terminal)},
                      {{0, 1, std::make_shared<GasPipe>(1.0, 0.0, GasPipe::Compressor{{0.0, 1.0}, std::nullopt})},
                       {1, 2, test::pipe(1.0)}});
  auto cfg = search_for(t);
  cfg.terminal_box[2] = Interval{1.0, 2.0};
  const auto r = optimize_operating_point(t.network, t.box, t.cost, t.op, cfg);
  ASSERT_EQ(r.status, OptimizationStatus::Feasible);
  EXPECT_NEAR(r.point.source_injection[0], 0.5 + std::sqrt(0.3), 1e-3);
  EXPECT_NEAR(r.verdict.worst_cost, 3.0 * (0.5 + std::sqrt(0.3)), 3e-3);
  EXPECT_GT(r.verdict.margin, -1e-12);
}

TEST(Optimize, ReportsNoFeasiblePoint) {
  const auto t = test::three_node_instance(1.1);
  auto cfg = search_for(t);
  const auto r = optimize_operating_point(t.network, t.box, t.cost, t.op, cfg);
  EXPECT_EQ(r.status, OptimizationStatus::NoFeasiblePoint);
  EXPECT_FALSE(r.verdict.violations.empty());
}

TEST(Optimize, AcceptedTraceIsMonotone) {
  const auto t = test::three_node_instance();
  auto cfg = search_for(t);
  cfg.terminal_box[2] = Interval{1.0, 2.0};
  const auto r = optimize_operating_point(t.network, t.box, t.cost, t.op, cfg);
  double last = 1e300;
  int accepted = 0;
  for (const auto& e : r.trace) {
    if (!e.accepted || e.status != VerdictStatus::Feasible) continue;
    EXPECT_LE(e.worst_cost, last + 1e-12);
    last = e.worst_cost;
    ++accepted;
  }
  EXPECT_GT(accepted, 1);
  EXPECT_EQ(static_cast<int>(r.trace.size()), r.evaluations);
}

TEST(Optimize, ReproducibleForFixedSeedAndWorkerCount) {
  std::mt19937_64 rng(3);
  RandomNetworkConfig rc;
  rc.max_nodes = 12;
  rc.compression = {0.0, 1.0};
  const auto inst = random_instance(rc, rng);
  SearchConfig cfg;
  cfg.source_box.assign(inst.network.node_count(), std::nullopt);
  for (NodeIndex s : inst.network.nodes_with_role(NodeRole::Source)) cfg.source_box[s] = Interval{0.5, 2.0};
  cfg.sweeps = 5;
  cfg.seed = 11;
  cfg.workers = 1;
  const auto a = optimize_operating_point(inst.network, inst.box, inst.cost, inst.op, cfg);
  cfg.workers = 3;
  const auto b = optimize_operating_point(inst.network, inst.box, inst.cost, inst.op, cfg);
  EXPECT_EQ(a.point, b.point);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Optimize, RejectsMissingSourceBox) {
  const auto t = test::three_node_instance();
  SearchConfig cfg;
  cfg.source_box.assign(3, std::nullopt);
  EXPECT_THROW(optimize_operating_point(t.network, t.box, t.cost, t.op, cfg), std::invalid_argument);
  cfg.source_box[0] = Interval{0.0, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(optimize_operating_point(t.network, t.box, t.cost, t.op, cfg), std::invalid_argument);
}

TEST(RobustProperty, CornerVerdictIsSoundOnScenarioSamples) {
  std::mt19937_64 rng(21);
  RandomNetworkConfig rc;
  rc.max_nodes = 15;
  rc.compression = {0.0, 1.0};
  int checked = 0;
  for (int k = 0; k < 20; ++k) {
    auto inst = random_instance(rc, rng);
    // Bounds from the midpoint scenario so that both verdicts occur.
    std::vector<double> mid(inst.network.node_count(), 0.0);
    for (NodeIndex i : inst.network.nodes_with_role(NodeRole::Internal)) {
      mid[i] = 0.5 * (inst.box.bounds[i].lo + inst.box.bounds[i].hi);
    }
    const auto ref = deterministic_solve(inst.network, mid, inst.op, inst.cost);
    std::vector<Node> nodes(inst.network.nodes().begin(), inst.network.nodes().end());
    const double slack = k % 2 ? 0.5 : 0.01;
    for (NodeIndex i = 0; i < nodes.size(); ++i) nodes[i].potential_bounds = {ref.state.pi[i] - slack, ref.state.pi[i] + slack};
    std::vector<EdgeSpec> edges;
    for (const auto& e : inst.network.edges()) edges.push_back({e.tail, e.head, e.law});
    const Network net(nodes, edges);
    const auto v = robust_feasibility(net, inst.box, inst.op, inst.cost);
    for (int s = 0; s < 20; ++s) {
      const auto d = deterministic_solve(net, random_scenario(net, inst.box, rng), inst.op, inst.cost);
      if (v.feasible()) {
        EXPECT_TRUE(d.feasible) << k;
        EXPECT_LE(d.cost, v.worst_cost + 1e-8);
      }
      ++checked;
    }
    if (!v.feasible()) {
      const auto lo = deterministic_solve(net, inst.box.lower_corner(), inst.op, inst.cost);
      const auto up = deterministic_solve(net, inst.box.upper_corner(), inst.op, inst.cost);
      EXPECT_TRUE(!lo.feasible || !up.feasible) << k;
    }
  }
  EXPECT_EQ(checked, 400);
}
