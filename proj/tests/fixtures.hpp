#pragma once

#include <memory>
#include <vector>

#include "dissflow/network.hpp"
#include "dissflow/robust.hpp"
#include "dissflow/steady_solver.hpp"

namespace dissflow::test {

inline LawPtr pipe(double c, double b = 0.0) {
  if (b == 0.0) return std::make_shared<GasPipe>(c);
  return std::make_shared<GasPipe>(c, b, GasPipe::Compressor{{b, b}, std::nullopt});
}

inline Node node(std::int64_t id, NodeRole role, double lo = 0.0, double hi = 4.0) {
  return Node{id, role, {lo, hi}};
}

// 1 (S) -> 2 (T), f = phi|phi|.
inline Network two_node() {
  return Network({node(1, NodeRole::Source), node(2, NodeRole::Terminal)}, {{0, 1, pipe(1.0)}});
}

// 1 (S) - 2 (R) - 3 (T), both pipes c = 1.
inline Network three_node(double pi_max_1 = 4.0) {
  return Network({node(1, NodeRole::Source, 0.0, pi_max_1), node(2, NodeRole::Internal),
                  node(3, NodeRole::Terminal)},
                 {{0, 1, pipe(1.0)}, {1, 2, pipe(1.0)}});
}

// 1 (S), 2 (R), 3 (T) pairwise connected.
inline Network triangle() {
  return Network({node(1, NodeRole::Source), node(2, NodeRole::Internal), node(3, NodeRole::Terminal)},
                 {{0, 1, pipe(1.0)}, {1, 2, pipe(2.0)}, {0, 2, pipe(0.5)}});
}

// q_1 and q_2 injected, pi_3 fixed.
inline BoundaryData three_node_boundary(const Network& net, double q1, double q2, double pi3) {
  BoundaryData b = BoundaryData::zeros(net);
  b.injection[0] = q1;
  b.injection[1] = q2;
  b.terminal_potential[2] = pi3;
  return b;
}

// q_1 = 1, pi_3 = 1, q_2 in [-0.5, 0], g(q) = q, h(q) = 2q.
struct ThreeNodeInstance {
  Network network;
  ScenarioBox box;
  OperatingPoint op;
  CostModel cost;
};

inline ThreeNodeInstance three_node_instance(double pi_max_1 = 4.0) {
  ThreeNodeInstance t{three_node(pi_max_1), {}, {}, {}};
  t.box.bounds = {{0.0, 0.0}, {-0.5, 0.0}, {0.0, 0.0}};
  t.op.source_injection = {1.0, 0.0, 0.0};
  t.op.terminal_potential = {0.0, 0.0, 1.0};
  t.cost = CostModel::zeros(t.network);
  t.cost.source_cost[0] = CostFunction::affine(1.0);
  t.cost.terminal_revenue[2] = CostFunction::affine(2.0);
  return t;
}

}  // namespace dissflow::test
