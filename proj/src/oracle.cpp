#include "dissflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dissflow/parallel.hpp"

namespace dissflow {

// ---- sweep ---------------------------------------------------------------

bool SweepResult::all_feasible() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.solved && r.feasible; });
}

SweepResult scenario_sweep(const Network& network, const ScenarioBox& box, const OperatingPoint& op,
                           const CostModel& cost, std::span<const std::size_t> resolution,
                           const SweepOptions& options) {
  check_box(network, box);
  check_cost(network, cost);

  SweepResult result;
  result.internal = network.nodes_with_role(NodeRole::Internal);
  const std::size_t dims = result.internal.size();
  if (resolution.size() == 1) {
    result.resolution.assign(dims, resolution[0]);
  } else if (resolution.size() == dims) {
    result.resolution.assign(resolution.begin(), resolution.end());
  } else {
    throw std::invalid_argument("resolution must give one count, or one per internal node");
  }

  std::size_t total = 1;
  for (std::size_t r : result.resolution) {
    if (r < 2) throw std::invalid_argument("resolution must be >= 2 per dimension");
    if (total > options.budget / r + 1) throw BudgetExceeded("scenario grid exceeds the solve budget");
    total *= r;
  }
  if (total > options.budget) throw BudgetExceeded("scenario grid exceeds the solve budget");

  auto grid_value = [&](std::size_t d, std::size_t k) {
    const Interval& b = box.bounds[result.internal[d]];
    const std::size_t r = result.resolution[d];
    if (k + 1 == r) return b.hi;
    return b.lo + b.width() * static_cast<double>(k) / static_cast<double>(r - 1);
  };

  result.rows.resize(total);
  parallel_for(total, options.workers, [&](std::size_t idx) {
    SweepRow& row = result.rows[idx];
    row.internal_q.resize(dims);
    std::vector<double> q_nodes(network.node_count(), 0.0);
    std::size_t rest = idx;
    bool at_lower = true, at_upper = true;
    for (std::size_t d = dims; d-- > 0;) {
      const std::size_t r = result.resolution[d];
      const std::size_t k = rest % r;
      rest /= r;
      at_lower = at_lower && k == 0;
      at_upper = at_upper && k + 1 == r;
      row.internal_q[d] = grid_value(d, k);
      q_nodes[result.internal[d]] = row.internal_q[d];
    }
    row.lower_corner = at_lower;
    row.upper_corner = at_upper;
    try {
      const DeterministicResult det = deterministic_solve(network, q_nodes, op, cost, options.solver);
      row.solved = true;
      row.feasible = det.feasible;
      row.cost = det.cost;
      row.revenue = cost.revenue(network, det.state.q);
      row.pi = det.state.pi;
      row.q = det.state.q;
    } catch (const NonConvergence& e) {
      row.error = e.what();
    }
  });

  result.lower_corner_row = 0;
  result.upper_corner_row = total - 1;
  result.argmax_pi.assign(network.node_count(), 0);
  result.argmin_pi.assign(network.node_count(), 0);
  std::vector<bool> seen(network.node_count(), false);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const SweepRow& row = result.rows[idx];
    if (!row.solved) {
      ++result.failures;
      continue;
    }
    for (NodeIndex i = 0; i < network.node_count(); ++i) {
      if (!seen[i] || row.pi[i] > result.rows[result.argmax_pi[i]].pi[i]) result.argmax_pi[i] = idx;
      if (!seen[i] || row.pi[i] < result.rows[result.argmin_pi[i]].pi[i]) result.argmin_pi[i] = idx;
      seen[i] = true;
    }
    if (!result.argmin_revenue || row.revenue < result.rows[*result.argmin_revenue].revenue) {
      result.argmin_revenue = idx;
    }
  }
  return result;
}

// ---- Aquarius ------------------------------------------------------------

namespace {

double threshold(double a, double b) { return 1e-10 * std::max({1.0, std::abs(a), std::abs(b)}); }

std::vector<double> conservation(const Network& network, const FlowState& s) {
  std::vector<double> r = s.q;
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    r[network.edge(e).head] += s.phi[e];
    r[network.edge(e).tail] -= s.phi[e];
  }
  return r;
}

}  // namespace

bool strictly_dominates(double dominant, double base) { return dominant - base > threshold(dominant, base); }

bool weakly_dominates(double dominant, double base) { return dominant - base >= -threshold(dominant, base); }

AquariusCertificate aquarius_path(const Network& network, const FlowState& base,
                                  const FlowState& dominant, std::span<const NodeIndex> terminals,
                                  NodeIndex u, const AquariusOptions& options) {
  const std::size_t n = network.node_count();
  for (const FlowState* s : {&base, &dominant}) {
    if (s->phi.size() != network.edge_count() || s->q.size() != n) {
      throw AquariusPreconditionError("flow state dimensions do not match network", std::nullopt);
    }
  }
  std::vector<bool> terminal(n, false);
  for (NodeIndex t : terminals) terminal.at(t) = true;
  if (u >= n || terminal[u]) throw AquariusPreconditionError("target must lie outside the terminal set", u);
  if (terminals.empty()) throw AquariusPreconditionError("terminal set is empty", std::nullopt);

  for (const FlowState* s : {&base, &dominant}) {
    double scale = 1.0;
    for (double q : s->q) scale = std::max(scale, std::abs(q));
    const auto r = conservation(network, *s);
    for (NodeIndex i = 0; i < n; ++i) {
      if (std::abs(r[i]) > options.conservation_tol * scale) {
        throw AquariusPreconditionError("flow conservation fails at node " + std::to_string(network.node(i).id), i);
      }
    }
  }
  for (NodeIndex i = 0; i < n; ++i) {
    if (!terminal[i] && base.q[i] < dominant.q[i] - options.production_tol) {
      throw AquariusPreconditionError("q >= q* fails at node " + std::to_string(network.node(i).id), i);
    }
  }

  auto build = [&](bool strict) -> std::optional<AquariusCertificate> {
    std::vector<bool> in_a(n, false);
    std::vector<NodeIndex> parent(n, n);
    std::vector<NodeIndex> layer{u};
    in_a[u] = true;
    std::size_t layers = 1;
    while (true) {
      std::optional<NodeIndex> hit;
      for (NodeIndex i : layer) {
        if (terminal[i]) {
          hit = i;
          break;
        }
      }
      if (hit) {
        AquariusCertificate cert;
        cert.target = u;
        cert.strict = strict;
        cert.layers = layers;
        for (NodeIndex v = *hit; v != n; v = parent[v]) cert.path.push_back(v);
        for (std::size_t k = 0; k + 1 < cert.path.size(); ++k) {
          const NodeIndex a = cert.path[k], b = cert.path[k + 1];
          cert.edges.push_back({a, b, network.oriented_flow(dominant, a, b), network.oriented_flow(base, a, b)});
        }
        return cert;
      }
      std::vector<bool> in_layer(n, false);
      for (NodeIndex j : layer) in_layer[j] = true;
      std::vector<NodeIndex> next;
      for (NodeIndex i = 0; i < n; ++i) {
        if (in_a[i]) continue;
        for (const auto& inc : network.incident(i)) {
          if (!in_layer[inc.neighbor]) continue;
          const double star = network.oriented_flow(dominant, i, inc.neighbor);
          const double flow = network.oriented_flow(base, i, inc.neighbor);
          if (strict ? strictly_dominates(star, flow) : weakly_dominates(star, flow)) {
            parent[i] = inc.neighbor;
            next.push_back(i);
            break;
          }
        }
      }
      if (next.empty()) return std::nullopt;
      for (NodeIndex i : next) in_a[i] = true;
      layer = std::move(next);
      ++layers;
    }
  };

  const bool want_strict = base.q[u] - dominant.q[u] > options.strict_tol;
  if (want_strict) {
    if (auto cert = build(true)) return *cert;
  }
  if (auto cert = build(false)) return *cert;
  throw AquariusConstructionError("layering from node " + std::to_string(network.node(u).id) +
                                  " stalled before reaching the terminal set; flows agree below tolerance");
}

CertificateCheck verify_certificate(const Network& network, const FlowState& base,
                                    const FlowState& dominant, std::span<const NodeIndex> terminals,
                                    const AquariusCertificate& cert) {
  auto fail = [](std::string why) { return CertificateCheck{false, std::move(why)}; };
  if (cert.path.empty()) return fail("empty path");
  if (std::find(terminals.begin(), terminals.end(), cert.path.front()) == terminals.end()) {
    return fail("path does not start in the terminal set");
  }
  if (cert.path.back() != cert.target) return fail("path does not end at the target");
  if (std::set<NodeIndex>(cert.path.begin(), cert.path.end()).size() != cert.path.size()) {
    return fail("path intersects itself");
  }
  if (cert.edges.size() + 1 != cert.path.size()) return fail("edge list does not match path");
  for (std::size_t k = 0; k + 1 < cert.path.size(); ++k) {
    const NodeIndex a = cert.path[k], b = cert.path[k + 1];
    if (!network.find_edge(a, b)) return fail("consecutive path nodes are not adjacent");
    const double star = network.oriented_flow(dominant, a, b);
    const double flow = network.oriented_flow(base, a, b);
    if (cert.edges[k].from != a || cert.edges[k].to != b || cert.edges[k].dominant_flow != star ||
        cert.edges[k].base_flow != flow) {
      return fail("recorded edge flows differ from the states");
    }
    if (!weakly_dominates(star, flow)) return fail("edge " + std::to_string(k) + " is not dominated");
    if (cert.strict && !strictly_dominates(star, flow)) {
      return fail("edge " + std::to_string(k) + " is not strictly dominated");
    }
  }
  return {true, {}};
}

// ---- monotonicity --------------------------------------------------------

MonotonicityReport monotonicity_check(const Network& network, const BoundaryData& a,
                                      const BoundaryData& b, double tol, const SolverOptions& solver) {
  check_boundary(network, a);
  check_boundary(network, b);
  for (NodeIndex i = 0; i < network.node_count(); ++i) {
    const bool is_terminal = network.node(i).role == NodeRole::Terminal;
    if (!is_terminal && a.injection[i] < b.injection[i]) {
      throw std::invalid_argument("q^A >= q^B fails at node " + std::to_string(network.node(i).id));
    }
    if (is_terminal && a.terminal_potential[i] < b.terminal_potential[i]) {
      throw std::invalid_argument("pi^A_T >= pi^B_T fails at node " + std::to_string(network.node(i).id));
    }
  }
  auto setting = [](const BoundaryData& d, EdgeIndex e) -> std::optional<double> {
    return e < d.compression.size() ? d.compression[e] : std::nullopt;
  };
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    const double base = network.edge(e).law->compression();
    if (setting(a, e).value_or(base) != setting(b, e).value_or(base)) {
      throw std::invalid_argument("boundaries must share the dissipation functions");
    }
  }

  MonotonicityReport report;
  report.tol = tol;
  report.state_a = solve_steady_state(network, a, solver);
  report.state_b = solve_steady_state(network, b, solver);

  bool same_terminals = true;
  for (NodeIndex i = 0; i < network.node_count(); ++i) {
    if (network.node(i).role == NodeRole::Terminal) {
      same_terminals = same_terminals && a.terminal_potential[i] == b.terminal_potential[i];
    } else {
      const double m = report.state_a.pi[i] - report.state_b.pi[i];
      report.potential_margins.push_back({i, m});
      if (m < -tol) ++report.violations;
    }
  }
  if (same_terminals) {
    report.productions_checked = true;
    for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) {
      const double m = report.state_b.q[t] - report.state_a.q[t];
      report.production_margins.push_back({t, m});
      if (m < -tol) ++report.violations;
    }
  }
  return report;
}

// ---- random instances ----------------------------------------------------

namespace {

double draw(std::mt19937_64& rng, const Interval& iv) {
  if (!(iv.hi > iv.lo)) return iv.lo;
  return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
}

std::size_t draw_count(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, std::max(lo, hi))(rng);
}

}  // namespace

RandomInstance random_instance(const RandomNetworkConfig& config, std::mt19937_64& rng) {
  std::size_t n = draw_count(rng, std::max<std::size_t>(config.min_nodes, 3), std::max<std::size_t>(config.max_nodes, 3));
  const std::size_t cap_s = config.max_sources ? config.max_sources : std::max<std::size_t>(1, n / 5);
  const std::size_t cap_t = config.max_terminals ? config.max_terminals : std::max<std::size_t>(1, n / 5);
  const std::size_t n_s = draw_count(rng, 1, cap_s);
  const std::size_t n_t = draw_count(rng, 1, cap_t);
  std::size_t n_r;
  if (config.max_internal) {
    n_r = draw_count(rng, 1, config.max_internal);
    n = n_s + n_t + n_r;
  } else {
    n = std::max(n, n_s + n_t + 1);
    n_r = n - n_s - n_t;
  }

  std::vector<NodeRole> roles;
  roles.insert(roles.end(), n_s, NodeRole::Source);
  roles.insert(roles.end(), n_t, NodeRole::Terminal);
  roles.insert(roles.end(), n_r, NodeRole::Internal);
  std::shuffle(roles.begin(), roles.end(), rng);

  std::vector<Node> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    nodes.push_back({static_cast<std::int64_t>(i + 1), roles[i], {-1e300, 1e300}});
  }

  auto make_law = [&]() -> LawPtr {
    const double c = draw(rng, config.resistance);
    if (config.compression.hi > config.compression.lo || config.compression.lo != 0.0) {
      const double b = draw(rng, config.compression);
      return std::make_shared<GasPipe>(c, b, GasPipe::Compressor{config.compression, std::nullopt});
    }
    return std::make_shared<GasPipe>(c);
  };

  std::vector<NodeIndex> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<std::pair<NodeIndex, NodeIndex>> used;
  std::vector<EdgeSpec> edges;
  auto add_edge = [&](NodeIndex a, NodeIndex b) {
    if (a == b || !used.insert({std::min(a, b), std::max(a, b)}).second) return false;
    if (std::bernoulli_distribution(0.5)(rng)) std::swap(a, b);
    edges.push_back({a, b, make_law()});
    return true;
  };
  for (std::size_t k = 1; k < n; ++k) add_edge(order[k], order[draw_count(rng, 0, k - 1)]);
  const auto extra = static_cast<std::size_t>(std::lround(config.extra_edge_density * static_cast<double>(n)));
  for (std::size_t added = 0, tries = 0; added < extra && tries < 20 * extra + 20; ++tries) {
    if (add_edge(draw_count(rng, 0, n - 1), draw_count(rng, 0, n - 1))) ++added;
  }

  Network network(std::move(nodes), std::move(edges));
  ScenarioBox box{std::vector<Interval>(n)};
  OperatingPoint op{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                    std::vector<std::optional<double>>(network.edge_count())};
  CostModel cost = CostModel::zeros(network);
  for (NodeIndex i = 0; i < n; ++i) {
    switch (network.node(i).role) {
      case NodeRole::Source:
        op.source_injection[i] = draw(rng, config.source_injection);
        cost.source_cost[i] = CostFunction::affine(draw(rng, {0.5, 1.5}));
        break;
      case NodeRole::Terminal:
        op.terminal_potential[i] = draw(rng, config.terminal_potential);
        cost.terminal_revenue[i] = CostFunction::affine(draw(rng, {1.0, 3.0}));
        break;
      case NodeRole::Internal: {
        const double lo = draw(rng, config.internal_lower);
        box.bounds[i] = {lo, lo + draw(rng, config.internal_width)};
        break;
      }
    }
  }
  return {std::move(network), std::move(box), std::move(op), std::move(cost)};
}

std::vector<double> random_scenario(const Network& network, const ScenarioBox& box, std::mt19937_64& rng) {
  std::vector<double> q(network.node_count(), 0.0);
  for (NodeIndex i : network.nodes_with_role(NodeRole::Internal)) q[i] = draw(rng, box.bounds[i]);
  return q;
}

}  // namespace dissflow
