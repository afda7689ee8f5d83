#include "dissflow/steady_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace dissflow {

namespace {

constexpr std::size_t kNotFree = std::numeric_limits<std::size_t>::max();

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Precomputed view of one instance: laws, free-node numbering, full
/// potential vector with terminals fixed.
struct Instance {
  const Network& network;
  const BoundaryData& boundary;
  std::vector<LawPtr> laws;
  std::vector<NodeIndex> free;
  std::vector<std::size_t> slot;  // node -> position in `free`
  std::vector<double> pi;         // full potentials; free entries overwritten

  Instance(const Network& net, const BoundaryData& b)
      : network(net), boundary(b), laws(resolve_laws(net, b)), free(net.free_nodes()),
        slot(net.node_count(), kNotFree), pi(net.node_count(), 0.0) {
    for (std::size_t k = 0; k < free.size(); ++k) slot[free[k]] = k;
    for (NodeIndex i = 0; i < net.node_count(); ++i) {
      if (slot[i] == kNotFree) pi[i] = b.terminal_potential[i];
    }
  }

  void load(std::span<const double> x) {
    for (std::size_t k = 0; k < free.size(); ++k) pi[free[k]] = x[k];
  }

  EnergyValue evaluate(std::span<const double> x) {
    load(x);
    EnergyValue ev;
    ev.gradient.assign(free.size(), 0.0);
    double value = 0.0;
    for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
      const Edge& edge = network.edge(e);
      const double delta = pi[edge.tail] - pi[edge.head];
      value += laws[e]->primitive(delta);
      const double phi = laws[e]->inverse(delta);
      if (slot[edge.tail] != kNotFree) ev.gradient[slot[edge.tail]] += phi;
      if (slot[edge.head] != kNotFree) ev.gradient[slot[edge.head]] -= phi;
    }
    for (std::size_t k = 0; k < free.size(); ++k) {
      const double q = boundary.injection[free[k]];
      value -= x[k] * q;
      ev.gradient[k] -= q;
    }
    ev.value = value;
    return ev;
  }

  Eigen::MatrixXd hessian(std::span<const double> x, double cap) {
    load(x);
    const auto n = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
      const Edge& edge = network.edge(e);
      const double w = laws[e]->inverse_derivative(pi[edge.tail] - pi[edge.head], cap);
      const std::size_t a = slot[edge.tail];
      const std::size_t b = slot[edge.head];
      if (a != kNotFree) h(a, a) += w;
      if (b != kNotFree) h(b, b) += w;
      if (a != kNotFree && b != kNotFree) {
        h(a, b) -= w;
        h(b, a) -= w;
      }
    }
    return h;
  }
};

}  // namespace

BoundaryData BoundaryData::zeros(const Network& network) {
  return {std::vector<double>(network.node_count(), 0.0),
          std::vector<double>(network.node_count(), 0.0), {}};
}

void check_boundary(const Network& network, const BoundaryData& b) {
  if (b.injection.size() != network.node_count() ||
      b.terminal_potential.size() != network.node_count()) {
    throw DimensionMismatch("boundary data must be indexed by node");
  }
  if (!b.compression.empty() && b.compression.size() != network.edge_count()) {
    throw DimensionMismatch("compression settings must be indexed by edge");
  }
  for (NodeIndex i = 0; i < network.node_count(); ++i) {
    const double v = network.node(i).role == NodeRole::Terminal ? b.terminal_potential[i]
                                                                : b.injection[i];
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite boundary value at node " +
                                  std::to_string(network.node(i).id));
    }
  }
}

std::vector<LawPtr> resolve_laws(const Network& network, const BoundaryData& boundary) {
  std::vector<LawPtr> laws;
  laws.reserve(network.edge_count());
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    const LawPtr& base = network.edge(e).law;
    if (e < boundary.compression.size() && boundary.compression[e]) {
      if (*boundary.compression[e] == base->compression()) {
        laws.push_back(base);
      } else {
        laws.push_back(base->with_compression(*boundary.compression[e]));
      }
    } else {
      laws.push_back(base);
    }
  }
  return laws;
}

EnergyValue energy(const Network& network, const BoundaryData& boundary,
                   std::span<const double> free_potentials) {
  check_boundary(network, boundary);
  Instance inst(network, boundary);
  if (free_potentials.size() != inst.free.size()) {
    throw DimensionMismatch("free potentials must cover exactly S and R");
  }
  return inst.evaluate(free_potentials);
}

double default_tolerance(const Network& network, const BoundaryData& boundary) {
  double qmax = 0.0;
  for (NodeIndex i = 0; i < network.node_count(); ++i) {
    if (network.node(i).role != NodeRole::Terminal) qmax = std::max(qmax, std::abs(boundary.injection[i]));
  }
  return 1e-9 * std::max(1.0, qmax);
}

FlowState solve_steady_state(const Network& network, const BoundaryData& boundary,
                             const SolverOptions& options, SolveStats* stats) {
  auto report = validate(network);
  // The energy minimization is well posed without internal nodes.
  std::erase_if(report.issues, [](const ValidationIssue& i) { return i.code == "empty internal set"; });
  if (!report.ok()) throw InvalidNetwork(std::move(report));
  check_boundary(network, boundary);

  Instance inst(network, boundary);
  const std::size_t n = inst.free.size();
  const double tol = options.tol > 0.0 ? options.tol : default_tolerance(network, boundary);

  std::vector<double> x(n);
  if (options.initial_potentials) {
    if (options.initial_potentials->size() != n) {
      throw DimensionMismatch("initial potentials must cover exactly S and R");
    }
    x = *options.initial_potentials;
  } else {
    double sum = 0.0;
    std::size_t count = 0;
    for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) {
      sum += boundary.terminal_potential[t];
      ++count;
    }
    std::fill(x.begin(), x.end(), sum / static_cast<double>(count));
  }

  SolveStats local;
  local.tol = tol;
  EnergyValue current = inst.evaluate(x);
  double gnorm = max_abs(current.gradient);
  std::vector<double> trial(n);

  while (gnorm > tol) {
    if (local.iterations >= options.max_iterations) {
      throw NonConvergence("steady-state solve hit the iteration limit (gradient " +
                               std::to_string(gnorm) + ")",
                           gnorm, local.iterations);
    }
    ++local.iterations;

    Eigen::Map<const Eigen::VectorXd> g(current.gradient.data(), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd h = inst.hessian(x, options.derivative_cap);
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    Eigen::VectorXd dir;
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(-g);
    }
    if (llt.info() != Eigen::Success || !dir.allFinite()) {
      // Scaled steepest descent.
      const double scale = std::max(h.diagonal().maxCoeff(), 1.0);
      dir = -g / scale;
      ++local.fallback_steps;
    }
    const double slope = g.dot(dir);

    // Along the search line the energy is convex, so its slope is
    // non-decreasing. Steps are accepted once the slope has shrunk by
    // `curvature`; a step past the kink of a law that overshoots to the
    // mirror point is rejected by this test even when it lowers the energy.
    const double target = options.curvature * std::abs(slope);
    const double noise = 1e-12 * (1.0 + std::abs(current.value));
    double lo = 0.0, slope_lo = slope;
    std::optional<double> hi;
    double slope_hi = 0.0;
    double step = 1.0;
    bool accepted = false;
    std::optional<std::pair<double, EnergyValue>> fallback;
    for (int k = 0; k <= options.max_backtracks; ++k) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * dir[static_cast<Eigen::Index>(i)];
      EnergyValue next = inst.evaluate(trial);
      double s_next = 0.0;
      for (std::size_t i = 0; i < n; ++i) s_next += next.gradient[i] * dir[static_cast<Eigen::Index>(i)];
      const bool finite = std::isfinite(next.value) && std::isfinite(s_next);
      const bool decrease = finite && next.value <= current.value + options.armijo * step * slope + noise;
      if (finite && decrease && std::abs(s_next) <= target) {
        x.swap(trial);
        current = std::move(next);
        accepted = true;
        break;
      }
      if (finite && decrease && s_next < 0.0) {
        if (!hi) {
          x.swap(trial);
          current = std::move(next);
          accepted = true;
          break;
        }
        lo = step;
        slope_lo = s_next;
        fallback.emplace(step, std::move(next));
      } else {
        hi = step;
        slope_hi = finite ? s_next : std::numeric_limits<double>::infinity();
      }
      // Safeguarded secant on the slope inside [lo, hi].
      const double width = *hi - lo;
      double t = std::isfinite(slope_hi) ? lo - slope_lo * width / (slope_hi - slope_lo) : lo + 0.5 * width;
      if (!(t > lo + 0.1 * width && t < *hi - 0.1 * width)) t = lo + 0.5 * width;
      step = t;
    }
    if (!accepted && fallback) {
      for (std::size_t i = 0; i < n; ++i) x[i] += fallback->first * dir[static_cast<Eigen::Index>(i)];
      current = std::move(fallback->second);
      accepted = true;
    }
    if (accepted) gnorm = max_abs(current.gradient);
    if (!accepted) {
      throw NonConvergence("line search failed (gradient " + std::to_string(gnorm) + ")", gnorm,
                           local.iterations);
    }
  }
  local.gradient_norm = gnorm;
  if (stats) *stats = local;

  inst.load(x);
  FlowState state;
  state.pi = inst.pi;
  state.phi.resize(network.edge_count());
  state.q.assign(network.node_count(), 0.0);
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    const Edge& edge = network.edge(e);
    const double phi = inst.laws[e]->inverse(state.pi[edge.tail] - state.pi[edge.head]);
    state.phi[e] = phi;
    if (network.node(edge.tail).role == NodeRole::Terminal) state.q[edge.tail] += phi;
    if (network.node(edge.head).role == NodeRole::Terminal) state.q[edge.head] -= phi;
  }
  for (NodeIndex i : inst.free) state.q[i] = boundary.injection[i];
  return state;
}

FlowState solve_steady_state(const Network& network, const BoundaryData& boundary, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  SolverOptions options;
  options.tol = tol;
  return solve_steady_state(network, boundary, options);
}

std::vector<double> potentials_map(const Network& network, const BoundaryData& boundary,
                                   const SolverOptions& options) {
  const FlowState state = solve_steady_state(network, boundary, options);
  std::vector<double> out;
  for (NodeIndex i : network.free_nodes()) out.push_back(state.pi[i]);
  return out;
}

std::vector<double> productions_map(const Network& network, const BoundaryData& boundary,
                                    const SolverOptions& options) {
  const FlowState state = solve_steady_state(network, boundary, options);
  std::vector<double> out;
  for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) out.push_back(state.q[t]);
  return out;
}

}  // namespace dissflow
