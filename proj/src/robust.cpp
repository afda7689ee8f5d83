#include "dissflow/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dissflow/parallel.hpp"

namespace dissflow {

// ---- costs ---------------------------------------------------------------

CostFunction CostFunction::affine(double slope, double offset) {
  if (!std::isfinite(slope) || !std::isfinite(offset)) {
    throw std::invalid_argument("affine cost coefficients must be finite");
  }
  CostFunction f;
  f.slope_ = slope;
  f.offset_ = offset;
  return f;
}

CostFunction CostFunction::tabulated(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("cost table needs at least two points");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k].first) || !std::isfinite(points[k].second)) {
      throw std::invalid_argument("cost table entries must be finite");
    }
    if (k > 0 && !(points[k].first > points[k - 1].first)) {
      throw std::invalid_argument("cost table abscissae must be strictly increasing");
    }
  }
  CostFunction f;
  f.table_ = std::move(points);
  return f;
}

double CostFunction::operator()(double q) const {
  if (table_.empty()) return slope_ * q + offset_;
  // Segment containing q, or the end segment for extrapolation.
  std::size_t k = 1;
  while (k + 1 < table_.size() && q > table_[k].first) ++k;
  const auto& [x0, y0] = table_[k - 1];
  const auto& [x1, y1] = table_[k];
  return y0 + (y1 - y0) * (q - x0) / (x1 - x0);
}

bool CostFunction::non_decreasing() const {
  if (table_.empty()) return slope_ >= 0.0;
  for (std::size_t k = 1; k < table_.size(); ++k) {
    if (table_[k].second < table_[k - 1].second) return false;
  }
  return true;
}

CostModel CostModel::zeros(const Network& network) {
  return {std::vector<CostFunction>(network.node_count()),
          std::vector<CostFunction>(network.node_count())};
}

double CostModel::evaluate(const Network& network, std::span<const double> q) const {
  double c = 0.0;
  for (NodeIndex i = 0; i < network.node_count(); ++i) {
    switch (network.node(i).role) {
      case NodeRole::Source: c += source_cost[i](q[i]); break;
      case NodeRole::Terminal: c -= terminal_revenue[i](q[i]); break;
      case NodeRole::Internal: break;
    }
  }
  return c;
}

double CostModel::revenue(const Network& network, std::span<const double> q) const {
  double r = 0.0;
  for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) r += terminal_revenue[t](q[t]);
  return r;
}

void check_cost(const Network& network, const CostModel& cost) {
  if (cost.source_cost.size() != network.node_count() ||
      cost.terminal_revenue.size() != network.node_count()) {
    throw DimensionMismatch("cost model must be indexed by node");
  }
  for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) {
    if (!cost.terminal_revenue[t].non_decreasing()) {
      throw std::invalid_argument("terminal revenue at node " + std::to_string(network.node(t).id) +
                                  " is not non-decreasing");
    }
  }
}

// ---- scenarios and operating points --------------------------------------

std::vector<double> ScenarioBox::lower_corner() const {
  std::vector<double> out;
  out.reserve(bounds.size());
  for (const auto& b : bounds) out.push_back(b.lo);
  return out;
}

std::vector<double> ScenarioBox::upper_corner() const {
  std::vector<double> out;
  out.reserve(bounds.size());
  for (const auto& b : bounds) out.push_back(b.hi);
  return out;
}

void check_box(const Network& network, const ScenarioBox& box) {
  if (box.bounds.size() != network.node_count()) throw DimensionMismatch("scenario box must be indexed by node");
  for (NodeIndex i : network.nodes_with_role(NodeRole::Internal)) {
    const auto& b = box.bounds[i];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
      throw std::invalid_argument("scenario interval at node " + std::to_string(network.node(i).id) +
                                  " must be finite with q_lo <= q_hi");
    }
  }
}

BoundaryData make_boundary(const Network& network, const OperatingPoint& op,
                           std::span<const double> internal_q) {
  if (op.source_injection.size() != network.node_count() ||
      op.terminal_potential.size() != network.node_count() || internal_q.size() != network.node_count()) {
    throw DimensionMismatch("operating point and scenario must be indexed by node");
  }
  BoundaryData b = BoundaryData::zeros(network);
  for (NodeIndex i = 0; i < network.node_count(); ++i) {
    switch (network.node(i).role) {
      case NodeRole::Source: b.injection[i] = op.source_injection[i]; break;
      case NodeRole::Internal: b.injection[i] = internal_q[i]; break;
      case NodeRole::Terminal: b.terminal_potential[i] = op.terminal_potential[i]; break;
    }
  }
  b.compression = op.compression;
  return b;
}

std::string_view to_string(BoundSide side) { return side == BoundSide::Lower ? "lower" : "upper"; }

std::string_view to_string(Corner corner) {
  switch (corner) {
    case Corner::Lower: return "lower";
    case Corner::Upper: return "upper";
    case Corner::Fixed: return "fixed";
  }
  return "?";
}

std::string_view to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::Feasible: return "feasible";
    case VerdictStatus::Infeasible: return "infeasible";
    case VerdictStatus::Indeterminate: return "indeterminate";
  }
  return "?";
}

double RobustVerdict::total_violation() const {
  double s = 0.0;
  for (const auto& v : violations) s += v.margin;
  return s;
}

namespace {

void check_terminals(const Network& network, const OperatingPoint& op, std::vector<Violation>& out) {
  for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) {
    const auto& b = network.node(t).potential_bounds;
    const double pi = op.terminal_potential[t];
    if (pi < b.lo) out.push_back({t, BoundSide::Lower, Corner::Fixed, b.lo - pi});
    if (pi > b.hi) out.push_back({t, BoundSide::Upper, Corner::Fixed, pi - b.hi});
  }
}

}  // namespace

RobustVerdict robust_feasibility(const Network& network, const ScenarioBox& box,
                                 const OperatingPoint& op, const CostModel& cost,
                                 const SolverOptions& solver) {
  check_box(network, box);
  check_cost(network, cost);
  const std::vector<double> corners[2] = {box.lower_corner(), box.upper_corner()};
  std::optional<FlowState> states[2];
  std::string errors[2];
  parallel_for(2, 2, [&](std::size_t k) {
    try {
      states[k] = solve_steady_state(network, make_boundary(network, op, corners[k]), solver);
    } catch (const NonConvergence& e) {
      errors[k] = e.what();
    }
  });

  RobustVerdict verdict;
  if (!states[0] || !states[1]) {
    verdict.status = VerdictStatus::Indeterminate;
    verdict.diagnostic = !states[0] ? "lower corner: " + errors[0] : "upper corner: " + errors[1];
    verdict.lower_state = std::move(states[0]);
    verdict.upper_state = std::move(states[1]);
    return verdict;
  }

  check_terminals(network, op, verdict.violations);
  double margin = std::numeric_limits<double>::infinity();
  for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) {
    const auto& b = network.node(t).potential_bounds;
    margin = std::min({margin, op.terminal_potential[t] - b.lo, b.hi - op.terminal_potential[t]});
  }
  for (NodeIndex i : network.free_nodes()) {
    const auto& b = network.node(i).potential_bounds;
    const double low = states[0]->pi[i];
    const double high = states[1]->pi[i];
    margin = std::min({margin, low - b.lo, b.hi - high});
    if (low < b.lo) verdict.violations.push_back({i, BoundSide::Lower, Corner::Lower, b.lo - low});
    if (high > b.hi) verdict.violations.push_back({i, BoundSide::Upper, Corner::Upper, high - b.hi});
  }
  verdict.worst_cost = cost.evaluate(network, states[1]->q);
  verdict.margin = margin;
  verdict.status = verdict.violations.empty() ? VerdictStatus::Feasible : VerdictStatus::Infeasible;
  verdict.lower_state = std::move(states[0]);
  verdict.upper_state = std::move(states[1]);
  return verdict;
}

DeterministicResult deterministic_solve(const Network& network, std::span<const double> internal_q,
                                        const OperatingPoint& op, const CostModel& cost,
                                        const SolverOptions& solver) {
  check_cost(network, cost);
  DeterministicResult r;
  r.state = solve_steady_state(network, make_boundary(network, op, internal_q), solver);
  r.cost = cost.evaluate(network, r.state.q);
  for (NodeIndex i = 0; i < network.node_count(); ++i) {
    const auto& b = network.node(i).potential_bounds;
    const double pi = r.state.pi[i];
    if (pi < b.lo) r.violations.push_back({i, BoundSide::Lower, Corner::Fixed, b.lo - pi});
    if (pi > b.hi) r.violations.push_back({i, BoundSide::Upper, Corner::Fixed, pi - b.hi});
  }
  r.feasible = r.violations.empty();
  return r;
}

// ---- outer optimization --------------------------------------------------

void check_search(const Network& network, const SearchConfig& config) {
  if (config.source_box.size() != network.node_count() ||
      (!config.terminal_box.empty() && config.terminal_box.size() != network.node_count())) {
    throw DimensionMismatch("search boxes must be indexed by node");
  }
  for (NodeIndex s : network.nodes_with_role(NodeRole::Source)) {
    const auto& b = config.source_box[s];
    if (!b || !std::isfinite(b->lo) || !std::isfinite(b->hi) || b->lo > b->hi) {
      throw std::invalid_argument("source " + std::to_string(network.node(s).id) +
                                  " needs a finite search box");
    }
  }
  if (config.sweeps < 0 || !(config.shrink > 0.0 && config.shrink < 1.0) ||
      !(config.initial_step_fraction > 0.0) || config.max_evaluations < 1) {
    throw std::invalid_argument("invalid pattern search settings");
  }
}

namespace {

enum class VarKind { Source, Terminal, Compression };

struct Variable {
  VarKind kind;
  std::size_t index;
  Interval box;
};

double& coordinate(OperatingPoint& p, const Variable& v) {
  switch (v.kind) {
    case VarKind::Source: return p.source_injection[v.index];
    case VarKind::Terminal: return p.terminal_potential[v.index];
    case VarKind::Compression: return *p.compression[v.index];
  }
  throw std::logic_error("unknown variable kind");
}

struct Evaluated {
  OperatingPoint point;
  RobustVerdict verdict;
};

// Strictly better in the lexicographic (feasibility, violation, cost) order.
// Feasible points of equal cost are ranked by their bound margin, so the
// search can move along a cost plateau away from the feasibility boundary.
bool better(const RobustVerdict& a, const RobustVerdict& b) {
  if (a.status == VerdictStatus::Indeterminate) return false;
  if (b.status == VerdictStatus::Indeterminate) return true;
  if (a.feasible() != b.feasible()) return a.feasible();
  if (a.feasible()) {
    const double tie = 1e-12 * (1.0 + std::abs(b.worst_cost));
    if (a.worst_cost < b.worst_cost - tie) return true;
    return a.worst_cost <= b.worst_cost + tie && a.margin > b.margin + 1e-12 * (1.0 + std::abs(b.margin));
  }
  const double va = a.total_violation(), vb = b.total_violation();
  if (va < vb - 1e-14 * (1.0 + vb)) return true;
  return va <= vb && a.worst_cost < b.worst_cost - 1e-12 * (1.0 + std::abs(b.worst_cost));
}

}  // namespace

OptimizationResult optimize_operating_point(const Network& network, const ScenarioBox& box,
                                            const CostModel& cost, const OperatingPoint& seed,
                                            const SearchConfig& config) {
  check_search(network, config);
  check_box(network, box);
  check_cost(network, cost);

  OperatingPoint x = seed;
  if (x.compression.empty()) x.compression.assign(network.edge_count(), std::nullopt);
  if (x.compression.size() != network.edge_count()) throw DimensionMismatch("compression must be indexed by edge");

  std::vector<Variable> vars;
  for (NodeIndex s : network.nodes_with_role(NodeRole::Source)) {
    vars.push_back({VarKind::Source, s, *config.source_box[s]});
  }
  for (NodeIndex t : network.nodes_with_role(NodeRole::Terminal)) {
    if (config.terminal_box.empty() || !config.terminal_box[t]) continue;
    const auto& bound = network.node(t).potential_bounds;
    Interval b{std::max(config.terminal_box[t]->lo, bound.lo), std::min(config.terminal_box[t]->hi, bound.hi)};
    if (b.lo > b.hi) throw std::invalid_argument("terminal search box misses the potential bounds");
    vars.push_back({VarKind::Terminal, t, b});
  }
  if (config.search_compression) {
    for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
      if (auto range = network.edge(e).law->compression_range()) {
        if (!x.compression[e]) x.compression[e] = network.edge(e).law->compression();
        vars.push_back({VarKind::Compression, e, *range});
      }
    }
  }
  for (const auto& v : vars) coordinate(x, v) = v.box.clamp(coordinate(x, v));
  std::erase_if(vars, [](const Variable& v) { return !(v.box.width() > 0.0); });

  std::vector<std::size_t> order(vars.size());
  std::iota(order.begin(), order.end(), 0);
  if (config.seed != 0) {
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<double> step(vars.size());
  for (std::size_t k = 0; k < vars.size(); ++k) step[k] = config.initial_step_fraction * vars[k].box.width();

  OptimizationResult result;
  auto record = [&](const Evaluated& ev, bool accepted, int sweep) {
    result.trace.push_back({ev.point, ev.verdict.status, ev.verdict.worst_cost,
                            ev.verdict.total_violation(), accepted, sweep});
  };
  auto solve = [&](const OperatingPoint& p) {
    ++result.evaluations;
    return Evaluated{p, robust_feasibility(network, box, p, cost, config.solver)};
  };

  Evaluated current = solve(x);
  record(current, true, 0);

  for (int sweep = 1; sweep <= config.sweeps; ++sweep) {
    bool improved = false;
    for (std::size_t k : order) {
      if (result.evaluations >= config.max_evaluations) break;
      const Variable& v = vars[k];
      const double here = coordinate(current.point, v);
      std::vector<OperatingPoint> candidates;
      std::vector<double> directions;
      for (double dir : {+1.0, -1.0}) {
        OperatingPoint p = current.point;
        double& c = coordinate(p, v);
        c = v.box.clamp(here + dir * step[k]);
        if (c != here) {
          candidates.push_back(std::move(p));
          directions.push_back(dir);
        }
      }
      std::vector<std::optional<Evaluated>> evaluated(candidates.size());
      parallel_for(candidates.size(), config.workers,
                   [&](std::size_t j) { evaluated[j] = Evaluated{candidates[j], robust_feasibility(network, box, candidates[j], cost, config.solver)}; });
      result.evaluations += static_cast<int>(candidates.size());

      std::optional<std::size_t> pick;
      for (std::size_t j = 0; j < evaluated.size(); ++j) {
        const RobustVerdict& incumbent = pick ? evaluated[*pick]->verdict : current.verdict;
        if (better(evaluated[j]->verdict, incumbent)) pick = j;
      }
      for (std::size_t j = 0; j < evaluated.size(); ++j) record(*evaluated[j], pick && *pick == j, sweep);
      if (!pick) continue;

      improved = true;
      current = std::move(*evaluated[*pick]);
      const double dir = directions[*pick];
      // Keep moving while the direction pays off.
      for (int ext = 0; ext < config.max_extensions && result.evaluations < config.max_evaluations; ++ext) {
        OperatingPoint p = current.point;
        double& c = coordinate(p, v);
        const double before = c;
        c = v.box.clamp(before + dir * step[k]);
        if (c == before) break;
        Evaluated next = solve(p);
        const bool take = better(next.verdict, current.verdict);
        record(next, take, sweep);
        if (!take) break;
        current = std::move(next);
      }
    }
    if (result.evaluations >= config.max_evaluations) break;
    if (!improved) {
      bool all_small = true;
      for (std::size_t k = 0; k < vars.size(); ++k) {
        step[k] *= config.shrink;
        if (step[k] >= config.min_step_fraction * vars[k].box.width()) all_small = false;
      }
      if (all_small) break;
    }
  }

  result.point = current.point;
  result.verdict = current.verdict;
  result.status = current.verdict.feasible() ? OptimizationStatus::Feasible : OptimizationStatus::NoFeasiblePoint;
  return result;
}

}  // namespace dissflow
