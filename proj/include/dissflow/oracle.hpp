#pragma once

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dissflow/network.hpp"
#include "dissflow/robust.hpp"
#include "dissflow/steady_solver.hpp"

namespace dissflow {

// ---- brute-force scenario sweep ------------------------------------------

struct SweepOptions {
  std::size_t budget = 100000;  // maximum number of grid solves
  std::size_t workers = 0;
  SolverOptions solver;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepRow {
  std::vector<double> internal_q;  // one entry per internal node, in node order
  bool solved = false;
  bool feasible = false;
  double cost = 0.0;
  double revenue = 0.0;  // sum_T h_i(q_i)
  std::vector<double> pi;
  std::vector<double> q;
  bool lower_corner = false;
  bool upper_corner = false;
  std::string error;
};

struct SweepResult {
  std::vector<NodeIndex> internal;      // sweep dimensions
  std::vector<std::size_t> resolution;  // per dimension
  std::vector<SweepRow> rows;
  std::size_t lower_corner_row = 0;
  std::size_t upper_corner_row = 0;
  /// Per node, over solved rows. Ties resolve to the first row.
  std::vector<std::size_t> argmax_pi;
  std::vector<std::size_t> argmin_pi;
  std::optional<std::size_t> argmin_revenue;
  std::size_t failures = 0;

  bool all_feasible() const;
};

/// Solves every point of a tensor grid over the scenario box (corners
/// included exactly) and locates per-node potential extrema. `resolution`
/// holds one count per internal node, or a single count for all of them.
/// Throws BudgetExceeded or std::invalid_argument (resolution < 2).
SweepResult scenario_sweep(const Network& network, const ScenarioBox& box, const OperatingPoint& op,
                           const CostModel& cost, std::span<const std::size_t> resolution,
                           const SweepOptions& options = {});

// ---- Aquarius paths ------------------------------------------------------

struct PathEdge {
  NodeIndex from = 0;
  NodeIndex to = 0;
  double dominant_flow = 0.0;  // phi* along from -> to
  double base_flow = 0.0;      // phi along from -> to
};

struct AquariusCertificate {
  NodeIndex target = 0;
  std::vector<NodeIndex> path;  // starts in the terminal set, ends at target
  std::vector<PathEdge> edges;
  bool strict = false;
  std::size_t layers = 0;
};

class AquariusPreconditionError : public std::invalid_argument {
 public:
  AquariusPreconditionError(const std::string& what, std::optional<NodeIndex> node)
      : std::invalid_argument(what), node_(node) {}
  std::optional<NodeIndex> node() const { return node_; }

 private:
  std::optional<NodeIndex> node_;
};

class AquariusConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AquariusOptions {
  /// Flow conservation residual allowed in either state.
  double conservation_tol = 1e-6;
  /// Slack on q_i >= q*_i.
  double production_tol = 1e-9;
  /// q_u - q*_u above this requests a strict certificate.
  double strict_tol = 1e-9;
};

/// True when phi* - phi exceeds the strictness threshold
/// 1e-10 * max(1, |phi*|, |phi|).
bool strictly_dominates(double dominant, double base);
/// True when phi* >= phi up to the same threshold.
bool weakly_dominates(double dominant, double base);

/// Layered construction of a non-intersecting path from `terminals` to `u`
/// along which `dominant` (phi*, q*) carries at least the flow of `base`
/// (phi, q), where q >= q* off the terminal set. Layers grow from u through
/// edges with phi*_{ij} > phi_{ij} (>= when q_u = q*_u), scanning neighbors
/// in ascending index order. A strict attempt that stalls numerically falls
/// back to the non-strict layering and clears the strict flag.
AquariusCertificate aquarius_path(const Network& network, const FlowState& base,
                                  const FlowState& dominant, std::span<const NodeIndex> terminals,
                                  NodeIndex u, const AquariusOptions& options = {});

struct CertificateCheck {
  bool ok = false;
  std::string reason;
};

/// Re-inspects a certificate against the two states directly.
CertificateCheck verify_certificate(const Network& network, const FlowState& base,
                                    const FlowState& dominant, std::span<const NodeIndex> terminals,
                                    const AquariusCertificate& certificate);

// ---- monotonicity --------------------------------------------------------

struct MonotonicityMargin {
  NodeIndex node = 0;
  double margin = 0.0;  // >= -tol when the property holds
};

struct MonotonicityReport {
  std::vector<MonotonicityMargin> potential_margins;   // pi^A_u - pi^B_u on V \ T
  std::vector<MonotonicityMargin> production_margins;  // q^B_t - q^A_t on T, equal pi_T only
  bool productions_checked = false;
  std::size_t violations = 0;
  double tol = 0.0;
  FlowState state_a;
  FlowState state_b;

  bool ok() const { return violations == 0; }
};

/// Solves both boundaries and checks pi^A >= pi^B - tol off the terminals
/// and, when terminal potentials coincide, q^A_T <= q^B_T + tol. Requires
/// q^A >= q^B on V \ T, pi^A_T >= pi^B_T and equal compression settings;
/// throws std::invalid_argument otherwise and NonConvergence on solver
/// failure.
MonotonicityReport monotonicity_check(const Network& network, const BoundaryData& a,
                                      const BoundaryData& b, double tol,
                                      const SolverOptions& solver = {});

// ---- random instances ----------------------------------------------------

struct RandomNetworkConfig {
  std::size_t min_nodes = 5;
  std::size_t max_nodes = 50;
  /// Extra non-tree edges as a fraction of the node count.
  double extra_edge_density = 0.3;
  Interval resistance{0.5, 2.0};
  /// Compression offsets; a non-degenerate range installs a compressor on
  /// every pipe with a setting drawn from the range.
  Interval compression{0.0, 0.0};
  std::size_t max_sources = 0;    // 0 selects max(1, n / 5)
  std::size_t max_terminals = 0;  // 0 selects max(1, n / 5)
  std::size_t max_internal = 0;   // 0 leaves the remaining nodes internal
  Interval source_injection{0.5, 2.0};
  Interval internal_lower{-1.0, -0.2};
  Interval internal_width{0.0, 0.5};
  Interval terminal_potential{1.0, 3.0};
};

struct RandomInstance {
  Network network;
  ScenarioBox box;
  OperatingPoint op;
  CostModel cost;
};

/// Connected random tree plus extra edges; roles, laws and boundary data are
/// drawn from `config`. Potential bounds are left unbounded.
RandomInstance random_instance(const RandomNetworkConfig& config, std::mt19937_64& rng);

/// Uniform point of the scenario box, indexed by node.
std::vector<double> random_scenario(const Network& network, const ScenarioBox& box, std::mt19937_64& rng);

}  // namespace dissflow
