#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dissflow/network.hpp"
#include "dissflow/steady_solver.hpp"

namespace dissflow {

/// Scalar cost or revenue of a nodal production: affine, or piecewise linear
/// through a table with linear extrapolation beyond its ends.
class CostFunction {
 public:
  CostFunction() = default;
  static CostFunction affine(double slope, double offset = 0.0);
  /// Throws std::invalid_argument unless there are >= 2 points with strictly
  /// increasing abscissae.
  static CostFunction tabulated(std::vector<std::pair<double, double>> points);

  double operator()(double q) const;
  bool non_decreasing() const;

  bool is_table() const { return !table_.empty(); }
  double slope() const { return slope_; }
  double offset() const { return offset_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

  bool operator==(const CostFunction&) const = default;

 private:
  double slope_ = 0.0;
  double offset_ = 0.0;
  std::vector<std::pair<double, double>> table_;
};

/// c(q_S, q_T) = sum_S g_i(q_i) - sum_T h_i(q_i). Both vectors are indexed by
/// node; g is read on sources, h on terminals.
struct CostModel {
  std::vector<CostFunction> source_cost;
  std::vector<CostFunction> terminal_revenue;

  static CostModel zeros(const Network& network);

  double evaluate(const Network& network, std::span<const double> q) const;
  double revenue(const Network& network, std::span<const double> q) const;
};

/// Throws std::invalid_argument when dimensions are wrong or a terminal
/// revenue is not non-decreasing.
void check_cost(const Network& network, const CostModel& cost);

/// Box of internal-node productions, indexed by node and read on R.
struct ScenarioBox {
  std::vector<Interval> bounds;

  std::vector<double> lower_corner() const;
  std::vector<double> upper_corner() const;
};

/// Throws std::invalid_argument on reversed or non-finite intervals.
void check_box(const Network& network, const ScenarioBox& box);

/// Non-adjustable decision: source injections, terminal potentials and
/// compressor settings (per edge; empty entries keep the network law).
struct OperatingPoint {
  std::vector<double> source_injection;
  std::vector<double> terminal_potential;
  std::vector<std::optional<double>> compression;

  bool operator==(const OperatingPoint&) const = default;
};

/// Combines the operating point with one realization of the internal
/// productions (indexed by node, read on R).
BoundaryData make_boundary(const Network& network, const OperatingPoint& op,
                           std::span<const double> internal_q);

enum class BoundSide { Lower, Upper };
enum class Corner { Lower, Upper, Fixed };

std::string_view to_string(BoundSide side);
std::string_view to_string(Corner corner);

struct Violation {
  NodeIndex node = 0;
  BoundSide bound = BoundSide::Lower;
  Corner corner = Corner::Fixed;
  double margin = 0.0;  // amount by which the bound is exceeded
};

enum class VerdictStatus { Feasible, Infeasible, Indeterminate };
std::string_view to_string(VerdictStatus status);

struct RobustVerdict {
  VerdictStatus status = VerdictStatus::Indeterminate;
  double worst_cost = 0.0;
  std::vector<Violation> violations;
  /// Smallest distance to a potential bound over both corners and the
  /// terminals; negative when infeasible.
  double margin = 0.0;
  std::optional<FlowState> lower_state;
  std::optional<FlowState> upper_state;
  std::string diagnostic;  // set when indeterminate

  bool feasible() const { return status == VerdictStatus::Feasible; }
  double total_violation() const;
};

/// Robust feasibility from the two box corners alone: potentials at the
/// lower corner against lower bounds, at the upper corner against upper
/// bounds, terminal potentials against their own bounds. The worst-case cost
/// is the cost at the upper corner. Solver failure yields Indeterminate.
RobustVerdict robust_feasibility(const Network& network, const ScenarioBox& box,
                                 const OperatingPoint& op, const CostModel& cost,
                                 const SolverOptions& solver = {});

struct DeterministicResult {
  FlowState state;
  double cost = 0.0;
  bool feasible = false;
  std::vector<Violation> violations;
};

/// One steady state at a fixed realization; all potential bounds checked.
/// Throws NonConvergence.
DeterministicResult deterministic_solve(const Network& network, std::span<const double> internal_q,
                                        const OperatingPoint& op, const CostModel& cost,
                                        const SolverOptions& solver = {});

struct SearchConfig {
  /// Per node; required (finite) on every source.
  std::vector<std::optional<Interval>> source_box;
  /// Per node; a missing entry fixes that terminal's potential at the seed.
  std::vector<std::optional<Interval>> terminal_box;
  /// Compressors are searched over their own range unless this is false.
  bool search_compression = true;

  int sweeps = 30;
  double shrink = 0.5;
  double initial_step_fraction = 0.1;
  double min_step_fraction = 1e-7;
  int max_evaluations = 20000;
  int max_extensions = 64;
  unsigned long long seed = 0;  // nonzero permutes the coordinate order
  std::size_t workers = 0;
  SolverOptions solver;
};

/// Throws std::invalid_argument for missing or unbounded source boxes.
void check_search(const Network& network, const SearchConfig& config);

struct TraceEntry {
  OperatingPoint point;
  VerdictStatus status = VerdictStatus::Indeterminate;
  double worst_cost = 0.0;
  double violation = 0.0;
  bool accepted = false;
  int sweep = 0;
};

enum class OptimizationStatus { Feasible, NoFeasiblePoint };

struct OptimizationResult {
  OptimizationStatus status = OptimizationStatus::NoFeasiblePoint;
  OperatingPoint point;
  RobustVerdict verdict;
  std::vector<TraceEntry> trace;
  int evaluations = 0;
};

/// Derivative-free coordinate pattern search for the robust-feasible point
/// of least worst-case cost, started at `seed`. Feasible points always beat
/// infeasible ones; infeasible points are ranked by their total bound
/// violation. Candidates of one coordinate are solved concurrently and
/// decided in a fixed order.
OptimizationResult optimize_operating_point(const Network& network, const ScenarioBox& box,
                                            const CostModel& cost, const OperatingPoint& seed,
                                            const SearchConfig& config);

}  // namespace dissflow
