#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dissflow/network.hpp"

namespace dissflow {

/// Conditioning data of one steady-state instance.
///
/// `injection` is read on sources and internal nodes, `terminal_potential`
/// on terminals; both are indexed by node. `compression` is indexed by edge;
/// an empty vector or an empty entry keeps the network's own law.
struct BoundaryData {
  std::vector<double> injection;
  std::vector<double> terminal_potential;
  std::vector<std::optional<double>> compression;

  static BoundaryData zeros(const Network& network);
};

/// Throws DimensionMismatch / std::invalid_argument on malformed data.
void check_boundary(const Network& network, const BoundaryData& boundary);

/// Per-edge laws with the boundary's compression settings applied.
std::vector<LawPtr> resolve_laws(const Network& network, const BoundaryData& boundary);

struct EnergyValue {
  double value = 0.0;
  std::vector<double> gradient;  // over Network::free_nodes(), in that order
};

/// Energy sum_e Psi_e(pi_tail - pi_head) - sum_{i in S∪R} pi_i q_i and its
/// exact gradient over the free potentials. The gradient at i equals
/// sum_j phi_ij - q_i, the negated conservation residual.
EnergyValue energy(const Network& network, const BoundaryData& boundary,
                   std::span<const double> free_potentials);

struct SolverOptions {
  /// Gradient max-norm target. Non-positive selects 1e-9 * max(1, max|q|).
  double tol = 0.0;
  int max_iterations = 500;
  int max_backtracks = 60;
  double armijo = 1e-4;
  /// Line-search slope reduction |s(t)| <= curvature * |s(0)|.
  double curvature = 0.5;
  double derivative_cap = kDefaultDerivativeCap;
  /// Starting free potentials (free_nodes() order). Defaults to the mean
  /// terminal potential everywhere.
  std::optional<std::vector<double>> initial_potentials;
};

struct SolveStats {
  int iterations = 0;
  int fallback_steps = 0;
  double gradient_norm = 0.0;
  double tol = 0.0;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double gradient_norm, int iterations)
      : std::runtime_error(what), gradient_norm_(gradient_norm), iterations_(iterations) {}
  double gradient_norm() const { return gradient_norm_; }
  int iterations() const { return iterations_; }

 private:
  double gradient_norm_;
  int iterations_;
};

double default_tolerance(const Network& network, const BoundaryData& boundary);

/// Unique steady state for the given boundary data: free potentials minimize
/// the energy, edge flows are f^{-1}(pi_tail - pi_head), terminal productions
/// close flow conservation. Throws InvalidNetwork or NonConvergence.
FlowState solve_steady_state(const Network& network, const BoundaryData& boundary,
                             const SolverOptions& options = {}, SolveStats* stats = nullptr);

FlowState solve_steady_state(const Network& network, const BoundaryData& boundary, double tol);

/// Free potentials of the steady state, in free_nodes() order.
std::vector<double> potentials_map(const Network& network, const BoundaryData& boundary,
                                   const SolverOptions& options = {});

/// Terminal productions of the steady state, in nodes_with_role(Terminal) order.
std::vector<double> productions_map(const Network& network, const BoundaryData& boundary,
                                    const SolverOptions& options = {});

}  // namespace dissflow
