#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dissflow/dissipation.hpp"

namespace dissflow {

using NodeIndex = std::size_t;
using EdgeIndex = std::size_t;

enum class NodeRole { Source, Terminal, Internal };

std::string_view to_string(NodeRole role);

struct Node {
  std::int64_t id = 0;  // external label, as written in network files
  NodeRole role = NodeRole::Internal;
  Interval potential_bounds{-1e300, 1e300};
};

struct EdgeSpec {
  NodeIndex from = 0;
  NodeIndex to = 0;
  LawPtr law;  // law along from -> to
};

/// A physical pipe stored once, oriented tail < head. The law is the one for
/// the canonical orientation; the reverse law is derived.
struct Edge {
  NodeIndex tail = 0;
  NodeIndex head = 0;
  LawPtr law;
};

struct Incidence {
  NodeIndex neighbor;
  EdgeIndex edge;
  bool outgoing;  // true when this node is the edge's tail
};

struct ValidationIssue {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool has(std::string_view code) const;
  std::string summary() const;
};

class InvalidNetwork : public std::runtime_error {
 public:
  explicit InvalidNetwork(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Edge flows, nodal potentials and nodal productions of one steady state.
/// Productions are positive for injection, negative for withdrawal.
struct FlowState {
  std::vector<double> phi;  // per canonical edge, along tail -> head
  std::vector<double> pi;   // per node
  std::vector<double> q;    // per node
};

/// Immutable dissipative flow network. Construction canonicalizes edge
/// orientation but performs no admissibility checks; see validate().
class Network {
 public:
  Network(std::vector<Node> nodes, std::vector<EdgeSpec> edges);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  const Edge& edge(EdgeIndex e) const { return edges_.at(e); }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Incidence> incident(NodeIndex i) const { return adjacency_.at(i); }

  std::optional<EdgeIndex> find_edge(NodeIndex a, NodeIndex b) const;
  std::optional<NodeIndex> find_node(std::int64_t id) const;
  /// Throws std::out_of_range when the id is unknown.
  NodeIndex index_of(std::int64_t id) const;

  std::vector<NodeIndex> nodes_with_role(NodeRole role) const;
  /// Nodes whose potential is a solver unknown (S and R), ascending.
  std::vector<NodeIndex> free_nodes() const;

  /// Signed flow from `from` to `to` (skew-symmetric view).
  double oriented_flow(const FlowState& state, NodeIndex from, NodeIndex to) const;
  /// f_{from,to}(x) through the canonical law and edge inversion.
  double oriented_drop(NodeIndex from, NodeIndex to, double flow) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
};

ValidationReport validate(const Network& network);

struct Residuals {
  std::vector<double> conservation;  // per node: inflow + q_i
  std::vector<double> drop;          // per edge: pi_head - pi_tail + f(phi)

  double conservation_norm() const;
  double drop_norm() const;
};

/// Throws DimensionMismatch.
Residuals residuals(const Network& network, const FlowState& state);

/// Sum of f along the directed cycle `cycle` (first node repeated at the
/// end). Throws std::invalid_argument when consecutive nodes are not adjacent
/// or the sequence is not closed.
double cycle_law_check(const Network& network, const FlowState& state,
                       std::span<const NodeIndex> cycle);

/// One closed node sequence per non-tree edge of a BFS spanning tree.
std::vector<std::vector<NodeIndex>> fundamental_cycles(const Network& network);

}  // namespace dissflow
