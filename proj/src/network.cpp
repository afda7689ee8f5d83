#include "dissflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

namespace dissflow {

std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Source: return "S";
    case NodeRole::Terminal: return "T";
    case NodeRole::Internal: return "R";
  }
  return "?";
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.code == code; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < issues.size(); ++k) {
    if (k) os << "; ";
    os << issues[k].code << ": " << issues[k].message;
  }
  return os.str();
}

InvalidNetwork::InvalidNetwork(ValidationReport report)
    : std::runtime_error("invalid network: " + report.summary()), report_(std::move(report)) {}

Network::Network(std::vector<Node> nodes, std::vector<EdgeSpec> edges)
    : nodes_(std::move(nodes)), adjacency_(nodes_.size()) {
  edges_.reserve(edges.size());
  for (auto& spec : edges) {
    if (spec.from >= nodes_.size() || spec.to >= nodes_.size()) {
      throw std::out_of_range("edge endpoint out of range");
    }
    Edge e{spec.from, spec.to, std::move(spec.law)};
    if (e.tail > e.head) {
      std::swap(e.tail, e.head);
      if (e.law) e.law = e.law->reversed();
    }
    const EdgeIndex idx = edges_.size();
    edges_.push_back(std::move(e));
    const Edge& stored = edges_.back();
    adjacency_[stored.tail].push_back({stored.head, idx, true});
    if (stored.head != stored.tail) adjacency_[stored.head].push_back({stored.tail, idx, false});
  }
  for (auto& adj : adjacency_) {
    std::stable_sort(adj.begin(), adj.end(),
                     [](const Incidence& a, const Incidence& b) { return a.neighbor < b.neighbor; });
  }
}

std::optional<EdgeIndex> Network::find_edge(NodeIndex a, NodeIndex b) const {
  if (a >= nodes_.size() || b >= nodes_.size()) return std::nullopt;
  for (const auto& inc : adjacency_[a]) {
    if (inc.neighbor == b) return inc.edge;
  }
  return std::nullopt;
}

std::optional<NodeIndex> Network::find_node(std::int64_t id) const {
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

NodeIndex Network::index_of(std::int64_t id) const {
  auto idx = find_node(id);
  if (!idx) throw std::out_of_range("unknown node id " + std::to_string(id));
  return *idx;
}

std::vector<NodeIndex> Network::nodes_with_role(NodeRole role) const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].role == role) out.push_back(i);
  }
  return out;
}

std::vector<NodeIndex> Network::free_nodes() const {
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].role != NodeRole::Terminal) out.push_back(i);
  }
  return out;
}

double Network::oriented_flow(const FlowState& state, NodeIndex from, NodeIndex to) const {
  auto e = find_edge(from, to);
  if (!e) throw std::invalid_argument("nodes are not adjacent");
  const double phi = state.phi.at(*e);
  return edges_[*e].tail == from ? phi : -phi;
}

double Network::oriented_drop(NodeIndex from, NodeIndex to, double flow) const {
  auto e = find_edge(from, to);
  if (!e) throw std::invalid_argument("nodes are not adjacent");
  const auto& law = *edges_[*e].law;
  return edges_[*e].tail == from ? law.value(flow) : -law.value(-flow);
}

ValidationReport validate(const Network& network) {
  ValidationReport report;
  auto add = [&](std::string code, std::string msg) {
    report.issues.push_back({std::move(code), std::move(msg)});
  };

  if (network.node_count() == 0) {
    add("empty network", "network has no nodes");
    return report;
  }
  if (network.nodes_with_role(NodeRole::Source).empty()) add("empty source set", "no source nodes");
  if (network.nodes_with_role(NodeRole::Terminal).empty()) add("empty terminal set", "no terminal nodes");
  if (network.nodes_with_role(NodeRole::Internal).empty()) add("empty internal set", "no internal nodes");

  std::set<std::int64_t> ids;
  for (const auto& n : network.nodes()) {
    if (!ids.insert(n.id).second) add("duplicate node id", "node id " + std::to_string(n.id) + " repeated");
    const auto& b = n.potential_bounds;
    if (std::isnan(b.lo) || std::isnan(b.hi) || b.lo > b.hi) {
      add("potential bounds reversed", "node " + std::to_string(n.id) + " has pi_min > pi_max");
    }
  }

  std::set<std::pair<NodeIndex, NodeIndex>> pairs;
  for (const auto& e : network.edges()) {
    const std::string label =
        std::to_string(network.node(e.tail).id) + "-" + std::to_string(network.node(e.head).id);
    if (e.tail == e.head) add("self-loop", "edge " + label + " is a self-loop");
    if (!pairs.insert({e.tail, e.head}).second) add("duplicate edge", "edge " + label + " repeated");
    if (!e.law) add("missing dissipation", "edge " + label + " has no dissipation function");
  }

  std::vector<bool> seen(network.node_count(), false);
  std::queue<NodeIndex> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const NodeIndex i = frontier.front();
    frontier.pop();
    for (const auto& inc : network.incident(i)) {
      if (!seen[inc.neighbor]) {
        seen[inc.neighbor] = true;
        ++reached;
        frontier.push(inc.neighbor);
      }
    }
  }
  if (reached != network.node_count()) add("graph not connected", "graph not connected");
  return report;
}

double Residuals::conservation_norm() const {
  double m = 0.0;
  for (double r : conservation) m = std::max(m, std::abs(r));
  return m;
}

double Residuals::drop_norm() const {
  double m = 0.0;
  for (double r : drop) m = std::max(m, std::abs(r));
  return m;
}

Residuals residuals(const Network& network, const FlowState& state) {
  if (state.phi.size() != network.edge_count() || state.pi.size() != network.node_count() ||
      state.q.size() != network.node_count()) {
    throw DimensionMismatch("flow state dimensions do not match network");
  }
  Residuals r;
  r.conservation = state.q;
  r.drop.resize(network.edge_count());
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    const Edge& edge = network.edge(e);
    const double phi = state.phi[e];
    r.conservation[edge.head] += phi;
    r.conservation[edge.tail] -= phi;
    r.drop[e] = state.pi[edge.head] - state.pi[edge.tail] + edge.law->value(phi);
  }
  return r;
}

double cycle_law_check(const Network& network, const FlowState& state,
                       std::span<const NodeIndex> cycle) {
  if (cycle.size() < 3 || cycle.front() != cycle.back()) {
    throw std::invalid_argument("node sequence is not a closed cycle");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cycle.size(); ++k) {
    const NodeIndex a = cycle[k];
    const NodeIndex b = cycle[k + 1];
    if (!network.find_edge(a, b)) throw std::invalid_argument("cycle uses a non-edge");
    sum += network.oriented_drop(a, b, network.oriented_flow(state, a, b));
  }
  return sum;
}

std::vector<std::vector<NodeIndex>> fundamental_cycles(const Network& network) {
  const std::size_t n = network.node_count();
  std::vector<std::optional<NodeIndex>> parent(n);
  std::vector<std::size_t> depth(n, 0);
  std::vector<bool> seen(n, false);
  std::vector<bool> tree_edge(network.edge_count(), false);

  for (NodeIndex root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = true;
    std::queue<NodeIndex> frontier;
    frontier.push(root);
    while (!frontier.empty()) {
      const NodeIndex i = frontier.front();
      frontier.pop();
      for (const auto& inc : network.incident(i)) {
        if (!seen[inc.neighbor]) {
          seen[inc.neighbor] = true;
          parent[inc.neighbor] = i;
          depth[inc.neighbor] = depth[i] + 1;
          tree_edge[inc.edge] = true;
          frontier.push(inc.neighbor);
        }
      }
    }
  }

  std::vector<std::vector<NodeIndex>> cycles;
  for (EdgeIndex e = 0; e < network.edge_count(); ++e) {
    const Edge& edge = network.edge(e);
    if (tree_edge[e] || edge.tail == edge.head) continue;
    // tail -> head, then back up the tree from head to tail via the common ancestor.
    std::vector<NodeIndex> up_head{edge.head};
    std::vector<NodeIndex> up_tail{edge.tail};
    NodeIndex a = edge.head;
    NodeIndex b = edge.tail;
    while (depth[a] > depth[b]) up_head.push_back(a = *parent[a]);
    while (depth[b] > depth[a]) up_tail.push_back(b = *parent[b]);
    while (a != b) {
      up_head.push_back(a = *parent[a]);
      up_tail.push_back(b = *parent[b]);
    }
    std::vector<NodeIndex> cycle{edge.tail};
    cycle.insert(cycle.end(), up_head.begin(), up_head.end());
    // up_head ends at the ancestor, up_tail also ends there; walk down to tail.
    for (auto it = up_tail.rbegin() + 1; it != up_tail.rend(); ++it) cycle.push_back(*it);
    cycles.push_back(std::move(cycle));
  }
  return cycles;
}

}  // namespace dissflow
