#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "dissflow/network_file.hpp"
#include "dissflow/oracle.hpp"
#include "dissflow/robust.hpp"
#include "dissflow/steady_solver.hpp"
#include "json.hpp"

namespace dissflow::cli {

namespace {

using Json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string file;
  std::string format = "text";
  double tol = 0.0;
  std::size_t workers = 0;
};

Json report_header(const char* command) {
  return Json{{"schema", kReportSchema}, {"schema_version", kReportSchemaVersion}, {"command", command}};
}

std::string id(const Network& net, NodeIndex i) { return std::to_string(net.node(i).id); }

SolverOptions solver_options(const Problem& p, const Common& c) {
  SolverOptions s = p.solver;
  if (c.tol > 0.0) s.tol = c.tol;
  return s;
}

/// "lower", "upper", "mid", or comma-separated values, one per internal node.
std::vector<double> scenario(const Problem& p, const std::string& spec) {
  const Network& net = p.network;
  if (spec == "lower") return p.box.lower_corner();
  if (spec == "upper") return p.box.upper_corner();
  std::vector<double> q(net.node_count(), 0.0);
  const auto internal = net.nodes_with_role(NodeRole::Internal);
  if (spec == "mid") {
    for (NodeIndex i : internal) q[i] = 0.5 * (p.box.bounds[i].lo + p.box.bounds[i].hi);
    return q;
  }
  std::vector<double> values;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad scenario value \"" + tok + "\"");
    }
  }
  if (values.size() != internal.size()) {
    throw UsageError("scenario needs " + std::to_string(internal.size()) + " values (one per internal node)");
  }
  for (std::size_t k = 0; k < internal.size(); ++k) q[internal[k]] = values[k];
  return q;
}

Json violations_json(const Network& net, const std::vector<Violation>& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) {
    arr.push_back({{"node", net.node(v.node).id},
                   {"bound", to_string(v.bound)},
                   {"corner", to_string(v.corner)},
                   {"margin", v.margin}});
  }
  return arr;
}

void print_violations(std::ostream& out, const Network& net, const std::vector<Violation>& vs) {
  for (const auto& v : vs) {
    out << "  violation: node " << id(net, v.node) << " " << to_string(v.bound) << " bound, "
        << to_string(v.corner) << " scenario, margin " << v.margin << "\n";
  }
}

void print_state(std::ostream& out, const Network& net, const FlowState& s) {
  out << "nodes:\n" << std::setw(8) << "id" << std::setw(6) << "role" << std::setw(16) << "pi" << std::setw(16)
      << "q" << "\n";
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    out << std::setw(8) << net.node(i).id << std::setw(6) << to_string(net.node(i).role) << std::setw(16) << s.pi[i]
        << std::setw(16) << s.q[i] << "\n";
  }
  out << "edges:\n" << std::setw(8) << "from" << std::setw(8) << "to" << std::setw(16) << "phi" << "\n";
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    out << std::setw(8) << id(net, net.edge(e).tail) << std::setw(8) << id(net, net.edge(e).head) << std::setw(16)
        << s.phi[e] << "\n";
  }
}

Json state_json(const Network& net, const FlowState& s) {
  Json nodes = Json::array();
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    nodes.push_back({{"id", net.node(i).id}, {"role", to_string(net.node(i).role)}, {"pi", s.pi[i]}, {"q", s.q[i]}});
  }
  Json edges = Json::array();
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    edges.push_back({{"from", net.node(net.edge(e).tail).id}, {"to", net.node(net.edge(e).head).id}, {"phi", s.phi[e]}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

void emit(std::ostream& out, const Json& j) { out << j.dump(2) << "\n"; }

int cmd_solve(const Problem& p, const Common& c, const std::string& spec, std::ostream& out) {
  const auto q = scenario(p, spec);
  const auto result = deterministic_solve(p.network, q, p.seed, p.cost, solver_options(p, c));
  const auto res = residuals(p.network, result.state);
  if (c.format == "records") {
    Json j = report_header("solve");
    j["scenario"] = spec;
    j["feasible"] = result.feasible;
    j["cost"] = result.cost;
    j["conservation_residual"] = res.conservation_norm();
    j["drop_residual"] = res.drop_norm();
    j["state"] = state_json(p.network, result.state);
    j["violations"] = violations_json(p.network, result.violations);
    emit(out, j);
  } else {
    out << std::setprecision(10);
    out << "scenario: " << spec << "\n";
    print_state(out, p.network, result.state);
    out << "conservation residual: " << res.conservation_norm() << "\n";
    out << "drop residual: " << res.drop_norm() << "\n";
    out << "cost: " << result.cost << "\n";
    out << (result.feasible ? "feasible" : "infeasible") << "\n";
    print_violations(out, p.network, result.violations);
  }
  return result.feasible ? kExitOk : kExitInfeasible;
}

int verdict_exit(const RobustVerdict& v) {
  switch (v.status) {
    case VerdictStatus::Feasible: return kExitOk;
    case VerdictStatus::Infeasible: return kExitInfeasible;
    case VerdictStatus::Indeterminate: return kExitNumerical;
  }
  return kExitNumerical;
}

Json operating_point_json(const Network& net, const OperatingPoint& op) {
  Json sources = Json::array(), terminals = Json::array(), comp = Json::array();
  for (NodeIndex s : net.nodes_with_role(NodeRole::Source)) sources.push_back({{"node", net.node(s).id}, {"q", op.source_injection[s]}});
  for (NodeIndex t : net.nodes_with_role(NodeRole::Terminal)) terminals.push_back({{"node", net.node(t).id}, {"pi", op.terminal_potential[t]}});
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (!net.edge(e).law->compression_range()) continue;
    const double b = e < op.compression.size() && op.compression[e] ? *op.compression[e] : net.edge(e).law->compression();
    comp.push_back({{"from", net.node(net.edge(e).tail).id}, {"to", net.node(net.edge(e).head).id}, {"b", b}});
  }
  return {{"sources", sources}, {"terminals", terminals}, {"compression", comp}};
}

void print_operating_point(std::ostream& out, const Network& net, const OperatingPoint& op) {
  for (NodeIndex s : net.nodes_with_role(NodeRole::Source)) out << "  q[" << id(net, s) << "] = " << op.source_injection[s] << "\n";
  for (NodeIndex t : net.nodes_with_role(NodeRole::Terminal)) out << "  pi[" << id(net, t) << "] = " << op.terminal_potential[t] << "\n";
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (!net.edge(e).law->compression_range()) continue;
    const double b = e < op.compression.size() && op.compression[e] ? *op.compression[e] : net.edge(e).law->compression();
    out << "  b[" << id(net, net.edge(e).tail) << "-" << id(net, net.edge(e).head) << "] = " << b << "\n";
  }
}

int cmd_check(const Problem& p, const Common& c, std::ostream& out) {
  const auto v = robust_feasibility(p.network, p.box, p.seed, p.cost, solver_options(p, c));
  if (c.format == "records") {
    Json j = report_header("check");
    j["verdict"] = to_string(v.status);
    if (v.status != VerdictStatus::Indeterminate) j["worst_cost"] = v.worst_cost;
    j["violations"] = violations_json(p.network, v.violations);
    if (!v.diagnostic.empty()) j["diagnostic"] = v.diagnostic;
    emit(out, j);
  } else {
    out << std::setprecision(10) << to_string(v.status) << "\n";
    if (v.status != VerdictStatus::Indeterminate) out << "worst_cost: " << v.worst_cost << "\n";
    print_violations(out, p.network, v.violations);
    if (!v.diagnostic.empty()) out << "diagnostic: " << v.diagnostic << "\n";
  }
  return verdict_exit(v);
}

int cmd_optimize(const Problem& p, const Common& c, int budget, std::optional<unsigned long long> seed,
                 std::ostream& out) {
  SearchConfig cfg = p.search;
  cfg.solver = solver_options(p, c);
  cfg.workers = c.workers;
  if (budget > 0) cfg.max_evaluations = budget;
  if (seed) cfg.seed = *seed;
  const auto r = optimize_operating_point(p.network, p.box, p.cost, p.seed, cfg);
  const bool ok = r.status == OptimizationStatus::Feasible;
  if (c.format == "records") {
    Json j = report_header("optimize");
    j["status"] = ok ? "feasible" : "no_feasible_point";
    j["worst_cost"] = r.verdict.worst_cost;
    j["evaluations"] = r.evaluations;
    j["point"] = operating_point_json(p.network, r.point);
    j["violations"] = violations_json(p.network, r.verdict.violations);
    Json trace = Json::array();
    for (const auto& t : r.trace) {
      trace.push_back({{"sweep", t.sweep}, {"status", to_string(t.status)}, {"worst_cost", t.worst_cost},
                       {"violation", t.violation}, {"accepted", t.accepted}});
    }
    j["trace"] = trace;
    emit(out, j);
  } else {
    out << std::setprecision(10) << (ok ? "feasible" : "no feasible point found") << "\n";
    out << "worst_cost: " << r.verdict.worst_cost << "\n";
    out << "evaluations: " << r.evaluations << "\n";
    out << "operating point:\n";
    print_operating_point(out, p.network, r.point);
    print_violations(out, p.network, r.verdict.violations);
  }
  if (r.verdict.status == VerdictStatus::Indeterminate) return kExitNumerical;
  return ok ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const Problem& p, const Common& c, std::size_t resolution, std::size_t budget, std::ostream& out) {
  SweepOptions opts;
  opts.solver = solver_options(p, c);
  opts.workers = c.workers;
  if (budget > 0) opts.budget = budget;
  const std::size_t res[] = {resolution};
  const auto s = scenario_sweep(p.network, p.box, p.seed, p.cost, res, opts);
  const Network& net = p.network;

  auto corner = [](const SweepRow& r) -> std::string {
    if (r.lower_corner && r.upper_corner) return "both";
    if (r.lower_corner) return "lower";
    if (r.upper_corner) return "upper";
    return "";
  };
  auto extremum = [&](std::size_t idx) {
    std::string tags;
    for (NodeIndex i : net.free_nodes()) {
      if (s.argmax_pi[i] == idx) tags += (tags.empty() ? "" : ";") + std::string("max_pi:") + id(net, i);
      if (s.argmin_pi[i] == idx) tags += (tags.empty() ? "" : ";") + std::string("min_pi:") + id(net, i);
    }
    if (s.argmin_revenue && *s.argmin_revenue == idx) tags += (tags.empty() ? "" : ";") + std::string("min_revenue");
    return tags;
  };

  if (c.format == "records") {
    Json j = report_header("sweep");
    Json dims = Json::array();
    for (NodeIndex i : s.internal) dims.push_back(net.node(i).id);
    j["dimensions"] = dims;
    j["resolution"] = s.resolution;
    j["all_feasible"] = s.all_feasible();
    j["failures"] = s.failures;
    Json rows = Json::array();
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
      const auto& r = s.rows[k];
      Json row{{"q", r.internal_q}, {"solved", r.solved}, {"feasible", r.feasible}, {"cost", r.cost},
               {"revenue", r.revenue}, {"corner", corner(r)}, {"extrema", extremum(k)}};
      if (r.solved) row["pi"] = r.pi;
      if (!r.error.empty()) row["error"] = r.error;
      rows.push_back(row);
    }
    j["rows"] = rows;
    emit(out, j);
  } else {
    out << std::setprecision(10);
    for (NodeIndex i : s.internal) out << "q" << id(net, i) << "\t";
    out << "feasible\tcost\trevenue";
    for (NodeIndex i = 0; i < net.node_count(); ++i) out << "\tpi" << id(net, i);
    out << "\tcorner\textrema\n";
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
      const auto& r = s.rows[k];
      for (double q : r.internal_q) out << q << "\t";
      if (!r.solved) {
        out << "error\t\t";
        for (NodeIndex i = 0; i < net.node_count(); ++i) out << "\t";
      } else {
        out << (r.feasible ? "yes" : "no") << "\t" << r.cost << "\t" << r.revenue;
        for (double pi : r.pi) out << "\t" << pi;
      }
      out << "\t" << corner(r) << "\t" << extremum(k) << "\n";
    }
  }
  if (s.failures > 0) return kExitNumerical;
  return s.all_feasible() ? kExitOk : kExitInfeasible;
}

int cmd_certify(const Problem& p, const Common& c, std::int64_t node_id, const std::string& scenarios,
                std::ostream& out) {
  const Network& net = p.network;
  const auto comma = scenarios.find(',');
  if (comma == std::string::npos) throw UsageError("--scenarios expects two names, e.g. upper,lower");
  const std::string a = scenarios.substr(0, comma), b = scenarios.substr(comma + 1);
  for (const auto& s : {a, b}) {
    if (s != "lower" && s != "upper" && s != "mid") throw UsageError("scenario must be lower, upper or mid");
  }
  const auto u = net.find_node(node_id);
  if (!u) throw UsageError("unknown node " + std::to_string(node_id));
  const auto opts = solver_options(p, c);
  const FlowState base = solve_steady_state(net, make_boundary(net, p.seed, scenario(p, a)), opts);
  const FlowState dominant = solve_steady_state(net, make_boundary(net, p.seed, scenario(p, b)), opts);
  const auto terminals = net.nodes_with_role(NodeRole::Terminal);
  AquariusCertificate cert;
  try {
    cert = aquarius_path(net, base, dominant, terminals, *u);
  } catch (const AquariusPreconditionError& e) {
    throw UsageError(e.what());
  }
  const auto check = verify_certificate(net, base, dominant, terminals, cert);

  if (c.format == "records") {
    Json j = report_header("certify");
    j["target"] = node_id;
    j["scenarios"] = {a, b};
    j["strict"] = cert.strict;
    j["verified"] = check.ok;
    Json path = Json::array();
    for (NodeIndex i : cert.path) path.push_back(net.node(i).id);
    j["path"] = path;
    Json edges = Json::array();
    for (const auto& e : cert.edges) {
      edges.push_back({{"from", net.node(e.from).id}, {"to", net.node(e.to).id}, {"phi_star", e.dominant_flow},
                       {"phi", e.base_flow}});
    }
    j["edges"] = edges;
    emit(out, j);
  } else {
    out << std::setprecision(10);
    out << "certificate for node " << node_id << " (" << a << " vs " << b << "), "
        << (cert.strict ? "strict" : "non-strict") << ", " << (check.ok ? "verified" : "NOT verified: " + check.reason)
        << "\n";
    out << "path:";
    for (NodeIndex i : cert.path) out << " " << net.node(i).id;
    out << "\n";
    for (const auto& e : cert.edges) {
      out << "  " << net.node(e.from).id << " -> " << net.node(e.to).id << ": phi* = " << e.dominant_flow
          << ", phi = " << e.base_flow << "\n";
    }
  }
  return check.ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Steady dissipative network flows and robust operating points"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", common.file, "network file")->required();
    sub->add_option("--format", common.format, "output format")->check(CLI::IsMember({"text", "records"}));
    sub->add_option("--tol", common.tol, "solver gradient tolerance (flow units)")->check(CLI::PositiveNumber);
    sub->add_option("--workers", common.workers, "worker threads (0 = DISSFLOW_WORKERS or hardware)");
  };

  std::string scenario_spec = "upper";
  auto* solve = app.add_subcommand("solve", "solve one steady state");
  add_common(solve);
  solve->add_option("--scenario", scenario_spec, "lower, upper, mid, or comma-separated internal productions");

  auto* check = app.add_subcommand("check", "robust feasibility from the two box corners");
  add_common(check);

  int budget = 0;
  std::optional<unsigned long long> seed;
  auto* optimize = app.add_subcommand("optimize", "pattern search for a robust operating point");
  add_common(optimize);
  optimize->add_option("--budget", budget, "maximum robust evaluations");
  optimize->add_option("--seed", seed, "coordinate order seed");

  std::size_t resolution = 11;
  std::size_t sweep_budget = 0;
  auto* sweep = app.add_subcommand("sweep", "brute-force grid over the scenario box");
  add_common(sweep);
  sweep->add_option("--resolution", resolution, "grid points per internal node")->check(CLI::Range(2, 100000));
  sweep->add_option("--budget", sweep_budget, "maximum number of grid solves");

  std::int64_t node_id = 0;
  std::string pair = "upper,lower";
  auto* certify = app.add_subcommand("certify", "Aquarius path between two scenarios");
  add_common(certify);
  certify->add_option("--node", node_id, "target node id")->required();
  certify->add_option("--scenarios", pair, "A,B with q^A >= q^B (lower, upper, mid)");

  auto* exporter = app.add_subcommand("export", "re-emit the parsed file in canonical form");
  exporter->add_option("file", common.file, "network file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const Problem problem = load_problem(common.file);
    if (*solve) return cmd_solve(problem, common, scenario_spec, out);
    if (*check) return cmd_check(problem, common, out);
    if (*optimize) return cmd_optimize(problem, common, budget, seed, out);
    if (*sweep) return cmd_sweep(problem, common, resolution, sweep_budget, out);
    if (*certify) return cmd_certify(problem, common, node_id, pair, out);
    if (*exporter) {
      out << export_problem(problem);
      return kExitOk;
    }
  } catch (const ParseError& e) {
    err << common.file << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidNetwork& e) {
    err << common.file << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NonConvergence& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const AquariusConstructionError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const BudgetExceeded& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace dissflow::cli
