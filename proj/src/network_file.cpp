#include "dissflow/network_file.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dissflow {

using nlohmann::json;
using nlohmann::ordered_json;

ParseError::ParseError(const std::string& message, std::string path, std::size_t line, std::size_t column)
    : std::runtime_error(message), path_(std::move(path)), line_(line), column_(column) {}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw ParseError(path + ": " + what, path);
}

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) schema_error(path, "expected an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) schema_error(path, "unknown key \"" + key + "\"");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "expected a finite number");
  return v;
}

double number_at(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) schema_error(path, std::string("missing key \"") + key + "\"");
  return number(j.at(key), path + "." + key);
}

std::optional<double> optional_number(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) return std::nullopt;
  return number(j.at(key), path + "." + key);
}

std::int64_t integer_at(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) schema_error(path, std::string("missing key \"") + key + "\"");
  const json& v = j.at(key);
  if (!v.is_number_integer()) schema_error(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

std::string string_at(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) schema_error(path, std::string("missing key \"") + key + "\"");
  const json& v = j.at(key);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

// Either a plain number (fixed) or {"min", "max", "value"?}.
struct Setting {
  double value;
  std::optional<Interval> box;
};

Setting setting(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), std::nullopt};
  expect_object(j, path, {"min", "max", "value"});
  Interval box{number_at(j, "min", path), number_at(j, "max", path)};
  if (box.lo > box.hi) schema_error(path, "min exceeds max");
  const double value = optional_number(j, "value", path).value_or(0.5 * (box.lo + box.hi));
  if (!box.contains(value)) schema_error(path, "value outside [min, max]");
  return {value, box};
}

CostFunction cost_function(const json& j, const std::string& path) {
  if (j.contains("table")) {
    const json& t = j.at("table");
    if (!t.is_array()) schema_error(path + ".table", "expected an array of [q, value] pairs");
    std::vector<std::pair<double, double>> points;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const std::string p = path + ".table[" + std::to_string(k) + "]";
      if (!t[k].is_array() || t[k].size() != 2) schema_error(p, "expected a [q, value] pair");
      points.emplace_back(number(t[k][0], p), number(t[k][1], p));
    }
    if (j.contains("slope") || j.contains("offset")) schema_error(path, "table and affine keys are exclusive");
    try {
      return CostFunction::tabulated(std::move(points));
    } catch (const std::invalid_argument& e) {
      schema_error(path, e.what());
    }
  }
  return CostFunction::affine(optional_number(j, "slope", path).value_or(0.0),
                              optional_number(j, "offset", path).value_or(0.0));
}

NodeRole parse_role(const std::string& s, const std::string& path) {
  if (s == "source") return NodeRole::Source;
  if (s == "terminal") return NodeRole::Terminal;
  if (s == "internal") return NodeRole::Internal;
  schema_error(path, "role must be source, terminal or internal");
}

const char* role_name(NodeRole r) {
  switch (r) {
    case NodeRole::Source: return "source";
    case NodeRole::Terminal: return "terminal";
    case NodeRole::Internal: return "internal";
  }
  return "?";
}

Problem build(const json& doc) {
  expect_object(doc, "$", {"format", "version", "nodes", "edges", "costs", "solver", "search"});
  if (doc.contains("format") && doc.at("format") != kNetworkFormat) schema_error("$.format", "unsupported format");
  if (doc.contains("version") && doc.at("version") != kNetworkFormatVersion) {
    schema_error("$.version", "unsupported version");
  }
  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) schema_error("$.nodes", "expected an array");
  if (!doc.contains("edges") || !doc.at("edges").is_array()) schema_error("$.edges", "expected an array");

  const json& jnodes = doc.at("nodes");
  std::vector<Node> nodes;
  std::map<std::int64_t, NodeIndex> index;
  std::vector<Setting> source_q(jnodes.size(), {0.0, std::nullopt});
  std::vector<Setting> terminal_pi(jnodes.size(), {0.0, std::nullopt});
  std::vector<Interval> internal_box(jnodes.size());

  for (std::size_t k = 0; k < jnodes.size(); ++k) {
    const std::string path = "$.nodes[" + std::to_string(k) + "]";
    const json& jn = jnodes[k];
    if (!jn.is_object()) schema_error(path, "expected an object");
    const NodeRole role = parse_role(string_at(jn, "role", path), path + ".role");
    switch (role) {
      case NodeRole::Source: expect_object(jn, path, {"id", "role", "pi_min", "pi_max", "q"}); break;
      case NodeRole::Terminal: expect_object(jn, path, {"id", "role", "pi_min", "pi_max", "pi"}); break;
      case NodeRole::Internal: expect_object(jn, path, {"id", "role", "pi_min", "pi_max", "q_lo", "q_hi"}); break;
    }
    Node node{integer_at(jn, "id", path), role, {number_at(jn, "pi_min", path), number_at(jn, "pi_max", path)}};
    if (node.potential_bounds.lo > node.potential_bounds.hi) schema_error(path, "pi_min exceeds pi_max");
    if (!index.emplace(node.id, k).second) schema_error(path + ".id", "duplicate node id");
    switch (role) {
      case NodeRole::Source:
        if (!jn.contains("q")) schema_error(path, "source needs \"q\" (a value or a search box)");
        source_q[k] = setting(jn.at("q"), path + ".q");
        break;
      case NodeRole::Terminal:
        if (!jn.contains("pi")) schema_error(path, "terminal needs \"pi\" (a value or a search box)");
        terminal_pi[k] = setting(jn.at("pi"), path + ".pi");
        break;
      case NodeRole::Internal:
        internal_box[k] = {number_at(jn, "q_lo", path), number_at(jn, "q_hi", path)};
        if (internal_box[k].lo > internal_box[k].hi) schema_error(path, "q_lo exceeds q_hi");
        break;
    }
    nodes.push_back(node);
  }

  auto node_ref = [&](const json& j, const char* key, const std::string& path) {
    const std::int64_t id = integer_at(j, key, path);
    auto it = index.find(id);
    if (it == index.end()) schema_error(path + "." + key, "unknown node id " + std::to_string(id));
    return it->second;
  };

  std::vector<EdgeSpec> edges;
  const json& jedges = doc.at("edges");
  for (std::size_t k = 0; k < jedges.size(); ++k) {
    const std::string path = "$.edges[" + std::to_string(k) + "]";
    const json& je = jedges[k];
    expect_object(je, path, {"from", "to", "law", "resistance", "length", "alpha", "compressor"});
    const NodeIndex from = node_ref(je, "from", path);
    const NodeIndex to = node_ref(je, "to", path);
    const std::string law = je.contains("law") ? string_at(je, "law", path) : "gas";
    const bool has_r = je.contains("resistance");
    const bool has_geom = je.contains("length") || je.contains("alpha");
    if (has_r == has_geom) schema_error(path, "give either \"resistance\" or \"length\" and \"alpha\"");
    try {
      if (law == "linear") {
        if (!has_r || je.contains("compressor")) schema_error(path, "linear law takes only \"resistance\"");
        edges.push_back({from, to, std::make_shared<LinearResistor>(number_at(je, "resistance", path))});
      } else if (law == "gas") {
        std::optional<GasPipe::Compressor> comp;
        double b = 0.0;
        if (je.contains("compressor")) {
          const std::string cpath = path + ".compressor";
          const json& jc = je.at("compressor");
          expect_object(jc, cpath, {"b_min", "b_max", "b", "position"});
          comp = GasPipe::Compressor{{number_at(jc, "b_min", cpath), number_at(jc, "b_max", cpath)},
                                     optional_number(jc, "position", cpath)};
          if (comp->range.lo > comp->range.hi) schema_error(cpath, "b_min exceeds b_max");
          b = optional_number(jc, "b", cpath).value_or(comp->range.lo);
          if (!comp->range.contains(b)) schema_error(cpath, "b outside [b_min, b_max]");
        }
        if (has_r) {
          edges.push_back({from, to, std::make_shared<GasPipe>(number_at(je, "resistance", path), b, comp)});
        } else {
          edges.push_back({from, to,
                           GasPipe::from_geometry(number_at(je, "length", path), number_at(je, "alpha", path), b,
                                                  comp)});
        }
      } else {
        schema_error(path + ".law", "law must be gas or linear");
      }
    } catch (const std::invalid_argument& e) {
      schema_error(path, e.what());
    }
  }

  Network network(std::move(nodes), std::move(edges));
  if (auto report = validate(network); !report.ok()) throw InvalidNetwork(std::move(report));
  const std::size_t n = network.node_count();

  Problem p{std::move(network), ScenarioBox{internal_box}, {}, {}, {}, {}};
  p.cost = CostModel::zeros(p.network);
  p.seed.source_injection.assign(n, 0.0);
  p.seed.terminal_potential.assign(n, 0.0);
  p.seed.compression.assign(p.network.edge_count(), std::nullopt);
  p.search.source_box.assign(n, std::nullopt);
  p.search.terminal_box.assign(n, std::nullopt);
  for (NodeIndex i = 0; i < n; ++i) {
    if (p.network.node(i).role == NodeRole::Source) {
      p.seed.source_injection[i] = source_q[i].value;
      p.search.source_box[i] = source_q[i].box.value_or(Interval{source_q[i].value, source_q[i].value});
    } else if (p.network.node(i).role == NodeRole::Terminal) {
      p.seed.terminal_potential[i] = terminal_pi[i].value;
      p.search.terminal_box[i] = terminal_pi[i].box;
    }
  }

  if (doc.contains("costs")) {
    const json& jc = doc.at("costs");
    expect_object(jc, "$.costs", {"sources", "terminals"});
    for (const char* section : {"sources", "terminals"}) {
      if (!jc.contains(section)) continue;
      const std::string spath = std::string("$.costs.") + section;
      const json& arr = jc.at(section);
      if (!arr.is_array()) schema_error(spath, "expected an array");
      const bool sources = std::string(section) == "sources";
      for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string path = spath + "[" + std::to_string(k) + "]";
        expect_object(arr[k], path, {"node", "slope", "offset", "table"});
        const NodeIndex i = node_ref(arr[k], "node", path);
        const NodeRole want = sources ? NodeRole::Source : NodeRole::Terminal;
        if (p.network.node(i).role != want) schema_error(path + ".node", std::string("node is not a ") + role_name(want));
        (sources ? p.cost.source_cost : p.cost.terminal_revenue)[i] = cost_function(arr[k], path);
        if (!sources && !p.cost.terminal_revenue[i].non_decreasing()) {
          schema_error(path, "terminal revenue must be non-decreasing");
        }
      }
    }
  }
  try {
    check_cost(p.network, p.cost);
  } catch (const std::invalid_argument& e) {
    schema_error("$.costs", e.what());
  }

  if (doc.contains("solver")) {
    const json& js = doc.at("solver");
    expect_object(js, "$.solver", {"tol", "max_iterations", "derivative_cap"});
    p.solver.tol = optional_number(js, "tol", "$.solver").value_or(p.solver.tol);
    if (js.contains("max_iterations")) p.solver.max_iterations = static_cast<int>(integer_at(js, "max_iterations", "$.solver"));
    p.solver.derivative_cap = optional_number(js, "derivative_cap", "$.solver").value_or(p.solver.derivative_cap);
  }
  if (doc.contains("search")) {
    const json& js = doc.at("search");
    const std::string path = "$.search";
    expect_object(js, path, {"sweeps", "shrink", "initial_step_fraction", "min_step_fraction", "max_evaluations",
                             "search_compression", "seed"});
    if (js.contains("sweeps")) p.search.sweeps = static_cast<int>(integer_at(js, "sweeps", path));
    p.search.shrink = optional_number(js, "shrink", path).value_or(p.search.shrink);
    p.search.initial_step_fraction = optional_number(js, "initial_step_fraction", path).value_or(p.search.initial_step_fraction);
    p.search.min_step_fraction = optional_number(js, "min_step_fraction", path).value_or(p.search.min_step_fraction);
    if (js.contains("max_evaluations")) p.search.max_evaluations = static_cast<int>(integer_at(js, "max_evaluations", path));
    if (js.contains("seed")) p.search.seed = static_cast<unsigned long long>(integer_at(js, "seed", path));
    if (js.contains("search_compression")) {
      if (!js.at("search_compression").is_boolean()) schema_error(path + ".search_compression", "expected a boolean");
      p.search.search_compression = js.at("search_compression").get<bool>();
    }
  }
  p.search.solver = p.solver;
  try {
    check_search(p.network, p.search);
  } catch (const std::invalid_argument& e) {
    schema_error("$.search", e.what());
  }
  return p;
}

ordered_json cost_json(const CostFunction& f) {
  ordered_json j;
  if (f.is_table()) {
    j["table"] = ordered_json::array();
    for (const auto& [q, v] : f.table()) j["table"].push_back({q, v});
  } else {
    j["slope"] = f.slope();
    j["offset"] = f.offset();
  }
  return j;
}

ordered_json setting_json(double value, const std::optional<Interval>& box) {
  if (!box || box->width() == 0.0) return value;
  return ordered_json{{"min", box->lo}, {"max", box->hi}, {"value", value}};
}

}  // namespace

Problem parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << "syntax error at line " << line << ", column " << column;
    throw ParseError(msg.str(), "", line, column);
  }
  return build(doc);
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string export_problem(const Problem& p) {
  const Network& net = p.network;
  ordered_json doc;
  doc["format"] = kNetworkFormat;
  doc["version"] = kNetworkFormatVersion;
  doc["nodes"] = ordered_json::array();
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    const Node& n = net.node(i);
    ordered_json jn{{"id", n.id}, {"role", role_name(n.role)}, {"pi_min", n.potential_bounds.lo},
                    {"pi_max", n.potential_bounds.hi}};
    switch (n.role) {
      case NodeRole::Source: jn["q"] = setting_json(p.seed.source_injection[i], p.search.source_box[i]); break;
      case NodeRole::Terminal:
        jn["pi"] = setting_json(p.seed.terminal_potential[i],
                                p.search.terminal_box.empty() ? std::nullopt : p.search.terminal_box[i]);
        break;
      case NodeRole::Internal:
        jn["q_lo"] = p.box.bounds[i].lo;
        jn["q_hi"] = p.box.bounds[i].hi;
        break;
    }
    doc["nodes"].push_back(jn);
  }
  doc["edges"] = ordered_json::array();
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const Edge& edge = net.edge(e);
    ordered_json je{{"from", net.node(edge.tail).id}, {"to", net.node(edge.head).id}};
    if (const auto* lin = dynamic_cast<const LinearResistor*>(edge.law.get())) {
      je["law"] = "linear";
      je["resistance"] = lin->resistance();
    } else if (const auto* gas = dynamic_cast<const GasPipe*>(edge.law.get())) {
      if (gas->length() && gas->alpha()) {
        je["length"] = *gas->length();
        je["alpha"] = *gas->alpha();
      } else {
        je["resistance"] = gas->resistance();
      }
      if (const auto& comp = gas->compressor()) {
        const double b = e < p.seed.compression.size() && p.seed.compression[e] ? *p.seed.compression[e]
                                                                                : gas->compression();
        je["compressor"] = ordered_json{{"b_min", comp->range.lo}, {"b_max", comp->range.hi}, {"b", b}};
        if (comp->position) je["compressor"]["position"] = *comp->position;
      }
    } else {
      throw std::invalid_argument("edge law cannot be exported");
    }
    doc["edges"].push_back(je);
  }
  ordered_json costs{{"sources", ordered_json::array()}, {"terminals", ordered_json::array()}};
  for (NodeIndex i = 0; i < net.node_count(); ++i) {
    if (net.node(i).role == NodeRole::Source) {
      auto j = cost_json(p.cost.source_cost[i]);
      j["node"] = net.node(i).id;
      costs["sources"].push_back(j);
    } else if (net.node(i).role == NodeRole::Terminal) {
      auto j = cost_json(p.cost.terminal_revenue[i]);
      j["node"] = net.node(i).id;
      costs["terminals"].push_back(j);
    }
  }
  doc["costs"] = costs;
  doc["solver"] = {{"tol", p.solver.tol}, {"max_iterations", p.solver.max_iterations},
                   {"derivative_cap", p.solver.derivative_cap}};
  doc["search"] = {{"sweeps", p.search.sweeps},
                   {"shrink", p.search.shrink},
                   {"initial_step_fraction", p.search.initial_step_fraction},
                   {"min_step_fraction", p.search.min_step_fraction},
                   {"max_evaluations", p.search.max_evaluations},
                   {"search_compression", p.search.search_compression},
                   {"seed", p.search.seed}};
  return doc.dump(2) + "\n";
}

bool same_model(const Problem& a, const Problem& b) {
  const Network& x = a.network;
  const Network& y = b.network;
  if (x.node_count() != y.node_count() || x.edge_count() != y.edge_count()) return false;
  for (NodeIndex i = 0; i < x.node_count(); ++i) {
    const Node& n = x.node(i);
    const Node& m = y.node(i);
    if (n.id != m.id || n.role != m.role || !(n.potential_bounds == m.potential_bounds)) return false;
  }
  for (EdgeIndex e = 0; e < x.edge_count(); ++e) {
    const Edge& f = x.edge(e);
    const Edge& g = y.edge(e);
    if (f.tail != g.tail || f.head != g.head || !f.law->equals(*g.law)) return false;
  }
  auto normalize = [&](const OperatingPoint& op) {
    OperatingPoint o = op;
    o.compression.resize(x.edge_count());
    for (EdgeIndex e = 0; e < x.edge_count(); ++e) {
      if (!o.compression[e] && x.edge(e).law->compression_range()) o.compression[e] = x.edge(e).law->compression();
    }
    return o;
  };
  for (NodeIndex i : x.nodes_with_role(NodeRole::Internal)) {
    if (!(a.box.bounds[i] == b.box.bounds[i])) return false;
  }
  const OperatingPoint sa = normalize(a.seed), sb = normalize(b.seed);
  for (NodeIndex i = 0; i < x.node_count(); ++i) {
    switch (x.node(i).role) {
      case NodeRole::Source:
        if (sa.source_injection[i] != sb.source_injection[i] || a.search.source_box[i] != b.search.source_box[i] ||
            !(a.cost.source_cost[i] == b.cost.source_cost[i]))
          return false;
        break;
      case NodeRole::Terminal:
        if (sa.terminal_potential[i] != sb.terminal_potential[i] ||
            a.search.terminal_box[i] != b.search.terminal_box[i] ||
            !(a.cost.terminal_revenue[i] == b.cost.terminal_revenue[i]))
          return false;
        break;
      case NodeRole::Internal: break;
    }
  }
  if (sa.compression != sb.compression) return false;
  return a.solver.tol == b.solver.tol && a.solver.max_iterations == b.solver.max_iterations &&
         a.solver.derivative_cap == b.solver.derivative_cap && a.search.sweeps == b.search.sweeps &&
         a.search.shrink == b.search.shrink && a.search.initial_step_fraction == b.search.initial_step_fraction &&
         a.search.min_step_fraction == b.search.min_step_fraction &&
         a.search.max_evaluations == b.search.max_evaluations &&
         a.search.search_compression == b.search.search_compression && a.search.seed == b.search.seed;
}

}  // namespace dissflow
