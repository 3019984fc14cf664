#include "fairbn/json_io.hpp"

#include <fstream>
#include <sstream>

namespace fairbn {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidDocument, what); }

void check_version(const Json& doc) {
  if (!doc.is_object()) bad("document must be a JSON object");
  if (doc.contains("format_version")) {
    const auto& v = doc["format_version"];
    if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
      bad("unsupported format_version " + v.dump() + " (expected " + std::to_string(kFormatVersion) + ")");
    }
  }
}

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) bad(where + ": missing '" + key + "'");
  return obj[key];
}

std::string as_string(const Json& v, const std::string& where) {
  if (!v.is_string()) bad(where + ": expected a string, got " + v.dump());
  return v.get<std::string>();
}

std::vector<std::string> as_strings(const Json& v, const std::string& where) {
  if (!v.is_array()) bad(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(as_string(x, where));
  return out;
}

double as_number(const Json& v, const std::string& where) {
  if (!v.is_number()) bad(where + ": expected a number, got " + v.dump());
  return v.get<double>();
}

NamedAssignment as_assignment(const Json& v, const std::string& where) {
  if (!v.is_object()) bad(where + ": expected an object of variable: state");
  NamedAssignment out;
  for (const auto& [k, s] : v.items()) out[k] = as_string(s, where + "." + k);
  return out;
}

Json assignment_json(const NamedAssignment& a) {
  Json out = Json::object();
  for (const auto& [k, v] : a) out[k] = v;
  return out;
}

}  // namespace

NetworkSpec network_spec_from_json(const Json& doc, bool require_cpts) {
  check_version(doc);
  NetworkSpec spec;
  for (const auto& v : field(doc, "variables", "network")) {
    Variable var;
    var.name = as_string(field(v, "name", "variable"), "variable.name");
    var.states = as_strings(field(v, "states", "variable '" + var.name + "'"), "variable '" + var.name + "'.states");
    spec.variables.push_back(std::move(var));
  }
  if (doc.contains("edges")) {
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2) bad("edges: each edge must be a [parent, child] pair, got " + e.dump());
      spec.edges.emplace_back(as_string(e[0], "edge"), as_string(e[1], "edge"));
    }
  }
  if (doc.contains("cpts")) {
    for (const auto& c : doc["cpts"]) {
      CptSpec cpt;
      cpt.owner = as_string(field(c, "owner", "cpt"), "cpt.owner");
      const std::string where = "cpt '" + cpt.owner + "'";
      if (c.contains("parents")) cpt.parents = as_strings(c["parents"], where + ".parents");
      for (const auto& r : field(c, "rows", where)) {
        CptRowSpec row;
        if (r.contains("given")) row.given = as_assignment(r["given"], where + ".given");
        const auto& p = field(r, "p", where);
        if (!p.is_array()) bad(where + ": 'p' must be an array");
        for (const auto& x : p) row.p.push_back(as_number(x, where + ".p"));
        cpt.rows.push_back(std::move(row));
      }
      spec.cpts.push_back(std::move(cpt));
    }
  } else if (require_cpts) {
    bad("network: missing 'cpts'");
  }
  return spec;
}

Json to_json(const NetworkSpec& spec) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  Json vars = Json::array();
  for (const auto& v : spec.variables) vars.push_back({{"name", v.name}, {"states", v.states}});
  doc["variables"] = vars;
  Json edges = Json::array();
  for (const auto& [p, c] : spec.edges) edges.push_back({p, c});
  doc["edges"] = edges;
  Json cpts = Json::array();
  for (const auto& c : spec.cpts) {
    Json rows = Json::array();
    for (const auto& r : c.rows) rows.push_back({{"given", assignment_json(r.given)}, {"p", r.p}});
    cpts.push_back({{"owner", c.owner}, {"parents", c.parents}, {"rows", rows}});
  }
  doc["cpts"] = cpts;
  return doc;
}

RoleAssignment roles_from_json(const Json& doc) {
  check_version(doc);
  RoleAssignment r;
  r.justified = as_strings(field(doc, "justified", "roles"), "roles.justified");
  r.sensitive = as_strings(field(doc, "sensitive", "roles"), "roles.sensitive");
  r.other = as_strings(field(doc, "other", "roles"), "roles.other");
  if (doc.contains("ignored")) r.ignored = as_strings(doc["ignored"], "roles.ignored");
  r.control = as_string(field(doc, "control", "roles"), "roles.control");
  r.target = as_string(field(doc, "target", "roles"), "roles.target");
  if (doc.contains("free_entries") && !doc["free_entries"].is_null()) {
    std::vector<FreeEntrySpec> free;
    for (const auto& f : doc["free_entries"]) {
      FreeEntrySpec spec;
      spec.given = as_assignment(field(f, "given", "free_entries"), "free_entries.given");
      if (f.contains("states")) spec.states = as_strings(f["states"], "free_entries.states");
      free.push_back(std::move(spec));
    }
    r.free_entries = std::move(free);
  }
  return r;
}

Json to_json(const RoleAssignment& r) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["justified"] = r.justified;
  doc["sensitive"] = r.sensitive;
  doc["other"] = r.other;
  doc["ignored"] = r.ignored;
  doc["control"] = r.control;
  doc["target"] = r.target;
  if (r.free_entries) {
    Json free = Json::array();
    for (const auto& f : *r.free_entries) {
      Json e = {{"given", assignment_json(f.given)}};
      if (!f.states.empty()) e["states"] = f.states;
      free.push_back(e);
    }
    doc["free_entries"] = free;
  }
  return doc;
}

std::vector<MarginalConstraint> constraints_from_json(const Json& doc) {
  const Json* list = &doc;
  if (doc.is_object()) {
    check_version(doc);
    list = &field(doc, "constraints", "constraints document");
  }
  if (!list->is_array()) bad("constraints: expected an array");
  std::vector<MarginalConstraint> out;
  for (const auto& c : *list) {
    MarginalConstraint mc;
    mc.event = as_assignment(field(c, "event", "constraint"), "constraint.event");
    if (mc.event.empty()) bad("constraint: empty event");
    const std::string op = as_string(field(c, "op", "constraint"), "constraint.op");
    if (op == "interval") {
      mc.op = MarginalConstraint::Op::interval;
      const auto& vs = field(c, "values", "interval constraint");
      if (!vs.is_array() || vs.size() != 2) bad("interval constraint: 'values' must be [lower, upper]");
      mc.lo = as_number(vs[0], "constraint.values");
      mc.hi = as_number(vs[1], "constraint.values");
    } else {
      const double v = as_number(field(c, "value", "constraint"), "constraint.value");
      if (op == "eq") {
        mc = MarginalConstraint::equal(mc.event, v);
      } else if (op == "le") {
        mc = MarginalConstraint::at_most(mc.event, v);
      } else if (op == "ge") {
        mc = MarginalConstraint::at_least(mc.event, v);
      } else {
        bad("constraint: unknown op '" + op + "' (expected eq, le, ge or interval)");
      }
    }
    if (mc.lo < 0.0 || mc.hi > 1.0 || mc.lo > 1.0 || mc.hi < 0.0) bad("constraint bound outside [0, 1]: " + describe(mc));
    if (mc.lo > mc.hi) bad("constraint with empty interval: " + describe(mc));
    out.push_back(std::move(mc));
  }
  return out;
}

Json to_json(std::span<const MarginalConstraint> constraints) {
  Json list = Json::array();
  for (const auto& c : constraints) {
    Json e = {{"event", assignment_json(c.event)}};
    switch (c.op) {
      case MarginalConstraint::Op::eq: e["op"] = "eq"; e["value"] = c.lo; break;
      case MarginalConstraint::Op::le: e["op"] = "le"; e["value"] = c.hi; break;
      case MarginalConstraint::Op::ge: e["op"] = "ge"; e["value"] = c.lo; break;
      case MarginalConstraint::Op::interval: e["op"] = "interval"; e["values"] = {c.lo, c.hi}; break;
    }
    list.push_back(e);
  }
  return Json{{"format_version", kFormatVersion}, {"constraints", list}};
}

Json to_json(const ValidationReport& report) {
  Json list = Json::array();
  for (const auto& i : report) list.push_back({{"kind", std::string(to_string(i.kind))}, {"message", i.message}});
  return list;
}

Json to_json(const ConditionalTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json row = {{"justified", assignment_json(r.justified)}};
    row["sensitive"] = r.sensitive ? assignment_json(*r.sensitive) : Json(nullptr);
    row["target_state"] = r.target_state;
    row["probability"] = r.probability;
    rows.push_back(row);
  }
  return Json{{"justified", t.justified_vars}, {"sensitive", t.sensitive_vars}, {"target", t.target}, {"rows", rows}};
}

Json solution_report(const FeoScenario& sc, const FeoSystem& sys, const Solution& sol) {
  const Network& net = sc.network();
  const auto& idx = sys.index;
  const auto& cvar = net.variable(idx.control);
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["control"] = cvar.name;
  doc["target"] = net.variable(sc.target()).name;
  doc["status"] = std::string(to_string(sol.status));
  doc["objective"] = sol.objective;
  doc["max_residual"] = sol.max_residual();
  Json theta = Json::array();
  for (std::size_t k = 0; k < idx.size() && k < sol.theta.size(); ++k) {
    const auto& p = idx.params[k];
    theta.push_back({{"given", assignment_json(row_given(net, idx.control, p.row))},
                     {"state", cvar.states[static_cast<std::size_t>(p.state)]},
                     {"original", idx.theta0[k]},
                     {"value", sol.theta[k]}});
  }
  doc["theta"] = theta;
  Json res = Json::array();
  for (std::size_t i = 0; i < sys.equations.size() && i < sol.residuals.size(); ++i) {
    const auto& eq = sys.equations[i];
    res.push_back({{"justified", assignment_json(eq.justified)},
                   {"sensitive", assignment_json(eq.sensitive)},
                   {"target_state", eq.target_state},
                   {"residual", sol.residuals[i]}});
  }
  doc["residuals"] = res;
  doc["active_constraints"] = sol.active;
  if (!sol.conflict.empty()) doc["conflict"] = sol.conflict;
  return doc;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidDocument, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

Network load_network(const std::filesystem::path& path) {
  return Network::build(network_spec_from_json(read_json_file(path)));
}

RoleAssignment load_roles(const std::filesystem::path& path) { return roles_from_json(read_json_file(path)); }

std::vector<MarginalConstraint> load_constraints(const std::filesystem::path& path) {
  return constraints_from_json(read_json_file(path));
}

}  // namespace fairbn
