#include "fairbn/roles.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace fairbn {

namespace {

Network remove_one(const Network& net, VarIndex v) {
  NetworkSpec spec = net.to_spec();
  const std::string& vname = net.variable(v).name;
  auto kids = net.children(v);

  std::vector<CptSpec> cpts;
  for (auto& cs : spec.cpts) {
    if (cs.owner == vname) continue;
    cpts.push_back(std::move(cs));
  }

  if (kids.size() == 1) {
    const VarIndex child = kids.front();
    const Cpt& child_cpt = net.cpt(child);
    const Cpt& v_cpt = net.cpt(v);

    std::vector<VarIndex> new_parents;
    for (auto p : child_cpt.parents()) {
      if (p == v) {
        for (auto q : v_cpt.parents()) {
          if (std::find(child_cpt.parents().begin(), child_cpt.parents().end(), q) == child_cpt.parents().end() &&
              std::find(new_parents.begin(), new_parents.end(), q) == new_parents.end()) {
            new_parents.push_back(q);
          }
        }
      } else {
        new_parents.push_back(p);
      }
    }

    CptSpec merged;
    merged.owner = net.variable(child).name;
    for (auto p : new_parents) merged.parents.push_back(net.variable(p).name);

    std::size_t rows = 1;
    for (auto p : new_parents) rows *= net.variable(p).cardinality();
    for (std::size_t r = 0; r < rows; ++r) {
      Assignment a(net.size());
      std::size_t rem = r;
      for (std::size_t i = new_parents.size(); i-- > 0;) {
        const auto card = net.variable(new_parents[i]).cardinality();
        a[new_parents[i]] = static_cast<StateIndex>(rem % card);
        rem /= card;
      }
      std::vector<double> p(child_cpt.cardinality(), 0.0);
      const std::size_t v_row = v_cpt.row_index(a);
      for (std::size_t i = 0; i < v_cpt.cardinality(); ++i) {
        a[v] = static_cast<StateIndex>(i);
        const double w = v_cpt(v_row, static_cast<StateIndex>(i));
        const std::size_t c_row = child_cpt.row_index(a);
        for (std::size_t x = 0; x < p.size(); ++x) p[x] += w * child_cpt(c_row, static_cast<StateIndex>(x));
      }
      a[v] = kUnset;
      merged.rows.push_back({net.name(a), std::move(p)});
    }
    for (auto& cs : cpts) {
      if (cs.owner == merged.owner) cs = merged;
    }
  }

  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& cs : cpts) {
    for (const auto& p : cs.parents) edges.emplace_back(p, cs.owner);
  }
  spec.edges = std::move(edges);
  spec.cpts = std::move(cpts);
  spec.variables.erase(spec.variables.begin() + static_cast<std::ptrdiff_t>(v));
  return Network::build(spec);
}

}  // namespace

Network remove_variables(const Network& network, const std::vector<std::string>& names) {
  Network cur = network;
  std::set<std::string> pending(names.begin(), names.end());
  for (const auto& n : pending) (void)network.index_of(n);
  while (!pending.empty()) {
    std::optional<VarIndex> pick;
    for (VarIndex v = 0; v < cur.size() && !pick; ++v) {
      if (pending.count(cur.variable(v).name) && cur.children(v).size() <= 1) pick = v;
    }
    if (!pick) {
      std::string rest;
      for (const auto& n : pending) rest += (rest.empty() ? "" : ", ") + n;
      throw Error(ErrorKind::IgnoredNotRemovable,
                  "ignored variables {" + rest + "} each have several children and cannot be summed out exactly");
    }
    pending.erase(cur.variable(*pick).name);
    cur = remove_one(cur, *pick);
  }
  return cur;
}

FeoScenario FeoScenario::with_network(Network network) const {
  FeoScenario out = *this;
  out.network_ = std::move(network);
  return out;
}

FeoScenario assign_roles(const Network& network, const RoleAssignment& roles) {
  std::map<std::string, std::vector<std::string>> role_of;
  auto collect = [&](const std::vector<std::string>& names, const char* role) {
    for (const auto& n : names) {
      (void)network.index_of(n);
      role_of[n].push_back(role);
    }
  };
  collect(roles.justified, "justified");
  collect(roles.sensitive, "sensitive");
  collect(roles.other, "other");
  collect(roles.ignored, "ignored");

  for (const auto& [name, rs] : role_of) {
    if (rs.size() > 1) {
      std::string list;
      for (const auto& r : rs) list += (list.empty() ? "" : ", ") + r;
      throw Error(ErrorKind::RoleOverlap, "variable '" + name + "' appears in several role sets (" + list + ")");
    }
  }
  for (const auto& v : network.variables()) {
    if (!role_of.count(v.name)) throw Error(ErrorKind::RoleOverlap, "variable '" + v.name + "' is not assigned a role");
  }

  auto in = [](const std::vector<std::string>& set, const std::string& n) {
    return std::find(set.begin(), set.end(), n) != set.end();
  };
  if (in(roles.sensitive, roles.control)) {
    throw Error(ErrorKind::ControlIsSensitive, "control '" + roles.control + "' is a sensitive variable");
  }
  if (roles.target.empty() || !network.find(roles.target)) {
    throw Error(ErrorKind::TargetMissing, "target '" + roles.target + "' is not a variable of the network");
  }
  if (!in(roles.other, roles.target)) {
    throw Error(ErrorKind::TargetMissing, "target '" + roles.target + "' must belong to the other variables");
  }
  if (roles.control.empty() || !network.find(roles.control)) {
    throw Error(ErrorKind::UnknownVariable, "control '" + roles.control + "' is not a variable of the network");
  }
  if (!in(roles.other, roles.control)) {
    throw Error(ErrorKind::InvalidDocument, "control '" + roles.control + "' must belong to the other variables");
  }
  if (roles.control == roles.target) throw Error(ErrorKind::InvalidDocument, "control and target must differ");
  if (roles.justified.empty()) throw Error(ErrorKind::InvalidDocument, "the justified set is empty");
  if (roles.sensitive.empty()) throw Error(ErrorKind::InvalidDocument, "the sensitive set is empty");

  Network reduced = roles.ignored.empty() ? network : remove_variables(network, roles.ignored);

  FeoScenario sc(std::move(reduced));
  const Network& net = sc.network_;
  sc.roles_ = roles;
  for (const auto& n : roles.justified) sc.justified_.push_back(net.index_of(n));
  for (const auto& n : roles.sensitive) sc.sensitive_.push_back(net.index_of(n));
  for (const auto& n : roles.other) sc.other_.push_back(net.index_of(n));
  sc.control_ = net.index_of(roles.control);
  sc.target_ = net.index_of(roles.target);

  auto desc = net.descendants(sc.control_);
  for (auto v : desc) {
    const auto& name = net.variable(v).name;
    if (in(roles.justified, name) || in(roles.sensitive, name)) {
      throw Error(ErrorKind::RoleDependsOnControl,
                  "'" + name + "' descends from control '" + roles.control + "'; justified and sensitive variables must not");
    }
  }
  const Cpt& c = net.cpt(sc.control_);
  const auto& cvar = net.variable(sc.control_);
  if (!roles.free_entries) {
    sc.free_.assign(c.values().size(), 1);
  } else {
    sc.free_.assign(c.values().size(), 0);
    for (const auto& fe : *roles.free_entries) {
      Assignment a(net.size());
      if (fe.given.size() != c.parents().size()) {
        throw Error(ErrorKind::UnknownFreeEntry,
                    "free entry " + format_assignment(fe.given) + " must assign exactly the parents of '" + cvar.name + "'");
      }
      for (const auto& [var, state] : fe.given) {
        auto v = net.find(var);
        if (!v || std::find(c.parents().begin(), c.parents().end(), *v) == c.parents().end()) {
          throw Error(ErrorKind::UnknownFreeEntry, "free entry names '" + var + "', which is not a parent of '" + cvar.name + "'");
        }
        auto s = net.variable(*v).state_index(state);
        if (!s) throw Error(ErrorKind::UnknownFreeEntry, "free entry: '" + state + "' is not a state of '" + var + "'");
        a[*v] = *s;
      }
      const std::size_t row = c.row_index(a);
      if (fe.states.empty()) {
        for (std::size_t k = 0; k < c.cardinality(); ++k) sc.free_[row * c.cardinality() + k] = 1;
      } else {
        for (const auto& st : fe.states) {
          auto s = cvar.state_index(st);
          if (!s) throw Error(ErrorKind::UnknownFreeEntry, "free entry: '" + st + "' is not a state of '" + cvar.name + "'");
          sc.free_[row * c.cardinality() + static_cast<std::size_t>(*s)] = 1;
        }
      }
    }
  }

  for (std::size_t r = 0; r < c.row_count(); ++r) {
    double fixed = 0.0;
    for (std::size_t k = 0; k < c.cardinality(); ++k) {
      if (!sc.free_[r * c.cardinality() + k]) fixed += c(r, static_cast<StateIndex>(k));
    }
    if (fixed > 1.0 + kCptSumTolerance) {
      throw Error(ErrorKind::OverfullRow, "fixed entries of row " + format_assignment(row_given(net, sc.control_, r)) + " exceed 1");
    }
  }
  return sc;
}

}  // namespace fairbn
