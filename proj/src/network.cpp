#include "fairbn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fairbn {

std::optional<StateIndex> Variable::state_index(std::string_view label) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == label) return static_cast<StateIndex>(i);
  }
  return std::nullopt;
}

bool Assignment::complete() const {
  return std::none_of(states_.begin(), states_.end(), [](StateIndex s) { return s == kUnset; });
}

bool Assignment::empty() const {
  return std::all_of(states_.begin(), states_.end(), [](StateIndex s) { return s == kUnset; });
}

bool Assignment::consistent_with(const Assignment& other) const {
  for (std::size_t v = 0; v < states_.size(); ++v) {
    if (states_[v] != kUnset && (v >= other.states_.size() || states_[v] != other.states_[v])) return false;
  }
  return true;
}

Assignment Assignment::merged(const Assignment& other) const {
  Assignment out = *this;
  if (out.states_.size() < other.states_.size()) out.states_.resize(other.states_.size(), kUnset);
  for (std::size_t v = 0; v < other.states_.size(); ++v) {
    if (other.states_[v] == kUnset) continue;
    if (out.states_[v] != kUnset && out.states_[v] != other.states_[v]) {
      throw std::invalid_argument("conflicting assignments");
    }
    out.states_[v] = other.states_[v];
  }
  return out;
}

std::string format_assignment(const NamedAssignment& a) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [k, v] : a) {
    if (!first) os << ", ";
    os << k << '=' << v;
    first = false;
  }
  os << '}';
  return os.str();
}

// ---------------------------------------------------------------------------

Cpt::Cpt(VarIndex owner, std::vector<VarIndex> parents, std::vector<std::size_t> parent_cards,
         std::size_t cardinality, std::vector<double> values)
    : owner_(owner),
      parents_(std::move(parents)),
      parent_cards_(std::move(parent_cards)),
      card_(cardinality),
      rows_(std::accumulate(parent_cards_.begin(), parent_cards_.end(), std::size_t{1}, std::multiplies<>())),
      values_(std::move(values)) {
  if (values_.size() != rows_ * card_) throw std::invalid_argument("Cpt: value count does not match shape");
}

std::size_t Cpt::row_index(const Assignment& a) const {
  std::size_t r = 0;
  for (std::size_t i = 0; i < parents_.size(); ++i) {
    r = r * parent_cards_[i] + static_cast<std::size_t>(a[parents_[i]]);
  }
  return r;
}

std::vector<StateIndex> Cpt::row_states(std::size_t r) const {
  std::vector<StateIndex> out(parents_.size());
  for (std::size_t i = parents_.size(); i-- > 0;) {
    out[i] = static_cast<StateIndex>(r % parent_cards_[i]);
    r /= parent_cards_[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void add(ValidationReport& report, ErrorKind kind, std::string msg) { report.push_back({kind, std::move(msg)}); }

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

ValidationReport validate(const NetworkSpec& spec, bool require_cpts) {
  ValidationReport report;
  std::unordered_map<std::string, std::size_t> index;

  for (std::size_t i = 0; i < spec.variables.size(); ++i) {
    const auto& var = spec.variables[i];
    if (var.name.empty()) add(report, ErrorKind::InvalidDocument, "variable #" + std::to_string(i) + " has an empty name");
    if (!index.emplace(var.name, i).second) add(report, ErrorKind::DuplicateName, "variable '" + var.name + "' declared twice");
    if (var.states.size() < 2) {
      add(report, ErrorKind::InvalidDocument, "variable '" + var.name + "' needs at least 2 states");
    }
    std::set<std::string> seen;
    for (const auto& s : var.states) {
      if (!seen.insert(s).second) add(report, ErrorKind::DuplicateName, "state '" + s + "' repeated in variable '" + var.name + "'");
    }
  }

  const std::size_t n = spec.variables.size();
  std::vector<std::set<std::size_t>> in_edges(n);
  std::vector<std::vector<std::size_t>> out_edges(n);
  std::set<std::pair<std::size_t, std::size_t>> edge_set;
  for (const auto& [from, to] : spec.edges) {
    auto f = index.find(from);
    auto t = index.find(to);
    if (f == index.end() || t == index.end()) {
      add(report, ErrorKind::DanglingEdge,
          "edge " + from + " -> " + to + " names undeclared variable '" + (f == index.end() ? from : to) + "'");
      continue;
    }
    if (!edge_set.emplace(f->second, t->second).second) {
      add(report, ErrorKind::DuplicateName, "edge " + from + " -> " + to + " declared twice");
      continue;
    }
    in_edges[t->second].insert(f->second);
    out_edges[f->second].push_back(t->second);
  }

  {
    std::vector<std::size_t> indeg(n);
    for (std::size_t v = 0; v < n; ++v) indeg[v] = in_edges[v].size();
    std::vector<std::size_t> stack;
    for (std::size_t v = 0; v < n; ++v) {
      if (indeg[v] == 0) stack.push_back(v);
    }
    std::size_t visited = 0;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      ++visited;
      for (auto c : out_edges[v]) {
        if (--indeg[c] == 0) stack.push_back(c);
      }
    }
    if (visited != n) {
      std::string members;
      for (std::size_t v = 0; v < n; ++v) {
        if (indeg[v] > 0) members += (members.empty() ? "" : ", ") + spec.variables[v].name;
      }
      add(report, ErrorKind::CycleDetected, "graph contains a cycle through {" + members + "}");
    }
  }

  if (!require_cpts) return report;

  std::vector<int> cpt_count(n, 0);
  for (const auto& cpt : spec.cpts) {
    auto o = index.find(cpt.owner);
    if (o == index.end()) {
      add(report, ErrorKind::MalformedCpt, "CPT for undeclared variable '" + cpt.owner + "'");
      continue;
    }
    const std::size_t owner = o->second;
    if (++cpt_count[owner] > 1) {
      add(report, ErrorKind::DuplicateName, "variable '" + cpt.owner + "' has more than one CPT");
      continue;
    }
    const auto& var = spec.variables[owner];

    std::vector<std::size_t> parents;
    bool parents_ok = true;
    std::set<std::size_t> parent_set;
    for (const auto& p : cpt.parents) {
      auto pi = index.find(p);
      if (pi == index.end()) {
        add(report, ErrorKind::MalformedCpt, "CPT of '" + cpt.owner + "' lists undeclared parent '" + p + "'");
        parents_ok = false;
        continue;
      }
      if (!parent_set.insert(pi->second).second) {
        add(report, ErrorKind::MalformedCpt, "CPT of '" + cpt.owner + "' lists parent '" + p + "' twice");
        parents_ok = false;
      }
      parents.push_back(pi->second);
    }
    if (parents_ok && parent_set != in_edges[owner]) {
      add(report, ErrorKind::MalformedCpt, "CPT parents of '" + cpt.owner + "' do not match its in-edges");
      parents_ok = false;
    }
    if (!parents_ok) continue;

    std::size_t rows = 1;
    for (auto p : parents) rows *= std::max<std::size_t>(1, spec.variables[p].states.size());
    std::vector<int> row_seen(rows, 0);

    for (const auto& row : cpt.rows) {
      const std::string where = "CPT of '" + cpt.owner + "' row " + format_assignment(row.given);
      if (row.given.size() != parents.size()) {
        add(report, ErrorKind::MalformedCpt, where + ": given must assign exactly the parents");
        continue;
      }
      std::size_t r = 0;
      bool row_ok = true;
      for (auto p : parents) {
        const auto& pv = spec.variables[p];
        auto it = row.given.find(pv.name);
        if (it == row.given.end()) {
          add(report, ErrorKind::MalformedCpt, where + ": parent '" + pv.name + "' unassigned");
          row_ok = false;
          break;
        }
        auto s = pv.state_index(it->second);
        if (!s) {
          add(report, ErrorKind::UnknownState, where + ": '" + it->second + "' is not a state of '" + pv.name + "'");
          row_ok = false;
          break;
        }
        r = r * pv.states.size() + static_cast<std::size_t>(*s);
      }
      if (!row_ok) continue;
      if (++row_seen[r] > 1) {
        add(report, ErrorKind::MalformedCpt, where + ": duplicate row");
        continue;
      }
      if (row.p.size() != var.states.size()) {
        add(report, ErrorKind::MalformedCpt,
            where + ": expected " + std::to_string(var.states.size()) + " probabilities, got " + std::to_string(row.p.size()));
        continue;
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < row.p.size(); ++k) {
        const double x = row.p[k];
        if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
          add(report, ErrorKind::MalformedCpt,
              where + ": entry for state '" + var.states[k] + "' = " + fmt_double(x) + " is outside [0,1]");
        }
        sum += x;
      }
      if (std::abs(sum - 1.0) > kCptSumTolerance) {
        add(report, ErrorKind::MalformedCpt, where + ": sum=" + fmt_double(sum));
      }
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (row_seen[r] == 0) {
        NamedAssignment g;
        std::size_t rem = r;
        for (std::size_t i = parents.size(); i-- > 0;) {
          const auto& pv = spec.variables[parents[i]];
          g[pv.name] = pv.states[rem % pv.states.size()];
          rem /= pv.states.size();
        }
        add(report, ErrorKind::MalformedCpt, "CPT of '" + cpt.owner + "' row " + format_assignment(g) + " missing");
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (cpt_count[v] == 0) add(report, ErrorKind::MalformedCpt, "variable '" + spec.variables[v].name + "' has no CPT");
  }
  return report;
}

// ---------------------------------------------------------------------------

Network Network::build(const NetworkSpec& spec) {
  auto report = validate(spec);
  if (!report.empty()) {
    std::string msg;
    for (const auto& issue : report) msg += (msg.empty() ? "" : "; ") + issue.message;
    throw Error(report.front().kind, msg);
  }

  Network net;
  net.vars_ = spec.variables;
  const std::size_t n = net.vars_.size();
  for (std::size_t i = 0; i < n; ++i) net.by_name_.emplace(net.vars_[i].name, i);

  net.cpts_.resize(n);
  for (const auto& cs : spec.cpts) {
    const VarIndex owner = net.by_name_.at(cs.owner);
    std::vector<VarIndex> parents;
    std::vector<std::size_t> cards;
    for (const auto& p : cs.parents) {
      parents.push_back(net.by_name_.at(p));
      cards.push_back(net.vars_[parents.back()].cardinality());
    }
    const std::size_t card = net.vars_[owner].cardinality();
    std::size_t rows = 1;
    for (auto c : cards) rows *= c;
    std::vector<double> values(rows * card);
    for (const auto& row : cs.rows) {
      std::size_t r = 0;
      for (std::size_t i = 0; i < parents.size(); ++i) {
        r = r * cards[i] + static_cast<std::size_t>(*net.vars_[parents[i]].state_index(row.given.at(cs.parents[i])));
      }
      std::copy(row.p.begin(), row.p.end(), values.begin() + static_cast<std::ptrdiff_t>(r * card));
    }
    net.cpts_[owner] = Cpt(owner, std::move(parents), std::move(cards), card, std::move(values));
  }

  net.children_.assign(n, {});
  for (VarIndex v = 0; v < n; ++v) {
    for (auto p : net.cpts_[v].parents()) {
      net.children_[p].push_back(v);
      net.edges_.emplace_back(p, v);
    }
  }
  for (auto& c : net.children_) std::sort(c.begin(), c.end());

  // Kahn's algorithm; the ready set is ordered by declaration index.
  std::vector<std::size_t> indeg(n);
  for (VarIndex v = 0; v < n; ++v) indeg[v] = net.cpts_[v].parents().size();
  std::priority_queue<VarIndex, std::vector<VarIndex>, std::greater<>> ready;
  for (VarIndex v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push(v);
  }
  while (!ready.empty()) {
    auto v = ready.top();
    ready.pop();
    net.topo_.push_back(v);
    for (auto c : net.children_[v]) {
      if (--indeg[c] == 0) ready.push(c);
    }
  }
  return net;
}

std::optional<VarIndex> Network::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

VarIndex Network::index_of(std::string_view name) const {
  auto v = find(name);
  if (!v) throw Error(ErrorKind::UnknownVariable, "no variable named '" + std::string(name) + "'");
  return *v;
}

Assignment Network::resolve(const NamedAssignment& named) const {
  Assignment a(size());
  for (const auto& [var, state] : named) {
    const VarIndex v = index_of(var);
    auto s = vars_[v].state_index(state);
    if (!s) throw Error(ErrorKind::UnknownState, "'" + state + "' is not a state of '" + var + "'");
    a[v] = *s;
  }
  return a;
}

NamedAssignment Network::name(const Assignment& a) const {
  NamedAssignment out;
  for (VarIndex v = 0; v < a.size(); ++v) {
    if (a.is_set(v)) out[vars_[v].name] = vars_[v].states[static_cast<std::size_t>(a[v])];
  }
  return out;
}

std::size_t Network::joint_size() const {
  std::size_t total = 1;
  for (const auto& v : vars_) total *= v.cardinality();
  return total;
}

std::vector<VarIndex> Network::descendants(VarIndex v) const {
  std::vector<char> seen(size(), 0);
  std::vector<VarIndex> stack(children_[v].begin(), children_[v].end());
  std::vector<VarIndex> out;
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    if (seen[u]) continue;
    seen[u] = 1;
    out.push_back(u);
    for (auto c : children_[u]) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Network Network::with_cpt_values(VarIndex v, std::vector<double> values) const {
  const Cpt& old = cpts_[v];
  if (values.size() != old.values().size()) {
    throw Error(ErrorKind::ValidationFailed, "replacement CPT for '" + vars_[v].name + "' has the wrong size");
  }
  for (std::size_t r = 0; r < old.row_count(); ++r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < old.cardinality(); ++k) {
      const double x = values[r * old.cardinality() + k];
      if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
        throw Error(ErrorKind::ValidationFailed, "replacement CPT for '" + vars_[v].name + "' has entry " + fmt_double(x) +
                                                     " in row " + format_assignment(row_given(*this, v, r)));
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > kCptSumTolerance) {
      throw Error(ErrorKind::ValidationFailed, "replacement CPT for '" + vars_[v].name + "' row " +
                                                   format_assignment(row_given(*this, v, r)) + " sums to " + fmt_double(sum));
    }
  }
  Network out = *this;
  out.cpts_[v] = Cpt(v, std::vector<VarIndex>(old.parents().begin(), old.parents().end()),
                     std::vector<std::size_t>(old.parent_cardinalities().begin(), old.parent_cardinalities().end()),
                     old.cardinality(), std::move(values));
  return out;
}

NetworkSpec Network::to_spec() const {
  NetworkSpec spec;
  spec.variables = vars_;
  for (const auto& [p, c] : edges_) spec.edges.emplace_back(vars_[p].name, vars_[c].name);
  for (VarIndex v = 0; v < size(); ++v) {
    const Cpt& cpt = cpts_[v];
    CptSpec cs;
    cs.owner = vars_[v].name;
    for (auto p : cpt.parents()) cs.parents.push_back(vars_[p].name);
    for (std::size_t r = 0; r < cpt.row_count(); ++r) {
      auto row = cpt.row(r);
      cs.rows.push_back({row_given(*this, v, r), std::vector<double>(row.begin(), row.end())});
    }
    spec.cpts.push_back(std::move(cs));
  }
  return spec;
}

NamedAssignment row_given(const Network& net, VarIndex v, std::size_t row) {
  const Cpt& cpt = net.cpt(v);
  auto states = cpt.row_states(row);
  NamedAssignment g;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& pv = net.variable(cpt.parents()[i]);
    g[pv.name] = pv.states[static_cast<std::size_t>(states[i])];
  }
  return g;
}

}  // namespace fairbn
