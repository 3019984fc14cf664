#include "fairbn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace fairbn {

double joint_probability(const Network& net, const Assignment& full) {
  if (full.size() != net.size() || !full.complete()) {
    std::string missing;
    for (VarIndex v = 0; v < net.size(); ++v) {
      if (v >= full.size() || !full.is_set(v)) missing += (missing.empty() ? "" : ", ") + net.variable(v).name;
    }
    throw Error(ErrorKind::IncompleteAssignment, "unassigned: " + missing);
  }
  double p = 1.0;
  for (VarIndex v = 0; v < net.size(); ++v) {
    const Cpt& cpt = net.cpt(v);
    p *= cpt(cpt.row_index(full), full[v]);
  }
  return p;
}

namespace {

std::vector<VarIndex> min_degree_order(std::vector<std::vector<VarIndex>> scopes, std::vector<VarIndex> to_eliminate) {
  std::vector<VarIndex> order;
  while (!to_eliminate.empty()) {
    std::size_t best = 0;
    std::size_t best_deg = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < to_eliminate.size(); ++i) {
      std::set<VarIndex> nbrs;
      for (const auto& s : scopes) {
        if (std::find(s.begin(), s.end(), to_eliminate[i]) != s.end()) nbrs.insert(s.begin(), s.end());
      }
      const std::size_t deg = nbrs.empty() ? 0 : nbrs.size() - 1;
      if (deg < best_deg || (deg == best_deg && to_eliminate[i] < to_eliminate[best])) {
        best = i;
        best_deg = deg;
      }
    }
    const VarIndex v = to_eliminate[best];
    order.push_back(v);
    to_eliminate.erase(to_eliminate.begin() + static_cast<std::ptrdiff_t>(best));
    std::set<VarIndex> merged;
    std::vector<std::vector<VarIndex>> rest;
    for (auto& s : scopes) {
      if (std::find(s.begin(), s.end(), v) != s.end()) {
        merged.insert(s.begin(), s.end());
      } else {
        rest.push_back(std::move(s));
      }
    }
    merged.erase(v);
    rest.emplace_back(merged.begin(), merged.end());
    scopes = std::move(rest);
  }
  return order;
}

}  // namespace

Factor eliminate(const Network& net, std::span<const VarIndex> keep, const Assignment& evidence) {
  for (auto k : keep) {
    if (evidence.is_set(k)) {
      throw Error(ErrorKind::InvalidDocument, "variable '" + net.variable(k).name + "' is both kept and observed");
    }
  }

  // Ancestral closure of the query: everything else is barren and sums to one.
  std::vector<char> relevant(net.size(), 0);
  std::vector<VarIndex> stack(keep.begin(), keep.end());
  for (VarIndex v = 0; v < net.size(); ++v) {
    if (evidence.is_set(v)) stack.push_back(v);
  }
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (relevant[v]) continue;
    relevant[v] = 1;
    for (auto p : net.parents(v)) stack.push_back(p);
  }

  std::vector<Factor> factors;
  std::vector<VarIndex> hidden;
  for (VarIndex v = 0; v < net.size(); ++v) {
    if (!relevant[v]) continue;
    factors.push_back(Factor::from_cpt(net, v).reduce(evidence));
    if (!evidence.is_set(v) && std::find(keep.begin(), keep.end(), v) == keep.end()) hidden.push_back(v);
  }

  std::vector<std::vector<VarIndex>> scopes;
  for (const auto& f : factors) scopes.emplace_back(f.scope().begin(), f.scope().end());
  for (auto v : min_degree_order(std::move(scopes), hidden)) {
    Factor prod = Factor::scalar(1.0);
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (f.contains(v)) {
        prod = prod.product(f);
      } else {
        rest.push_back(std::move(f));
      }
    }
    rest.push_back(prod.sum_out(v));
    factors = std::move(rest);
  }

  Factor result = Factor::scalar(1.0);
  for (const auto& f : factors) result = result.product(f);
  return result.reordered(keep);
}

double marginal(const Network& net, const Assignment& query) { return eliminate(net, {}, query).total(); }

double marginal(const Network& net, const NamedAssignment& query) { return marginal(net, net.resolve(query)); }

double conditional(const Network& net, const Assignment& target, const Assignment& evidence) {
  const double pe = marginal(net, evidence);
  if (!(pe > 0.0)) {
    throw Error(ErrorKind::ZeroEvidenceProbability, "P(" + format_assignment(net.name(evidence)) + ") = 0");
  }
  Assignment both;
  try {
    both = target.merged(evidence);
  } catch (const std::invalid_argument&) {
    return 0.0;
  }
  return marginal(net, both) / pe;
}

double conditional(const Network& net, const NamedAssignment& target, const NamedAssignment& evidence) {
  return conditional(net, net.resolve(target), net.resolve(evidence));
}

namespace enumeration {

Factor joint_marginal(const Network& net, std::span<const VarIndex> keep, const Assignment& evidence, Exec exec) {
  const auto joint = kernels::joint_table(net, exec);
  std::vector<std::size_t> cards;
  for (auto k : keep) cards.push_back(net.variable(k).cardinality());
  std::size_t out_n = 1;
  for (auto c : cards) out_n *= c;
  std::vector<double> out(out_n, 0.0);
  Assignment a(net.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    kernels::decode_joint(net, i, a);
    if (!evidence.consistent_with(a)) continue;
    std::size_t idx = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) idx = idx * cards[k] + static_cast<std::size_t>(a[keep[k]]);
    out[idx] += joint[i];
  }
  return Factor(std::vector<VarIndex>(keep.begin(), keep.end()), std::move(cards), std::move(out));
}

double marginal(const Network& net, const Assignment& query, Exec exec) {
  return joint_marginal(net, {}, query, exec).total();
}

double conditional(const Network& net, const Assignment& target, const Assignment& evidence) {
  const double pe = enumeration::marginal(net, evidence);
  if (!(pe > 0.0)) {
    throw Error(ErrorKind::ZeroEvidenceProbability, "P(" + format_assignment(net.name(evidence)) + ") = 0");
  }
  try {
    return enumeration::marginal(net, target.merged(evidence)) / pe;
  } catch (const std::invalid_argument&) {
    return 0.0;
  }
}

}  // namespace enumeration

// ---------------------------------------------------------------------------

namespace {

std::size_t joint_count(const Network& net, std::span<const VarIndex> vars) {
  std::size_t n = 1;
  for (auto v : vars) n *= net.variable(v).cardinality();
  return n;
}

void decode(const Network& net, std::span<const VarIndex> vars, std::size_t idx, Assignment& a) {
  for (std::size_t i = vars.size(); i-- > 0;) {
    const auto card = net.variable(vars[i]).cardinality();
    a[vars[i]] = static_cast<StateIndex>(idx % card);
    idx /= card;
  }
}

}  // namespace

ConditionalTable feo_table(const FeoScenario& sc) {
  const Network& net = sc.network();
  ConditionalTable table;
  for (auto j : sc.justified()) table.justified_vars.push_back(net.variable(j).name);
  for (auto s : sc.sensitive()) table.sensitive_vars.push_back(net.variable(s).name);
  const VarIndex q = sc.target();
  table.target = net.variable(q).name;
  const auto& qvar = net.variable(q);

  std::vector<VarIndex> keep(sc.justified().begin(), sc.justified().end());
  keep.insert(keep.end(), sc.sensitive().begin(), sc.sensitive().end());
  keep.push_back(q);
  const Factor joint = eliminate(net, keep, Assignment(net.size()));

  const std::size_t nj = joint_count(net, sc.justified());
  const std::size_t ns = joint_count(net, sc.sensitive());
  const std::size_t nq = qvar.cardinality();
  Assignment a(net.size());
  for (std::size_t ji = 0; ji < nj; ++ji) {
    decode(net, sc.justified(), ji, a);
    std::vector<double> anchor(nq, 0.0);
    for (std::size_t si = 0; si < ns; ++si) {
      decode(net, sc.sensitive(), si, a);
      std::vector<double> cell(nq);
      double pjs = 0.0;
      for (std::size_t k = 0; k < nq; ++k) {
        a[q] = static_cast<StateIndex>(k);
        cell[k] = joint.at(a);
        pjs += cell[k];
        anchor[k] += cell[k];
      }
      a[q] = kUnset;
      if (!(pjs > 0.0)) {
        throw Error(ErrorKind::ZeroEvidenceProbability, "P(" + format_assignment(net.name(a)) + ") = 0");
      }
      NamedAssignment jn, sn;
      for (auto v : sc.justified()) jn[net.variable(v).name] = net.variable(v).states[static_cast<std::size_t>(a[v])];
      for (auto v : sc.sensitive()) sn[net.variable(v).name] = net.variable(v).states[static_cast<std::size_t>(a[v])];
      for (std::size_t k = 0; k < nq; ++k) table.rows.push_back({jn, sn, qvar.states[k], cell[k] / pjs});
    }
    double pj = 0.0;
    for (auto x : anchor) pj += x;
    for (auto s : sc.sensitive()) a[s] = kUnset;
    if (!(pj > 0.0)) throw Error(ErrorKind::ZeroEvidenceProbability, "P(" + format_assignment(net.name(a)) + ") = 0");
    NamedAssignment jn;
    for (auto v : sc.justified()) jn[net.variable(v).name] = net.variable(v).states[static_cast<std::size_t>(a[v])];
    for (std::size_t k = 0; k < nq; ++k) table.rows.push_back({jn, std::nullopt, qvar.states[k], anchor[k] / pj});
  }
  return table;
}

double feo_deviation(const ConditionalTable& table) {
  double dev = 0.0;
  for (const auto& row : table.rows) {
    if (!row.sensitive) continue;
    for (const auto& anchor : table.rows) {
      if (!anchor.sensitive && anchor.justified == row.justified && anchor.target_state == row.target_state) {
        dev = std::max(dev, std::abs(row.probability - anchor.probability));
      }
    }
  }
  return dev;
}

double feo_deviation(const FeoScenario& scenario) { return feo_deviation(feo_table(scenario)); }

std::string to_csv(const ConditionalTable& table) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& j : table.justified_vars) os << j << ',';
  for (const auto& s : table.sensitive_vars) os << s << ',';
  os << table.target << ",probability\n";
  for (const auto& row : table.rows) {
    for (const auto& j : table.justified_vars) os << row.justified.at(j) << ',';
    for (const auto& s : table.sensitive_vars) os << (row.sensitive ? row.sensitive->at(s) : std::string("*")) << ',';
    os << row.target_state << ',' << row.probability << '\n';
  }
  return os.str();
}

}  // namespace fairbn
