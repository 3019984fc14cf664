#include "fairbn/feo_system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fairbn/inference.hpp"

namespace fairbn {

std::vector<double> ParameterIndex::cpt_values(std::span<const double> theta) const {
  std::vector<double> out(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    double v = entries[e].constant;
    for (auto [k, coef] : entries[e].terms) v += coef * theta[k];
    out[e] = v;
  }
  return out;
}

double LinearForm::eval(std::span<const double> theta) const {
  double v = constant;
  for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * theta[k];
  return v;
}

ParameterIndex enumerate_free_parameters(const FeoScenario& sc) {
  const Network& net = sc.network();
  const Cpt& cpt = net.cpt(sc.control());
  ParameterIndex idx;
  idx.control = sc.control();
  idx.cardinality = cpt.cardinality();
  idx.rows.resize(cpt.row_count());
  idx.entries.resize(cpt.values().size());
  const auto card = static_cast<StateIndex>(cpt.cardinality());

  for (std::size_t r = 0; r < cpt.row_count(); ++r) {
    RowLayout& row = idx.rows[r];
    bool all_free = true;
    for (StateIndex s = 0; s < card; ++s) {
      if (sc.is_free(r, s)) continue;
      all_free = false;
      row.fixed_mass += cpt(r, s);
    }
    if (row.fixed_mass > 1.0 + kCptSumTolerance) {
      std::ostringstream os;
      os << "fixed entries of " << net.variable(idx.control).name << " row "
         << format_assignment(row_given(net, idx.control, r)) << " sum to " << row.fixed_mass;
      throw Error(ErrorKind::OverfullRow, os.str());
    }
    row.implied_reference = all_free;
    for (StateIndex s = all_free ? 1 : 0; s < card; ++s) {
      if (!sc.is_free(r, s)) continue;
      row.params.push_back(idx.params.size());
      idx.params.push_back({r, s});
      idx.labels.push_back(net.variable(idx.control).name + "=" + net.variable(idx.control).states[static_cast<std::size_t>(s)] +
                           " | " + format_assignment(row_given(net, idx.control, r)));
      idx.theta0.push_back(cpt(r, s));
    }

    const std::size_t base = r * cpt.cardinality();
    std::size_t next = 0;
    for (StateIndex s = 0; s < card; ++s) {
      AffineEntry& e = idx.entries[base + static_cast<std::size_t>(s)];
      if (all_free && s == 0) {
        e.constant = 1.0;
        for (auto k : row.params) e.terms.emplace_back(k, -1.0);
      } else if (sc.is_free(r, s)) {
        e.terms.emplace_back(row.params[next++], 1.0);
      } else {
        e.constant = cpt(r, s);
      }
    }
  }
  return idx;
}

std::string describe(const MarginalConstraint& c) {
  std::ostringstream os;
  const std::string event = format_assignment(c.event);
  os << "P(" << event.substr(1, event.size() - 2) << ")";
  switch (c.op) {
    case MarginalConstraint::Op::eq: os << " = " << c.lo; break;
    case MarginalConstraint::Op::le: os << " <= " << c.hi; break;
    case MarginalConstraint::Op::ge: os << " >= " << c.lo; break;
    case MarginalConstraint::Op::interval: os << " in [" << c.lo << ", " << c.hi << "]"; break;
  }
  return os.str();
}

namespace kernels {

namespace {

struct BucketPlan {
  std::vector<VarIndex> vars;  // ancestral closure, declaration order
  std::vector<std::size_t> cards;
  std::vector<std::size_t> key_pos;  // position of each key within `vars`
  std::size_t count = 1;
  std::size_t width = 0;
  std::size_t keys = 1;
  bool has_control = false;
};

BucketPlan plan_buckets(const Network& net, VarIndex control, std::span<const VarIndex> keys) {
  std::vector<char> in(net.size(), 0);
  std::vector<VarIndex> stack(keys.begin(), keys.end());
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    if (in[v]) continue;
    in[v] = 1;
    for (auto p : net.parents(v)) stack.push_back(p);
  }
  BucketPlan plan;
  for (VarIndex v = 0; v < net.size(); ++v) {
    if (!in[v]) continue;
    plan.vars.push_back(v);
    plan.cards.push_back(net.variable(v).cardinality());
    plan.count *= net.variable(v).cardinality();
  }
  for (auto k : keys) {
    plan.key_pos.push_back(static_cast<std::size_t>(std::find(plan.vars.begin(), plan.vars.end(), k) - plan.vars.begin()));
    plan.keys *= net.variable(k).cardinality();
  }
  plan.has_control = in[control] != 0;
  plan.width = net.cpt(control).values().size() + 1;
  return plan;
}

void accumulate(const Network& net, VarIndex control, const BucketPlan& plan, std::size_t lo, std::size_t hi,
                double* out) {
  Assignment a(net.size());
  const Cpt& ccpt = net.cpt(control);
  for (std::size_t i = lo; i < hi; ++i) {
    std::size_t rest = i;
    for (std::size_t k = plan.vars.size(); k-- > 0;) {
      a[plan.vars[k]] = static_cast<StateIndex>(rest % plan.cards[k]);
      rest /= plan.cards[k];
    }
    double w = 1.0;
    for (auto v : plan.vars) {
      if (v == control) continue;
      const Cpt& cpt = net.cpt(v);
      w *= cpt(cpt.row_index(a), a[v]);
    }
    std::size_t key = 0;
    for (std::size_t k = 0; k < plan.key_pos.size(); ++k) {
      key = key * plan.cards[plan.key_pos[k]] + static_cast<std::size_t>(a[plan.vars[plan.key_pos[k]]]);
    }
    const std::size_t col = plan.has_control
                                ? ccpt.row_index(a) * ccpt.cardinality() + static_cast<std::size_t>(a[control])
                                : plan.width - 1;
    out[key * plan.width + col] += w;
  }
}

}  // namespace

std::vector<double> control_buckets(const Network& net, VarIndex control, std::span<const VarIndex> keys, Exec exec) {
  const BucketPlan plan = plan_buckets(net, control, keys);
  const std::size_t size = plan.keys * plan.width;
  std::vector<double> out(size, 0.0);
  if (exec == Exec::serial) {
    accumulate(net, control, plan, 0, plan.count, out.data());
    return out;
  }

  // Chunk partials are merged in chunk order, a block at a time, so the result
  // does not depend on the thread count.
  const std::size_t chunks = (plan.count + kChunk - 1) / kChunk;
  constexpr std::size_t kBlock = 64;
  std::vector<double> partial;
  for (std::size_t first = 0; first < chunks; first += kBlock) {
    const std::size_t n = std::min(kBlock, chunks - first);
    partial.assign(n * size, 0.0);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < static_cast<long long>(n); ++c) {
      const std::size_t lo = (first + static_cast<std::size_t>(c)) * kChunk;
      accumulate(net, control, plan, lo, std::min(plan.count, lo + kChunk), partial.data() + static_cast<std::size_t>(c) * size);
    }
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < size; ++i) out[i] += partial[c * size + i];
    }
  }
  return out;
}

}  // namespace kernels

namespace {

LinearForm form_of(const ParameterIndex& idx, const double* bucket, std::size_t width) {
  LinearForm f;
  f.a.assign(idx.size(), 0.0);
  for (std::size_t e = 0; e + 1 < width; ++e) {
    const double w = bucket[e];
    if (w == 0.0) continue;
    f.constant += w * idx.entries[e].constant;
    for (auto [k, coef] : idx.entries[e].terms) f.a[k] += w * coef;
  }
  f.constant += bucket[width - 1];
  return f;
}

NamedAssignment names_of(const Network& net, std::span<const VarIndex> vars, std::size_t idx) {
  NamedAssignment out;
  for (std::size_t i = vars.size(); i-- > 0;) {
    const auto& var = net.variable(vars[i]);
    out[var.name] = var.states[idx % var.cardinality()];
    idx /= var.cardinality();
  }
  return out;
}

std::size_t joint_count(const Network& net, std::span<const VarIndex> vars) {
  std::size_t n = 1;
  for (auto v : vars) n *= net.variable(v).cardinality();
  return n;
}

}  // namespace

LinearForm linearize_marginal(const FeoScenario& sc, const ParameterIndex& idx, const NamedAssignment& event,
                              Exec exec) {
  const Network& net = sc.network();
  const Assignment a = net.resolve(event);
  std::vector<VarIndex> keys;
  std::size_t key = 0;
  for (VarIndex v = 0; v < net.size(); ++v) {
    if (!a.is_set(v)) continue;
    keys.push_back(v);
    key = key * net.variable(v).cardinality() + static_cast<std::size_t>(a[v]);
  }
  const auto buckets = kernels::control_buckets(net, idx.control, keys, exec);
  const std::size_t width = net.cpt(idx.control).values().size() + 1;
  return form_of(idx, buckets.data() + key * width, width);
}

FeoSystem build_feo_system(const FeoScenario& sc, const ParameterIndex& idx, Exec exec) {
  const Network& net = sc.network();
  FeoSystem sys;
  sys.index = idx;
  const std::size_t n = idx.size();

  for (std::size_t r = 0; r < idx.rows.size(); ++r) {
    const RowLayout& row = idx.rows[r];
    if (row.params.empty()) continue;
    const std::string given = format_assignment(row_given(net, idx.control, r));
    LinearConstraint c;
    c.a.assign(n, 0.0);
    for (auto k : row.params) c.a[k] = 1.0;
    if (row.implied_reference) {
      c.upper = 1.0;
      c.kind = ConstraintKind::row_sum;
      c.label = "row sum " + net.variable(idx.control).name + " | " + given;
    } else {
      c.lower = c.upper = std::max(0.0, 1.0 - row.fixed_mass);
      c.kind = ConstraintKind::simplex;
      c.label = "simplex " + net.variable(idx.control).name + " | " + given;
    }
    sys.constraints.push_back(std::move(c));
  }
  sys.lower.assign(n, 0.0);
  sys.upper.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const RowLayout& row = idx.rows[idx.params[k].row];
    sys.upper[k] = row.implied_reference ? 1.0 : std::max(0.0, 1.0 - row.fixed_mass);
  }

  const auto J = sc.justified();
  const auto S = sc.sensitive();
  const VarIndex q = sc.target();
  std::vector<VarIndex> js(J.begin(), J.end());
  js.insert(js.end(), S.begin(), S.end());
  std::vector<VarIndex> keys = js;
  keys.push_back(q);

  const Factor pjs = eliminate(net, js, Assignment(net.size()));
  const auto buckets = kernels::control_buckets(net, idx.control, keys, exec);
  const std::size_t width = net.cpt(idx.control).values().size() + 1;
  const std::size_t nj = joint_count(net, J);
  const std::size_t ns = joint_count(net, S);
  const std::size_t nq = net.variable(q).cardinality();

  std::vector<double> qj(width);
  for (std::size_t j = 0; j < nj; ++j) {
    double pj = 0.0;
    for (std::size_t s = 0; s < ns; ++s) pj += pjs.values()[j * ns + s];
    for (std::size_t s = 0; s < ns; ++s) {
      const double p_js = pjs.values()[j * ns + s];
      if (!(p_js > 0.0)) {
        auto cell = names_of(net, J, j);
        cell.merge(names_of(net, S, s));
        throw Error(ErrorKind::ZeroEvidenceProbability, "P(" + format_assignment(cell) + ") = 0");
      }
    }
    for (std::size_t k = 1; k < nq; ++k) {
      std::fill(qj.begin(), qj.end(), 0.0);
      for (std::size_t s = 0; s < ns; ++s) {
        const double* b = buckets.data() + ((j * ns + s) * nq + k) * width;
        for (std::size_t e = 0; e < width; ++e) qj[e] += b[e];
      }
      const LinearForm f_qj = form_of(idx, qj.data(), width);
      for (std::size_t s = 0; s < ns; ++s) {
        const double p_js = pjs.values()[j * ns + s];
        const LinearForm f_qjs = form_of(idx, buckets.data() + ((j * ns + s) * nq + k) * width, width);
        FeoEquation eq;
        eq.a.resize(n);
        for (std::size_t i = 0; i < n; ++i) eq.a[i] = p_js * f_qj.a[i] - pj * f_qjs.a[i];
        eq.b = -(p_js * f_qj.constant - pj * f_qjs.constant);
        eq.justified = names_of(net, J, j);
        eq.sensitive = names_of(net, S, s);
        eq.target_state = net.variable(q).states[k];
        eq.label = "FEO " + net.variable(q).name + "=" + eq.target_state + " | " + format_assignment(eq.justified) +
                   " vs " + format_assignment(eq.sensitive);
        sys.equations.push_back(std::move(eq));
      }
    }
  }
  return sys;
}

void add_feasibility_constraints(FeoSystem& sys, const FeoScenario& sc, std::span<const MarginalConstraint> constraints,
                                 Exec exec) {
  constexpr double kTol = 1e-12;
  for (const auto& mc : constraints) {
    if (!(mc.lo <= mc.hi) || mc.lo < 0.0 || mc.hi > 1.0) {
      throw Error(ErrorKind::InvalidDocument, "empty or out-of-range bound: " + describe(mc));
    }
    const LinearForm f = linearize_marginal(sc, sys.index, mc.event, exec);
    double amax = 0.0, lo_reach = f.constant, hi_reach = f.constant;
    for (std::size_t k = 0; k < f.a.size(); ++k) {
      amax = std::max(amax, std::abs(f.a[k]));
      lo_reach += f.a[k] * (f.a[k] > 0 ? sys.lower[k] : sys.upper[k]);
      hi_reach += f.a[k] * (f.a[k] > 0 ? sys.upper[k] : sys.lower[k]);
    }
    if (amax <= 1e-15) {
      if (f.constant < mc.lo - kTol || f.constant > mc.hi + kTol) {
        std::ostringstream os;
        os << describe(mc) << " does not depend on the free entries and evaluates to " << f.constant;
        throw Error(ErrorKind::ZeroCoefficientConstraint, os.str(), {describe(mc)});
      }
    } else if (hi_reach < mc.lo - kTol || lo_reach > mc.hi + kTol) {
      std::ostringstream os;
      os << describe(mc) << " is outside the attainable range [" << lo_reach << ", " << hi_reach << "]";
      throw Error(ErrorKind::InfeasibleConstraints, os.str(), {describe(mc)});
    }
    LinearConstraint c;
    c.a = f.a;
    c.kind = ConstraintKind::feasibility;
    c.label = describe(mc);
    switch (mc.op) {
      case MarginalConstraint::Op::eq: c.lower = c.upper = mc.lo - f.constant; break;
      case MarginalConstraint::Op::le: c.upper = mc.hi - f.constant; break;
      case MarginalConstraint::Op::ge: c.lower = mc.lo - f.constant; break;
      case MarginalConstraint::Op::interval:
        c.lower = mc.lo - f.constant;
        c.upper = mc.hi - f.constant;
        break;
    }
    sys.constraints.push_back(std::move(c));
  }
}

}  // namespace fairbn
