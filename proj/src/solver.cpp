#include "fairbn/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fairbn/qp.hpp"

namespace fairbn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::exact: return "exact";
    case SolveStatus::closest: return "closest";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

double Solution::max_residual() const {
  double m = 0.0;
  for (auto r : residuals) m = std::max(m, std::abs(r));
  return m;
}

namespace {

constexpr double kSlackTol = 1e-9;

struct Assembled {
  Index n = 0;
  MatrixXd A;  // FEO equations
  VectorXd b;
  MatrixXd E;  // simplex and equality feasibility rows
  VectorXd e;
  std::vector<std::string> eq_labels;
  MatrixXd C;  // box and one-sided rows, C x >= d
  VectorXd d;
  std::vector<std::string> ineq_labels;
  VectorXd theta0;
};

Assembled assemble(const FeoSystem& sys) {
  Assembled as;
  as.n = static_cast<Index>(sys.index.size());
  const Index n = as.n;
  as.theta0 = Eigen::Map<const VectorXd>(sys.index.theta0.data(), n);

  as.A.resize(static_cast<Index>(sys.equations.size()), n);
  as.b.resize(static_cast<Index>(sys.equations.size()));
  for (std::size_t i = 0; i < sys.equations.size(); ++i) {
    as.A.row(static_cast<Index>(i)) = Eigen::Map<const VectorXd>(sys.equations[i].a.data(), n).transpose();
    as.b(static_cast<Index>(i)) = sys.equations[i].b;
  }

  std::vector<VectorXd> erows, crows;
  std::vector<double> evals, cvals;
  for (const auto& c : sys.constraints) {
    const VectorXd a = Eigen::Map<const VectorXd>(c.a.data(), n);
    if (c.equality()) {
      erows.push_back(a);
      evals.push_back(c.lower);
      as.eq_labels.push_back(c.label);
      continue;
    }
    if (std::isfinite(c.lower)) {
      crows.push_back(a);
      cvals.push_back(c.lower);
      as.ineq_labels.push_back(c.label + " (lower)");
    }
    if (std::isfinite(c.upper)) {
      crows.push_back(-a);
      cvals.push_back(-c.upper);
      as.ineq_labels.push_back(c.label + " (upper)");
    }
  }
  for (Index k = 0; k < n; ++k) {
    const auto& name = sys.index.labels[static_cast<std::size_t>(k)];
    VectorXd unit = VectorXd::Unit(n, k);
    crows.push_back(unit);
    cvals.push_back(sys.lower[static_cast<std::size_t>(k)]);
    as.ineq_labels.push_back("P(" + name + ") >= " + std::to_string(sys.lower[static_cast<std::size_t>(k)]));
    crows.push_back(-unit);
    cvals.push_back(-sys.upper[static_cast<std::size_t>(k)]);
    as.ineq_labels.push_back("P(" + name + ") <= " + std::to_string(sys.upper[static_cast<std::size_t>(k)]));
  }
  as.E.resize(static_cast<Index>(erows.size()), n);
  as.e.resize(static_cast<Index>(erows.size()));
  for (std::size_t i = 0; i < erows.size(); ++i) {
    as.E.row(static_cast<Index>(i)) = erows[i].transpose();
    as.e(static_cast<Index>(i)) = evals[i];
  }
  as.C.resize(static_cast<Index>(crows.size()), n);
  as.d.resize(static_cast<Index>(crows.size()));
  for (std::size_t i = 0; i < crows.size(); ++i) {
    as.C.row(static_cast<Index>(i)) = crows[i].transpose();
    as.d(static_cast<Index>(i)) = cvals[i];
  }
  return as;
}

double objective_at(const Assembled& as, const VectorXd& x) {
  if (as.A.rows() == 0) return 0.0;
  return (as.A * x - as.b).squaredNorm();
}

bool feasible(const Assembled& as, const VectorXd& x, double tol) {
  if (as.E.rows() > 0 && (as.E * x - as.e).cwiseAbs().maxCoeff() > tol) return false;
  if (as.C.rows() > 0 && (as.C * x - as.d).minCoeff() < -tol) return false;
  return true;
}

std::vector<std::string> conflict_labels(const Assembled& as, const qp::Result& r) {
  std::vector<std::string> out;
  for (auto i : r.conflict) out.push_back(as.ineq_labels[i]);
  for (const auto& l : as.eq_labels) out.push_back(l);
  return out;
}

[[noreturn]] void throw_infeasible(const Assembled& as, const qp::Result& r) {
  std::string msg = "constraints admit no valid CPT; conflicting: ";
  const auto labels = conflict_labels(as, r);
  for (std::size_t i = 0; i < labels.size(); ++i) msg += (i ? "; " : "") + labels[i];
  throw Error(ErrorKind::InfeasibleConstraints, msg, labels);
}

// Orthonormal basis (rows) of the row space of A.
MatrixXd row_space(const MatrixXd& A) {
  if (A.rows() == 0) return MatrixXd(0, A.cols());
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  Index r = 0;
  // Coefficients are probabilities, so an absolute floor also drops rows that are
  // zero up to rounding.
  const double cut = sv.size() > 0 ? std::max(1e-10 * sv(0), 1e-13) : 0.0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return svd.matrixV().leftCols(r).transpose();
}

// argmin |x - theta0|^2 subject to W x = w and the system's constraints.
qp::Result nearest(const Assembled& as, const MatrixXd& W, const VectorXd& w) {
  qp::Problem pb;
  pb.H = 2.0 * MatrixXd::Identity(as.n, as.n);
  pb.g = -2.0 * as.theta0;
  pb.E.resize(W.rows() + as.E.rows(), as.n);
  pb.e.resize(W.rows() + as.E.rows());
  pb.E << W, as.E;
  pb.e << w, as.e;
  pb.C = as.C;
  pb.d = as.d;
  return qp::solve(pb);
}

Solution finish(const FeoSystem& sys, const Assembled& as, const VectorXd& x) {
  Solution sol;
  sol.theta.assign(x.data(), x.data() + x.size());
  for (std::size_t k = 0; k < sol.theta.size(); ++k) {
    sol.theta[k] = std::clamp(sol.theta[k], sys.lower[k], sys.upper[k]);
  }
  const VectorXd xc = Eigen::Map<const VectorXd>(sol.theta.data(), as.n);
  if (as.A.rows() > 0) {
    const VectorXd r = as.A * xc - as.b;
    sol.residuals.assign(r.data(), r.data() + r.size());
    sol.objective = r.squaredNorm();
  }
  for (Index i = 0; i < as.C.rows(); ++i) {
    if (as.C.row(i).dot(xc) - as.d(i) <= kSlackTol) sol.active.push_back(as.ineq_labels[static_cast<std::size_t>(i)]);
  }
  for (const auto& c : sys.constraints) {
    if (c.kind == ConstraintKind::feasibility && c.equality()) sol.active.push_back(c.label);
  }
  sol.status = sol.max_residual() <= kExactTolerance ? SolveStatus::exact : SolveStatus::closest;
  return sol;
}

void check_deadline(const SolveOptions& opt) {
  if (opt.deadline && std::chrono::steady_clock::now() > *opt.deadline) {
    throw Error(ErrorKind::Timeout, "solve exceeded its time budget");
  }
}

// Minimizer of |A x - b|^2 on the affine hull of the face that is active at x.
// Proximal iterations converge slowly along weakly determined directions; this
// finishes the job once they have identified the face.
std::optional<VectorXd> polish(const Assembled& as, const VectorXd& x) {
  std::vector<Index> act;
  for (Index i = 0; i < as.C.rows(); ++i) {
    if (as.C.row(i).dot(x) - as.d(i) <= kSlackTol) act.push_back(i);
  }
  MatrixXd Ef(as.E.rows() + static_cast<Index>(act.size()), as.n);
  VectorXd ef(Ef.rows());
  Ef.topRows(as.E.rows()) = as.E;
  ef.head(as.E.rows()) = as.e;
  for (std::size_t k = 0; k < act.size(); ++k) {
    Ef.row(as.E.rows() + static_cast<Index>(k)) = as.C.row(act[k]);
    ef(as.E.rows() + static_cast<Index>(k)) = as.d(act[k]);
  }
  const qp::Elimination el = qp::eliminate_equalities(Ef, ef, as.n);
  if (el.residual > 1e-10) return std::nullopt;
  VectorXd y = VectorXd::Zero(el.basis.cols());
  if (el.basis.cols() > 0) {
    const MatrixXd AZ = as.A * el.basis;
    y = AZ.completeOrthogonalDecomposition().solve(as.b - as.A * el.particular);
  }
  // Stage 2 re-selects among minimizers, so the min-norm y is as good as any.
  const VectorXd out = el.particular + el.basis * y;
  if (!feasible(as, out, 1e-12)) return std::nullopt;
  return out;
}

}  // namespace

std::optional<Solution> solve_exact(const FeoSystem& sys, const SolveOptions& opt) {
  const Assembled as = assemble(sys);
  check_deadline(opt);
  MatrixXd W(0, as.n);
  VectorXd w(0);
  if (as.A.rows() > 0) {
    W = row_space(as.A);
    const VectorXd p = as.A.completeOrthogonalDecomposition().solve(as.b);
    if ((as.A * p - as.b).cwiseAbs().maxCoeff() > 1e-10) return std::nullopt;
    w = W * p;
  }
  const qp::Result r = nearest(as, W, w);
  if (r.status != qp::Status::optimal) return std::nullopt;
  Solution sol = finish(sys, as, r.x);
  if (sol.max_residual() > kExactTolerance) return std::nullopt;
  return sol;
}

Solution solve_closest(const FeoSystem& sys, const SolveOptions& opt) {
  const Assembled as = assemble(sys);
  check_deadline(opt);
  const double scale = as.A.rows() > 0 ? as.A.squaredNorm() : 0.0;

  if (scale == 0.0) {
    const qp::Result r = nearest(as, MatrixXd(0, as.n), VectorXd(0));
    if (r.status != qp::Status::optimal) throw_infeasible(as, r);
    return finish(sys, as, r.x);
  }

  // Stage 1: proximal point iterations on |A x - b|^2 with a shrinking proximal weight.
  const MatrixXd AtA = as.A.transpose() * as.A;
  const VectorXd Atb = as.A.transpose() * as.b;
  VectorXd x = as.theta0;
  qp::Problem pb;
  pb.E = as.E;
  pb.e = as.e;
  pb.C = as.C;
  pb.d = as.d;
  double rho = 1e-3 * scale;
  for (int it = 0; it < 400; ++it) {
    check_deadline(opt);
    pb.H = 2.0 * (AtA + rho * MatrixXd::Identity(as.n, as.n));
    pb.g = -2.0 * (Atb + rho * x);
    const qp::Result r = qp::solve(pb);
    if (r.status != qp::Status::optimal) throw_infeasible(as, r);
    const double step = (r.x - x).cwiseAbs().maxCoeff();
    x = r.x;
    if (rho <= 1e-10 * scale && step <= 1e-15) break;
    rho = std::max(rho * 0.1, 1e-10 * scale);
  }
  if (auto p = polish(as, x); p && objective_at(as, *p) <= objective_at(as, x)) x = *p;

  const double best = objective_at(as, x);
  // Near zero the iterate only says FEO is attainable; the exact solver then
  // supplies the tie-broken point.
  if (best <= 1e-12) {
    if (auto exact = solve_exact(sys, opt)) return *exact;
  }

  // Stage 2: among points with the same A x (hence the same objective), the one
  // nearest the current CPT.
  const MatrixXd W = row_space(as.A);
  const qp::Result r = nearest(as, W, W * x);
  if (r.status == qp::Status::optimal && feasible(as, r.x, 1e-10) &&
      objective_at(as, r.x) <= best + 1e-12 * std::max(1.0, best)) {
    x = r.x;
  }
  return finish(sys, as, x);
}

void check_feasible(const FeoSystem& sys) {
  const Assembled as = assemble(sys);
  const qp::Result r = nearest(as, MatrixXd(0, as.n), VectorXd(0));
  if (r.status != qp::Status::optimal) throw_infeasible(as, r);
}

Network apply_solution(const FeoScenario& sc, const ParameterIndex& idx, const Solution& sol) {
  std::vector<double> values = idx.cpt_values(sol.theta);
  const std::size_t card = idx.cardinality;
  for (auto& v : values) v = std::clamp(v, 0.0, 1.0);
  for (std::size_t r = 0; r < idx.rows.size(); ++r) {
    const RowLayout& row = idx.rows[r];
    if (row.params.empty()) continue;
    // Renormalize the free part of the row so rounding at the bounds cannot
    // push the row sum outside the CPT tolerance.
    double free_sum = 0.0;
    for (std::size_t s = 0; s < card; ++s) {
      if (sc.is_free(r, static_cast<StateIndex>(s))) free_sum += values[r * card + s];
    }
    const double target = row.implied_reference ? 1.0 : std::max(0.0, 1.0 - row.fixed_mass);
    if (free_sum > 0.0) {
      for (std::size_t s = 0; s < card; ++s) {
        if (sc.is_free(r, static_cast<StateIndex>(s))) values[r * card + s] *= target / free_sum;
      }
    }
  }
  return sc.network().with_cpt_values(idx.control, std::move(values));
}

}  // namespace fairbn
