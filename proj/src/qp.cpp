#include "fairbn/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fairbn::qp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Elimination eliminate_equalities(const MatrixXd& E, const VectorXd& e, Index n, double rank_tol) {
  Elimination out;
  out.particular = VectorXd::Zero(n);
  std::vector<Index> rows;
  for (Index i = 0; i < E.rows(); ++i) {
    if (E.row(i).norm() > 0.0) {
      rows.push_back(i);
    } else {
      out.residual = std::max(out.residual, std::abs(e(i)));
    }
  }
  if (rows.empty()) {
    out.basis = MatrixXd::Identity(n, n);
    return out;
  }
  MatrixXd En(static_cast<Index>(rows.size()), n);
  VectorXd en(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double norm = E.row(rows[k]).norm();
    En.row(static_cast<Index>(k)) = E.row(rows[k]) / norm;
    en(static_cast<Index>(k)) = e(rows[k]) / norm;
  }
  Eigen::JacobiSVD<MatrixXd> svd(En, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double cutoff = rank_tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Index r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  const MatrixXd& U = svd.matrixU();
  const MatrixXd& V = svd.matrixV();
  VectorXd coef = U.leftCols(r).transpose() * en;
  for (Index i = 0; i < r; ++i) coef(i) /= sv(i);
  out.particular = V.leftCols(r) * coef;
  out.basis = V.rightCols(n - r);
  out.rank = r;
  out.residual = std::max(out.residual, (En * out.particular - en).cwiseAbs().maxCoeff());
  return out;
}

namespace {

// Dual active-set iterations on min 0.5 y'Gy + a'y s.t. N y >= b with unit-norm rows of N.
// Projections are recomputed from scratch every step; problems here have at most a
// few hundred unknowns, so clarity wins over rank-one factor updates.
struct Dual {
  Status status = Status::optimal;
  VectorXd y;
  std::vector<Index> active;
  std::vector<Index> conflict;
  int iterations = 0;
};

Dual goldfarb_idnani(const MatrixXd& G, const VectorXd& a, const MatrixXd& N, const VectorXd& b, double tol) {
  const Index k = G.rows();
  const Index m = N.rows();
  Dual out;
  Eigen::LLT<MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw std::runtime_error("qp: Hessian is not positive definite");
  const MatrixXd Ginv = llt.solve(MatrixXd::Identity(k, k));
  out.y = -Ginv * a;

  std::vector<Index>& A = out.active;
  std::vector<double> u;
  std::vector<char> in_active(static_cast<std::size_t>(m), 0);
  const int max_iter = static_cast<int>(50 * (k + m) + 1000);

  while (true) {
    Index p = -1;
    double worst = -tol;
    for (Index i = 0; i < m; ++i) {
      if (in_active[static_cast<std::size_t>(i)]) continue;
      const double s = N.row(i).dot(out.y) - b(i);
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) return out;

    const VectorXd np = N.row(p).transpose();
    const VectorXd Gnp = Ginv * np;
    double up = 0.0;
    while (true) {
      if (++out.iterations > max_iter) throw std::runtime_error("qp: iteration limit reached");
      const auto q = static_cast<Index>(A.size());
      VectorXd z = Gnp;
      VectorXd r(q);
      if (q > 0) {
        MatrixXd Nact(k, q);
        for (Index j = 0; j < q; ++j) Nact.col(j) = N.row(A[static_cast<std::size_t>(j)]).transpose();
        const MatrixXd GN = Ginv * Nact;
        const MatrixXd M = Nact.transpose() * GN;
        r = M.ldlt().solve(GN.transpose() * np);
        z -= GN * r;
      }

      double t1 = std::numeric_limits<double>::infinity();
      Index l = -1;
      for (Index j = 0; j < q; ++j) {
        if (r(j) > 1e-14) {
          const double t = u[static_cast<std::size_t>(j)] / r(j);
          if (t < t1) {
            t1 = t;
            l = j;
          }
        }
      }
      const double zn = z.dot(np);
      const double t2 = zn > 1e-13 * std::max(1.0, np.dot(Gnp)) ? -(np.dot(out.y) - b(p)) / zn
                                                                 : std::numeric_limits<double>::infinity();

      if (std::isinf(t1) && std::isinf(t2)) {
        out.status = Status::infeasible;
        out.conflict.push_back(p);
        for (Index j = 0; j < q; ++j) {
          if (std::abs(r(j)) > 1e-12) out.conflict.push_back(A[static_cast<std::size_t>(j)]);
        }
        std::sort(out.conflict.begin(), out.conflict.end());
        return out;
      }

      auto drop = [&](Index j) {
        in_active[static_cast<std::size_t>(A[static_cast<std::size_t>(j)])] = 0;
        A.erase(A.begin() + j);
        u.erase(u.begin() + j);
      };

      if (std::isinf(t2)) {
        for (Index j = 0; j < q; ++j) u[static_cast<std::size_t>(j)] -= t1 * r(j);
        up += t1;
        drop(l);
        continue;
      }
      const double t = std::min(t1, t2);
      out.y += t * z;
      for (Index j = 0; j < q; ++j) u[static_cast<std::size_t>(j)] -= t * r(j);
      up += t;
      if (t2 <= t1) {
        A.push_back(p);
        u.push_back(up);
        in_active[static_cast<std::size_t>(p)] = 1;
        break;
      }
      drop(l);
    }
  }
}

}  // namespace

Result solve(const Problem& pb, double feas_tol) {
  const Index n = pb.H.rows();
  Result res;
  const Elimination el = eliminate_equalities(pb.E, pb.e, n);
  res.x = el.particular;
  if (el.residual > feas_tol) {
    res.status = Status::infeasible;
    res.equalities_inconsistent = true;
    return res;
  }
  const MatrixXd& Z = el.basis;
  const VectorXd& x0 = el.particular;

  // Inequalities on the reduced variable y, with unit-norm rows.
  std::vector<Index> kept;
  for (Index i = 0; i < pb.C.rows(); ++i) {
    const VectorXd row = Z.transpose() * pb.C.row(i).transpose();
    const double scale = std::max(1.0, pb.C.row(i).norm());
    const double slack = pb.C.row(i).dot(x0) - pb.d(i);
    if (row.norm() <= 1e-12 * scale) {
      if (slack < -feas_tol * scale) {
        res.status = Status::infeasible;
        res.conflict = {static_cast<std::size_t>(i)};
        return res;
      }
      if (std::abs(slack) <= feas_tol * scale) res.active.push_back(static_cast<std::size_t>(i));
      continue;
    }
    kept.push_back(i);
  }

  const Index k = Z.cols();
  if (k == 0) {
    for (auto i : kept) {
      const double scale = std::max(1.0, pb.C.row(i).norm());
      const double slack = pb.C.row(i).dot(x0) - pb.d(i);
      if (slack < -feas_tol * scale) res.conflict.push_back(static_cast<std::size_t>(i));
      if (std::abs(slack) <= feas_tol * scale) res.active.push_back(static_cast<std::size_t>(i));
    }
    if (!res.conflict.empty()) res.status = Status::infeasible;
    std::sort(res.active.begin(), res.active.end());
    return res;
  }

  MatrixXd N(static_cast<Index>(kept.size()), k);
  VectorXd b(static_cast<Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const auto i = kept[j];
    const VectorXd row = Z.transpose() * pb.C.row(i).transpose();
    const double norm = row.norm();
    N.row(static_cast<Index>(j)) = row.transpose() / norm;
    b(static_cast<Index>(j)) = (pb.d(i) - pb.C.row(i).dot(x0)) / norm;
  }
  MatrixXd G = Z.transpose() * pb.H * Z;
  VectorXd a = Z.transpose() * (pb.H * x0 + pb.g);
  const double gscale = G.diagonal().cwiseAbs().maxCoeff();
  if (gscale > 0.0) {
    G /= gscale;
    a /= gscale;
  }

  const Dual dual = goldfarb_idnani(G, a, N, b, feas_tol);
  res.iterations = dual.iterations;
  res.x = x0 + Z * dual.y;
  if (dual.status == Status::infeasible) {
    res.status = Status::infeasible;
    for (auto j : dual.conflict) res.conflict.push_back(static_cast<std::size_t>(kept[static_cast<std::size_t>(j)]));
    return res;
  }
  for (auto j : dual.active) res.active.push_back(static_cast<std::size_t>(kept[static_cast<std::size_t>(j)]));
  std::sort(res.active.begin(), res.active.end());
  return res;
}

}  // namespace fairbn::qp
