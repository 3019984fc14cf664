#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace fairbn::qp {

/// minimize 0.5 x'Hx + g'x  subject to  E x = e,  C x >= d.
/// H must be positive definite on the null space of E.
struct Problem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd E;
  Eigen::VectorXd e;
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
};

enum class Status { optimal, infeasible };

struct Result {
  Status status = Status::optimal;
  Eigen::VectorXd x;
  std::vector<std::size_t> active;    // rows of C active at x
  std::vector<std::size_t> conflict;  // rows of C in the detected conflict
  bool equalities_inconsistent = false;
  int iterations = 0;
};

/// Affine parameterization x = particular + basis * y of the solutions of E x = e.
/// Rows are normalized before the rank decision; `residual` is max |E x - e| at the
/// particular (least-squares) solution, so a large value means the rows conflict.
struct Elimination {
  Eigen::VectorXd particular;
  Eigen::MatrixXd basis;
  double residual = 0.0;
  Eigen::Index rank = 0;
};

Elimination eliminate_equalities(const Eigen::MatrixXd& E, const Eigen::VectorXd& e, Eigen::Index n,
                                 double rank_tol = 1e-10);

/// Goldfarb-Idnani dual active-set method on the null space of the equalities.
/// `feas_tol` is the allowed violation of a normalized inequality row and of the
/// equalities.
Result solve(const Problem& problem, double feas_tol = 1e-10);

}  // namespace fairbn::qp
