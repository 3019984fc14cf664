#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairbn/feo_system.hpp"
#include "fairbn/network.hpp"
#include "fairbn/roles.hpp"

namespace fairbn {

/// Residual bound under which a solution counts as exact.
inline constexpr double kExactTolerance = 1e-8;

enum class SolveStatus { exact, closest, infeasible };

std::string_view to_string(SolveStatus status) noexcept;

struct Solution {
  std::vector<double> theta;
  SolveStatus status = SolveStatus::exact;
  std::vector<double> residuals;  // a . theta - b per FEO equation
  double objective = 0.0;         // sum of squared residuals
  std::vector<std::string> active;    // box and feasibility constraints holding with equality
  std::vector<std::string> conflict;  // only for infeasible systems
  double max_residual() const;
};

struct SolveOptions {
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// The solution of every FEO equation and constraint closest to the current CPT,
/// or nothing when no such point exists.
std::optional<Solution> solve_exact(const FeoSystem& system, const SolveOptions& options = {});

/// Minimizes the sum of squared FEO residuals over the box, simplex and feasibility
/// constraints; among minimizers, the one closest to the current CPT. Throws
/// Error(InfeasibleConstraints) when the constraints alone have no solution, and
/// Error(Timeout) past the deadline.
Solution solve_closest(const FeoSystem& system, const SolveOptions& options = {});

/// Throws Error(InfeasibleConstraints), naming the conflicting constraints, when the
/// box, simplex and feasibility constraints have no common point.
void check_feasible(const FeoSystem& system);

/// The scenario's network with the control's CPT rebuilt from theta.
Network apply_solution(const FeoScenario& scenario, const ParameterIndex& index, const Solution& solution);

}  // namespace fairbn
