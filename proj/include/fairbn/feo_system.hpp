#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairbn/kernels.hpp"
#include "fairbn/network.hpp"
#include "fairbn/roles.hpp"

namespace fairbn {

struct FreeParameter {
  std::size_t row;
  StateIndex state;
};

/// Per-row bookkeeping of the control's CPT.
/// A row whose every state is free is parameterized by its non-reference states,
/// the reference (first) state being 1 - sum(theta). A partially free row gets one
/// parameter per free entry plus a simplex equality over them.
struct RowLayout {
  std::vector<std::size_t> params;
  double fixed_mass = 0.0;
  bool implied_reference = false;
};

/// A CPT entry of the control as an affine function of theta.
struct AffineEntry {
  double constant = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;
};

struct ParameterIndex {
  VarIndex control = 0;
  std::size_t cardinality = 0;
  std::vector<FreeParameter> params;
  std::vector<std::string> labels;  // "College=1 | SES=0, Test=1"
  std::vector<RowLayout> rows;
  std::vector<double> theta0;  // current CPT values at the parameters
  std::vector<AffineEntry> entries;  // one per control CPT entry, row-major

  std::size_t size() const noexcept { return params.size(); }
  /// Full control CPT (row-major) for a parameter vector.
  std::vector<double> cpt_values(std::span<const double> theta) const;
};

ParameterIndex enumerate_free_parameters(const FeoScenario& scenario);

/// a . theta + constant
struct LinearForm {
  std::vector<double> a;
  double constant = 0.0;
  double eval(std::span<const double> theta) const;
};

/// Cross-multiplied FEO condition for one (j, s, q): a . theta = b.
struct FeoEquation {
  std::vector<double> a;
  double b = 0.0;
  NamedAssignment justified;
  NamedAssignment sensitive;
  std::string target_state;
  std::string label;
};

enum class ConstraintKind { simplex, row_sum, feasibility };

/// lower <= a . theta <= upper; an equality when lower == upper.
struct LinearConstraint {
  std::vector<double> a;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  ConstraintKind kind = ConstraintKind::feasibility;
  std::string label;
  bool equality() const noexcept { return lower == upper; }
};

struct FeoSystem {
  ParameterIndex index;
  std::vector<FeoEquation> equations;
  std::vector<LinearConstraint> constraints;
  std::vector<double> lower;  // box
  std::vector<double> upper;
  std::vector<std::string> warnings;
};

/// Bound on the marginal probability of a partial assignment.
struct MarginalConstraint {
  enum class Op { eq, le, ge, interval };
  NamedAssignment event;
  Op op = Op::le;
  double lo = 0.0;
  double hi = 1.0;

  static MarginalConstraint equal(NamedAssignment event, double v) { return {std::move(event), Op::eq, v, v}; }
  static MarginalConstraint at_most(NamedAssignment event, double v) { return {std::move(event), Op::le, 0.0, v}; }
  static MarginalConstraint at_least(NamedAssignment event, double v) { return {std::move(event), Op::ge, v, 1.0}; }
  static MarginalConstraint between(NamedAssignment event, double lo, double hi) {
    return {std::move(event), Op::interval, lo, hi};
  }
};

std::string describe(const MarginalConstraint& c);

/// P(event) as an affine function of theta, by bucketing joint-assignment weights
/// on the control entry each assignment selects.
LinearForm linearize_marginal(const FeoScenario& scenario, const ParameterIndex& index, const NamedAssignment& event,
                              Exec exec = Exec::parallel);

FeoSystem build_feo_system(const FeoScenario& scenario, const ParameterIndex& index, Exec exec = Exec::parallel);

/// Appends one row per constraint. Throws Error(ZeroCoefficientConstraint) when an
/// event does not depend on theta and its fixed probability violates the bound, and
/// Error(InfeasibleConstraints) when the bound lies outside the range attainable
/// within the box.
void add_feasibility_constraints(FeoSystem& system, const FeoScenario& scenario,
                                 std::span<const MarginalConstraint> constraints, Exec exec = Exec::parallel);

namespace kernels {

/// For every joint state of `keys` (mixed radix, first key most significant), the
/// sum over assignments of the ancestral closure of `keys` of the product of every
/// CPT factor except the control's, bucketed by the control CPT entry the
/// assignment selects. Row width is entries + 1; the last column collects the
/// mass when the control is not an ancestor of any key.
std::vector<double> control_buckets(const Network& net, VarIndex control, std::span<const VarIndex> keys, Exec exec);

}  // namespace kernels
}  // namespace fairbn
