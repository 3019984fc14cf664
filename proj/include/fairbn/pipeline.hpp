#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairbn/feo_system.hpp"
#include "fairbn/inference.hpp"
#include "fairbn/json_io.hpp"
#include "fairbn/solver.hpp"

namespace fairbn {

enum class SolveMode { automatic, exact, closest };

/// "auto", "exact" or "closest"; throws Error(InvalidDocument) otherwise.
SolveMode parse_solve_mode(std::string_view text);

struct SolveOutcome {
  FeoSystem system;
  Solution solution;
  Network corrected;
  double pre_deviation = 0.0;
  double post_deviation = 0.0;
};

/// Builds the system with `constraints`, then: exact mode requires an exact solution,
/// closest mode skips the exact attempt, auto tries exact first. Throws
/// Error(InfeasibleConstraints) when the constraints admit no CPT and, in exact mode,
/// when FEO cannot be met exactly.
SolveOutcome solve_scenario(const FeoScenario& scenario, std::span<const MarginalConstraint> constraints,
                            SolveMode mode, const SolveOptions& options = {});

/// Pre/post tables with their deviations; `post` may be absent.
Json tables_document(const ConditionalTable& pre, const std::optional<ConditionalTable>& post);

/// Deviation summary: pre, post and their difference.
Json deviation_summary(double pre, double post);

/// Direct inference of every constraint's marginal on `net`, with its bounds.
Json constraint_check(const Network& net, std::span<const MarginalConstraint> constraints);

}  // namespace fairbn
