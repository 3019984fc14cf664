#include "fairbn/pipeline.hpp"

namespace fairbn {

SolveMode parse_solve_mode(std::string_view text) {
  if (text == "auto") return SolveMode::automatic;
  if (text == "exact") return SolveMode::exact;
  if (text == "closest") return SolveMode::closest;
  throw Error(ErrorKind::InvalidDocument, "unknown solve mode '" + std::string(text) + "' (expected auto, exact or closest)");
}

SolveOutcome solve_scenario(const FeoScenario& scenario, std::span<const MarginalConstraint> constraints,
                            SolveMode mode, const SolveOptions& options) {
  const ParameterIndex index = enumerate_free_parameters(scenario);
  FeoSystem system = build_feo_system(scenario, index);
  add_feasibility_constraints(system, scenario, constraints);

  std::optional<Solution> sol;
  if (mode != SolveMode::closest) sol = solve_exact(system, options);
  if (!sol) {
    if (mode == SolveMode::exact) {
      // Distinguish "constraints contradict each other" from "FEO is out of reach".
      const Solution probe = solve_closest(system, options);
      throw Error(ErrorKind::InfeasibleConstraints,
                  "no CPT satisfies every FEO equation exactly (closest objective " + std::to_string(probe.objective) + ")");
    }
    sol = solve_closest(system, options);
  }
  Network corrected = apply_solution(scenario, system.index, *sol);
  const double pre = feo_deviation(scenario);
  const double post = feo_deviation(scenario.with_network(corrected));
  return {std::move(system), std::move(*sol), std::move(corrected), pre, post};
}

Json deviation_summary(double pre, double post) {
  return Json{{"pre_deviation", pre}, {"post_deviation", post}, {"delta", post - pre}};
}

Json tables_document(const ConditionalTable& pre, const std::optional<ConditionalTable>& post) {
  Json doc;
  doc["pre"] = to_json(pre);
  doc["pre_deviation"] = feo_deviation(pre);
  if (post) {
    doc["post"] = to_json(*post);
    doc["post_deviation"] = feo_deviation(*post);
  } else {
    doc["post"] = nullptr;
    doc["post_deviation"] = nullptr;
  }
  return doc;
}

Json constraint_check(const Network& net, std::span<const MarginalConstraint> constraints) {
  Json list = Json::array();
  for (const auto& c : constraints) {
    const double p = marginal(net, c.event);
    list.push_back({{"constraint", describe(c)}, {"probability", p}, {"lower", c.lo}, {"upper", c.hi},
                    {"slack", std::min(p - c.lo, c.hi - p)}});
  }
  return list;
}

}  // namespace fairbn
