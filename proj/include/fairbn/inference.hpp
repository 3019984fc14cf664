#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairbn/factor.hpp"
#include "fairbn/kernels.hpp"
#include "fairbn/network.hpp"
#include "fairbn/roles.hpp"

namespace fairbn {

/// Product of CPT lookups; throws Error(IncompleteAssignment) unless `full` sets every variable.
double joint_probability(const Network& net, const Assignment& full);

/// Variable elimination with a greedy min-degree ordering. Returns the factor
/// over `keep` (in that order) equal to P(keep, evidence); normalize it to get
/// P(keep | evidence). Variables that are not ancestors of keep or evidence are
/// pruned before elimination.
Factor eliminate(const Network& net, std::span<const VarIndex> keep, const Assignment& evidence);

/// P(query) for a partial assignment; 1 for the empty query.
double marginal(const Network& net, const Assignment& query);
double marginal(const Network& net, const NamedAssignment& query);

/// P(target | evidence); throws Error(ZeroEvidenceProbability) when P(evidence) = 0.
double conditional(const Network& net, const Assignment& target, const Assignment& evidence);
double conditional(const Network& net, const NamedAssignment& target, const NamedAssignment& evidence);

/// Brute-force reference: sums the full joint over all completions.
namespace enumeration {

Factor joint_marginal(const Network& net, std::span<const VarIndex> keep, const Assignment& evidence,
                      Exec exec = Exec::serial);
double marginal(const Network& net, const Assignment& query, Exec exec = Exec::serial);
double conditional(const Network& net, const Assignment& target, const Assignment& evidence);

}  // namespace enumeration

// ---------------------------------------------------------------------------

struct ConditionalRow {
  NamedAssignment justified;
  std::optional<NamedAssignment> sensitive;  // nullopt for the anchor row P(q | j)
  std::string target_state;
  double probability = 0.0;
};

/// P(q | j, s) for every (j, s, q) plus the anchor rows P(q | j). Rows are grouped
/// by j (lexicographic, first justified variable most significant), then s, with
/// the anchor group last; within a group, one row per target state.
struct ConditionalTable {
  std::vector<std::string> justified_vars;
  std::vector<std::string> sensitive_vars;
  std::string target;
  std::vector<ConditionalRow> rows;
};

ConditionalTable feo_table(const FeoScenario& scenario);

/// max |P(q|j,s) - P(q|j)| over all rows of the table.
double feo_deviation(const ConditionalTable& table);
double feo_deviation(const FeoScenario& scenario);

/// CSV: justified columns, sensitive columns ('*' for anchor rows), target, probability.
std::string to_csv(const ConditionalTable& table);

}  // namespace fairbn
