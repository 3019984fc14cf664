#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairbn/error.hpp"

namespace fairbn {

using VarIndex = std::size_t;
using StateIndex = int;
inline constexpr StateIndex kUnset = -1;

/// Tolerance on CPT row sums, both at build time and after editing.
inline constexpr double kCptSumTolerance = 1e-9;

struct Variable {
  std::string name;
  std::vector<std::string> states;

  std::size_t cardinality() const noexcept { return states.size(); }
  std::optional<StateIndex> state_index(std::string_view label) const;
};

/// Variable name -> state label. Used at every document/user boundary.
using NamedAssignment = std::map<std::string, std::string>;

/// Dense (possibly partial) assignment indexed by VarIndex; unset slots hold kUnset.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::size_t n) : states_(n, kUnset) {}

  std::size_t size() const noexcept { return states_.size(); }
  StateIndex operator[](VarIndex v) const { return states_[v]; }
  StateIndex& operator[](VarIndex v) { return states_[v]; }
  bool is_set(VarIndex v) const { return v < states_.size() && states_[v] != kUnset; }
  bool complete() const;
  bool empty() const;
  /// True when every variable set in *this is set to the same state in `other`.
  bool consistent_with(const Assignment& other) const;
  /// Union; throws std::invalid_argument when the two disagree on a variable.
  Assignment merged(const Assignment& other) const;
  std::span<const StateIndex> states() const noexcept { return states_; }

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<StateIndex> states_;
};

// ---------------------------------------------------------------------------
// Unvalidated document-level description, as read from a network spec file.

struct CptRowSpec {
  NamedAssignment given;
  std::vector<double> p;
};

struct CptSpec {
  std::string owner;
  std::vector<std::string> parents;
  std::vector<CptRowSpec> rows;
};

struct NetworkSpec {
  std::vector<Variable> variables;
  std::vector<std::pair<std::string, std::string>> edges;  // (parent, child)
  std::vector<CptSpec> cpts;
};

struct ValidationIssue {
  ErrorKind kind;
  std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

/// Lists every violated invariant; an empty report means Network::build succeeds.
/// When `require_cpts` is false only structural invariants are checked.
ValidationReport validate(const NetworkSpec& spec, bool require_cpts = true);

// ---------------------------------------------------------------------------

/// Conditional probability table stored row-major: one row per joint parent
/// assignment (first declared parent most significant), one column per owner state.
class Cpt {
 public:
  Cpt() = default;
  Cpt(VarIndex owner, std::vector<VarIndex> parents, std::vector<std::size_t> parent_cards,
      std::size_t cardinality, std::vector<double> values);

  VarIndex owner() const noexcept { return owner_; }
  std::span<const VarIndex> parents() const noexcept { return parents_; }
  std::span<const std::size_t> parent_cardinalities() const noexcept { return parent_cards_; }
  std::size_t cardinality() const noexcept { return card_; }
  std::size_t row_count() const noexcept { return rows_; }

  double operator()(std::size_t row, StateIndex state) const { return values_[row * card_ + static_cast<std::size_t>(state)]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * card_, card_}; }
  std::span<const double> values() const noexcept { return values_; }

  /// Row selected by the parents' states in `a` (all parents must be set).
  std::size_t row_index(const Assignment& a) const;
  /// Parent states (in declared parent order) of row `r`.
  std::vector<StateIndex> row_states(std::size_t r) const;

 private:
  VarIndex owner_ = 0;
  std::vector<VarIndex> parents_;
  std::vector<std::size_t> parent_cards_;
  std::size_t card_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> values_;
};

/// Immutable discrete Bayesian network. All editing operations return a new Network.
class Network {
 public:
  /// Validates `spec` and throws Error naming the first violation (the message lists all).
  static Network build(const NetworkSpec& spec);

  std::size_t size() const noexcept { return vars_.size(); }
  const Variable& variable(VarIndex v) const { return vars_[v]; }
  std::span<const Variable> variables() const noexcept { return vars_; }
  const Cpt& cpt(VarIndex v) const { return cpts_[v]; }
  std::span<const VarIndex> parents(VarIndex v) const { return cpts_[v].parents(); }
  std::span<const VarIndex> children(VarIndex v) const { return children_[v]; }
  /// Topological order with ties broken by declaration order.
  std::span<const VarIndex> topological_order() const noexcept { return topo_; }
  std::span<const std::pair<VarIndex, VarIndex>> edges() const noexcept { return edges_; }

  std::optional<VarIndex> find(std::string_view name) const;
  /// Throws Error(UnknownVariable).
  VarIndex index_of(std::string_view name) const;
  /// Throws Error(UnknownVariable / UnknownState).
  Assignment resolve(const NamedAssignment& named) const;
  NamedAssignment name(const Assignment& a) const;

  /// Number of joint states of all variables.
  std::size_t joint_size() const;
  /// Descendants of v (excluding v).
  std::vector<VarIndex> descendants(VarIndex v) const;

  /// Copy with the CPT of `v` replaced; throws Error(ValidationFailed) if the table is invalid.
  Network with_cpt_values(VarIndex v, std::vector<double> values) const;

  /// Document form of this network; `build(to_spec())` reproduces it.
  NetworkSpec to_spec() const;

 private:
  Network() = default;

  std::vector<Variable> vars_;
  std::vector<Cpt> cpts_;
  std::vector<std::vector<VarIndex>> children_;
  std::vector<VarIndex> topo_;
  std::vector<std::pair<VarIndex, VarIndex>> edges_;
  std::unordered_map<std::string, VarIndex> by_name_;
};

/// Parent assignment of a CPT row, by name (used in documents and reports).
NamedAssignment row_given(const Network& net, VarIndex v, std::size_t row);

std::string format_assignment(const NamedAssignment& a);

}  // namespace fairbn
