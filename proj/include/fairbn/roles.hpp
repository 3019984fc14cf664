#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairbn/network.hpp"

namespace fairbn {

/// Editable CPT coordinates of the control variable: one parent assignment and
/// a subset of the control's states (empty = the whole row).
struct FreeEntrySpec {
  NamedAssignment given;
  std::vector<std::string> states;
};

/// Partition of the variables into justified / sensitive / other / ignored,
/// plus the control C and target Q (both in `other`).
struct RoleAssignment {
  std::vector<std::string> justified;
  std::vector<std::string> sensitive;
  std::vector<std::string> other;
  std::vector<std::string> ignored;
  std::string control;
  std::string target;
  std::optional<std::vector<FreeEntrySpec>> free_entries;
};

class FeoScenario {
 public:
  const Network& network() const noexcept { return network_; }
  const RoleAssignment& roles() const noexcept { return roles_; }

  std::span<const VarIndex> justified() const noexcept { return justified_; }
  std::span<const VarIndex> sensitive() const noexcept { return sensitive_; }
  std::span<const VarIndex> other() const noexcept { return other_; }
  VarIndex control() const noexcept { return control_; }
  VarIndex target() const noexcept { return target_; }

  /// One flag per entry of the control's CPT (row-major, like Cpt::values()).
  std::span<const char> free_mask() const noexcept { return free_; }
  bool is_free(std::size_t row, StateIndex state) const {
    return free_[row * network_.cpt(control_).cardinality() + static_cast<std::size_t>(state)] != 0;
  }

  /// Same roles over a network with identical structure (e.g. after a solve).
  FeoScenario with_network(Network network) const;

 private:
  friend FeoScenario assign_roles(const Network&, const RoleAssignment&);
  FeoScenario(Network net) : network_(std::move(net)) {}

  Network network_;
  RoleAssignment roles_;
  std::vector<VarIndex> justified_;
  std::vector<VarIndex> sensitive_;
  std::vector<VarIndex> other_;
  VarIndex control_ = 0;
  VarIndex target_ = 0;
  std::vector<char> free_;
};

/// Checks the role partition against `network`, drops the ignored variables
/// (marginalizing them into their single child when they have one) and binds
/// the free entries. Throws Error(RoleOverlap / ControlIsSensitive /
/// TargetMissing / UnknownFreeEntry / RoleDependsOnControl / IgnoredNotRemovable).
FeoScenario assign_roles(const Network& network, const RoleAssignment& roles);

/// Removes `names` from the network. A removed variable with one child is summed
/// into that child's CPT (which inherits its parents); barren variables are dropped.
Network remove_variables(const Network& network, const std::vector<std::string>& names);

}  // namespace fairbn
