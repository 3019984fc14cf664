#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairbn/feo_system.hpp"
#include "fairbn/inference.hpp"
#include "fairbn/network.hpp"
#include "fairbn/roles.hpp"
#include "fairbn/solver.hpp"

namespace fairbn {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Malformed documents throw Error(InvalidDocument) naming the offending field.
NetworkSpec network_spec_from_json(const Json& doc, bool require_cpts = true);
Json to_json(const NetworkSpec& spec);

RoleAssignment roles_from_json(const Json& doc);
Json to_json(const RoleAssignment& roles);

std::vector<MarginalConstraint> constraints_from_json(const Json& doc);
Json to_json(std::span<const MarginalConstraint> constraints);

Json to_json(const ValidationReport& report);
Json to_json(const ConditionalTable& table);

/// Full solution document: coordinates and values of theta, status, objective,
/// signed residual per FEO equation, and the constraints active at the solution.
Json solution_report(const FeoScenario& scenario, const FeoSystem& system, const Solution& solution);

/// Throws Error(IoError) when unreadable, Error(InvalidDocument) on a parse error.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);
void write_text_file(const std::filesystem::path& path, std::string_view text);

Network load_network(const std::filesystem::path& path);
RoleAssignment load_roles(const std::filesystem::path& path);
std::vector<MarginalConstraint> load_constraints(const std::filesystem::path& path);

}  // namespace fairbn
