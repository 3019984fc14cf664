#pragma once

#include <cstddef>
#include <vector>

#include "fairbn/network.hpp"

namespace fairbn {

/// Selects the OpenMP kernel or its serial reference. Parallel reductions run
/// over fixed-size chunks whose partials are merged serially in chunk order, so
/// their output does not depend on the thread count; it agrees with the plain
/// serial loop up to floating-point reassociation.
enum class Exec { serial, parallel };

namespace kernels {

/// Chunk size of every deterministic parallel reduction.
inline constexpr std::size_t kChunk = 4096;

/// Full joint P(x) for every complete assignment x, indexed in mixed radix
/// over declaration order (first variable most significant).
std::vector<double> joint_table(const Network& net, Exec exec);

/// Decodes a joint index into a complete assignment.
void decode_joint(const Network& net, std::size_t index, Assignment& out);

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace kernels
}  // namespace fairbn
