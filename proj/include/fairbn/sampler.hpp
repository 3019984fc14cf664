#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairbn/json_io.hpp"
#include "fairbn/kernels.hpp"
#include "fairbn/learning.hpp"
#include "fairbn/network.hpp"

namespace fairbn {

/// Record r owns the stream s_k = splitmix64(seed + (r + 1) * 0x9E3779B97F4A7C15)
/// + k * 0x9E3779B97F4A7C15 and its k-th draw is splitmix64(s_k), so records are
/// independent of the thread schedule. A uniform is (x >> 11) * 2^-53; a variable
/// takes the first state whose cumulative row probability exceeds it. Variables are
/// visited in topological order.
inline constexpr const char* kGeneratorName = "splitmix64-per-record";

struct SampleRequest {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;  // empty = every variable in declaration order
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// One state index per (record, variable), record-major, variables in declaration order.
std::vector<StateIndex> sample_codes(const Network& net, std::size_t count, std::uint64_t seed, Exec exec);

/// Throws Error(InvalidDocument) for count 0 and Error(UnknownVariable) for an unknown column.
Dataset sample(const Network& net, const SampleRequest& req, Exec exec = Exec::parallel);

/// FNV-1a over the canonical JSON form of the network, as 16 hex digits.
std::string network_hash(const Network& net);

Json sample_manifest(const Network& net, const SampleRequest& req);

}  // namespace fairbn
