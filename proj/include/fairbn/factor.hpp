#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairbn/network.hpp"

namespace fairbn {

/// Dense nonnegative table over an ordered scope. The first scope variable is
/// the most significant digit of the flat index (same convention as Cpt rows).
class Factor {
 public:
  Factor() : values_{1.0} {}
  Factor(std::vector<VarIndex> scope, std::vector<std::size_t> cards, std::vector<double> values);

  static Factor scalar(double value);
  /// CPT of `v` as a factor over (parents..., v).
  static Factor from_cpt(const Network& net, VarIndex v);

  std::span<const VarIndex> scope() const noexcept { return scope_; }
  std::span<const std::size_t> cardinalities() const noexcept { return cards_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool contains(VarIndex v) const;

  /// Value at the scope variables' states in `a`.
  double at(const Assignment& a) const;
  double total() const;

  Factor product(const Factor& other) const;
  Factor sum_out(VarIndex v) const;
  /// Drops every scope variable set in `evidence`, keeping the matching slice.
  Factor reduce(const Assignment& evidence) const;
  Factor normalized() const;
  /// Same factor with its scope permuted to `order` (a permutation of scope()).
  Factor reordered(std::span<const VarIndex> order) const;

 private:
  std::vector<VarIndex> scope_;
  std::vector<std::size_t> cards_;
  std::vector<double> values_;
};

}  // namespace fairbn
