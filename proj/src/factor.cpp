#include "fairbn/factor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fairbn {

namespace {

std::vector<std::size_t> strides_of(std::span<const std::size_t> cards) {
  std::vector<std::size_t> s(cards.size());
  std::size_t acc = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    s[i] = acc;
    acc *= cards[i];
  }
  return s;
}

std::size_t position(std::span<const VarIndex> scope, VarIndex v) {
  auto it = std::find(scope.begin(), scope.end(), v);
  return it == scope.end() ? scope.size() : static_cast<std::size_t>(it - scope.begin());
}

}  // namespace

Factor::Factor(std::vector<VarIndex> scope, std::vector<std::size_t> cards, std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cards)), values_(std::move(values)) {
  const std::size_t n = std::accumulate(cards_.begin(), cards_.end(), std::size_t{1}, std::multiplies<>());
  if (scope_.size() != cards_.size() || values_.size() != n) throw std::invalid_argument("Factor: inconsistent shape");
}

Factor Factor::scalar(double value) { return Factor({}, {}, {value}); }

Factor Factor::from_cpt(const Network& net, VarIndex v) {
  const Cpt& cpt = net.cpt(v);
  std::vector<VarIndex> scope(cpt.parents().begin(), cpt.parents().end());
  std::vector<std::size_t> cards(cpt.parent_cardinalities().begin(), cpt.parent_cardinalities().end());
  scope.push_back(v);
  cards.push_back(cpt.cardinality());
  return Factor(std::move(scope), std::move(cards), std::vector<double>(cpt.values().begin(), cpt.values().end()));
}

bool Factor::contains(VarIndex v) const { return std::find(scope_.begin(), scope_.end(), v) != scope_.end(); }

double Factor::at(const Assignment& a) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < scope_.size(); ++i) idx = idx * cards_[i] + static_cast<std::size_t>(a[scope_[i]]);
  return values_[idx];
}

double Factor::total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

Factor Factor::product(const Factor& other) const {
  std::vector<VarIndex> scope = scope_;
  std::vector<std::size_t> cards = cards_;
  for (std::size_t i = 0; i < other.scope_.size(); ++i) {
    if (!contains(other.scope_[i])) {
      scope.push_back(other.scope_[i]);
      cards.push_back(other.cards_[i]);
    }
  }
  const auto sa = strides_of(cards_);
  const auto sb = strides_of(other.cards_);
  // stride of each output variable inside this / other (0 when absent)
  std::vector<std::size_t> ma(scope.size(), 0), mb(scope.size(), 0);
  for (std::size_t i = 0; i < scope.size(); ++i) {
    const auto pa = position(scope_, scope[i]);
    const auto pb = position(other.scope_, scope[i]);
    if (pa < scope_.size()) ma[i] = sa[pa];
    if (pb < other.scope_.size()) mb[i] = sb[pb];
  }
  const std::size_t n = std::accumulate(cards.begin(), cards.end(), std::size_t{1}, std::multiplies<>());
  std::vector<double> values(n);
  std::vector<std::size_t> digit(scope.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k < n; ++k) {
    values[k] = values_[ia] * other.values_[ib];
    for (std::size_t i = scope.size(); i-- > 0;) {
      if (++digit[i] < cards[i]) {
        ia += ma[i];
        ib += mb[i];
        break;
      }
      ia -= ma[i] * (cards[i] - 1);
      ib -= mb[i] * (cards[i] - 1);
      digit[i] = 0;
    }
  }
  return Factor(std::move(scope), std::move(cards), std::move(values));
}

Factor Factor::sum_out(VarIndex v) const {
  const auto p = position(scope_, v);
  if (p == scope_.size()) return *this;
  const auto strides = strides_of(cards_);
  const std::size_t inner = strides[p];
  const std::size_t card = cards_[p];
  const std::size_t outer = values_.size() / (inner * card);
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < card; ++k) {
      const double* src = values_.data() + (o * card + k) * inner;
      double* dst = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  std::vector<VarIndex> scope = scope_;
  std::vector<std::size_t> cards = cards_;
  scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(p));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(p));
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor Factor::reduce(const Assignment& evidence) const {
  std::vector<VarIndex> scope;
  std::vector<std::size_t> cards;
  std::size_t base = 0;
  const auto strides = strides_of(cards_);
  std::vector<std::size_t> kept_strides;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (evidence.is_set(scope_[i])) {
      base += strides[i] * static_cast<std::size_t>(evidence[scope_[i]]);
    } else {
      scope.push_back(scope_[i]);
      cards.push_back(cards_[i]);
      kept_strides.push_back(strides[i]);
    }
  }
  if (scope.size() == scope_.size()) return *this;
  const std::size_t n = std::accumulate(cards.begin(), cards.end(), std::size_t{1}, std::multiplies<>());
  std::vector<double> values(n);
  std::vector<std::size_t> digit(scope.size(), 0);
  std::size_t idx = base;
  for (std::size_t k = 0; k < n; ++k) {
    values[k] = values_[idx];
    for (std::size_t i = scope.size(); i-- > 0;) {
      if (++digit[i] < cards[i]) {
        idx += kept_strides[i];
        break;
      }
      idx -= kept_strides[i] * (cards[i] - 1);
      digit[i] = 0;
    }
  }
  return Factor(std::move(scope), std::move(cards), std::move(values));
}

Factor Factor::normalized() const {
  const double z = total();
  std::vector<double> v = values_;
  if (z > 0.0) {
    for (auto& x : v) x /= z;
  }
  return Factor(scope_, cards_, std::move(v));
}

Factor Factor::reordered(std::span<const VarIndex> order) const {
  if (order.size() != scope_.size()) throw std::invalid_argument("Factor::reordered: not a permutation of the scope");
  std::vector<std::size_t> cards(order.size());
  std::vector<std::size_t> src_stride(order.size());
  const auto strides = strides_of(cards_);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto p = position(scope_, order[i]);
    if (p == scope_.size()) throw std::invalid_argument("Factor::reordered: not a permutation of the scope");
    cards[i] = cards_[p];
    src_stride[i] = strides[p];
  }
  std::vector<double> values(values_.size());
  std::vector<std::size_t> digit(order.size(), 0);
  std::size_t idx = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = values_[idx];
    for (std::size_t i = order.size(); i-- > 0;) {
      if (++digit[i] < cards[i]) {
        idx += src_stride[i];
        break;
      }
      idx -= src_stride[i] * (cards[i] - 1);
      digit[i] = 0;
    }
  }
  return Factor(std::vector<VarIndex>(order.begin(), order.end()), std::move(cards), std::move(values));
}

}  // namespace fairbn
