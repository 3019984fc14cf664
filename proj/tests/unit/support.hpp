#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fairbn/json_io.hpp"
#include "fairbn/network.hpp"
#include "fairbn/roles.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(FAIRBN_FIXTURE_DIR) / rel; }

inline fairbn::FeoScenario load_scenario(const std::string& name, const std::string& network = "network.json") {
  return fairbn::assign_roles(fairbn::load_network(fixture(name + "/" + network)),
                              fairbn::load_roles(fixture(name + "/roles.json")));
}

/// Builds a spec from per-variable parents (by index) and row-major CPT values.
inline fairbn::NetworkSpec make_spec(const std::vector<std::size_t>& cards, const std::vector<std::vector<std::size_t>>& parents,
                                     const std::vector<std::vector<double>>& values) {
  fairbn::NetworkSpec spec;
  for (std::size_t v = 0; v < cards.size(); ++v) {
    fairbn::Variable var{"V" + std::to_string(v), {}};
    for (std::size_t s = 0; s < cards[v]; ++s) var.states.push_back(std::to_string(s));
    spec.variables.push_back(var);
  }
  for (std::size_t v = 0; v < cards.size(); ++v) {
    fairbn::CptSpec cpt{spec.variables[v].name, {}, {}};
    for (auto p : parents[v]) {
      spec.edges.emplace_back(spec.variables[p].name, spec.variables[v].name);
      cpt.parents.push_back(spec.variables[p].name);
    }
    std::size_t rows = 1;
    for (auto p : parents[v]) rows *= cards[p];
    for (std::size_t r = 0; r < rows; ++r) {
      fairbn::CptRowSpec row;
      std::size_t rem = r;
      for (std::size_t i = parents[v].size(); i-- > 0;) {
        const auto p = parents[v][i];
        row.given[spec.variables[p].name] = std::to_string(rem % cards[p]);
        rem /= cards[p];
      }
      row.p.assign(values[v].begin() + static_cast<long>(r * cards[v]), values[v].begin() + static_cast<long>((r + 1) * cards[v]));
      cpt.rows.push_back(row);
    }
    spec.cpts.push_back(cpt);
  }
  return spec;
}

inline std::vector<double> random_rows(std::mt19937_64& rng, std::size_t rows, std::size_t card, bool allow_zero) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> w(card);
    double sum = 0.0;
    for (auto& x : w) {
      x = allow_zero && u(rng) < 0.1 ? 0.0 : 0.05 + u(rng);
      sum += x;
    }
    if (sum == 0.0) {
      w[0] = 1.0;
      sum = 1.0;
    }
    for (auto& x : w) out.push_back(x / sum);
  }
  return out;
}

/// Random DAG: variables in index order, each earlier variable a parent with probability 0.4 (at most 3 parents).
inline fairbn::Network random_dag(std::uint64_t seed, std::size_t max_vars = 6, std::size_t max_states = 3, bool allow_zero = false) {
  std::mt19937_64 rng(seed);
  const std::size_t n = 2 + rng() % (max_vars - 1);
  std::vector<std::size_t> cards(n);
  for (auto& c : cards) c = 2 + rng() % (max_states - 1);
  std::vector<std::vector<std::size_t>> parents(n);
  std::vector<std::vector<double>> values(n);
  std::bernoulli_distribution edge(0.4);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t p = 0; p < v && parents[v].size() < 3; ++p) {
      if (edge(rng)) parents[v].push_back(p);
    }
    std::size_t rows = 1;
    for (auto p : parents[v]) rows *= cards[p];
    values[v] = random_rows(rng, rows, cards[v], allow_zero);
  }
  return fairbn::Network::build(make_spec(cards, parents, values));
}

/// Random polytree: node v > 0 is joined to one earlier node, the edge direction chosen at random.
inline fairbn::Network random_polytree(std::uint64_t seed, std::size_t max_vars = 8, std::size_t max_states = 3) {
  std::mt19937_64 rng(seed);
  const std::size_t n = 2 + rng() % (max_vars - 1);
  std::vector<std::size_t> cards(n);
  for (auto& c : cards) c = 2 + rng() % (max_states - 1);
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t u = rng() % v;
    if (rng() % 2) {
      parents[v].push_back(u);
    } else {
      parents[u].push_back(v);
    }
  }
  std::vector<std::vector<double>> values(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t rows = 1;
    for (auto p : parents[v]) rows *= cards[p];
    values[v] = random_rows(rng, rows, cards[v], false);
  }
  return fairbn::Network::build(make_spec(cards, parents, values));
}

}  // namespace testing
