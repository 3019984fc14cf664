#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "fairbn/inference.hpp"
#include "fairbn/json_io.hpp"
#include "fairbn/pipeline.hpp"
#include "fairbn/solver.hpp"
#include "feo_support.hpp"
#include "support.hpp"

using namespace fairbn;

namespace {

struct Setup {
  FeoScenario sc;
  ParameterIndex idx;
  FeoSystem sys;
};

Setup setup(const std::string& name, const std::string& network = "network.json",
            const std::vector<MarginalConstraint>& cs = {}) {
  FeoScenario sc = testing::load_scenario(name, network);
  ParameterIndex idx = enumerate_free_parameters(sc);
  FeoSystem sys = build_feo_system(sc, idx);
  add_feasibility_constraints(sys, sc, cs);
  return {std::move(sc), std::move(idx), std::move(sys)};
}

void check_valid_cpt(const Network& net, VarIndex v) {
  const Cpt& c = net.cpt(v);
  for (std::size_t r = 0; r < c.row_count(); ++r) {
    double sum = 0.0;
    for (double p : c.row(r)) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

}  // namespace

TEST_CASE("mini: exact solution 0.8 with residual under 1e-10") {
  const auto s = setup("mini");
  const auto sol = solve_exact(s.sys);
  REQUIRE(sol);
  CHECK(sol->status == SolveStatus::exact);
  CHECK(std::abs(sol->theta[0] - 0.8) <= 1e-8);
  CHECK(sol->max_residual() <= 1e-10);
  const Network post = apply_solution(s.sc, s.idx, *sol);
  CHECK(std::abs(post.cpt(s.sc.control())(0, 1) - 0.8) <= 1e-8);
  CHECK(feo_deviation(s.sc.with_network(post)) <= 1e-8);
}

TEST_CASE("campaign: no exact solution; closest reduces deviation over all three states") {
  const auto s = setup("campaign");
  CHECK_FALSE(solve_exact(s.sys));
  const Solution sol = solve_closest(s.sys);
  CHECK(sol.status == SolveStatus::closest);
  CHECK(sol.objective > 1e-16);
  const Network post = apply_solution(s.sc, s.idx, sol);
  check_valid_cpt(post, s.sc.control());
  const double pre = feo_deviation(s.sc);
  const double after = feo_deviation(s.sc.with_network(post));
  CHECK(after < pre);
  CHECK(testing::optimality_probe(s.sys, sol.theta));
}

TEST_CASE("system without equalities returns the current CPT") {
  auto s = setup("college");
  s.sys.equations.clear();
  const auto sol = solve_exact(s.sys);
  REQUIRE(sol);
  CHECK(sol->status == SolveStatus::exact);
  for (std::size_t k = 0; k < s.idx.size(); ++k) CHECK(sol->theta[k] == doctest::Approx(s.idx.theta0[k]).epsilon(1e-12));
}

TEST_CASE("closest on an exactly solvable system matches solve_exact") {
  for (const char* name : {"college", "mini", "campus"}) {
    CAPTURE(name);
    const auto s = setup(name);
    const auto ex = solve_exact(s.sys);
    REQUIRE(ex);
    const Solution cl = solve_closest(s.sys);
    CHECK(cl.status == SolveStatus::exact);
    CHECK(cl.objective <= 1e-16);
    for (std::size_t k = 0; k < cl.theta.size(); ++k) CHECK(std::abs(cl.theta[k] - ex->theta[k]) <= 1e-8);
  }
}

TEST_CASE("exact tie-break picks the solution nearest the current CPT") {
  // Campus has more free entries than independent equations: exact solutions form a line.
  const auto s = setup("campus");
  const auto ex = solve_exact(s.sys);
  REQUIRE(ex);
  Eigen::MatrixXd A(s.sys.equations.size(), s.idx.size());
  for (std::size_t i = 0; i < s.sys.equations.size(); ++i) {
    for (std::size_t k = 0; k < s.idx.size(); ++k) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s.sys.equations[i].a[k];
  }
  const Eigen::MatrixXd N = A.fullPivLu().kernel();
  REQUIRE(N.cols() >= 1);
  auto dist = [&](const std::vector<double>& t) {
    double d = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) d += std::pow(t[k] - s.idx.theta0[k], 2);
    return d;
  };
  const double d0 = dist(ex->theta);
  int probed = 0;
  for (Eigen::Index c = 0; c < N.cols(); ++c) {
    for (double step : {1e-4, -1e-4}) {
      auto t = ex->theta;
      for (std::size_t k = 0; k < t.size(); ++k) t[k] += step * N(static_cast<Eigen::Index>(k), c);
      if (!testing::feasible(s.sys, t)) continue;
      ++probed;
      CHECK(testing::objective(s.sys, t) <= 1e-16);
      CHECK(dist(t) >= d0 - 1e-14);
    }
  }
  CHECK(probed > 0);
}

TEST_CASE("shifted mini: theta clamps at 1 with a positive objective, confirmed by a grid scan") {
  const auto s = setup("mini", "network_shifted.json");
  CHECK_FALSE(solve_exact(s.sys));
  const Solution sol = solve_closest(s.sys);
  CHECK(sol.status == SolveStatus::closest);
  CHECK(sol.theta[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.objective > 0.0);
  double best = 1e300, arg = -1;
  for (int i = 0; i <= 1'000'000; ++i) {
    const double t = i * 1e-6;
    const double f = testing::objective(s.sys, {t});
    if (f < best) best = f, arg = t;
  }
  CHECK(std::abs(arg - sol.theta[0]) <= 1e-6);
  CHECK(sol.objective <= best + 1e-15);
  CHECK(testing::optimality_probe(s.sys, sol.theta));
}

TEST_CASE("college with a 50% cap: closest, cap holds by direct inference, deviation drops but stays positive") {
  const std::vector<MarginalConstraint> cap{MarginalConstraint::at_most({{"College", "1"}}, 0.5)};
  const auto s = setup("college", "network.json", cap);
  CHECK_FALSE(solve_exact(s.sys));
  const Solution sol = solve_closest(s.sys);
  CHECK(sol.status == SolveStatus::closest);
  const Network post = apply_solution(s.sc, s.idx, sol);
  CHECK(marginal(post, NamedAssignment{{"College", "1"}}) <= 0.5 + 1e-8);
  const double pre = feo_deviation(s.sc);
  const double after = feo_deviation(s.sc.with_network(post));
  CHECK(after > 0.0);
  CHECK(after < pre);
  bool cap_active = false;
  for (const auto& a : sol.active) cap_active |= a.find("College=1") != std::string::npos && a.find("upper") != std::string::npos;
  CHECK(cap_active);
  CHECK(testing::optimality_probe(s.sys, sol.theta));
}

TEST_CASE("contradictory constraints are reported with the conflicting rows") {
  const std::vector<MarginalConstraint> cs{MarginalConstraint::at_most({{"College", "1"}}, 0.3),
                                           MarginalConstraint::at_least({{"College", "1"}}, 0.5)};
  const auto s = setup("college", "network.json", cs);
  CHECK_FALSE(solve_exact(s.sys));
  try {
    solve_closest(s.sys);
    FAIL("expected InfeasibleConstraints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InfeasibleConstraints);
    CHECK(e.details().size() >= 2);
  }
}

TEST_CASE("identity solution reproduces the network") {
  const auto s = setup("campaign");
  Solution sol;
  sol.theta = s.idx.theta0;
  const Network same = apply_solution(s.sc, s.idx, sol);
  const auto a = same.cpt(s.sc.control()).values();
  const auto b = s.sc.network().cpt(s.sc.control()).values();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
}

TEST_CASE("post-solve deviation never exceeds pre-solve deviation on the fixtures") {
  for (const char* name : {"college", "campaign", "mini", "campus", "ibm-hr"}) {
    CAPTURE(name);
    const FeoScenario sc = testing::load_scenario(name);
    const SolveOutcome out = solve_scenario(sc, {}, SolveMode::automatic);
    CHECK(out.post_deviation <= out.pre_deviation + 1e-12);
    if (out.pre_deviation > 1e-8) CHECK(out.post_deviation < out.pre_deviation);
    check_valid_cpt(out.corrected, sc.control());
    CHECK((out.solution.status == SolveStatus::exact) == (out.solution.max_residual() <= kExactTolerance));
  }
}

TEST_CASE("an expired deadline aborts the solve") {
  const auto s = setup("campaign");
  SolveOptions opt;
  opt.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  try {
    solve_closest(s.sys, opt);
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Timeout);
  }
}

TEST_CASE("solve modes") {
  const FeoScenario sc = testing::load_scenario("campaign");
  CHECK(parse_solve_mode("auto") == SolveMode::automatic);
  CHECK_THROWS_AS(parse_solve_mode("fast"), Error);
  CHECK_THROWS_AS(solve_scenario(sc, {}, SolveMode::exact), Error);
  CHECK(solve_scenario(sc, {}, SolveMode::closest).solution.status == SolveStatus::closest);
  const FeoScenario mini = testing::load_scenario("mini");
  CHECK(solve_scenario(mini, {}, SolveMode::closest).solution.status == SolveStatus::exact);
}

TEST_CASE("solution report lists theta, residuals and active constraints") {
  const FeoScenario sc = testing::load_scenario("college");
  const std::vector<MarginalConstraint> cap{MarginalConstraint::at_most({{"College", "1"}}, 0.5)};
  const SolveOutcome out = solve_scenario(sc, cap, SolveMode::automatic);
  const Json doc = solution_report(sc, out.system, out.solution);
  CHECK(doc["status"] == "closest");
  CHECK(doc["theta"].size() == 2);
  CHECK(doc["theta"][0]["given"]["SES"] == "0");
  CHECK(doc["residuals"].size() == 4);
  CHECK_FALSE(doc["active_constraints"].empty());
}
