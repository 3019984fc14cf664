#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fairbn/inference.hpp"
#include "fairbn/learning.hpp"
#include "fairbn/pipeline.hpp"
#include "fairbn/sampler.hpp"
#include "support.hpp"

using namespace fairbn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("deterministic root gives constant records") {
  const Network net = Network::build(testing::make_spec({2}, {{}}, {{0.0, 1.0}}));
  const Dataset d = sample(net, {5, 123, {}});
  REQUIRE(d.records.size() == 5);
  for (const auto& r : d.records) CHECK(r[0] == "1");
}

TEST_CASE("count 0 is rejected; unknown columns are rejected") {
  const Network net = load_network(testing::fixture("mini/network.json"));
  CHECK_THROWS_AS(sample(net, {0, 1, {}}), Error);
  CHECK_THROWS_AS(sample(net, {3, 1, {"Nope"}}), Error);
  const Dataset d = sample(net, {3, 1, {"Q", "T"}});
  CHECK(d.columns[0].name == "Q");
  CHECK(d.records[0].size() == 2);
}

TEST_CASE("same seed gives identical output; serial and parallel agree; seeds differ") {
  const Network net = load_network(testing::fixture("campaign/network.json"));
  const auto a = sample_codes(net, 20'000, 42, Exec::serial);
  const auto b = sample_codes(net, 20'000, 42, Exec::parallel);
  CHECK(a == b);
  CHECK(sample_codes(net, 20'000, 43, Exec::parallel) != a);
  CHECK(to_csv(sample(net, {1000, 7, {}})) == to_csv(sample(net, {1000, 7, {}})));
  // A prefix of a longer run is the shorter run.
  const auto c = sample_codes(net, 10'000, 42, Exec::parallel);
  CHECK(std::equal(c.begin(), c.end(), a.begin()));
}

TEST_CASE("generator output follows the documented stream") {
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  const Network net = Network::build(testing::make_spec({2, 3}, {{}, {0}}, {{0.5, 0.5}, {0.2, 0.3, 0.5, 0.6, 0.3, 0.1}}));
  const std::uint64_t seed = 1;
  const auto codes = sample_codes(net, 64, seed, Exec::parallel);
  const std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  for (std::size_t r = 0; r < 64; ++r) {
    std::uint64_t state = splitmix64(seed + (r + 1) * golden);
    auto uniform = [&] {
      const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      state += golden;
      return u;
    };
    const int a = uniform() < 0.5 ? 0 : 1;
    const double u = uniform();
    const std::array<double, 3> probs = a == 0 ? std::array<double, 3>{0.2, 0.3, 0.5} : std::array<double, 3>{0.6, 0.3, 0.1};
    const int b = u < probs[0] ? 0 : (u < probs[0] + probs[1] ? 1 : 2);
    CHECK(codes[2 * r] == a);
    CHECK(codes[2 * r + 1] == b);
  }
  std::string bits;
  for (std::size_t r = 0; r < 16; ++r) bits += static_cast<char>('0' + codes[2 * r]);
  CHECK(bits == "0100111101000100");
}

TEST_CASE("mini solved: empirical P(C=1|S=0) is 0.8 within 3 sigma") {
  const FeoScenario sc = testing::load_scenario("mini");
  const Network post = solve_scenario(sc, {}, SolveMode::automatic).corrected;
  const std::size_t n = 100'000;
  const auto codes = sample_codes(post, n, 9, Exec::parallel);
  const VarIndex S = post.index_of("S"), C = post.index_of("C");
  double s0 = 0, c1 = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (codes[r * post.size() + S] == 0) {
      ++s0;
      c1 += codes[r * post.size() + C] == 1;
    }
  }
  CHECK(std::abs(c1 / s0 - 0.8) <= 3 * std::sqrt(0.8 * 0.2 / s0));
}

TEST_CASE("college solved: SES gaps in P(Job=1 | Talent, SES) within 3 sigma of zero") {
  const FeoScenario sc = testing::load_scenario("college");
  const Network post = solve_scenario(sc, {}, SolveMode::automatic).corrected;
  const std::size_t n = 100'000;
  const auto codes = sample_codes(post, n, 2, Exec::parallel);
  const VarIndex T = post.index_of("Talent"), S = post.index_of("SES"), J = post.index_of("Job");
  double cnt[2][2] = {}, hit[2][2] = {};
  for (std::size_t r = 0; r < n; ++r) {
    const auto* rec = codes.data() + r * post.size();
    cnt[rec[T]][rec[S]] += 1;
    hit[rec[T]][rec[S]] += rec[J] == 1;
  }
  for (int t = 0; t < 2; ++t) {
    const double p0 = hit[t][0] / cnt[t][0], p1 = hit[t][1] / cnt[t][1];
    const double p = (hit[t][0] + hit[t][1]) / (cnt[t][0] + cnt[t][1]);
    const double sigma = std::sqrt(p * (1 - p) * (1 / cnt[t][0] + 1 / cnt[t][1]));
    CHECK(std::abs(p0 - p1) <= 3 * sigma);
  }
}

TEST_CASE("empirical conditionals match the CPT for well-populated parent rows") {
  const Network net = load_network(testing::fixture("campus/network.json"));
  const std::size_t n = 100'000;
  const auto codes = sample_codes(net, n, 77, Exec::parallel);
  const auto counts = kernels::count_entries(net, codes, n, Exec::parallel);
  int checked = 0;
  for (VarIndex v = 0; v < net.size(); ++v) {
    const Cpt& c = net.cpt(v);
    for (std::size_t r = 0; r < c.row_count(); ++r) {
      double nu = 0;
      for (std::size_t s = 0; s < c.cardinality(); ++s) nu += static_cast<double>(counts[v][r * c.cardinality() + s]);
      if (nu < 500) continue;
      for (std::size_t s = 0; s < c.cardinality(); ++s) {
        const double p = c(r, static_cast<StateIndex>(s));
        const double f = static_cast<double>(counts[v][r * c.cardinality() + s]) / nu;
        CHECK(std::abs(f - p) <= 3 * std::sqrt(p * (1 - p) / nu) + 1e-12);
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("export: zero records is header only, three records is four lines, manifest names the generator") {
  const Network net = load_network(testing::fixture("mini/network.json"));
  Dataset d = sample(net, {3, 5, {}});
  const auto dir = std::filesystem::temp_directory_path();
  export_csv(d, dir / "fairbn_three.csv");
  const std::string three = slurp(dir / "fairbn_three.csv");
  CHECK(std::count(three.begin(), three.end(), '\n') == 4);
  d.records.clear();
  export_csv(d, dir / "fairbn_zero.csv");
  CHECK(slurp(dir / "fairbn_zero.csv") == "T,S,C,Q\n");
  const Json m = sample_manifest(net, {3, 5, {}});
  CHECK(m["generator"] == kGeneratorName);
  CHECK(m["network_hash"].get<std::string>().size() == 16);
  CHECK(m["network_hash"] == network_hash(load_network(testing::fixture("mini/network.json"))));
  CHECK(m["network_hash"] != network_hash(load_network(testing::fixture("mini/network_shifted.json"))));
  CHECK_THROWS_AS(export_csv(d, dir / "no-such-dir" / "x.csv"), Error);
  std::filesystem::remove(dir / "fairbn_three.csv");
  std::filesystem::remove(dir / "fairbn_zero.csv");
}
