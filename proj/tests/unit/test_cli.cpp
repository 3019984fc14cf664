#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fairbn/json_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "fairbn-cli-test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run run(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + FAIRBN_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

std::string fx(const std::string& rel) { return "\"" + testing::fixture(rel).string() + "\""; }

}  // namespace

TEST_CASE("cli: validate") {
  Run r = run("validate --network " + fx("college/network.json") + " --roles " + fx("college/roles.json") +
              " --constraints " + fx("college/constraints.json"));
  CHECK(r.code == 0);
  r = run("--json validate --network " + fx("mini/network.json"));
  CHECK(r.code == 0);
  CHECK(fairbn::Json::parse(r.out)["valid"] == true);

  fairbn::Json bad = fairbn::read_json_file(testing::fixture("mini/network.json"));
  bad["cpts"][0]["rows"][0]["p"][0] = 0.47;
  fairbn::write_json_file(scratch() / "bad.json", bad);
  r = run("validate --network \"" + (scratch() / "bad.json").string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.err.find("kind=MalformedCpt") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run("").code == 2);
  CHECK(run("solve --network " + fx("mini/network.json")).code == 2);
  CHECK(run("sample --network " + fx("mini/network.json") + " --count 0 --out x.csv").code == 2);
  CHECK(run("solve --network /nonexistent.json --roles " + fx("mini/roles.json") + " --out x.json").code == 2);
}

TEST_CASE("cli: solve, report and sample") {
  const fs::path post = scratch() / "college_post.json";
  Run r = run("solve --network " + fx("college/network.json") + " --roles " + fx("college/roles.json") + " --out \"" +
              post.string() + "\"");
  REQUIRE(r.code == 0);
  const fairbn::Json report = fairbn::read_json_file(post.string() + ".solution.json");
  CHECK(report["status"] == "exact");
  CHECK(fairbn::load_network(post).size() == 5);

  const fs::path dir = scratch() / "report";
  r = run("report --network " + fx("college/network.json") + " --roles " + fx("college/roles.json") + " --post \"" +
          post.string() + "\" --out-dir \"" + dir.string() + "\"");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "pre.csv"));
  CHECK(fs::exists(dir / "post.csv"));
  const fairbn::Json dev = fairbn::read_json_file(dir / "deviation.json");
  CHECK(dev["post_deviation"].get<double>() < 1e-8);

  const fs::path a = scratch() / "a.csv", b = scratch() / "b.csv";
  CHECK(run("sample --network \"" + post.string() + "\" --count 200 --seed 5 --out \"" + a.string() + "\"").code == 0);
  CHECK(run("sample --network \"" + post.string() + "\" --count 200 --seed 5 --out \"" + b.string() + "\"").code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(fairbn::read_json_file(a.string() + ".manifest.json")["count"] == 200);
  CHECK(run("sample --network \"" + post.string() + "\" --count 3 --columns Job,SES --out \"" + a.string() + "\"").code == 0);
  CHECK(slurp(a).rfind("Job,SES\n", 0) == 0);
}

TEST_CASE("cli: exact mode without an exact solution exits 3; contradictory constraints list both") {
  const fs::path out = scratch() / "campaign.json";
  Run r = run("solve --mode exact --network " + fx("campaign/network.json") + " --roles " + fx("campaign/roles.json") +
              " --out \"" + out.string() + "\"");
  CHECK(r.code == 3);
  CHECK(r.err.find("kind=InfeasibleConstraints") != std::string::npos);

  fairbn::write_text_file(scratch() / "contra.json", R"({"constraints": [
      {"event": {"College": "1"}, "op": "le", "value": 0.3},
      {"event": {"College": "1"}, "op": "ge", "value": 0.6}]})");
  r = run("solve --network " + fx("college/network.json") + " --roles " + fx("college/roles.json") +
          " --constraints \"" + (scratch() / "contra.json").string() + "\" --out \"" + out.string() + "\"");
  CHECK(r.code == 3);
  CHECK(r.err.find("P(College=1) <= 0.3") != std::string::npos);
  CHECK(r.err.find("P(College=1) >= 0.6") != std::string::npos);
}

TEST_CASE("cli: learn writes a network and provenance") {
  const fs::path out = scratch() / "ibm.json";
  const std::string data = "\"" + (fs::path(FAIRBN_DATA_DIR) / "ibm-hr/attrition.csv").string() + "\"";
  const Run r = run("learn --data " + data + " --schema " + fx("ibm-hr/schema.json") + " --structure " +
                    fx("ibm-hr/structure.json") + " --out \"" + out.string() + "\"");
  REQUIRE(r.code == 0);
  CHECK(fairbn::read_json_file(out) == fairbn::read_json_file(testing::fixture("ibm-hr/network.json")));
  CHECK(fairbn::read_json_file(out.string() + ".provenance.json")["rows_read"] == 1470);
}
