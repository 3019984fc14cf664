// Command-line front end: validate, learn, solve, report, sample.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fairbn/json_io.hpp"
#include "fairbn/learning.hpp"
#include "fairbn/pipeline.hpp"
#include "fairbn/sampler.hpp"

namespace fs = std::filesystem;
using namespace fairbn;

namespace {

enum Exit { kOk = 0, kInput = 2, kInfeasible = 3, kInternal = 4 };

bool g_json = false;

void diag(const std::string& level, const std::string& kind, const std::string& message) {
  std::cerr << "fairbn: " << level << ": kind=" << kind << ": " << message << "\n";
}

void emit(const Json& doc, const std::string& human) {
  if (g_json) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << human;
  }
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

std::string bare(const NamedAssignment& a) {
  const std::string s = format_assignment(a);
  return s.size() >= 2 && s.front() == '{' ? s.substr(1, s.size() - 2) : s;
}

std::string table_text(const ConditionalTable& t) {
  std::ostringstream os;
  for (const auto& r : t.rows) {
    os << "  P(" << t.target << "=" << r.target_state << " | " << bare(r.justified);
    if (r.sensitive) os << ", " << bare(*r.sensitive);
    os << ") = " << fmt(r.probability) << "\n";
  }
  return os.str();
}

FeoScenario load_scenario(const fs::path& network, const fs::path& roles) {
  return assign_roles(load_network(network), load_roles(roles));
}

int cmd_validate(const fs::path& network, const fs::path& roles, const fs::path& constraints) {
  const NetworkSpec spec = network_spec_from_json(read_json_file(network));
  const ValidationReport report = validate(spec);
  Json doc = {{"network", network.string()}, {"valid", report.empty()}, {"issues", to_json(report)}};
  if (!report.empty()) {
    std::string human;
    for (const auto& i : report) human += std::string(to_string(i.kind)) + ": " + i.message + "\n";
    emit(doc, human);
    diag("error", std::string(to_string(report.front().kind)), report.front().message);
    return kInput;
  }
  std::string human = "network: ok (" + std::to_string(spec.variables.size()) + " variables)\n";
  if (!roles.empty()) {
    const FeoScenario sc = load_scenario(network, roles);
    const ParameterIndex idx = enumerate_free_parameters(sc);
    human += "roles: ok (control " + sc.network().variable(sc.control()).name + ", target " +
             sc.network().variable(sc.target()).name + ", " + std::to_string(idx.size()) + " free parameters)\n";
    doc["roles"] = "ok";
    doc["free_parameters"] = idx.labels;
    if (!constraints.empty()) {
      const auto cs = load_constraints(constraints);
      FeoSystem sys = build_feo_system(sc, idx);
      add_feasibility_constraints(sys, sc, cs);
      check_feasible(sys);
      human += "constraints: ok (" + std::to_string(cs.size()) + ")\n";
      doc["constraints"] = "ok";
    }
  }
  emit(doc, human);
  return kOk;
}

int cmd_learn(const fs::path& data_path, const fs::path& schema_path, const fs::path& structure_path, double smoothing,
              const fs::path& out, fs::path provenance_path) {
  const Schema schema = load_schema(schema_path);
  Dataset data = load_dataset(data_path, schema);
  const NetworkSpec structure = network_spec_from_json(read_json_file(structure_path), false);
  FitResult fit = fit_parameters(structure, data, smoothing);
  for (const auto& w : fit.warnings) {
    diag("warning", "UnseenParentAssignment", w);
    data.provenance.warnings.push_back(w);
  }
  write_json_file(out, to_json(fit.network.to_spec()));
  if (provenance_path.empty()) provenance_path = fs::path(out.string() + ".provenance.json");
  Json prov = provenance_json(data.provenance);
  prov["smoothing"] = smoothing;
  write_json_file(provenance_path, prov);

  std::ostringstream human;
  human << "learned " << out.string() << " from " << (data.provenance.rows_read - data.provenance.rows_dropped) << " of "
        << data.provenance.rows_read << " rows\n";
  Json cpts = Json::array();
  for (VarIndex v = 0; v < fit.network.size(); ++v) {
    const Cpt& cpt = fit.network.cpt(v);
    const Variable& var = fit.network.variable(v);
    human << var.name << ":\n";
    for (std::size_t r = 0; r < cpt.row_count(); ++r) {
      const auto given = row_given(fit.network, v, r);
      human << "  " << (given.empty() ? std::string("(root)") : format_assignment(given)) << " ->";
      for (std::size_t s = 0; s < cpt.cardinality(); ++s) human << " " << var.states[s] << "=" << fmt(cpt(r, static_cast<StateIndex>(s)), 4);
      human << "\n";
    }
  }
  emit({{"network", out.string()}, {"provenance", provenance_path.string()}, {"rows_used", data.provenance.rows_read - data.provenance.rows_dropped},
        {"warnings", fit.warnings}},
       human.str());
  return kOk;
}

int cmd_solve(const fs::path& network, const fs::path& roles, const fs::path& constraints_path, const std::string& mode_text,
              const fs::path& out, fs::path report_path, double timeout) {
  const SolveMode mode = parse_solve_mode(mode_text);
  const FeoScenario sc = load_scenario(network, roles);
  std::vector<MarginalConstraint> cs;
  if (!constraints_path.empty()) cs = load_constraints(constraints_path);
  SolveOptions opt;
  if (timeout > 0) {
    opt.deadline = std::chrono::steady_clock::now() +
                   std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(timeout));
  }
  const SolveOutcome res = solve_scenario(sc, cs, mode, opt);
  write_json_file(out, to_json(res.corrected.to_spec()));
  Json doc = solution_report(sc, res.system, res.solution);
  doc["pre_deviation"] = res.pre_deviation;
  doc["post_deviation"] = res.post_deviation;
  doc["constraint_check"] = constraint_check(res.corrected, cs);
  if (report_path.empty()) report_path = fs::path(out.string() + ".solution.json");
  write_json_file(report_path, doc);

  std::ostringstream human;
  human << "status: " << to_string(res.solution.status) << "\n"
        << "deviation: " << fmt(res.pre_deviation) << " -> " << fmt(res.post_deviation) << "\n"
        << "objective: " << res.solution.objective << "\n";
  for (std::size_t k = 0; k < res.system.index.size(); ++k) {
    human << "  " << res.system.index.labels[k] << ": " << fmt(res.system.index.theta0[k]) << " -> "
          << fmt(res.solution.theta[k]) << "\n";
  }
  for (const auto& a : res.solution.active) human << "  active: " << a << "\n";
  human << "wrote " << out.string() << " and " << report_path.string() << "\n";
  emit(doc, human.str());
  return kOk;
}

int cmd_report(const fs::path& network, const fs::path& roles, const fs::path& post_path, const fs::path& constraints_path,
               const std::string& mode_text, const fs::path& out_dir) {
  const FeoScenario sc = load_scenario(network, roles);
  const ConditionalTable pre = feo_table(sc);
  ConditionalTable post;
  if (!post_path.empty()) {
    post = feo_table(sc.with_network(load_network(post_path)));
  } else {
    std::vector<MarginalConstraint> cs;
    if (!constraints_path.empty()) cs = load_constraints(constraints_path);
    post = feo_table(sc.with_network(solve_scenario(sc, cs, parse_solve_mode(mode_text)).corrected));
  }
  fs::create_directories(out_dir);
  write_text_file(out_dir / "pre.csv", to_csv(pre));
  write_text_file(out_dir / "post.csv", to_csv(post));
  const Json summary = deviation_summary(feo_deviation(pre), feo_deviation(post));
  write_json_file(out_dir / "deviation.json", summary);
  emit(Json{{"pre", to_json(pre)}, {"post", to_json(post)}, {"deviation", summary}},
       "pre (deviation " + fmt(feo_deviation(pre)) + "):\n" + table_text(pre) + "post (deviation " +
           fmt(feo_deviation(post)) + "):\n" + table_text(post) + "wrote pre.csv, post.csv, deviation.json to " +
           out_dir.string() + "\n");
  return kOk;
}

int cmd_sample(const fs::path& network, std::size_t count, std::uint64_t seed, const std::vector<std::string>& columns,
               const fs::path& out, fs::path manifest_path) {
  const Network net = load_network(network);
  const SampleRequest req{count, seed, columns};
  export_csv(sample(net, req), out);
  if (manifest_path.empty()) manifest_path = fs::path(out.string() + ".manifest.json");
  const Json manifest = sample_manifest(net, req);
  write_json_file(manifest_path, manifest);
  emit(manifest, "wrote " + std::to_string(count) + " records to " + out.string() + " (seed " + std::to_string(seed) +
                     ", network " + manifest["network_hash"].get<std::string>() + ")\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairbn: fair-equality-of-opportunity edits for discrete Bayesian networks"};
  app.require_subcommand(1);
  app.add_flag("--json", g_json, "Machine-readable output on stdout");

  fs::path network, roles, constraints, out, extra, data, schema, structure;
  std::string mode = "auto";
  double smoothing = 0.0, timeout = 0.0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;

  auto* validate_cmd = app.add_subcommand("validate", "Check a network, its roles and constraints");
  validate_cmd->add_option("--network", network, "Network document")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--roles", roles, "Roles document")->check(CLI::ExistingFile);
  validate_cmd->add_option("--constraints", constraints, "Feasibility constraints")->check(CLI::ExistingFile);

  auto* learn_cmd = app.add_subcommand("learn", "Fit CPTs for a structure from a CSV dataset");
  learn_cmd->add_option("--data", data, "CSV file")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--schema", schema, "Column schema")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--structure", structure, "Structure document (variables and edges)")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--smoothing", smoothing, "Additive pseudocount")->check(CLI::NonNegativeNumber);
  learn_cmd->add_option("--out", out, "Output network document")->required();
  learn_cmd->add_option("--provenance", extra, "Provenance sidecar (default <out>.provenance.json)");

  auto* solve_cmd = app.add_subcommand("solve", "Edit the control CPT toward FEO");
  solve_cmd->add_option("--network", network)->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--roles", roles)->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--constraints", constraints)->check(CLI::ExistingFile);
  solve_cmd->add_option("--mode", mode, "auto, exact or closest")->check(CLI::IsMember({"auto", "exact", "closest"}));
  solve_cmd->add_option("--out", out, "Corrected network document")->required();
  solve_cmd->add_option("--report", extra, "Solution report (default <out>.solution.json)");
  solve_cmd->add_option("--timeout", timeout, "Seconds before giving up (0 = none)")->check(CLI::NonNegativeNumber);

  auto* report_cmd = app.add_subcommand("report", "Write pre/post opportunity tables");
  report_cmd->add_option("--network", network)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--roles", roles)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--post", extra, "Corrected network (solved here when omitted)")->check(CLI::ExistingFile);
  report_cmd->add_option("--constraints", constraints)->check(CLI::ExistingFile);
  report_cmd->add_option("--mode", mode)->check(CLI::IsMember({"auto", "exact", "closest"}));
  report_cmd->add_option("--out-dir", out, "Directory for pre.csv, post.csv, deviation.json")->required();

  auto* sample_cmd = app.add_subcommand("sample", "Draw records from a network");
  sample_cmd->add_option("--network", network)->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--count", count, "Number of records")->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", seed, "64-bit seed");
  sample_cmd->add_option("--columns", columns, "Variables to export (default all)")->delimiter(',');
  sample_cmd->add_option("--out", out, "CSV output")->required();
  sample_cmd->add_option("--manifest", extra, "Manifest (default <out>.manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    diag("error", "Usage", e.what());
    return kInput;
  }

  try {
    if (*validate_cmd) return cmd_validate(network, roles, constraints);
    if (*learn_cmd) return cmd_learn(data, schema, structure, smoothing, out, extra);
    if (*solve_cmd) return cmd_solve(network, roles, constraints, mode, out, extra, timeout);
    if (*report_cmd) return cmd_report(network, roles, extra, constraints, mode, out);
    if (*sample_cmd) return cmd_sample(network, count, seed, columns, out, extra);
  } catch (const Error& e) {
    diag("error", std::string(to_string(e.kind())), e.what());
    for (const auto& d : e.details()) diag("detail", std::string(to_string(e.kind())), d);
    switch (e.kind()) {
      case ErrorKind::InfeasibleConstraints:
      case ErrorKind::ZeroCoefficientConstraint: return kInfeasible;
      case ErrorKind::Timeout: return kInternal;
      default: return kInput;
    }
  } catch (const std::exception& e) {
    diag("error", "Internal", e.what());
    return kInternal;
  }
  return kInternal;
}
