#include "fairbn/service.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <random>

#include <httplib.h>

#include "fairbn/sampler.hpp"

namespace fairbn {

namespace {

constexpr std::size_t kMaxSample = 1'000'000;

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InfeasibleConstraints:
    case ErrorKind::ZeroCoefficientConstraint: return 409;
    case ErrorKind::Timeout: return 504;
    case ErrorKind::IoError: return 500;
    default: return 400;
  }
}

HttpResponse from_error(const Error& e) {
  Json extra = {{"kind", std::string(to_string(e.kind()))}};
  if (!e.details().empty()) extra["conflict"] = e.details();
  return problem(status_for(e.kind()), std::string(to_string(e.kind())), e.what(), extra);
}

HttpResponse json_response(int status, const Json& doc) {
  HttpResponse r;
  r.status = status;
  r.body = doc.dump(2);
  return r;
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidDocument, std::string("request body is not JSON: ") + e.what());
  }
}

std::optional<std::uint64_t> parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t j = path.find('/', i);
    if (i < path.size()) parts.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
    i = j == std::string::npos ? path.size() : j;
  }
  return parts;
}

}  // namespace

HttpResponse problem(int status, const std::string& title, const std::string& detail, Json extra) {
  Json doc = {{"type", "about:blank"}, {"title", title}, {"status", status}, {"detail", detail}};
  for (auto& [k, v] : extra.items()) doc[k] = v;
  HttpResponse r;
  r.status = status;
  r.content_type = "application/problem+json";
  r.body = doc.dump(2);
  return r;
}

Service::Service(ServiceConfig config) : config_(std::move(config)), id_state_(std::random_device{}()) {
  if (config_.capacity == 0) config_.capacity = 1;
  id_state_ = (id_state_ << 32) ^ static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
}

std::size_t Service::session_count() const {
  std::lock_guard lock(store_mutex_);
  return sessions_.size();
}

std::vector<std::string> Service::fixtures() const {
  std::vector<std::string> out;
  std::error_code ec;
  if (config_.fixture_dir.empty()) return out;
  for (const auto& entry : std::filesystem::directory_iterator(config_.fixture_dir, ec)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "network.json") &&
        std::filesystem::exists(entry.path() / "roles.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string Service::new_id() {
  // Called with store_mutex_ held.
  char buf[33];
  const std::uint64_t a = splitmix64(id_state_++);
  const std::uint64_t b = splitmix64(id_state_++ ^ 0x5851F42D4C957F2DULL);
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(a), static_cast<unsigned long long>(b));
  return buf;
}

std::string Service::insert(std::shared_ptr<Session> session) {
  std::lock_guard lock(store_mutex_);
  std::string id = new_id();
  while (sessions_.count(id)) id = new_id();
  lru_.push_front(id);
  sessions_.emplace(id, std::make_pair(std::move(session), lru_.begin()));
  while (sessions_.size() > config_.capacity) {
    sessions_.erase(lru_.back());
    lru_.pop_back();
  }
  return id;
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) {
  std::lock_guard lock(store_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second.second);
  return it->second.first;
}

HttpResponse Service::handle(const HttpRequest& req) {
  try {
    const auto parts = split_path(req.path);
    if (parts.size() < 2 || parts[0] != "v1") return problem(404, "Not Found", "no route for " + req.path);
    if (parts[1] == "fixtures" && parts.size() == 2) {
      if (req.method != "GET") return problem(405, "Method Not Allowed", req.method + " " + req.path);
      return list_fixtures();
    }
    if (parts[1] != "sessions") return problem(404, "Not Found", "no route for " + req.path);
    if (parts.size() == 2) {
      if (req.method != "POST") return problem(405, "Method Not Allowed", req.method + " " + req.path);
      return create_session(req);
    }
    if (parts.size() != 4) return problem(404, "Not Found", "no route for " + req.path);

    auto session = find(parts[2]);
    if (!session) return problem(404, "Not Found", "unknown session '" + parts[2] + "'");
    std::lock_guard lock(session->mutex);
    const std::string& what = parts[3];
    const std::string method = req.method;
    if (what == "tables" && method == "GET") return get_tables(*session, parts[2]);
    if (what == "constraints" && method == "PUT") return put_constraints(*session, req);
    if (what == "solve" && method == "POST") return post_solve(*session, req);
    if (what == "sample" && method == "GET") return get_sample(*session, req);
    if (what == "tables" || what == "constraints" || what == "solve" || what == "sample") {
      return problem(405, "Method Not Allowed", method + " " + req.path);
    }
    return problem(404, "Not Found", "no route for " + req.path);
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return problem(500, "Internal Server Error", e.what());
  }
}

HttpResponse Service::create_session(const HttpRequest& req) {
  const Json body = parse_body(req.body);
  if (!body.is_object()) return problem(400, "InvalidDocument", "request body must be a JSON object");

  auto session = std::make_shared<Session>();
  Json network_doc, roles_doc, constraints_doc;
  if (body.contains("fixture")) {
    const std::string name = body["fixture"].is_string() ? body["fixture"].get<std::string>() : "";
    const auto names = fixtures();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      return problem(404, "Not Found", "unknown fixture '" + name + "'");
    }
    const auto dir = config_.fixture_dir / name;
    network_doc = read_json_file(dir / "network.json");
    roles_doc = read_json_file(dir / "roles.json");
    if (std::filesystem::exists(dir / "constraints.json")) constraints_doc = read_json_file(dir / "constraints.json");
    session->fixture = name;
  } else {
    if (!body.contains("network")) return problem(400, "InvalidDocument", "missing 'network'");
    if (!body.contains("roles")) return problem(400, "InvalidDocument", "missing 'roles'");
    network_doc = body["network"];
    roles_doc = body["roles"];
    if (body.contains("constraints")) constraints_doc = body["constraints"];
  }

  const NetworkSpec spec = network_spec_from_json(network_doc);
  const ValidationReport report = validate(spec);
  if (!report.empty()) {
    return problem(400, std::string(to_string(report.front().kind)), report.front().message,
                   {{"kind", std::string(to_string(report.front().kind))}, {"report", to_json(report)}});
  }
  session->scenario = assign_roles(Network::build(spec), roles_from_json(roles_doc));
  if (!constraints_doc.is_null()) {
    session->constraints = constraints_from_json(constraints_doc);
    FeoSystem sys = build_feo_system(*session->scenario, enumerate_free_parameters(*session->scenario));
    add_feasibility_constraints(sys, *session->scenario, session->constraints);
    check_feasible(sys);
  }
  // Evaluate once so that an unusable scenario is rejected at creation.
  const ConditionalTable pre = feo_table(*session->scenario);

  const std::uint64_t revision = session->revision;
  const std::string id = insert(session);
  Json doc = {{"id", id}, {"revision", revision}, {"pre_deviation", feo_deviation(pre)},
              {"constraints", to_json(session->constraints)["constraints"]}};
  if (!session->fixture.empty()) doc["fixture"] = session->fixture;
  HttpResponse r = json_response(201, doc);
  r.headers["Location"] = "/v1/sessions/" + id;
  return r;
}

HttpResponse Service::get_tables(Session& s, const std::string& id) {
  std::optional<ConditionalTable> post;
  const bool current = s.outcome && s.solved_revision == s.revision;
  if (current) post = feo_table(s.scenario->with_network(s.outcome->corrected));
  Json doc = {{"id", id}, {"revision", s.revision}};
  const Json tables = tables_document(feo_table(*s.scenario), post);
  for (const auto& [k, v] : tables.items()) doc[k] = v;
  doc["solved_revision"] = current ? Json(s.solved_revision) : Json(nullptr);
  doc["status"] = current ? Json(std::string(to_string(s.outcome->solution.status))) : Json(nullptr);
  doc["constraints"] = to_json(s.constraints)["constraints"];
  return json_response(200, doc);
}

HttpResponse Service::put_constraints(Session& s, const HttpRequest& req) {
  const Json body = parse_body(req.body);
  std::optional<std::uint64_t> expected;
  if (auto h = req.headers.find("if-match"); h != req.headers.end()) {
    std::string v = h->second;
    v.erase(std::remove(v.begin(), v.end(), '"'), v.end());
    expected = parse_uint(v);
    if (!expected) return problem(400, "InvalidDocument", "If-Match must be a revision number");
  }
  if (body.is_object() && body.contains("revision")) {
    if (!body["revision"].is_number_unsigned()) return problem(400, "InvalidDocument", "'revision' must be a non-negative integer");
    expected = body["revision"].get<std::uint64_t>();
  }
  if (expected && *expected != s.revision) {
    return problem(409, "Conflict",
                   "stale revision " + std::to_string(*expected) + "; current is " + std::to_string(s.revision),
                   {{"revision", s.revision}});
  }
  auto constraints = constraints_from_json(body);
  // Reject constraints that cannot hold on this network before storing them.
  {
    const ParameterIndex idx = enumerate_free_parameters(*s.scenario);
    FeoSystem sys = build_feo_system(*s.scenario, idx);
    add_feasibility_constraints(sys, *s.scenario, constraints);
    check_feasible(sys);
  }
  s.constraints = std::move(constraints);
  ++s.revision;
  s.outcome.reset();
  return json_response(200, {{"revision", s.revision}, {"constraints", to_json(s.constraints)["constraints"]}});
}

HttpResponse Service::post_solve(Session& s, const HttpRequest& req) {
  const Json body = parse_body(req.body);
  std::string mode_text = "auto";
  if (auto q = req.query.find("mode"); q != req.query.end()) mode_text = q->second;
  if (body.is_object() && body.contains("mode") && body["mode"].is_string()) mode_text = body["mode"].get<std::string>();
  const SolveMode mode = parse_solve_mode(mode_text);

  SolveOptions opt;
  opt.deadline = std::chrono::steady_clock::now() + config_.solve_timeout;
  SolveOutcome outcome = solve_scenario(*s.scenario, s.constraints, mode, opt);

  Json doc = solution_report(*s.scenario, outcome.system, outcome.solution);
  ++s.revision;
  s.solved_revision = s.revision;
  doc["revision"] = s.revision;
  doc["pre_deviation"] = outcome.pre_deviation;
  doc["post_deviation"] = outcome.post_deviation;
  doc["constraint_check"] = constraint_check(outcome.corrected, s.constraints);
  doc["network"] = to_json(outcome.corrected.to_spec());
  s.outcome = std::move(outcome);
  return json_response(200, doc);
}

HttpResponse Service::get_sample(Session& s, const HttpRequest& req) {
  auto q = req.query.find("count");
  if (q == req.query.end()) return problem(400, "InvalidDocument", "missing 'count'");
  const auto count = parse_uint(q->second);
  if (!count || *count < 1 || *count > kMaxSample) {
    return problem(400, "InvalidDocument", "count must be an integer in [1, " + std::to_string(kMaxSample) + "]");
  }
  std::uint64_t seed = 0;
  if (auto sq = req.query.find("seed"); sq != req.query.end()) {
    const auto v = parse_uint(sq->second);
    if (!v) return problem(400, "InvalidDocument", "seed must be an unsigned 64-bit integer");
    seed = *v;
  }
  if (!s.outcome || s.solved_revision != s.revision) {
    return problem(409, "Conflict", "no solution at the current revision; POST .../solve first", {{"revision", s.revision}});
  }
  SampleRequest sr{static_cast<std::size_t>(*count), seed, {}};
  HttpResponse r;
  r.content_type = "text/csv";
  r.body = to_csv(sample(s.outcome->corrected, sr));
  r.headers["X-Network-Hash"] = network_hash(s.outcome->corrected);
  r.headers["X-Generator"] = kGeneratorName;
  return r;
}

HttpResponse Service::list_fixtures() const {
  Json list = Json::array();
  for (const auto& name : fixtures()) {
    const auto dir = config_.fixture_dir / name;
    list.push_back({{"name", name}, {"has_constraints", std::filesystem::exists(dir / "constraints.json")}});
  }
  return json_response(200, {{"fixtures", list}});
}

void mount(httplib::Server& server, Service& service) {
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r{req.method, req.path, req.body, {}, {}};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    for (const auto& [k, v] : req.headers) {
      std::string key = k;
      for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      r.headers[key] = v;
    }
    const HttpResponse out = service.handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, out.content_type);
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Put(".*", route);
  server.Delete(".*", route);
}

}  // namespace fairbn
