#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairbn/json_io.hpp"
#include "fairbn/pipeline.hpp"

namespace httplib {
class Server;
}

namespace fairbn {

struct ServiceConfig {
  std::size_t capacity = 64;
  std::chrono::milliseconds solve_timeout{30000};
  std::filesystem::path fixture_dir;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Routes the /v1 API. Thread-safe: the store is guarded by one mutex, and every
/// request on a session holds that session's mutex for its whole duration.
class Service {
 public:
  explicit Service(ServiceConfig config);

  HttpResponse handle(const HttpRequest& request);

  std::size_t session_count() const;
  /// Fixture directories holding both network.json and roles.json, sorted by name.
  std::vector<std::string> fixtures() const;

 private:
  struct Session {
    std::mutex mutex;
    std::string fixture;
    std::optional<FeoScenario> scenario;
    std::vector<MarginalConstraint> constraints;
    std::uint64_t revision = 1;
    std::optional<SolveOutcome> outcome;
    std::uint64_t solved_revision = 0;
  };

  HttpResponse create_session(const HttpRequest& req);
  HttpResponse get_tables(Session& s, const std::string& id);
  HttpResponse put_constraints(Session& s, const HttpRequest& req);
  HttpResponse post_solve(Session& s, const HttpRequest& req);
  HttpResponse get_sample(Session& s, const HttpRequest& req);
  HttpResponse list_fixtures() const;

  std::shared_ptr<Session> find(const std::string& id);
  std::string insert(std::shared_ptr<Session> session);
  std::string new_id();

  ServiceConfig config_;
  mutable std::mutex store_mutex_;
  std::list<std::string> lru_;  // most recent first
  std::unordered_map<std::string, std::pair<std::shared_ptr<Session>, std::list<std::string>::iterator>> sessions_;
  std::uint64_t id_state_;
};

/// Routes every request the server receives through `service`.
void mount(httplib::Server& server, Service& service);

/// RFC 7807 problem document.
HttpResponse problem(int status, const std::string& title, const std::string& detail, Json extra = Json::object());

}  // namespace fairbn
