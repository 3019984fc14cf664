// HTTP front end for fairbn::Service.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "fairbn/service.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fairbn-serve: HTTP API over fairbn scenarios"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t capacity = 64;
  double timeout = 30.0;
  std::string fixtures = FAIRBN_DEFAULT_FIXTURES;
  app.add_option("--host", host, "Bind address")->envname("FAIRBN_HOST");
  app.add_option("--port", port, "Port")->envname("FAIRBN_PORT")->check(CLI::Range(0, 65535));
  app.add_option("--capacity", capacity, "Session capacity (LRU)")->envname("FAIRBN_SESSION_CAPACITY")->check(CLI::PositiveNumber);
  app.add_option("--solve-timeout", timeout, "Solve timeout in seconds")->envname("FAIRBN_SOLVE_TIMEOUT")->check(CLI::PositiveNumber);
  app.add_option("--fixtures", fixtures, "Fixture directory")->envname("FAIRBN_FIXTURES");
  CLI11_PARSE(app, argc, argv);

  fairbn::ServiceConfig config;
  config.capacity = capacity;
  config.solve_timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000));
  config.fixture_dir = fixtures;
  fairbn::Service service(config);

  httplib::Server server;
  fairbn::mount(server, service);

  if (port == 0) {
    port = server.bind_to_any_port(host);
    if (port < 0) {
      std::cerr << "fairbn-serve: cannot bind " << host << "\n";
      return 2;
    }
  } else if (!server.bind_to_port(host, port)) {
    std::cerr << "fairbn-serve: cannot bind " << host << ":" << port << "\n";
    return 2;
  }
  std::cerr << "fairbn-serve: listening on http://" << host << ":" << port << " (fixtures " << fixtures << ")\n";
  return server.listen_after_bind() ? 0 : 4;
}
