#include <csignal>
#include <cstdlib>
#include <iostream>

#include "httplib.h"
#include "pmloop/api.hpp"

namespace {

httplib::Server* running = nullptr;

void on_signal(int) {
  if (running) running->stop();
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

}  // namespace

int main() {
  const std::string bind = env_or("PMLOOP_BIND", "127.0.0.1:8080");
  const std::string token_file = env_or("PMLOOP_TOKEN_FILE", "");
  const std::string data_dir = env_or("PMLOOP_DATA_DIR", "");

  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "PMLOOP_BIND must be host:port\n";
    return 1;
  }
  const std::string host = bind.substr(0, colon);
  const int port = std::atoi(bind.c_str() + colon + 1);
  if (port <= 0 || port > 65535) {
    std::cerr << "invalid port in PMLOOP_BIND\n";
    return 1;
  }
  if (token_file.empty()) {
    std::cerr << "PMLOOP_TOKEN_FILE is required\n";
    return 1;
  }

  try {
    pmloop::Datastore::Options store_opt;
    pmloop::ApiService::Options api_opt;
    if (!data_dir.empty()) {
      store_opt.data_dir = data_dir;
      api_opt.data_dir = data_dir;
    }
    pmloop::Datastore store(store_opt);
    pmloop::ApiService api(store, pmloop::TokenStore::load(token_file), api_opt);

    httplib::Server server;
    auto handler = [&](const httplib::Request& req, httplib::Response& res) {
      pmloop::HttpRequest r;
      r.method = req.method;
      r.path = req.path;
      r.body = req.body;
      for (const auto& [k, v] : req.params) r.query[k] = v;
      for (const auto& [k, v] : req.headers) {
        std::string key = k;
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        r.headers[key] = v;
      }
      const auto out = api.handle(r);
      res.status = out.status;
      for (const auto& [k, v] : out.headers) res.set_header(k, v);
      res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Put(".*", handler);
    server.Delete(".*", handler);
    server.Patch(".*", handler);

    running = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "pmloopd listening on " << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "cannot bind " << bind << "\n";
      return 2;
    }
    if (!data_dir.empty()) store.checkpoint();
  } catch (const std::exception& e) {
    std::cerr << "pmloopd: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
