#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pmloop/datastore.hpp"
#include "pmloop/error.hpp"
#include "pmloop/uuid.hpp"

namespace pmloop {

enum class Role { viewer, editor, admin };
std::string to_string(Role r);
std::optional<Role> parse_role(std::string_view s);

struct ApiToken {
  std::string token;
  Role role = Role::viewer;
  std::string org;
};

/// Static bearer tokens. File format: {"tokens": [{"token", "role", "org"}]}.
class TokenStore {
 public:
  static TokenStore from_json(const nlohmann::json& j);
  static TokenStore load(const std::filesystem::path& file);

  void add(ApiToken token);
  std::optional<ApiToken> find(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }

 private:
  std::map<std::string, ApiToken, std::less<>> tokens_;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;

  std::string header(const std::string& name) const;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// HTTP status for a library error code.
int http_status(Errc code);

/// Strict parse of a row-query body; canonical form via query_body_json.
QueryRequest parse_query_body(const nlohmann::json& body);
nlohmann::json query_body_json(const QueryRequest& q);

/// Transport-independent REST handler for the /v1 routes.
///
/// Checks run in a fixed order: authentication (401), route (404), role
/// (403), payload (400), resource (404). Campaign mutations work on a copy
/// that is committed only on success, so a failed request leaves the
/// campaign as it was.
class ApiService {
 public:
  struct Options {
    std::optional<std::filesystem::path> data_dir;  // campaign snapshots
    std::optional<std::uint64_t> id_seed;           // campaign and incident ids
    /// Invoked before each campaign operation with its name; throwing
    /// simulates an internal fault.
    std::function<void(std::string_view)> fault_hook;
    std::function<std::chrono::system_clock::time_point()> clock;
  };

  ApiService(Datastore& store, TokenStore tokens);
  ApiService(Datastore& store, TokenStore tokens, Options options);
  ~ApiService();

  HttpResponse handle(const HttpRequest& request);

  std::size_t campaign_count() const;

 private:
  struct CampaignEntry;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pmloop
