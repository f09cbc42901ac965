#include "pmloop/api.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "pmloop/benchmarks.hpp"
#include "pmloop/campaign.hpp"
#include "pmloop/csv.hpp"

namespace pmloop {

namespace {

using nlohmann::json;

// An error decided by the HTTP layer itself rather than the library.
struct ApiError {
  int status;
  std::string code;
  std::string message;
  std::string path;
};

[[noreturn]] void bad_request(const std::string& path, const std::string& message,
                              const std::string& code = "invalid_argument") {
  throw ApiError{400, code, path.empty() ? message : path + ": " + message, path};
}

HttpResponse json_response(int status, const json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

HttpResponse error_response(int status, const std::string& code, const std::string& message,
                            const std::string& path = {}, const std::string& incident = {}) {
  json e{{"status", status}, {"code", code}, {"message", message}};
  if (!path.empty()) e["path"] = path;
  if (!incident.empty()) e["incident"] = incident;
  return json_response(status, json{{"error", e}});
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& prefix = {}) {
  if (!j.is_object()) bad_request(prefix, "expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      bad_request(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown field");
}

bool wants_csv(const HttpRequest& req) { return req.header("accept").find("text/csv") != std::string::npos; }

std::string rows_csv(const RowSet& rows) {
  std::string out;
  std::vector<std::optional<std::string>> line;
  for (const auto& c : rows.columns) line.emplace_back(c.name);
  csv::write_row(out, line);
  for (const auto& r : rows.rows) {
    line.clear();
    for (const auto& v : r) line.push_back(to_text(v));
    csv::write_row(out, line);
  }
  return out;
}

std::vector<double> number_array(const json& j, const std::string& path) {
  if (!j.is_array()) bad_request(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad_request(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

}  // namespace

std::string to_string(Role r) {
  switch (r) {
    case Role::viewer: return "viewer";
    case Role::editor: return "editor";
    case Role::admin: return "admin";
  }
  return "viewer";
}

std::optional<Role> parse_role(std::string_view s) {
  if (s == "viewer") return Role::viewer;
  if (s == "editor") return Role::editor;
  if (s == "admin") return Role::admin;
  return std::nullopt;
}

TokenStore TokenStore::from_json(const json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array())
    throw Error(Errc::invalid_argument, "token file must be {\"tokens\": [...]}");
  TokenStore store;
  for (const auto& t : j["tokens"]) {
    if (!t.is_object() || !t.contains("token") || !t["token"].is_string() || !t.contains("role") ||
        !t["role"].is_string())
      throw Error(Errc::invalid_argument, "each token needs string fields token and role");
    const auto role = parse_role(t["role"].get<std::string>());
    if (!role) throw Error(Errc::invalid_argument, "unknown role '" + t["role"].get<std::string>() + "'");
    const auto token = t["token"].get<std::string>();
    if (token.empty()) throw Error(Errc::invalid_argument, "empty token");
    store.add({token, *role, t.value("org", "")});
  }
  return store;
}

TokenStore TokenStore::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io_failure, "cannot read token file " + file.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::invalid_argument, "token file is not valid JSON");
  return from_json(j);
}

void TokenStore::add(ApiToken token) { tokens_[token.token] = std::move(token); }

std::optional<ApiToken> TokenStore::find(std::string_view token) const {
  auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

std::string HttpRequest::header(const std::string& name) const {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  auto it = headers.find(key);
  return it == headers.end() ? std::string() : it->second;
}

int http_status(Errc code) {
  switch (code) {
    case Errc::table_missing: return 404;
    case Errc::internal:
    case Errc::io_failure:
    case Errc::not_positive_definite: return 500;
    default: return 400;
  }
}

QueryRequest parse_query_body(const json& body) {
  check_keys(body, {"columns", "filter", "numRows", "cursor"});
  QueryRequest q;
  if (body.contains("columns")) {
    const auto& c = body["columns"];
    if (!c.is_array()) bad_request("columns", "expected an array of column names");
    if (c.empty()) bad_request("columns", "must name at least one column");
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c[i].is_string()) bad_request("columns[" + std::to_string(i) + "]", "expected a string");
      q.columns.push_back(c[i].get<std::string>());
    }
  }
  if (body.contains("filter") && !body["filter"].is_null()) q.filter = body["filter"];
  if (body.contains("numRows") && !body["numRows"].is_null()) {
    const auto& n = body["numRows"];
    if (!n.is_number_integer() || n.get<std::int64_t>() < 0) bad_request("numRows", "expected a non-negative integer");
    q.num_rows = n.get<std::size_t>();
  }
  if (body.contains("cursor") && !body["cursor"].is_null()) {
    if (!body["cursor"].is_string()) bad_request("cursor", "expected a string");
    q.cursor = body["cursor"].get<std::string>();
  }
  return q;
}

json query_body_json(const QueryRequest& q) {
  json j = json::object();
  if (!q.columns.empty()) j["columns"] = q.columns;
  if (q.filter) j["filter"] = *q.filter;
  if (q.num_rows) j["numRows"] = *q.num_rows;
  if (q.cursor) j["cursor"] = *q.cursor;
  return j;
}

// ------------------------------------------------------------------ service

struct ApiService::CampaignEntry {
  explicit CampaignEntry(Campaign c) : campaign(std::move(c)) {}
  std::mutex mutex;
  Campaign campaign;
  std::string id, created_at, org;
};

struct ApiService::Impl {
  using Params = std::vector<std::string>;
  using Handler = HttpResponse (Impl::*)(const ApiToken&, const Params&, const HttpRequest&);

  struct Route {
    std::string method;
    std::vector<std::string> pattern;  // "*" matches one segment
    Role role;
    Handler handler;
  };

  Datastore& store;
  TokenStore tokens;
  Options options;
  std::vector<Route> routes;

  mutable std::mutex ids_mutex;
  UuidGenerator ids;
  mutable std::mutex campaigns_mutex;
  std::map<std::string, std::shared_ptr<CampaignEntry>> campaigns;

  Impl(Datastore& s, TokenStore t, Options o)
      : store(s), tokens(std::move(t)), options(std::move(o)),
        ids(options.id_seed ? UuidGenerator(*options.id_seed) : UuidGenerator()) {
    if (!options.clock) options.clock = [] { return std::chrono::system_clock::now(); };
    auto add = [&](const char* method, const char* path, Role role, Handler h) {
      routes.push_back({method, split_path(path), role, h});
    };
    add("GET", "/v1/tables", Role::viewer, &Impl::list_tables);
    add("POST", "/v1/tables", Role::admin, &Impl::create_table);
    add("GET", "/v1/tables/*/metadata", Role::viewer, &Impl::table_metadata);
    add("POST", "/v1/tables/*/query", Role::viewer, &Impl::query_table);
    add("POST", "/v1/tables/*/records", Role::editor, &Impl::ingest_records);
    add("GET", "/v1/benchmarks", Role::viewer, &Impl::list_benchmarks);
    add("POST", "/v1/campaigns", Role::editor, &Impl::create_campaign);
    add("GET", "/v1/campaigns/*", Role::viewer, &Impl::get_campaign);
    add("POST", "/v1/campaigns/*/propose", Role::editor, &Impl::propose);
    add("POST", "/v1/campaigns/*/measurements", Role::editor, &Impl::measure);
    add("POST", "/v1/campaigns/*/step", Role::editor, &Impl::step);
    add("GET", "/v1/campaigns/*/diagnostics", Role::viewer, &Impl::diagnostics);
    add("GET", "/v1/campaigns/*/export", Role::viewer, &Impl::export_campaign);
    load_campaigns();
  }

  std::string new_id() {
    std::lock_guard lock(ids_mutex);
    return ids.next().str();
  }

  void fault(std::string_view op) const {
    if (options.fault_hook) options.fault_hook(op);
  }

  // ------------------------------------------------------------ dispatch

  HttpResponse handle(const HttpRequest& req) {
    try {
      const auto segs = split_path(req.path);
      if (req.method == "GET" && segs == std::vector<std::string>{"v1", "healthz"})
        return json_response(200, {{"status", "ok"}});

      const auto auth = req.header("authorization");
      constexpr std::string_view bearer = "Bearer ";
      std::optional<ApiToken> token;
      if (auth.size() > bearer.size() && auth.compare(0, bearer.size(), bearer) == 0)
        token = tokens.find(std::string_view(auth).substr(bearer.size()));
      if (!token) return error_response(401, "unauthorized", "missing or unknown bearer token");

      const Route* route = nullptr;
      Params params;
      for (const auto& r : routes) {
        if (r.method != req.method || r.pattern.size() != segs.size()) continue;
        Params p;
        bool match = true;
        for (std::size_t i = 0; i < segs.size() && match; ++i) {
          if (r.pattern[i] == "*")
            p.push_back(segs[i]);
          else
            match = r.pattern[i] == segs[i];
        }
        if (match) {
          route = &r;
          params = std::move(p);
          break;
        }
      }
      if (!route) return error_response(404, "unknown_route", "no route for " + req.method + " " + req.path);
      if (token->role < route->role)
        return error_response(403, "forbidden", "role " + to_string(token->role) + " may not call this route");
      return (this->*(route->handler))(*token, params, req);
    } catch (const ApiError& e) {
      return error_response(e.status, e.code, e.message, e.path);
    } catch (const Error& e) {
      const int status = http_status(e.code());
      if (status == 500) return internal_error();
      return error_response(status, std::string(errc_name(e.code())), e.what(), e.path());
    } catch (...) {
      return internal_error();
    }
  }

  HttpResponse internal_error() {
    std::string incident;
    try {
      incident = new_id();
    } catch (...) {
      incident = "unavailable";
    }
    return error_response(500, "internal", "internal error; quote the incident id when reporting", {}, incident);
  }

  static json parse_body(const HttpRequest& req, bool empty_ok) {
    if (req.body.empty() || std::all_of(req.body.begin(), req.body.end(), [](unsigned char c) { return std::isspace(c); })) {
      if (empty_ok) return json::object();
      bad_request("", "request body is required", "invalid_json");
    }
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) bad_request("", "request body is not valid JSON", "invalid_json");
    return j;
  }

  void require_table(const std::string& id) const {
    if (!store.has_table(id)) throw ApiError{404, "table_missing", "no table named '" + id + "'", ""};
  }

  std::shared_ptr<CampaignEntry> find_campaign(const std::string& id) const {
    std::lock_guard lock(campaigns_mutex);
    auto it = campaigns.find(id);
    if (it == campaigns.end()) throw ApiError{404, "campaign_missing", "no campaign with id '" + id + "'", ""};
    return it->second;
  }

  static std::string actor(const ApiToken& t) { return t.org.empty() ? to_string(t.role) : t.org; }

  // -------------------------------------------------------------- tables

  HttpResponse list_tables(const ApiToken&, const Params&, const HttpRequest&) {
    return json_response(200, {{"tables", store.list_tables()}});
  }

  HttpResponse create_table(const ApiToken&, const Params&, const HttpRequest& req) {
    const auto body = parse_body(req, false);
    SchemaTemplate t;
    from_json(body, t);
    const auto id = store.create_table(t);
    return json_response(201, {{"id", id}});
  }

  HttpResponse table_metadata(const ApiToken&, const Params& p, const HttpRequest&) {
    require_table(p[0]);
    return json_response(200, to_json(store.metadata(p[0])));
  }

  HttpResponse query_table(const ApiToken&, const Params& p, const HttpRequest& req) {
    auto q = parse_query_body(parse_body(req, true));
    require_table(p[0]);
    if (q.columns.empty())
      for (const auto& f : store.schema(p[0]).fields) q.columns.push_back(f.name);
    const auto rows = store.query(p[0], q);
    if (wants_csv(req)) {
      HttpResponse r;
      r.content_type = "text/csv";
      r.body = rows_csv(rows);
      if (rows.cursor) r.headers["X-Next-Cursor"] = *rows.cursor;
      return r;
    }
    return json_response(200, to_json(rows));
  }

  HttpResponse ingest_records(const ApiToken& token, const Params& p, const HttpRequest& req) {
    IngestOptions opt;
    opt.actor = actor(token);
    if (req.header("content-type").find("text/csv") != std::string::npos) {
      std::optional<TravelerForm> form;
      auto it = req.query.find("form");
      require_table(p[0]);
      if (it != req.query.end()) form = store.form(it->second);
      auto src = req.query.find("source");
      if (src != req.query.end()) opt.source = src->second;
      const auto report = store.ingest_csv(p[0], req.body, form ? &*form : nullptr, opt);
      json violations = json::array();
      for (const auto& [row, v] : report.violations) {
        json jv = v;
        jv["row"] = row;
        violations.push_back(jv);
      }
      json body{{"accepted", report.accepted}, {"rejected", report.rejected}, {"violations", violations}};
      if (report.accepted == 0 && report.rejected > 0) {
        body["error"] = {{"status", 400}, {"code", "validation_failed"}, {"message", "no rows were accepted"}};
        return json_response(400, body);
      }
      return json_response(201, body);
    }

    const auto body = parse_body(req, false);
    check_keys(body, {"records", "form", "source", "transform"});
    if (!body.contains("records") || !body["records"].is_array() || body["records"].empty())
      bad_request("records", "expected a non-empty array of records");
    std::optional<std::string> form_id;
    if (body.contains("form")) {
      if (!body["form"].is_string()) bad_request("form", "expected a form id");
      form_id = body["form"].get<std::string>();
    }
    for (const char* k : {"source", "transform"})
      if (body.contains(k) && !body[k].is_string()) bad_request(k, "expected a string");
    opt.source = body.value("source", "");
    opt.transform = body.value("transform", "");
    require_table(p[0]);
    std::optional<TravelerForm> form;
    if (form_id) form = store.form(*form_id);

    std::vector<ValidatedRecord> valid;
    const auto& records = body["records"];
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto v = form ? store.validate(*form, records[i]) : store.validate(p[0], records[i]);
      if (!v.ok()) {
        const std::string path = "records[" + std::to_string(i) + "]" +
                                 (v.violations.empty() || v.violations[0].field.empty() ? "" : "." + v.violations[0].field);
        json err{{"status", 400},
                 {"code", "validation_failed"},
                 {"message", v.violations.empty() ? "record rejected" : v.violations[0].message},
                 {"path", path}};
        return json_response(400, {{"error", err}, {"violations", v.violations}});
      }
      valid.push_back(std::move(*v.record));
    }
    json uuids = json::array();
    for (const auto& r : valid) uuids.push_back(store.ingest(r, opt).uuid.str());
    return json_response(201, {{"accepted", valid.size()}, {"uuids", uuids}});
  }

  HttpResponse list_benchmarks(const ApiToken&, const Params&, const HttpRequest&) {
    json list = json::array();
    for (const auto& def : benchmark_registry()) list.push_back(def.to_json());
    return json_response(200, {{"benchmarks", list}});
  }

  // ----------------------------------------------------------- campaigns

  json campaign_json(const CampaignEntry& e) const {
    json pending = json::array();
    for (const auto* p : e.campaign.pending()) pending.push_back(to_json(*p));
    return {{"id", e.id},
            {"created_at", e.created_at},
            {"org", e.org},
            {"phase", to_string(e.campaign.phase())},
            {"config", e.campaign.config().to_json()},
            {"summary", e.campaign.summary()},
            {"pending", pending},
            {"iterations", e.campaign.records().size()}};
  }

  void persist(const CampaignEntry& e, const Campaign& c) const {
    if (!options.data_dir) return;
    const auto dir = *options.data_dir / "campaigns";
    std::filesystem::create_directories(dir);
    const auto file = dir / (e.id + ".json");
    const auto tmp = dir / (e.id + ".json.tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << json{{"id", e.id}, {"created_at", e.created_at}, {"org", e.org}, {"snapshot", c.snapshot()}}.dump();
      out.flush();
      if (!out) throw Error(Errc::io_failure, "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
  }

  void load_campaigns() {
    if (!options.data_dir) return;
    const auto dir = *options.data_dir / "campaigns";
    if (!std::filesystem::exists(dir)) return;
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
      if (f.path().extension() != ".json") continue;
      std::ifstream in(f.path(), std::ios::binary);
      const auto j = json::parse(in, nullptr, false);
      if (j.is_discarded() || !j.contains("snapshot"))
        throw Error(Errc::io_failure, "corrupt campaign file " + f.path().string());
      auto e = std::make_shared<CampaignEntry>(Campaign::from_snapshot(j["snapshot"]));
      e->id = j.at("id").get<std::string>();
      e->created_at = j.value("created_at", "");
      e->org = j.value("org", "");
      campaigns[e->id] = std::move(e);
    }
  }

  HttpResponse create_campaign(const ApiToken& token, const Params&, const HttpRequest& req) {
    const auto body = parse_body(req, false);
    const auto config = CampaignConfig::from_json(body);
    fault("create");
    auto e = std::make_shared<CampaignEntry>(Campaign::create(config, &store));
    e->id = new_id();
    e->created_at = format_rfc3339(options.clock());
    e->org = token.org;
    persist(*e, e->campaign);
    {
      std::lock_guard lock(campaigns_mutex);
      campaigns[e->id] = e;
    }
    return json_response(201, campaign_json(*e));
  }

  HttpResponse get_campaign(const ApiToken&, const Params& p, const HttpRequest&) {
    auto e = find_campaign(p[0]);
    std::lock_guard lock(e->mutex);
    return json_response(200, campaign_json(*e));
  }

  // Applies `op` to a copy and commits it only if everything succeeds.
  template <typename Op>
  HttpResponse mutate(const std::string& id, std::string_view name, Op&& op) {
    auto e = find_campaign(id);
    std::lock_guard lock(e->mutex);
    Campaign work = e->campaign;
    fault(name);
    json body = op(work);
    persist(*e, work);
    e->campaign = std::move(work);
    return json_response(200, body);
  }

  HttpResponse propose(const ApiToken&, const Params& p, const HttpRequest& req) {
    check_keys(parse_body(req, true), {});
    return mutate(p[0], "propose", [](Campaign& c) {
      json list = json::array();
      for (const auto& pr : c.propose()) list.push_back(to_json(pr));
      return json{{"proposals", list}, {"phase", to_string(c.phase())}};
    });
  }

  struct Measurement {
    std::string id;
    std::vector<double> y;
    std::optional<double> fidelity;
    bool expire = false;
  };

  static Measurement parse_measurement(const json& j, const std::string& prefix) {
    check_keys(j, {"proposal_id", "y", "fidelity", "expire"}, prefix);
    auto at = [&](const char* k) { return prefix.empty() ? std::string(k) : prefix + "." + k; };
    Measurement m;
    if (!j.contains("proposal_id") || !j["proposal_id"].is_string()) bad_request(at("proposal_id"), "expected a proposal id");
    m.id = j["proposal_id"].get<std::string>();
    if (j.contains("expire")) {
      if (!j["expire"].is_boolean()) bad_request(at("expire"), "expected a boolean");
      m.expire = j["expire"].get<bool>();
    }
    if (m.expire) {
      if (j.contains("y") || j.contains("fidelity")) bad_request(at("expire"), "an expired proposal carries no values");
      return m;
    }
    if (!j.contains("y")) bad_request(at("y"), "objective values are required");
    m.y = number_array(j["y"], at("y"));
    if (j.contains("fidelity") && !j["fidelity"].is_null()) {
      if (!j["fidelity"].is_number()) bad_request(at("fidelity"), "expected a number");
      m.fidelity = j["fidelity"].get<double>();
    }
    return m;
  }

  HttpResponse measure(const ApiToken&, const Params& p, const HttpRequest& req) {
    const auto body = parse_body(req, false);
    std::vector<Measurement> items;
    if (body.is_object() && body.contains("measurements")) {
      check_keys(body, {"measurements"});
      const auto& list = body["measurements"];
      if (!list.is_array() || list.empty()) bad_request("measurements", "expected a non-empty array");
      for (std::size_t i = 0; i < list.size(); ++i)
        items.push_back(parse_measurement(list[i], "measurements[" + std::to_string(i) + "]"));
    } else {
      items.push_back(parse_measurement(body, ""));
    }
    return mutate(p[0], "measure", [&](Campaign& c) {
      const auto before = c.records().size();
      for (std::size_t i = 0; i < items.size(); ++i) {
        try {
          if (items[i].expire)
            c.expire(items[i].id);
          else
            c.submit_measurement(items[i].id, items[i].y, items[i].fidelity);
        } catch (const Error& e) {
          if (items.size() == 1 || http_status(e.code()) != 400) throw;
          const std::string path = "measurements[" + std::to_string(i) + "]" + (e.path().empty() ? "" : "." + e.path());
          throw Error(e.code(), e.what(), path);
        }
      }
      json out{{"phase", to_string(c.phase())}, {"pending", c.pending().size()}, {"iterations", c.records().size()}};
      if (c.records().size() > before) out["record"] = to_json(c.records().back());
      return out;
    });
  }

  HttpResponse step(const ApiToken&, const Params& p, const HttpRequest& req) {
    const auto body = parse_body(req, true);
    check_keys(body, {"iterations"});
    int n = 1;
    if (body.contains("iterations")) {
      const auto& it = body["iterations"];
      if (!it.is_number_integer() || it.get<std::int64_t>() < 1 || it.get<std::int64_t>() > 10000)
        bad_request("iterations", "expected an integer in [1, 10000]");
      n = it.get<int>();
    }
    return mutate(p[0], "step", [n](Campaign& c) {
      json recs = json::array();
      for (int i = 0; i < n; ++i) {
        if (c.phase() != Phase::configured && c.phase() != Phase::updating) {
          if (i == 0) throw Error(Errc::invalid_phase, "campaign is " + to_string(c.phase()));
          break;
        }
        auto r = c.step_benchmark();
        if (!r) break;
        recs.push_back(to_json(*r));
      }
      return json{{"records", recs}, {"phase", to_string(c.phase())}};
    });
  }

  HttpResponse diagnostics(const ApiToken&, const Params& p, const HttpRequest&) {
    auto e = find_campaign(p[0]);
    std::lock_guard lock(e->mutex);
    return json_response(200, e->campaign.diagnostics().to_json());
  }

  HttpResponse export_campaign(const ApiToken&, const Params& p, const HttpRequest& req) {
    auto it = req.query.find("which");
    if (it == req.query.end()) bad_request("which", "required: observations, proposals, iterations, front or summary");
    const std::string which = it->second;
    std::optional<ExportKind> kind;
    if (which != "summary") {
      try {
        kind = parse_export_kind(which);
      } catch (const Error&) {
        bad_request("which", "expected observations, proposals, iterations, front or summary");
      }
    }
    auto e = find_campaign(p[0]);
    std::lock_guard lock(e->mutex);
    if (!kind) return json_response(200, e->campaign.summary());
    const auto text = e->campaign.export_csv(*kind);
    if (wants_csv(req)) {
      HttpResponse r;
      r.content_type = "text/csv";
      r.body = text;
      return r;
    }
    return json_response(200, {{"which", which}, {"csv", text}});
  }
};

ApiService::ApiService(Datastore& store, TokenStore tokens) : ApiService(store, std::move(tokens), Options{}) {}

ApiService::ApiService(Datastore& store, TokenStore tokens, Options options)
    : impl_(std::make_unique<Impl>(store, std::move(tokens), std::move(options))) {}

ApiService::~ApiService() = default;

HttpResponse ApiService::handle(const HttpRequest& request) { return impl_->handle(request); }

std::size_t ApiService::campaign_count() const {
  std::lock_guard lock(impl_->campaigns_mutex);
  return impl_->campaigns.size();
}

}  // namespace pmloop
