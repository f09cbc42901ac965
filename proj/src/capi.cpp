#include <cstring>
#include <string>

#include "pmloop/api.hpp"
#include "pmloop/benchmarks.hpp"
#include "pmloop/campaign.hpp"
#include "pmloop/csv.hpp"
#include "pmloop/datastore.hpp"
#include "pmloop/error.hpp"
#include "pmloop/pmloop.h"

struct pml_store {
  std::unique_ptr<pmloop::Datastore> store;
};

struct pml_campaign {
  pmloop::Campaign campaign;
};

namespace {

using nlohmann::json;

static_assert(static_cast<int>(pmloop::Errc::internal) + 1 == PML_INTERNAL, "status codes out of sync");

thread_local std::string last_error;
thread_local std::string last_path;

pml_status fail(pml_status s, std::string message, std::string path = {}) {
  last_error = std::move(message);
  last_path = std::move(path);
  return s;
}

template <typename F>
pml_status guarded(F&& f) {
  try {
    last_error.clear();
    last_path.clear();
    f();
    return PML_OK;
  } catch (const pmloop::Error& e) {
    return fail(static_cast<pml_status>(static_cast<int>(e.code()) + 1), e.what(), e.path());
  } catch (const json::exception& e) {
    return fail(PML_INVALID_ARGUMENT, std::string("malformed JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(PML_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PML_INTERNAL, e.what());
  } catch (...) {
    return fail(PML_INTERNAL, "unknown failure");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse(const char* text, const char* what) {
  if (!text) throw pmloop::Error(pmloop::Errc::invalid_argument, std::string(what) + " is NULL");
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw pmloop::Error(pmloop::Errc::invalid_argument, std::string(what) + " is not valid JSON");
  return j;
}

void need(const void* p, const char* what) {
  if (!p) throw pmloop::Error(pmloop::Errc::invalid_argument, std::string(what) + " is NULL");
}

}  // namespace

extern "C" {

const char* pml_version(void) { return "1.0.0"; }

const char* pml_status_name(pml_status status) {
  if (status == PML_OK) return "ok";
  if (status < PML_OK || status > PML_INTERNAL) return "unknown";
  return pmloop::errc_name(static_cast<pmloop::Errc>(static_cast<int>(status) - 1)).data();
}

const char* pml_last_error(void) { return last_error.c_str(); }
const char* pml_last_error_path(void) { return last_path.c_str(); }

void pml_free(char* s) { std::free(s); }

pml_status pml_store_open(const char* data_dir, pml_store** out) {
  return guarded([&] {
    need(out, "out");
    pmloop::Datastore::Options opt;
    if (data_dir) opt.data_dir = data_dir;
    auto s = std::make_unique<pml_store>();
    s->store = std::make_unique<pmloop::Datastore>(std::move(opt));
    *out = s.release();
  });
}

void pml_store_close(pml_store* store) { delete store; }

pml_status pml_store_checkpoint(pml_store* store) {
  return guarded([&] {
    need(store, "store");
    store->store->checkpoint();
  });
}

pml_status pml_table_create(pml_store* store, const char* schema_json, char** out_id) {
  return guarded([&] {
    need(store, "store");
    need(out_id, "out_id");
    pmloop::SchemaTemplate t;
    from_json(parse(schema_json, "schema"), t);
    *out_id = dup(store->store->create_table(t));
  });
}

pml_status pml_table_list(const pml_store* store, char** out_json) {
  return guarded([&] {
    need(store, "store");
    need(out_json, "out_json");
    *out_json = dup(json(store->store->list_tables()).dump());
  });
}

pml_status pml_table_metadata(const pml_store* store, const char* table, char** out_json) {
  return guarded([&] {
    need(store, "store");
    need(table, "table");
    need(out_json, "out_json");
    *out_json = dup(to_json(store->store->metadata(table)).dump());
  });
}

pml_status pml_table_query(const pml_store* store, const char* table, const char* query_json, int as_csv,
                           char** out) {
  return guarded([&] {
    need(store, "store");
    need(table, "table");
    need(out, "out");
    auto q = pmloop::parse_query_body(query_json ? parse(query_json, "query") : json::object());
    if (q.columns.empty())
      for (const auto& f : store->store->schema(table).fields) q.columns.push_back(f.name);
    const auto rows = store->store->query(table, q);
    if (!as_csv) {
      *out = dup(to_json(rows).dump());
      return;
    }
    std::string text;
    std::vector<std::optional<std::string>> line;
    for (const auto& c : rows.columns) line.emplace_back(c.name);
    pmloop::csv::write_row(text, line);
    for (const auto& r : rows.rows) {
      line.clear();
      for (const auto& v : r) line.push_back(pmloop::to_text(v));
      pmloop::csv::write_row(text, line);
    }
    *out = dup(text);
  });
}

pml_status pml_table_ingest_csv(pml_store* store, const char* table, const char* csv_text, const char* form_json,
                                const char* actor, char** out_report) {
  return guarded([&] {
    need(store, "store");
    need(table, "table");
    need(csv_text, "csv_text");
    need(out_report, "out_report");
    std::optional<pmloop::TravelerForm> form;
    if (form_json) {
      pmloop::TravelerForm f;
      from_json(parse(form_json, "form"), f);
      form = std::move(f);
    }
    pmloop::IngestOptions opt;
    if (actor) opt.actor = actor;
    const auto report = store->store->ingest_csv(table, csv_text, form ? &*form : nullptr, opt);
    json violations = json::array();
    for (const auto& [row, v] : report.violations) {
      json jv = v;
      jv["row"] = row;
      violations.push_back(jv);
    }
    *out_report = dup(json{{"accepted", report.accepted}, {"rejected", report.rejected}, {"violations", violations}}.dump());
  });
}

pml_status pml_benchmarks_list(char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    json list = json::array();
    for (const auto& def : pmloop::benchmark_registry()) list.push_back(def.to_json());
    *out_json = dup(list.dump());
  });
}

pml_status pml_config_canonical(const char* config_json, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    *out_json = dup(pmloop::CampaignConfig::from_json(parse(config_json, "config")).to_json().dump());
  });
}

pml_status pml_campaign_create(const char* config_json, const pml_store* store, pml_campaign** out) {
  return guarded([&] {
    need(out, "out");
    const auto config = pmloop::CampaignConfig::from_json(parse(config_json, "config"));
    *out = new pml_campaign{pmloop::Campaign::create(config, store ? store->store.get() : nullptr)};
  });
}

pml_status pml_campaign_from_snapshot(const char* snapshot_json, pml_campaign** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pml_campaign{pmloop::Campaign::from_snapshot(parse(snapshot_json, "snapshot"))};
  });
}

void pml_campaign_free(pml_campaign* campaign) { delete campaign; }

pml_status pml_campaign_phase(const pml_campaign* campaign, char** out_phase) {
  return guarded([&] {
    need(campaign, "campaign");
    need(out_phase, "out_phase");
    *out_phase = dup(to_string(campaign->campaign.phase()));
  });
}

pml_status pml_campaign_propose(pml_campaign* campaign, char** out_json) {
  return guarded([&] {
    need(campaign, "campaign");
    need(out_json, "out_json");
    json list = json::array();
    for (const auto& p : campaign->campaign.propose()) list.push_back(to_json(p));
    *out_json = dup(list.dump());
  });
}

pml_status pml_campaign_measure(pml_campaign* campaign, const char* proposal_id, const double* y, size_t n_objectives,
                                const double* fidelity) {
  return guarded([&] {
    need(campaign, "campaign");
    need(proposal_id, "proposal_id");
    if (n_objectives) need(y, "y");
    std::vector<double> values(y, y + n_objectives);
    campaign->campaign.submit_measurement(proposal_id, values,
                                          fidelity ? std::optional<double>(*fidelity) : std::nullopt);
  });
}

pml_status pml_campaign_expire(pml_campaign* campaign, const char* proposal_id) {
  return guarded([&] {
    need(campaign, "campaign");
    need(proposal_id, "proposal_id");
    campaign->campaign.expire(proposal_id);
  });
}

pml_status pml_campaign_step(pml_campaign* campaign, int* recorded) {
  return guarded([&] {
    need(campaign, "campaign");
    const auto r = campaign->campaign.step_benchmark();
    if (recorded) *recorded = r ? 1 : 0;
  });
}

pml_status pml_campaign_run(pml_campaign* campaign) {
  return guarded([&] {
    need(campaign, "campaign");
    campaign->campaign.run();
  });
}

pml_status pml_campaign_export(const pml_campaign* campaign, const char* which, char** out) {
  return guarded([&] {
    need(campaign, "campaign");
    need(which, "which");
    need(out, "out");
    const std::string w = which;
    const auto& c = campaign->campaign;
    if (w == "summary")
      *out = dup(c.summary().dump());
    else if (w == "snapshot")
      *out = dup(c.snapshot().dump());
    else if (w == "diagnostics")
      *out = dup(c.diagnostics().to_json().dump());
    else
      *out = dup(c.export_csv(pmloop::parse_export_kind(w)));
  });
}

}  // extern "C"
