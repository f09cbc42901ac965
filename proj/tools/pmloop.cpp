#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmloop/pmloop.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

// A failure carrying the exit code it maps to.
struct Exit {
  int code;
  std::string message;
};

int exit_code(pml_status s) {
  switch (s) {
    case PML_IO_FAILURE:
    case PML_INTERNAL:
    case PML_NOT_POSITIVE_DEFINITE:
    case PML_DEGENERATE_DATA: return kRuntime;
    default: return kUsage;
  }
}

void check(pml_status s) {
  if (s == PML_OK) return;
  std::string msg = std::string(pml_status_name(s)) + ": " + pml_last_error();
  throw Exit{exit_code(s), msg};
}

// Owns a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  pml_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{kUsage, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Exit{kRuntime, "cannot write " + path.string()};
}

struct Store {
  pml_store* handle = nullptr;
  explicit Store(const std::string& dir) { check(pml_store_open(dir.c_str(), &handle)); }
  ~Store() { pml_store_close(handle); }
};

struct CampaignHandle {
  pml_campaign* handle = nullptr;
  ~CampaignHandle() { pml_campaign_free(handle); }
};

std::string data_dir_default() {
  const char* v = std::getenv("PMLOOP_DATA_DIR");
  return v && *v ? v : ".pmloop";
}

// Writes the full bundle into `out` through a staging directory so a
// failure leaves no partial files behind.
void write_bundle(const pml_campaign* c, const std::string& out) {
  const fs::path dir(out);
  const bool existed = fs::exists(dir);
  const fs::path stage = dir / ".staging";
  try {
    fs::create_directories(stage);
    for (const char* which : {"observations", "proposals", "iterations", "front"}) {
      char* text = nullptr;
      check(pml_campaign_export(c, which, &text));
      write_file(stage / (std::string(which) + ".csv"), take(text));
    }
    char* summary = nullptr;
    check(pml_campaign_export(c, "summary", &summary));
    write_file(stage / "summary.json", json::parse(take(summary)).dump(2) + "\n");
    char* snapshot = nullptr;
    check(pml_campaign_export(c, "snapshot", &snapshot));
    write_file(stage / "snapshot.json", take(snapshot) + "\n");
    for (const auto& f : fs::directory_iterator(stage)) fs::rename(f.path(), dir / f.path().filename());
    fs::remove(stage);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(stage, ec);
    if (!existed) fs::remove_all(dir, ec);
    throw;
  }
}

void report_campaign(const pml_campaign* c, bool as_json) {
  char* s = nullptr;
  check(pml_campaign_export(c, "summary", &s));
  const auto summary = json::parse(take(s));
  if (as_json) {
    std::cout << summary.dump() << "\n";
    return;
  }
  std::cout << "phase        " << summary["phase"].get<std::string>() << "\n"
            << "evaluations  " << summary["evaluations"] << "\n"
            << "iterations   " << summary["iterations"] << "\n"
            << "hypervolume  " << summary["hypervolume"] << "\n"
            << "total cost   " << summary["total_cost"] << "\n";
  if (summary.contains("best")) std::cout << "best         " << summary["best"].dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propose-measure-learn campaigns, tables and benchmarks"};
  app.require_subcommand(1);
  bool as_json = false;
  std::string data_dir = data_dir_default();
  app.add_flag("--json", as_json, "Machine-readable JSON on stdout");
  app.add_option("--data-dir", data_dir, "Table store directory (default $PMLOOP_DATA_DIR or .pmloop)");

  auto* table = app.add_subcommand("table", "Create, describe and query tables");
  table->require_subcommand(1);
  std::string schema_file, table_name, columns, filter, cursor;
  std::optional<long long> num_rows;
  bool csv_out = false;
  auto* t_create = table->add_subcommand("create", "Create a table from a schema template JSON file");
  t_create->add_option("--schema", schema_file, "Schema template file")->required();
  auto* t_meta = table->add_subcommand("metadata", "Show column metadata");
  t_meta->add_option("--table", table_name)->required();
  auto* t_query = table->add_subcommand("query", "Query rows");
  t_query->add_option("--table", table_name)->required();
  t_query->add_option("--columns", columns, "Comma-separated column list (default all)");
  t_query->add_option("--filter", filter, "Filter JSON, or @file");
  t_query->add_option("--num-rows", num_rows);
  t_query->add_option("--cursor", cursor);
  t_query->add_flag("--csv", csv_out, "Emit CSV instead of JSON");

  auto* ingest = app.add_subcommand("ingest", "Validate and ingest CSV rows");
  std::string csv_file, form_file, actor = "cli";
  ingest->add_option("--table", table_name)->required();
  ingest->add_option("--csv", csv_file)->required();
  ingest->add_option("--form", form_file, "Traveler form JSON file");
  ingest->add_option("--actor", actor);

  auto* campaign = app.add_subcommand("campaign", "Run, resume and export campaigns");
  campaign->require_subcommand(1);
  std::string config_file, out_dir, snapshot_file, which;
  std::optional<std::uint64_t> seed;
  auto* c_run = campaign->add_subcommand("run", "Run a benchmark campaign to its stop condition");
  c_run->add_option("--config", config_file)->required();
  c_run->add_option("--out", out_dir)->required();
  c_run->add_option("--seed", seed, "Override the config seed");
  auto* c_resume = campaign->add_subcommand("resume", "Continue a campaign from snapshot.json");
  c_resume->add_option("--snapshot", snapshot_file)->required();
  c_resume->add_option("--out", out_dir)->required();
  auto* c_export = campaign->add_subcommand("export", "Print one export of a snapshot");
  c_export->add_option("--snapshot", snapshot_file)->required();
  c_export->add_option("--which", which, "observations|proposals|iterations|front|summary|diagnostics")->required();

  auto* bench = app.add_subcommand("benchmarks", "Benchmark registry");
  bench->require_subcommand(1);
  auto* b_list = bench->add_subcommand("list", "List benchmark functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*t_create) {
      Store store(data_dir);
      char* id = nullptr;
      check(pml_table_create(store.handle, read_file(schema_file).c_str(), &id));
      const auto name = take(id);
      if (as_json)
        std::cout << json{{"id", name}}.dump() << "\n";
      else
        std::cout << "created table " << name << "\n";
    } else if (*t_meta) {
      Store store(data_dir);
      char* out = nullptr;
      check(pml_table_metadata(store.handle, table_name.c_str(), &out));
      const auto meta = json::parse(take(out));
      if (as_json) {
        std::cout << meta.dump() << "\n";
      } else {
        std::cout << meta["name"].get<std::string>() << " (" << meta["row_count"].dump() << " rows)\n";
        for (const auto& c : meta["columns"])
          std::cout << "  " << std::left << std::setw(20) << c["name"].get<std::string>() << std::setw(10)
                    << c["dtype"].get<std::string>() << " missing " << c["missing_count"].dump() << "\n";
      }
    } else if (*t_query) {
      Store store(data_dir);
      json q = json::object();
      if (!columns.empty()) {
        json cols = json::array();
        std::stringstream ss(columns);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        q["columns"] = cols;
      }
      if (!filter.empty()) {
        const std::string text = filter[0] == '@' ? read_file(filter.substr(1)) : filter;
        auto f = json::parse(text, nullptr, false);
        if (f.is_discarded()) throw Exit{kUsage, "--filter is not valid JSON"};
        q["filter"] = f;
      }
      if (num_rows) q["numRows"] = *num_rows;
      if (!cursor.empty()) q["cursor"] = cursor;
      char* out = nullptr;
      check(pml_table_query(store.handle, table_name.c_str(), q.dump().c_str(), csv_out ? 1 : 0, &out));
      std::cout << take(out);
      if (!csv_out) std::cout << "\n";
    } else if (*ingest) {
      Store store(data_dir);
      const auto text = read_file(csv_file);
      const std::string form = form_file.empty() ? std::string() : read_file(form_file);
      char* out = nullptr;
      check(pml_table_ingest_csv(store.handle, table_name.c_str(), text.c_str(), form_file.empty() ? nullptr : form.c_str(),
                                 actor.c_str(), &out));
      check(pml_store_checkpoint(store.handle));
      const auto report = json::parse(take(out));
      if (as_json) {
        std::cout << report.dump() << "\n";
      } else {
        std::cout << report["accepted"] << " accepted, " << report["rejected"] << " rejected\n";
        for (const auto& v : report["violations"])
          std::cout << "  row " << v["row"] << ": " << v.value("field", "") << ": " << v.value("message", "") << "\n";
      }
      if (report["accepted"] == 0) return kRuntime;
    } else if (*c_run) {
      auto config = json::parse(read_file(config_file), nullptr, false);
      if (config.is_discarded()) throw Exit{kUsage, config_file + " is not valid JSON"};
      if (seed && config.is_object()) config["seed"] = *seed;
      char* canonical = nullptr;
      check(pml_config_canonical(config.dump().c_str(), &canonical));
      if (json::parse(take(canonical))["mode"] != "benchmark")
        throw Exit{kUsage, "campaign run drives benchmark campaigns; dataset campaigns take measurements over the API"};
      CampaignHandle c;
      check(pml_campaign_create(config.dump().c_str(), nullptr, &c.handle));
      check(pml_campaign_run(c.handle));
      write_bundle(c.handle, out_dir);
      report_campaign(c.handle, as_json);
    } else if (*c_resume) {
      CampaignHandle c;
      check(pml_campaign_from_snapshot(read_file(snapshot_file).c_str(), &c.handle));
      check(pml_campaign_run(c.handle));
      write_bundle(c.handle, out_dir);
      report_campaign(c.handle, as_json);
    } else if (*c_export) {
      CampaignHandle c;
      check(pml_campaign_from_snapshot(read_file(snapshot_file).c_str(), &c.handle));
      char* out = nullptr;
      check(pml_campaign_export(c.handle, which.c_str(), &out));
      std::cout << take(out);
      if (which == "summary" || which == "diagnostics") std::cout << "\n";
    } else if (*b_list) {
      char* out = nullptr;
      check(pml_benchmarks_list(&out));
      const auto list = json::parse(take(out));
      if (as_json) {
        std::cout << list.dump() << "\n";
      } else {
        std::cout << std::left << std::setw(22) << "name" << std::setw(5) << "dim" << std::setw(12) << "objectives"
                  << "optimum\n";
        for (const auto& b : list) {
          std::cout << std::setw(22) << b["name"].get<std::string>() << std::setw(5) << b["dim"].get<int>()
                    << std::setw(12) << b["objectives"].get<int>()
                    << (b.contains("optimum") ? b["optimum"].dump() : std::string("-")) << "\n";
        }
      }
    }
  } catch (const Exit& e) {
    if (as_json)
      std::cout << json{{"error", e.message}, {"exit", e.code}}.dump() << "\n";
    else
      std::cerr << "pmloop: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "pmloop: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}
