#include "pmloop/datastore.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "pmloop/csv.hpp"
#include "pmloop/error.hpp"

namespace pmloop {

namespace fs = std::filesystem;

struct Datastore::Table {
  SchemaTemplate schema;
  std::vector<std::vector<Value>> columns;  // columns[c][row]
  std::vector<Uuid> row_stamps;
  mutable std::shared_mutex mutex;

  std::size_t rows() const { return row_stamps.size(); }
};

namespace {

constexpr const char* kJournal = "store.journal";
constexpr const char* kSnapshot = "store.snapshot";

Uuid parse_uuid_or_throw(const std::string& s) {
  auto id = Uuid::parse(s);
  if (!id) throw Error(Errc::invalid_argument, "malformed uuid: " + s);
  return *id;
}

nlohmann::json cell_json_from_text(const csv::Cell& cell, DType dtype) {
  if (cell.is_null()) return nullptr;
  const std::string& t = cell.text;
  switch (dtype) {
    case DType::real: {
      auto v = csv::parse_double(t);
      if (!v) return t;
      if (std::isnan(*v)) return nullptr;
      if (!std::isfinite(*v)) return t;
      return *v;
    }
    case DType::integer: {
      std::int64_t v = 0;
      auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return t;
      return v;
    }
    case DType::boolean:
      if (t == "true" || t == "1") return true;
      if (t == "false" || t == "0") return false;
      return t;
    default: return t;
  }
}

}  // namespace

void to_json(nlohmann::json& j, const ProvenanceStamp& s) {
  auto parents = nlohmann::json::array();
  for (const auto& p : s.parent_uuids) parents.push_back(p.str());
  j = nlohmann::json{{"uuid", s.uuid.str()},       {"source", s.source},       {"actor", s.actor},
                     {"timestamp", s.timestamp},   {"parent_uuids", parents}, {"transform", s.transform}};
}

void from_json(const nlohmann::json& j, ProvenanceStamp& s) {
  s.uuid = parse_uuid_or_throw(j.at("uuid").get<std::string>());
  s.source = j.value("source", "");
  s.actor = j.value("actor", "");
  s.timestamp = j.value("timestamp", "");
  s.transform = j.value("transform", "");
  s.parent_uuids.clear();
  for (const auto& p : j.value("parent_uuids", nlohmann::json::array()))
    s.parent_uuids.push_back(parse_uuid_or_throw(p.get<std::string>()));
}

nlohmann::json to_json(const RowSet& rs) {
  auto cols = nlohmann::json::array();
  for (const auto& c : rs.columns) cols.push_back(c.name);
  auto rows = nlohmann::json::array();
  for (const auto& r : rs.rows) {
    auto row = nlohmann::json::array();
    for (const auto& v : r) row.push_back(to_json(v));
    rows.push_back(std::move(row));
  }
  auto prov = nlohmann::json::array();
  for (const auto& p : rs.provenance) prov.push_back(p.uuid.str());
  return nlohmann::json{{"columns", cols},
                        {"rows", rows},
                        {"provenance", prov},
                        {"cursor", rs.cursor ? nlohmann::json(*rs.cursor) : nlohmann::json(nullptr)}};
}

nlohmann::json to_json(const TableMetadata& m) {
  auto cols = nlohmann::json::array();
  for (const auto& c : m.columns) {
    nlohmann::json spec = c.spec;
    spec["missing_count"] = c.missing_count;
    cols.push_back(std::move(spec));
  }
  return nlohmann::json{
      {"name", m.name}, {"archetype", to_string(m.archetype)}, {"columns", cols}, {"row_count", m.row_count}};
}

Datastore::Datastore() : Datastore(Options{}) {}

Datastore::Datastore(Options options)
    : options_(std::move(options)),
      uuids_(options_.uuid_seed ? UuidGenerator(*options_.uuid_seed) : UuidGenerator()) {
  if (!options_.units) options_.units = std::shared_ptr<const UnitRegistry>(&UnitRegistry::builtin(), [](auto*) {});
  if (!options_.vocabulary)
    options_.vocabulary = std::shared_ptr<const OntologyVocabulary>(&OntologyVocabulary::builtin(), [](auto*) {});
  if (!options_.clock) options_.clock = [] { return std::chrono::system_clock::now(); };
  if (options_.data_dir) {
    std::error_code ec;
    fs::create_directories(*options_.data_dir, ec);
    if (ec) throw Error(Errc::io_failure, "cannot create data directory " + options_.data_dir->string());
    load();
  }
}

Datastore::~Datastore() = default;

void Datastore::set_fault_hook(std::function<void(std::string_view)> hook) { fault_hook_ = std::move(hook); }

void Datastore::fault(std::string_view op) const {
  if (fault_hook_) fault_hook_(op);
}

std::shared_ptr<Datastore::Table> Datastore::table_ptr(std::string_view table) const {
  std::shared_lock lock(tables_mutex_);
  auto it = tables_.find(table);
  if (it == tables_.end()) throw Error(Errc::table_missing, "no such table: " + std::string(table));
  return it->second;
}

void Datastore::journal(const nlohmann::json& entry) {
  if (!options_.data_dir) return;
  std::lock_guard lock(journal_mutex_);
  std::ofstream out(*options_.data_dir / kJournal, std::ios::app | std::ios::binary);
  out << entry.dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::io_failure, "journal append failed");
}

std::string Datastore::create_table(const SchemaTemplate& schema) {
  fault("create_table");
  schema.validate(*options_.units, *options_.vocabulary);
  std::unique_lock lock(tables_mutex_);
  if (tables_.count(schema.name)) throw Error(Errc::duplicate_name, "table already exists: " + schema.name);
  journal({{"op", "create_table"}, {"template", schema}});
  auto t = std::make_shared<Table>();
  t->schema = schema;
  t->columns.resize(schema.fields.size());
  tables_.emplace(schema.name, std::move(t));
  return schema.name;
}

std::vector<std::string> Datastore::list_tables() const {
  fault("list_tables");
  std::shared_lock lock(tables_mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : tables_) out.push_back(name);
  return out;
}

bool Datastore::has_table(std::string_view table) const {
  std::shared_lock lock(tables_mutex_);
  return tables_.find(table) != tables_.end();
}

SchemaTemplate Datastore::schema(std::string_view table) const { return table_ptr(table)->schema; }

void Datastore::register_form(const TravelerForm& form) {
  fault("register_form");
  auto t = table_ptr(form.target_table);
  form.check_against(t->schema);
  std::unique_lock lock(tables_mutex_);
  if (forms_.count(form.form_id)) throw Error(Errc::duplicate_name, "form already registered: " + form.form_id);
  journal({{"op", "register_form"}, {"form", form}});
  forms_.emplace(form.form_id, form);
}

TravelerForm Datastore::form(std::string_view form_id) const {
  std::shared_lock lock(tables_mutex_);
  auto it = forms_.find(form_id);
  if (it == forms_.end()) throw Error(Errc::invalid_argument, "no such form: " + std::string(form_id));
  return it->second;
}

ValidationResult Datastore::validate(const TravelerForm& form, const nlohmann::json& record) const {
  fault("validate");
  auto t = table_ptr(form.target_table);
  form.check_against(t->schema);
  return validate_record(form, t->schema, record);
}

ValidationResult Datastore::validate(std::string_view table, const nlohmann::json& record) const {
  auto t = table_ptr(table);
  return validate(TravelerForm::plain(t->schema), record);
}

std::string Datastore::next_timestamp(const std::string& actor) {
  std::string ts = format_rfc3339(options_.clock());
  auto& last = last_stamp_time_[actor];
  if (ts < last) ts = last;
  last = ts;
  return ts;
}

ProvenanceStamp Datastore::ingest(const ValidatedRecord& record, const IngestOptions& options) {
  fault("ingest");
  if (!record.validated())
    throw Error(Errc::validation_not_run, "record has not been validated against a traveler form");
  auto t = table_ptr(record.table());
  std::unique_lock table_lock(t->mutex);
  if (record.values().size() != t->schema.fields.size())
    throw Error(Errc::validation_not_run, "record was validated against a different template");

  ProvenanceStamp stamp;
  {
    std::lock_guard lock(stamps_mutex_);
    for (const auto& p : options.parents)
      if (!stamps_.count(p)) throw Error(Errc::unknown_parent, "unknown parent uuid: " + p.str());
    do {
      stamp.uuid = uuids_.next();
    } while (stamps_.count(stamp.uuid));
    stamp.actor = options.actor;
    stamp.source = options.source;
    stamp.transform = options.transform;
    stamp.parent_uuids = options.parents;
    stamp.timestamp = next_timestamp(options.actor);

    auto values = nlohmann::json::array();
    for (const auto& v : record.values()) values.push_back(to_json(v));
    journal({{"op", "ingest"}, {"table", t->schema.name}, {"values", values}, {"stamp", stamp}});
    stamps_.emplace(stamp.uuid, stamp);
  }
  for (std::size_t c = 0; c < t->columns.size(); ++c) t->columns[c].push_back(record.values()[c]);
  t->row_stamps.push_back(stamp.uuid);
  return stamp;
}

RowSet Datastore::query(std::string_view table, const QueryRequest& request) const {
  fault("query");
  auto t = table_ptr(table);
  const SchemaTemplate& schema = t->schema;
  if (request.columns.empty()) throw Error(Errc::invalid_argument, "columns: at least one column is required", "columns");
  if (request.num_rows && *request.num_rows == 0) throw Error(Errc::invalid_argument, "numRows must be positive");

  RowSet rs;
  std::vector<std::size_t> idx;
  for (const auto& c : request.columns) {
    auto i = schema.index_of(c);
    if (!i) throw Error(Errc::unknown_column, "columns: unknown column '" + c + "'", "columns");
    idx.push_back(*i);
    rs.columns.push_back(schema.fields[*i]);
  }
  std::optional<FilterExpr> filter;
  if (request.filter) filter = FilterExpr::parse(*request.filter, schema);

  std::size_t start = 0;
  if (request.cursor) {
    const auto& c = *request.cursor;
    std::size_t pos = 0;
    auto res = std::from_chars(c.data(), c.data() + c.size(), pos);
    if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size())
      throw Error(Errc::invalid_argument, "cursor: malformed continuation cursor");
    start = pos;
  }

  std::shared_lock lock(t->mutex);
  const std::size_t n = t->rows();
  std::size_t r = start;
  for (; r < n; ++r) {
    if (request.num_rows && rs.rows.size() == *request.num_rows) break;
    if (filter && !filter->evaluate([&](std::size_t c) -> const Value& { return t->columns[c][r]; })) continue;
    std::vector<Value> row;
    row.reserve(idx.size());
    for (auto c : idx) row.push_back(t->columns[c][r]);
    rs.rows.push_back(std::move(row));
    std::lock_guard slock(stamps_mutex_);
    rs.provenance.push_back(stamps_.at(t->row_stamps[r]));
  }
  if (r < n) rs.cursor = std::to_string(r);
  return rs;
}

TableMetadata Datastore::metadata(std::string_view table) const {
  fault("metadata");
  auto t = table_ptr(table);
  std::shared_lock lock(t->mutex);
  TableMetadata m;
  m.name = t->schema.name;
  m.archetype = t->schema.archetype;
  m.row_count = t->rows();
  for (std::size_t c = 0; c < t->schema.fields.size(); ++c) {
    ColumnMetadata cm{t->schema.fields[c], 0};
    for (const auto& v : t->columns[c]) cm.missing_count += is_null(v);
    m.columns.push_back(std::move(cm));
  }
  return m;
}

std::optional<ProvenanceStamp> Datastore::stamp(const Uuid& id) const {
  std::lock_guard lock(stamps_mutex_);
  auto it = stamps_.find(id);
  if (it == stamps_.end()) return std::nullopt;
  return it->second;
}

std::size_t Datastore::stamp_count() const {
  std::lock_guard lock(stamps_mutex_);
  return stamps_.size();
}

std::string Datastore::export_csv(std::string_view table) const {
  fault("export_csv");
  auto t = table_ptr(table);
  std::shared_lock lock(t->mutex);
  std::string out;
  std::vector<std::optional<std::string>> fields;
  for (const auto& f : t->schema.fields) fields.emplace_back(f.name);
  csv::write_row(out, fields);
  for (std::size_t r = 0; r < t->rows(); ++r) {
    fields.clear();
    for (const auto& col : t->columns) fields.push_back(to_text(col[r]));
    csv::write_row(out, fields);
  }
  return out;
}

CsvIngestReport Datastore::ingest_csv(std::string_view table, std::string_view csv_text, const TravelerForm* form,
                                      const IngestOptions& options) {
  auto t = table_ptr(table);
  const SchemaTemplate& schema = t->schema;
  const TravelerForm plain = TravelerForm::plain(schema);
  const TravelerForm& use = form ? *form : plain;
  use.check_against(schema);

  const auto rows = csv::parse(csv_text);
  if (rows.empty()) throw Error(Errc::invalid_argument, "csv: missing header row");
  std::vector<std::size_t> col_of;
  std::set<std::string> seen;
  for (const auto& cell : rows[0]) {
    auto i = schema.index_of(cell.text);
    if (!i || !seen.insert(cell.text).second)
      throw Error(Errc::invalid_argument, "csv header does not match table columns (at '" + cell.text + "')");
    col_of.push_back(*i);
  }
  if (seen.size() != schema.fields.size())
    throw Error(Errc::invalid_argument, "csv header is missing table columns");

  CsvIngestReport report;
  auto note = [&](std::size_t row, Violation v) {
    if (report.violations.size() < 10) report.violations.emplace_back(row, std::move(v));
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != col_of.size()) {
      ++report.rejected;
      note(r, Violation{"", "arity", std::to_string(row.size()),
                        "expected " + std::to_string(col_of.size()) + " fields"});
      continue;
    }
    nlohmann::json rec = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      const FieldSpec& f = schema.fields[col_of[c]];
      rec[f.name] = cell_json_from_text(row[c], f.dtype);
    }
    auto result = validate_record(use, schema, rec);
    if (!result.ok()) {
      ++report.rejected;
      for (auto& v : result.violations) note(r, std::move(v));
      continue;
    }
    ingest(*result.record, options);
    ++report.accepted;
  }
  return report;
}

void Datastore::replay(const nlohmann::json& e) {
  const auto op = e.at("op").get<std::string>();
  if (op == "create_table") {
    auto schema = e.at("template").get<SchemaTemplate>();
    auto t = std::make_shared<Table>();
    t->schema = schema;
    t->columns.resize(schema.fields.size());
    tables_[schema.name] = std::move(t);
  } else if (op == "register_form") {
    auto f = e.at("form").get<TravelerForm>();
    forms_[f.form_id] = f;
  } else if (op == "ingest") {
    auto t = table_ptr(e.at("table").get<std::string>());
    auto stamp = e.at("stamp").get<ProvenanceStamp>();
    const auto& values = e.at("values");
    if (values.size() != t->columns.size()) throw Error(Errc::io_failure, "journal row arity mismatch");
    for (std::size_t c = 0; c < t->columns.size(); ++c) {
      auto v = coerce(values[c], t->schema.fields[c].dtype);
      if (!v) throw Error(Errc::io_failure, "journal value does not match column type");
      t->columns[c].push_back(std::move(*v));
    }
    t->row_stamps.push_back(stamp.uuid);
    auto& last = last_stamp_time_[stamp.actor];
    if (stamp.timestamp > last) last = stamp.timestamp;
    stamps_.emplace(stamp.uuid, std::move(stamp));
  } else {
    throw Error(Errc::io_failure, "unknown journal op: " + op);
  }
}

void Datastore::load() {
  const auto dir = *options_.data_dir;
  if (fs::exists(dir / kSnapshot)) {
    std::ifstream in(dir / kSnapshot, std::ios::binary);
    nlohmann::json snap;
    try {
      snap = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::io_failure, std::string("corrupt snapshot: ") + ex.what());
    }
    for (const auto& tj : snap.at("tables")) {
      auto t = std::make_shared<Table>();
      t->schema = tj.at("template").get<SchemaTemplate>();
      t->columns.resize(t->schema.fields.size());
      const auto& cols = tj.at("columns");
      for (std::size_t c = 0; c < t->columns.size(); ++c)
        for (const auto& v : cols.at(c)) t->columns[c].push_back(*coerce(v, t->schema.fields[c].dtype));
      for (const auto& sj : tj.at("stamps")) {
        auto s = sj.get<ProvenanceStamp>();
        t->row_stamps.push_back(s.uuid);
        auto& last = last_stamp_time_[s.actor];
        if (s.timestamp > last) last = s.timestamp;
        stamps_.emplace(s.uuid, std::move(s));
      }
      tables_[t->schema.name] = std::move(t);
    }
    for (const auto& fj : snap.value("forms", nlohmann::json::array())) {
      auto f = fj.get<TravelerForm>();
      forms_[f.form_id] = f;
    }
  }
  if (fs::exists(dir / kJournal)) {
    std::ifstream in(dir / kJournal, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json e;
      try {
        e = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        break;  // torn final write
      }
      replay(e);
    }
  }
}

void Datastore::checkpoint() {
  fault("checkpoint");
  if (!options_.data_dir) return;
  // Block every writer: registry, then each table in name order, then the journal.
  std::unique_lock lock(tables_mutex_);
  std::vector<std::unique_lock<std::shared_mutex>> table_locks;
  for (const auto& [_, t] : tables_) table_locks.emplace_back(t->mutex);
  std::lock_guard jlock(journal_mutex_);
  nlohmann::json snap{{"version", 1}, {"tables", nlohmann::json::array()}, {"forms", nlohmann::json::array()}};
  for (const auto& [name, t] : tables_) {
    auto cols = nlohmann::json::array();
    for (const auto& col : t->columns) {
      auto cj = nlohmann::json::array();
      for (const auto& v : col) cj.push_back(to_json(v));
      cols.push_back(std::move(cj));
    }
    auto stamps = nlohmann::json::array();
    {
      std::lock_guard sl(stamps_mutex_);
      for (const auto& id : t->row_stamps) stamps.push_back(stamps_.at(id));
    }
    snap["tables"].push_back({{"template", t->schema}, {"columns", cols}, {"stamps", stamps}});
  }
  for (const auto& [_, f] : forms_) snap["forms"].push_back(f);
  const auto dir = *options_.data_dir;
  const auto tmp = dir / (std::string(kSnapshot) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << snap.dump();
    out.flush();
    if (!out) throw Error(Errc::io_failure, "snapshot write failed");
  }
  std::error_code ec;
  fs::rename(tmp, dir / kSnapshot, ec);
  if (ec) throw Error(Errc::io_failure, "snapshot rename failed: " + ec.message());
  std::ofstream(dir / kJournal, std::ios::trunc | std::ios::binary);
}

}  // namespace pmloop
