#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pmloop/filter.hpp"
#include "pmloop/form.hpp"
#include "pmloop/schema.hpp"
#include "pmloop/units.hpp"
#include "pmloop/uuid.hpp"

namespace pmloop {

struct ProvenanceStamp {
  Uuid uuid;
  std::string source;
  std::string actor;
  std::string timestamp;  // RFC-3339 UTC, millisecond precision
  std::vector<Uuid> parent_uuids;
  std::string transform;
};

void to_json(nlohmann::json& j, const ProvenanceStamp& s);
void from_json(const nlohmann::json& j, ProvenanceStamp& s);

struct RowSet {
  std::vector<FieldSpec> columns;
  std::vector<std::vector<Value>> rows;
  std::vector<ProvenanceStamp> provenance;
  /// Present when more matching rows may follow; pass back to continue.
  std::optional<std::string> cursor;
};

/// Canonical JSON form shared by the REST layer and the C API.
nlohmann::json to_json(const RowSet& rows);

struct QueryRequest {
  std::vector<std::string> columns;
  std::optional<nlohmann::json> filter;
  std::optional<std::size_t> num_rows;
  std::optional<std::string> cursor;
};

struct ColumnMetadata {
  FieldSpec spec;
  std::size_t missing_count = 0;
};

struct TableMetadata {
  std::string name;
  Archetype archetype = Archetype::research;
  std::vector<ColumnMetadata> columns;
  std::size_t row_count = 0;
};

nlohmann::json to_json(const TableMetadata& m);

struct IngestOptions {
  std::string actor = "anonymous";
  std::string source;
  std::string transform;
  std::vector<Uuid> parents;
};

struct CsvIngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  /// First ten violations, each tagged with its 1-based data row.
  std::vector<std::pair<std::size_t, Violation>> violations;
};

/// Schema-governed tabular store.
///
/// Tables are held column-wise in memory. With a data directory the store
/// is durable: every mutation is appended to `store.journal` and flushed
/// before it is applied, and checkpoint() folds the journal into the
/// columnar `store.snapshot`. Opening replays snapshot then journal.
///
/// Readers of a table share a lock and see a consistent row prefix;
/// writers to one table are serialized; distinct tables do not contend.
class Datastore {
 public:
  struct Options {
    std::optional<std::filesystem::path> data_dir;
    /// Seeds the uuid generator for replayable runs.
    std::optional<std::uint64_t> uuid_seed;
    std::shared_ptr<const UnitRegistry> units;
    std::shared_ptr<const OntologyVocabulary> vocabulary;
    /// Time source for provenance stamps; defaults to the system clock.
    std::function<std::chrono::system_clock::time_point()> clock;
  };

  Datastore();
  explicit Datastore(Options options);
  ~Datastore();

  Datastore(const Datastore&) = delete;
  Datastore& operator=(const Datastore&) = delete;

  /// Returns the table id (the template name).
  std::string create_table(const SchemaTemplate& schema);
  std::vector<std::string> list_tables() const;
  bool has_table(std::string_view table) const;
  SchemaTemplate schema(std::string_view table) const;

  void register_form(const TravelerForm& form);
  TravelerForm form(std::string_view form_id) const;

  ValidationResult validate(const TravelerForm& form, const nlohmann::json& record) const;
  /// Validates with the table's plain form.
  ValidationResult validate(std::string_view table, const nlohmann::json& record) const;

  ProvenanceStamp ingest(const ValidatedRecord& record, const IngestOptions& options = {});

  RowSet query(std::string_view table, const QueryRequest& request) const;
  TableMetadata metadata(std::string_view table) const;
  std::optional<ProvenanceStamp> stamp(const Uuid& id) const;
  std::size_t stamp_count() const;

  /// RFC-4180 export with a header row; missing cells written as `""`.
  std::string export_csv(std::string_view table) const;
  /// Validates each row with `form` (plain form when null) and ingests the
  /// valid ones. Throws Error(invalid_argument) before writing anything if
  /// the header does not name exactly the table's columns.
  CsvIngestReport ingest_csv(std::string_view table, std::string_view csv_text, const TravelerForm* form,
                             const IngestOptions& options = {});

  void checkpoint();

  const UnitRegistry& units() const { return *options_.units; }
  const OntologyVocabulary& vocabulary() const { return *options_.vocabulary; }

  /// Test hook invoked at the start of every public operation with its name;
  /// throwing from it simulates a storage fault.
  void set_fault_hook(std::function<void(std::string_view)> hook);

 private:
  struct Table;

  std::shared_ptr<Table> table_ptr(std::string_view table) const;
  void fault(std::string_view op) const;
  void journal(const nlohmann::json& entry);
  void replay(const nlohmann::json& entry);
  void load();
  std::string next_timestamp(const std::string& actor);

  Options options_;
  mutable std::shared_mutex tables_mutex_;
  std::map<std::string, std::shared_ptr<Table>, std::less<>> tables_;
  std::map<std::string, TravelerForm, std::less<>> forms_;

  mutable std::mutex stamps_mutex_;
  std::map<Uuid, ProvenanceStamp> stamps_;
  std::map<std::string, std::string> last_stamp_time_;
  UuidGenerator uuids_;

  std::mutex journal_mutex_;
  std::function<void(std::string_view)> fault_hook_;
};

}  // namespace pmloop
