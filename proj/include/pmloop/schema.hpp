#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace pmloop {

class UnitRegistry;

enum class DType { real, integer, text, boolean, datetime, uuid, file_ref };
enum class Archetype { research, industry_qms, agentic };

std::string_view to_string(DType t);
std::string_view to_string(Archetype a);
std::optional<DType> parse_dtype(std::string_view s);
std::optional<Archetype> parse_archetype(std::string_view s);

bool is_numeric(DType t);
/// text, datetime, uuid and file_ref are all stored as strings.
bool is_string_like(DType t);

/// Cell value. std::monostate is the missing marker.
using Value = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

/// Coerces a JSON value into the column's storage type. A JSON null (or NaN
/// text for real columns) yields the missing marker. Returns nullopt on a
/// type mismatch.
std::optional<Value> coerce(const nlohmann::json& j, DType dtype);

/// Coerces a CSV cell. Empty text is missing; `nan` in real columns is
/// recorded as missing.
std::optional<Value> coerce_text(std::string_view text, DType dtype);

nlohmann::json to_json(const Value& v);
/// Text form used in CSV export; nullopt for missing.
std::optional<std::string> to_text(const Value& v);

bool is_rfc3339(std::string_view s);
std::string format_rfc3339(std::chrono::system_clock::time_point tp);
bool is_identifier(std::string_view s);

/// Flat controlled vocabulary for ontology tags, one term per line.
class OntologyVocabulary {
 public:
  OntologyVocabulary() = default;
  static const OntologyVocabulary& builtin();
  static OntologyVocabulary from_text(std::string_view text);
  static OntologyVocabulary from_file(const std::string& path);

  bool contains(std::string_view term) const { return terms_.find(term) != terms_.end(); }
  void add(std::string term) { terms_.insert(std::move(term)); }
  const std::set<std::string, std::less<>>& terms() const { return terms_; }

 private:
  std::set<std::string, std::less<>> terms_;
};

struct FieldSpec {
  std::string name;
  DType dtype = DType::real;
  std::optional<std::string> unit;
  bool nullable = true;
  std::optional<std::string> ontology_tag;

  bool operator==(const FieldSpec&) const = default;
};

struct SchemaTemplate {
  std::string name;
  Archetype archetype = Archetype::research;
  std::vector<FieldSpec> fields;

  /// Index of a field, or nullopt.
  std::optional<std::size_t> index_of(std::string_view field) const;
  const FieldSpec* find(std::string_view field) const;

  /// Throws Error(invalid_template) naming the failed invariant.
  void validate(const UnitRegistry& units, const OntologyVocabulary& vocab) const;

  bool operator==(const SchemaTemplate&) const = default;
};

void to_json(nlohmann::json& j, const FieldSpec& f);
void from_json(const nlohmann::json& j, FieldSpec& f);
void to_json(nlohmann::json& j, const SchemaTemplate& t);
/// Throws Error(invalid_template) on structural problems.
void from_json(const nlohmann::json& j, SchemaTemplate& t);

}  // namespace pmloop
