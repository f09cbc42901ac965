#include "pmloop/schema.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "pmloop/csv.hpp"
#include "pmloop/error.hpp"
#include "pmloop/units.hpp"
#include "pmloop/uuid.hpp"

namespace pmloop {

std::string_view to_string(DType t) {
  switch (t) {
    case DType::real: return "real";
    case DType::integer: return "integer";
    case DType::text: return "text";
    case DType::boolean: return "boolean";
    case DType::datetime: return "datetime";
    case DType::uuid: return "uuid";
    case DType::file_ref: return "file_ref";
  }
  return "real";
}

std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::research: return "research";
    case Archetype::industry_qms: return "industry_qms";
    case Archetype::agentic: return "agentic";
  }
  return "research";
}

std::optional<DType> parse_dtype(std::string_view s) {
  for (auto t : {DType::real, DType::integer, DType::text, DType::boolean, DType::datetime, DType::uuid,
                 DType::file_ref})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::optional<Archetype> parse_archetype(std::string_view s) {
  for (auto a : {Archetype::research, Archetype::industry_qms, Archetype::agentic})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

bool is_numeric(DType t) { return t == DType::real || t == DType::integer; }

bool is_string_like(DType t) {
  return t == DType::text || t == DType::datetime || t == DType::uuid || t == DType::file_ref;
}

std::string format_rfc3339(std::chrono::system_clock::time_point tp) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(tp.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  int millis = static_cast<int>(ms % 1000);
  if (millis < 0) {
    millis += 1000;
    --secs;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

bool is_rfc3339(std::string_view s) {
  static const std::regex re(
      R"(^\d{4}-(0[1-9]|1[0-2])-(0[1-9]|[12]\d|3[01])[Tt ]([01]\d|2[0-3]):[0-5]\d:([0-5]\d|60)(\.\d+)?([Zz]|[+-]([01]\d|2[0-3]):[0-5]\d)$)");
  return std::regex_match(s.begin(), s.end(), re);
}

bool is_identifier(std::string_view s) {
  if (s.empty() || s.size() > 128) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  if (!alpha(s[0])) return false;
  for (char c : s)
    if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
  return true;
}

namespace {

std::optional<Value> string_value(std::string s, DType dtype) {
  switch (dtype) {
    case DType::text: return Value{std::move(s)};
    case DType::datetime:
      if (!is_rfc3339(s)) return std::nullopt;
      return Value{std::move(s)};
    case DType::uuid:
      if (!Uuid::parse(s)) return std::nullopt;
      return Value{std::move(s)};
    case DType::file_ref:
      if (s.empty()) return std::nullopt;
      return Value{std::move(s)};
    default: return std::nullopt;
  }
}

}  // namespace

std::optional<Value> coerce(const nlohmann::json& j, DType dtype) {
  if (j.is_null()) return Value{};
  switch (dtype) {
    case DType::real:
      if (!j.is_number()) return std::nullopt;
      {
        const double v = j.get<double>();
        if (std::isnan(v)) return Value{};
        if (!std::isfinite(v)) return std::nullopt;
        return Value{v};
      }
    case DType::integer:
      if (j.is_number_integer()) {
        if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
          return std::nullopt;
        return Value{j.get<std::int64_t>()};
      }
      if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) return Value{static_cast<std::int64_t>(v)};
      }
      return std::nullopt;
    case DType::boolean:
      if (!j.is_boolean()) return std::nullopt;
      return Value{j.get<bool>()};
    default:
      if (!j.is_string()) return std::nullopt;
      return string_value(j.get<std::string>(), dtype);
  }
}

std::optional<Value> coerce_text(std::string_view text, DType dtype) {
  if (text.empty()) return Value{};
  switch (dtype) {
    case DType::real: {
      auto v = csv::parse_double(text);
      if (!v) return std::nullopt;
      if (std::isnan(*v)) return Value{};
      if (!std::isfinite(*v)) return std::nullopt;
      return Value{*v};
    }
    case DType::integer: {
      std::int64_t v = 0;
      auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
      return Value{v};
    }
    case DType::boolean:
      if (text == "true" || text == "1") return Value{true};
      if (text == "false" || text == "0") return Value{false};
      return std::nullopt;
    default: return string_value(std::string(text), dtype);
  }
}

nlohmann::json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return nullptr;
        else
          return x;
      },
      v);
}

std::optional<std::string> to_text(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::optional<std::string> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return std::nullopt;
        else if constexpr (std::is_same_v<T, double>)
          return csv::format_double(x);
        else if constexpr (std::is_same_v<T, std::int64_t>)
          return std::to_string(x);
        else if constexpr (std::is_same_v<T, bool>)
          return std::string(x ? "true" : "false");
        else
          return x;
      },
      v);
}

const OntologyVocabulary& OntologyVocabulary::builtin() {
  static const OntologyVocabulary vocab = from_text(
      "ThermodynamicProperty\n"
      "CrystalStructureProperty\n"
      "MechanicalProperty\n"
      "CompositionProperty\n"
      "ElectrochemicalProperty\n"
      "MagneticProperty\n"
      "ElectronicProperty\n"
      "MicrostructureProperty\n"
      "ProcessingParameter\n"
      "SynthesisParameter\n"
      "MeasurementUncertainty\n"
      "InstrumentMetadata\n"
      "SampleIdentifier\n");
  return vocab;
}

OntologyVocabulary OntologyVocabulary::from_text(std::string_view text) {
  OntologyVocabulary v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (!line.empty()) v.add(std::string(line));
    pos = nl + 1;
  }
  return v;
}

OntologyVocabulary OntologyVocabulary::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open vocabulary file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::optional<std::size_t> SchemaTemplate::index_of(std::string_view field) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == field) return i;
  return std::nullopt;
}

const FieldSpec* SchemaTemplate::find(std::string_view field) const {
  auto i = index_of(field);
  return i ? &fields[*i] : nullptr;
}

void SchemaTemplate::validate(const UnitRegistry& units, const OntologyVocabulary& vocab) const {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_template, what); };
  if (!is_identifier(name)) fail("table name is not an identifier: '" + name + "'");
  if (fields.empty()) fail("template has no fields");
  std::unordered_set<std::string> seen;
  for (const auto& f : fields) {
    if (!is_identifier(f.name)) fail("field name is not an identifier: '" + f.name + "'");
    if (!seen.insert(f.name).second) fail("duplicate field name: " + f.name);
    if (f.unit) {
      if (!is_numeric(f.dtype)) fail("unit on non-numeric field: " + f.name);
      if (!units.contains(*f.unit)) fail("unregistered unit '" + *f.unit + "' on field " + f.name);
    }
    if (f.ontology_tag && !vocab.contains(*f.ontology_tag))
      fail("ontology tag '" + *f.ontology_tag + "' not in vocabulary (field " + f.name + ")");
  }
}

void to_json(nlohmann::json& j, const FieldSpec& f) {
  j = nlohmann::json{{"name", f.name},
                     {"dtype", to_string(f.dtype)},
                     {"unit", f.unit ? nlohmann::json(*f.unit) : nlohmann::json(nullptr)},
                     {"nullable", f.nullable},
                     {"ontology_tag", f.ontology_tag ? nlohmann::json(*f.ontology_tag) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, FieldSpec& f) {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_template, what); };
  if (!j.is_object()) fail("field spec must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "name" && key != "dtype" && key != "unit" && key != "nullable" && key != "ontology_tag")
      fail("unknown field-spec key: " + key);
  if (!j.contains("name") || !j["name"].is_string()) fail("field spec needs a string 'name'");
  f.name = j["name"].get<std::string>();
  if (!j.contains("dtype") || !j["dtype"].is_string()) fail("field " + f.name + " needs a string 'dtype'");
  auto dt = parse_dtype(j["dtype"].get<std::string>());
  if (!dt) fail("field " + f.name + " has unknown dtype " + j["dtype"].get<std::string>());
  f.dtype = *dt;
  f.unit.reset();
  if (j.contains("unit") && !j["unit"].is_null()) {
    if (!j["unit"].is_string()) fail("field " + f.name + ": unit must be a string");
    f.unit = j["unit"].get<std::string>();
  }
  f.nullable = true;
  if (j.contains("nullable")) {
    if (!j["nullable"].is_boolean()) fail("field " + f.name + ": nullable must be boolean");
    f.nullable = j["nullable"].get<bool>();
  }
  f.ontology_tag.reset();
  if (j.contains("ontology_tag") && !j["ontology_tag"].is_null()) {
    if (!j["ontology_tag"].is_string()) fail("field " + f.name + ": ontology_tag must be a string");
    f.ontology_tag = j["ontology_tag"].get<std::string>();
  }
}

void to_json(nlohmann::json& j, const SchemaTemplate& t) {
  j = nlohmann::json{{"name", t.name}, {"archetype", to_string(t.archetype)}, {"fields", t.fields}};
}

void from_json(const nlohmann::json& j, SchemaTemplate& t) {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_template, what); };
  if (!j.is_object()) fail("template must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "name" && key != "archetype" && key != "fields") fail("unknown template key: " + key);
  if (!j.contains("name") || !j["name"].is_string()) fail("template needs a string 'name'");
  t.name = j["name"].get<std::string>();
  t.archetype = Archetype::research;
  if (j.contains("archetype")) {
    auto a = j["archetype"].is_string() ? parse_archetype(j["archetype"].get<std::string>()) : std::nullopt;
    if (!a) fail("archetype must be one of research, industry_qms, agentic");
    t.archetype = *a;
  }
  if (!j.contains("fields") || !j["fields"].is_array()) fail("template needs a 'fields' array");
  t.fields.clear();
  for (const auto& f : j["fields"]) t.fields.push_back(f.get<FieldSpec>());
}

}  // namespace pmloop
