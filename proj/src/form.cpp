#include "pmloop/form.hpp"

#include <cmath>
#include <regex>
#include <set>

#include "pmloop/error.hpp"

namespace pmloop {

namespace {

Value literal_for(const FieldSpec& f, const nlohmann::json& v) {
  if (is_numeric(f.dtype) && v.is_number()) {
    if (f.dtype == DType::integer && v.is_number_integer()) return v.get<std::int64_t>();
    return v.get<double>();
  }
  if (f.dtype == DType::boolean && v.is_boolean()) return v.get<bool>();
  if (is_string_like(f.dtype) && v.is_string()) return v.get<std::string>();
  throw Error(Errc::invalid_form, "condition literal does not match dtype of field " + f.name);
}

void check_condition(const Condition& c, const SchemaTemplate& schema, std::size_t must_precede,
                     const std::string& ctx) {
  auto idx = schema.index_of(c.field);
  if (!idx) throw Error(Errc::invalid_form, ctx + ": unknown field " + c.field);
  if (*idx >= must_precede)
    throw Error(Errc::invalid_form, ctx + ": condition field " + c.field + " must be declared earlier");
  if (c.op == CompareOp::contains && schema.fields[*idx].dtype != DType::text)
    throw Error(Errc::invalid_form, ctx + ": 'contains' on non-text field " + c.field);
  literal_for(schema.fields[*idx], c.value);
}

bool holds(const std::vector<Condition>& when, const SchemaTemplate& schema, const std::vector<Value>& values) {
  for (const auto& c : when) {
    const auto idx = *schema.index_of(c.field);
    if (!compare(values[idx], c.op, literal_for(schema.fields[idx], c.value))) return false;
  }
  return true;
}

std::string observed_text(const nlohmann::json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

std::string observed_text(const Value& v) {
  auto t = to_text(v);
  return t ? *t : "null";
}

std::optional<double> numeric(const Value& v) {
  if (auto d = std::get_if<double>(&v)) return *d;
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::nullopt;
}

nlohmann::json conditions_json(const std::vector<Condition>& when) {
  auto arr = nlohmann::json::array();
  for (const auto& c : when) arr.push_back({{"field", c.field}, {"op", to_string(c.op)}, {"value", c.value}});
  return arr;
}

std::vector<Condition> conditions_from(const nlohmann::json& j, const std::string& ctx) {
  std::vector<Condition> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw Error(Errc::invalid_form, ctx + ": 'when' must be an array");
  for (const auto& c : j) {
    if (!c.is_object() || !c.contains("field") || !c["field"].is_string() || !c.contains("op") ||
        !c["op"].is_string() || !c.contains("value"))
      throw Error(Errc::invalid_form, ctx + ": condition needs field, op, value");
    auto op = parse_compare_op(c["op"].get<std::string>());
    if (!op) throw Error(Errc::invalid_form, ctx + ": unknown op " + c["op"].get<std::string>());
    out.push_back(Condition{c["field"].get<std::string>(), *op, c["value"]});
  }
  return out;
}

std::string field_of(const nlohmann::json& j, const std::string& ctx) {
  if (!j.contains("field") || !j["field"].is_string()) throw Error(Errc::invalid_form, ctx + ": needs 'field'");
  return j["field"].get<std::string>();
}

}  // namespace

struct RecordValidator {
  static ValidatedRecord make(const TravelerForm& form, std::vector<Value> values) {
    ValidatedRecord r;
    r.validated_ = true;
    r.table_ = form.target_table;
    r.form_id_ = form.form_id;
    r.values_ = std::move(values);
    return r;
  }
};

void TravelerForm::check_against(const SchemaTemplate& schema) const {
  if (target_table != schema.name)
    throw Error(Errc::invalid_form, "form " + form_id + " targets " + target_table + ", not " + schema.name);
  auto need = [&](const std::string& field, const std::string& ctx) {
    auto idx = schema.index_of(field);
    if (!idx) throw Error(Errc::invalid_form, ctx + ": unknown field " + field);
    return *idx;
  };
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string ctx = "rules[" + std::to_string(i) + "]";
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, RangeRule>) {
            if (!is_numeric(schema.fields[need(r.field, ctx)].dtype))
              throw Error(Errc::invalid_form, ctx + ": range rule on non-numeric field " + r.field);
          } else if constexpr (std::is_same_v<T, RegexRule>) {
            if (!is_string_like(schema.fields[need(r.field, ctx)].dtype))
              throw Error(Errc::invalid_form, ctx + ": regex rule on non-string field " + r.field);
            try {
              std::regex re(r.pattern);
            } catch (const std::regex_error&) {
              throw Error(Errc::invalid_form, ctx + ": invalid regex for " + r.field);
            }
          } else if constexpr (std::is_same_v<T, RequiredIfRule>) {
            const auto idx = need(r.field, ctx);
            for (const auto& c : r.when) check_condition(c, schema, schema.fields.size(), ctx);
            (void)idx;
          } else {
            if (r.fields.empty()) throw Error(Errc::invalid_form, ctx + ": sum rule without fields");
            for (const auto& f : r.fields)
              if (!is_numeric(schema.fields[need(f, ctx)].dtype))
                throw Error(Errc::invalid_form, ctx + ": sum rule on non-numeric field " + f);
          }
        },
        rules[i]);
  }
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string ctx = "branches[" + std::to_string(i) + "]";
    const auto idx = need(branches[i].field, ctx);
    if (!schema.fields[idx].nullable)
      throw Error(Errc::invalid_form, ctx + ": branch hides non-nullable field " + branches[i].field);
    // Conditions reference strictly earlier fields, so the dependency graph follows field order.
    for (const auto& c : branches[i].when) check_condition(c, schema, idx, ctx);
  }
  for (const auto& slot : attachment_slots) {
    const auto idx = need(slot, "attachment_slots");
    if (schema.fields[idx].dtype != DType::file_ref)
      throw Error(Errc::invalid_form, "attachment slot " + slot + " is not a file_ref field");
  }
}

TravelerForm TravelerForm::plain(const SchemaTemplate& schema) {
  TravelerForm f;
  f.form_id = schema.name + ":default";
  f.target_table = schema.name;
  return f;
}

void to_json(nlohmann::json& j, const TravelerForm& f) {
  auto rules = nlohmann::json::array();
  for (const auto& rule : f.rules) {
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, RangeRule>) {
            nlohmann::json o{{"type", "range"}, {"field", r.field}};
            o["min"] = r.min ? nlohmann::json(*r.min) : nlohmann::json(nullptr);
            o["max"] = r.max ? nlohmann::json(*r.max) : nlohmann::json(nullptr);
            rules.push_back(o);
          } else if constexpr (std::is_same_v<T, RegexRule>) {
            rules.push_back({{"type", "regex"}, {"field", r.field}, {"pattern", r.pattern}});
          } else if constexpr (std::is_same_v<T, RequiredIfRule>) {
            rules.push_back({{"type", "required_if"}, {"field", r.field}, {"when", conditions_json(r.when)}});
          } else {
            rules.push_back({{"type", "sum"}, {"fields", r.fields}, {"target", r.target}, {"tolerance", r.tolerance}});
          }
        },
        rule);
  }
  auto branches = nlohmann::json::array();
  for (const auto& b : f.branches) branches.push_back({{"field", b.field}, {"when", conditions_json(b.when)}});
  j = nlohmann::json{{"form_id", f.form_id},
                     {"target_table", f.target_table},
                     {"rules", rules},
                     {"branches", branches},
                     {"attachment_slots", f.attachment_slots}};
}

void from_json(const nlohmann::json& j, TravelerForm& f) {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_form, what); };
  if (!j.is_object()) fail("form must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "form_id" && key != "target_table" && key != "rules" && key != "branches" && key != "attachment_slots")
      fail("unknown form key: " + key);
  if (!j.contains("form_id") || !j["form_id"].is_string()) fail("form needs a string form_id");
  if (!j.contains("target_table") || !j["target_table"].is_string()) fail("form needs a string target_table");
  f = TravelerForm{};
  f.form_id = j["form_id"].get<std::string>();
  f.target_table = j["target_table"].get<std::string>();
  if (j.contains("rules")) {
    if (!j["rules"].is_array()) fail("rules must be an array");
    for (std::size_t i = 0; i < j["rules"].size(); ++i) {
      const auto& r = j["rules"][i];
      const std::string ctx = "rules[" + std::to_string(i) + "]";
      if (!r.is_object() || !r.contains("type") || !r["type"].is_string()) fail(ctx + ": needs a type");
      const auto type = r["type"].get<std::string>();
      if (type == "range") {
        RangeRule rr{field_of(r, ctx), std::nullopt, std::nullopt};
        if (r.contains("min") && !r["min"].is_null()) {
          if (!r["min"].is_number()) fail(ctx + ": min must be a number");
          rr.min = r["min"].get<double>();
        }
        if (r.contains("max") && !r["max"].is_null()) {
          if (!r["max"].is_number()) fail(ctx + ": max must be a number");
          rr.max = r["max"].get<double>();
        }
        f.rules.push_back(rr);
      } else if (type == "regex") {
        if (!r.contains("pattern") || !r["pattern"].is_string()) fail(ctx + ": needs a pattern");
        f.rules.push_back(RegexRule{field_of(r, ctx), r["pattern"].get<std::string>()});
      } else if (type == "required_if") {
        f.rules.push_back(RequiredIfRule{field_of(r, ctx), conditions_from(r.value("when", nlohmann::json()), ctx)});
      } else if (type == "sum") {
        SumRule s;
        if (!r.contains("fields") || !r["fields"].is_array()) fail(ctx + ": sum needs fields");
        for (const auto& x : r["fields"]) {
          if (!x.is_string()) fail(ctx + ": sum fields must be strings");
          s.fields.push_back(x.get<std::string>());
        }
        if (r.contains("target")) {
          if (!r["target"].is_number()) fail(ctx + ": target must be a number");
          s.target = r["target"].get<double>();
        }
        if (r.contains("tolerance")) {
          if (!r["tolerance"].is_number()) fail(ctx + ": tolerance must be a number");
          s.tolerance = r["tolerance"].get<double>();
        }
        f.rules.push_back(s);
      } else {
        fail(ctx + ": unknown rule type " + type);
      }
    }
  }
  if (j.contains("branches")) {
    if (!j["branches"].is_array()) fail("branches must be an array");
    for (std::size_t i = 0; i < j["branches"].size(); ++i) {
      const auto& b = j["branches"][i];
      const std::string ctx = "branches[" + std::to_string(i) + "]";
      if (!b.is_object()) fail(ctx + ": must be an object");
      f.branches.push_back(Branch{field_of(b, ctx), conditions_from(b.value("when", nlohmann::json()), ctx)});
    }
  }
  if (j.contains("attachment_slots")) {
    if (!j["attachment_slots"].is_array()) fail("attachment_slots must be an array");
    for (const auto& s : j["attachment_slots"]) {
      if (!s.is_string()) fail("attachment slot names must be strings");
      f.attachment_slots.push_back(s.get<std::string>());
    }
  }
}

void to_json(nlohmann::json& j, const Violation& v) {
  j = nlohmann::json{{"field", v.field}, {"rule", v.rule}, {"observed", v.observed}, {"message", v.message}};
}

ValidationResult validate_record(const TravelerForm& form, const SchemaTemplate& schema,
                                 const nlohmann::json& record) {
  ValidationResult result;
  auto& out = result.violations;
  if (!record.is_object()) {
    out.push_back({"", "type_mismatch", record.dump(), "record must be a JSON object"});
    return result;
  }

  std::vector<Value> values(schema.fields.size());
  std::vector<bool> supplied(schema.fields.size(), false);
  for (const auto& [key, raw] : record.items()) {
    auto idx = schema.index_of(key);
    if (!idx) {
      out.push_back({key, "unknown_field", observed_text(raw), "field is not part of table " + schema.name});
      continue;
    }
    const FieldSpec& f = schema.fields[*idx];
    auto v = coerce(raw, f.dtype);
    if (!v) {
      out.push_back({key, "type_mismatch", observed_text(raw), "expected " + std::string(to_string(f.dtype))});
      continue;
    }
    values[*idx] = std::move(*v);
    supplied[*idx] = !raw.is_null();
  }

  // Visibility is decided in field order; conditions only see earlier fields.
  std::vector<bool> visible(schema.fields.size(), true);
  for (std::size_t i = 0; i < schema.fields.size(); ++i) {
    for (const auto& b : form.branches) {
      if (b.field != schema.fields[i].name) continue;
      if (!holds(b.when, schema, values)) visible[i] = false;
    }
    if (!visible[i] && !is_null(values[i])) {
      out.push_back({schema.fields[i].name, "hidden_field", observed_text(values[i]),
                     "field is hidden by a branch condition and must be left empty"});
      values[i] = Value{};
    }
  }

  for (std::size_t i = 0; i < schema.fields.size(); ++i) {
    const FieldSpec& f = schema.fields[i];
    if (visible[i] && !f.nullable && is_null(values[i]) && supplied[i] == false) {
      const bool type_error = record.contains(f.name) && !record[f.name].is_null();
      if (!type_error)
        out.push_back({f.name, "nullability", record.contains(f.name) ? observed_text(record[f.name]) : "missing",
                       "required field is missing"});
    }
  }

  for (const auto& rule : form.rules) {
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, RangeRule>) {
            const auto idx = *schema.index_of(r.field);
            auto x = numeric(values[idx]);
            if (!x) return;
            if ((r.min && *x < *r.min) || (r.max && *x > *r.max))
              out.push_back({r.field, "range", observed_text(values[idx]), "value outside allowed range"});
          } else if constexpr (std::is_same_v<T, RegexRule>) {
            const auto idx = *schema.index_of(r.field);
            auto s = std::get_if<std::string>(&values[idx]);
            if (!s) return;
            if (!std::regex_match(*s, std::regex(r.pattern)))
              out.push_back({r.field, "regex", *s, "value does not match " + r.pattern});
          } else if constexpr (std::is_same_v<T, RequiredIfRule>) {
            const auto idx = *schema.index_of(r.field);
            if (visible[idx] && is_null(values[idx]) && holds(r.when, schema, values))
              out.push_back({r.field, "required_if", "missing", "field is required by a form rule"});
          } else {
            double sum = 0.0;
            for (const auto& name : r.fields) {
              auto x = numeric(values[*schema.index_of(name)]);
              if (!x) return;
              sum += *x;
            }
            if (std::abs(sum - r.target) > r.tolerance) {
              std::string joined;
              for (const auto& name : r.fields) joined += (joined.empty() ? "" : "+") + name;
              out.push_back({joined, "sum", std::to_string(sum), "fields must sum to " + std::to_string(r.target)});
            }
          }
        },
        rule);
  }

  if (out.empty()) result.record = RecordValidator::make(form, std::move(values));
  return result;
}

}  // namespace pmloop
