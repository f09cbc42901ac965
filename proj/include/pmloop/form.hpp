#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pmloop/filter.hpp"
#include "pmloop/schema.hpp"

namespace pmloop {

/// One term of a conjunctive predicate over earlier fields.
struct Condition {
  std::string field;
  CompareOp op = CompareOp::eq;
  nlohmann::json value;
};

struct RangeRule {
  std::string field;
  std::optional<double> min;
  std::optional<double> max;
};

struct RegexRule {
  std::string field;
  std::string pattern;
};

/// Field must be present whenever every condition holds (always, if empty).
struct RequiredIfRule {
  std::string field;
  std::vector<Condition> when;
};

/// Listed numeric fields must sum to `target` within `tolerance`, e.g.
/// atomic fractions of a composition summing to one.
struct SumRule {
  std::vector<std::string> fields;
  double target = 1.0;
  double tolerance = 1e-9;
};

using Rule = std::variant<RangeRule, RegexRule, RequiredIfRule, SumRule>;

/// `field` is shown only when every condition (over fields declared before
/// it) holds. Hidden fields must be absent and are stored as missing.
struct Branch {
  std::string field;
  std::vector<Condition> when;
};

struct TravelerForm {
  std::string form_id;
  std::string target_table;
  std::vector<Rule> rules;
  std::vector<Branch> branches;
  std::vector<std::string> attachment_slots;

  /// Checks every reference against the target schema. Throws
  /// Error(invalid_form).
  void check_against(const SchemaTemplate& schema) const;

  /// Form with no rules: only the template's own typing and nullability.
  static TravelerForm plain(const SchemaTemplate& schema);
};

void to_json(nlohmann::json& j, const TravelerForm& f);
/// Throws Error(invalid_form) on structural problems.
void from_json(const nlohmann::json& j, TravelerForm& f);

struct Violation {
  std::string field;
  std::string rule;
  std::string observed;
  std::string message;
};

void to_json(nlohmann::json& j, const Violation& v);

/// A record that passed form validation. Only the validator can produce one
/// in the validated state.
class ValidatedRecord {
 public:
  ValidatedRecord() = default;

  bool validated() const { return validated_; }
  const std::string& table() const { return table_; }
  const std::string& form_id() const { return form_id_; }
  /// Values in template column order.
  const std::vector<Value>& values() const { return values_; }

 private:
  friend struct RecordValidator;
  bool validated_ = false;
  std::string table_;
  std::string form_id_;
  std::vector<Value> values_;
};

struct ValidationResult {
  std::optional<ValidatedRecord> record;
  std::vector<Violation> violations;

  bool ok() const { return record.has_value(); }
};

/// Validates a JSON object record against a form bound to `schema`.
ValidationResult validate_record(const TravelerForm& form, const SchemaTemplate& schema,
                                 const nlohmann::json& record);

}  // namespace pmloop
