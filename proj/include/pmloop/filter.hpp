#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pmloop/schema.hpp"

namespace pmloop {

enum class CompareOp { eq, ne, lt, le, gt, ge, contains };

std::string_view to_string(CompareOp op);
std::optional<CompareOp> parse_compare_op(std::string_view s);

/// Comparison with null-is-false semantics: any comparison against a
/// missing cell is false. Numeric columns compare as numbers, string-like
/// columns lexicographically, booleans support only eq/ne.
bool compare(const Value& cell, CompareOp op, const Value& literal);

/// Parsed, schema-checked filter tree.
///
/// Wire form:
///   {"gt": ["column", literal]}           comparison (eq ne lt le gt ge contains)
///   {"and": [expr, ...]}, {"or": [...]}   n-ary combinators, n >= 1
///   {"not": expr}
struct FilterExpr {
  enum class Kind { compare, all_of, any_of, negate };

  Kind kind = Kind::compare;
  CompareOp op = CompareOp::eq;
  std::string column;
  std::size_t column_index = 0;
  Value literal;
  std::vector<FilterExpr> children;

  /// Throws Error(malformed_filter) or Error(unknown_column); the message
  /// starts with the JSON path of the offending node, e.g. `filter.and[1]`.
  static FilterExpr parse(const nlohmann::json& j, const SchemaTemplate& schema,
                          const std::string& path = "filter");

  /// `cell(i)` returns the value of schema column i for the row under test.
  bool evaluate(const std::function<const Value&(std::size_t)>& cell) const;

  nlohmann::json to_json() const;
};

}  // namespace pmloop
