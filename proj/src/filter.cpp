#include "pmloop/filter.hpp"

#include "pmloop/error.hpp"

namespace pmloop {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "eq";
    case CompareOp::ne: return "ne";
    case CompareOp::lt: return "lt";
    case CompareOp::le: return "le";
    case CompareOp::gt: return "gt";
    case CompareOp::ge: return "ge";
    case CompareOp::contains: return "contains";
  }
  return "eq";
}

std::optional<CompareOp> parse_compare_op(std::string_view s) {
  for (auto op : {CompareOp::eq, CompareOp::ne, CompareOp::lt, CompareOp::le, CompareOp::gt, CompareOp::ge,
                  CompareOp::contains})
    if (to_string(op) == s) return op;
  return std::nullopt;
}

namespace {

template <typename T>
bool apply(const T& a, CompareOp op, const T& b) {
  switch (op) {
    case CompareOp::eq: return a == b;
    case CompareOp::ne: return a != b;
    case CompareOp::lt: return a < b;
    case CompareOp::le: return a <= b;
    case CompareOp::gt: return a > b;
    case CompareOp::ge: return a >= b;
    case CompareOp::contains: return false;
  }
  return false;
}

std::optional<double> as_number(const Value& v) {
  if (auto d = std::get_if<double>(&v)) return *d;
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::nullopt;
}

}  // namespace

bool compare(const Value& cell, CompareOp op, const Value& literal) {
  if (is_null(cell) || is_null(literal)) return false;
  if (auto a = std::get_if<std::int64_t>(&cell))
    if (auto b = std::get_if<std::int64_t>(&literal)) return apply(*a, op, *b);
  if (auto a = as_number(cell)) {
    auto b = as_number(literal);
    return b && apply(*a, op, *b);
  }
  if (auto a = std::get_if<std::string>(&cell)) {
    auto b = std::get_if<std::string>(&literal);
    if (!b) return false;
    if (op == CompareOp::contains) return a->find(*b) != std::string::npos;
    return apply(*a, op, *b);
  }
  if (auto a = std::get_if<bool>(&cell)) {
    auto b = std::get_if<bool>(&literal);
    if (!b) return false;
    if (op == CompareOp::eq) return *a == *b;
    if (op == CompareOp::ne) return *a != *b;
  }
  return false;
}

FilterExpr FilterExpr::parse(const nlohmann::json& j, const SchemaTemplate& schema, const std::string& path) {
  auto fail = [&](const std::string& what) { throw Error(Errc::malformed_filter, path + ": " + what, path); };
  if (!j.is_object() || j.size() != 1) fail("expected an object with exactly one operator key");
  const auto it = j.begin();
  const std::string key = it.key();
  const nlohmann::json& body = it.value();
  FilterExpr e;

  if (key == "and" || key == "or") {
    e.kind = key == "and" ? Kind::all_of : Kind::any_of;
    if (!body.is_array() || body.empty()) fail("'" + key + "' needs a non-empty array");
    for (std::size_t i = 0; i < body.size(); ++i)
      e.children.push_back(parse(body[i], schema, path + "." + key + "[" + std::to_string(i) + "]"));
    return e;
  }
  if (key == "not") {
    e.kind = Kind::negate;
    e.children.push_back(parse(body, schema, path + ".not"));
    return e;
  }

  auto op = parse_compare_op(key);
  if (!op) fail("unknown operator '" + key + "'");
  e.kind = Kind::compare;
  e.op = *op;
  if (!body.is_array() || body.size() != 2 || !body[0].is_string())
    fail("'" + key + "' needs [column, literal]");
  e.column = body[0].get<std::string>();
  auto idx = schema.index_of(e.column);
  if (!idx) throw Error(Errc::unknown_column, path + "." + key + ": unknown column '" + e.column + "'", path + "." + key);
  e.column_index = *idx;
  const FieldSpec& f = schema.fields[*idx];
  const auto& lit = body[1];

  if (e.op == CompareOp::contains && f.dtype != DType::text) fail("'contains' only applies to text columns");
  if (f.dtype == DType::boolean && e.op != CompareOp::eq && e.op != CompareOp::ne)
    fail("boolean column '" + f.name + "' supports only eq/ne");

  if (is_numeric(f.dtype)) {
    if (!lit.is_number()) fail("literal for numeric column '" + f.name + "' must be a number");
    if (lit.is_number_integer() && f.dtype == DType::integer)
      e.literal = lit.get<std::int64_t>();
    else
      e.literal = lit.get<double>();
  } else if (f.dtype == DType::boolean) {
    if (!lit.is_boolean()) fail("literal for boolean column '" + f.name + "' must be true/false");
    e.literal = lit.get<bool>();
  } else {
    if (!lit.is_string()) fail("literal for column '" + f.name + "' must be a string");
    e.literal = lit.get<std::string>();
  }
  return e;
}

bool FilterExpr::evaluate(const std::function<const Value&(std::size_t)>& cell) const {
  switch (kind) {
    case Kind::compare: return compare(cell(column_index), op, literal);
    case Kind::all_of:
      for (const auto& c : children)
        if (!c.evaluate(cell)) return false;
      return true;
    case Kind::any_of:
      for (const auto& c : children)
        if (c.evaluate(cell)) return true;
      return false;
    case Kind::negate: return !children.front().evaluate(cell);
  }
  return false;
}

nlohmann::json FilterExpr::to_json() const {
  switch (kind) {
    case Kind::compare:
      return {{std::string(pmloop::to_string(op)), nlohmann::json::array({column, pmloop::to_json(literal)})}};
    case Kind::all_of:
    case Kind::any_of: {
      auto arr = nlohmann::json::array();
      for (const auto& c : children) arr.push_back(c.to_json());
      return {{kind == Kind::all_of ? "and" : "or", arr}};
    }
    case Kind::negate: return {{"not", children.front().to_json()}};
  }
  return nullptr;
}

}  // namespace pmloop
