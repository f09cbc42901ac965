#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pmloop::csv {

/// A parsed cell. `quoted` distinguishes `""` from an empty unquoted field.
struct Cell {
  std::string text;
  bool quoted = false;

  /// Both `""` and an empty field read back as a missing value.
  bool is_null() const { return text.empty(); }
};

using Row = std::vector<Cell>;

/// Parses RFC-4180 text (CRLF or LF line endings). Throws Error(io_failure)
/// on an unterminated quote.
std::vector<Row> parse(std::string_view text);

/// Quotes a field when it contains a separator, quote, or line break.
std::string escape(std::string_view field);

/// Writes one record terminated by CRLF. Missing values are written as `""`.
void write_row(std::string& out, const std::vector<std::optional<std::string>>& fields);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Strict full-field parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);

}  // namespace pmloop::csv
