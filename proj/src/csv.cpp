#include "pmloop/csv.hpp"

#include <charconv>
#include <cmath>

#include "pmloop/error.hpp"

namespace pmloop::csv {

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  Cell cell;
  bool in_quotes = false;
  bool any = false;  // current line has content
  std::size_t i = 0;

  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell = Cell{};
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
    any = false;
  };

  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.text.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        cell.text.push_back(c);
      }
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        cell.quoted = true;
        any = true;
        break;
      case ',':
        end_cell();
        any = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_row();
        break;
      default:
        cell.text.push_back(c);
        any = true;
    }
    ++i;
  }
  if (in_quotes) throw Error(Errc::io_failure, "csv: unterminated quoted field");
  if (any || !row.empty()) end_row();
  return rows;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::string& out, const std::vector<std::optional<std::string>>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    if (fields[i] && !fields[i]->empty())
      out += escape(*fields[i]);
    else
      out += "\"\"";
  }
  out += "\r\n";
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text == "nan" || text == "NaN") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  const char* first = text.data();
  if (*first == '+') ++first;
  double v = 0;
  auto res = std::from_chars(first, text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace pmloop::csv
