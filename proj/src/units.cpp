#include "pmloop/units.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pmloop/csv.hpp"
#include "pmloop/error.hpp"

namespace pmloop {

namespace {

struct Prefix {
  const char* symbol;
  double factor;
};

constexpr Prefix kPrefixes[] = {
    {"y", 1e-24}, {"z", 1e-21}, {"a", 1e-18}, {"f", 1e-15}, {"p", 1e-12},
    {"n", 1e-9},  {"u", 1e-6},  {"µ", 1e-6},  {"m", 1e-3},  {"c", 1e-2},
    {"d", 1e-1},  {"da", 1e1},  {"h", 1e2},   {"k", 1e3},   {"M", 1e6},
    {"G", 1e9},   {"T", 1e12},  {"P", 1e15},  {"E", 1e18},  {"Z", 1e21},
    {"Y", 1e24},
};

struct Base {
  const char* symbol;
  const char* dimension;
};

constexpr Base kBases[] = {
    {"g", "mass"},       {"m", "length"},   {"s", "time"},
    {"K", "temperature"}, {"A", "current"}, {"mol", "amount"},
    {"V", "voltage"},    {"Pa", "pressure"}, {"J", "energy"},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

UnitRegistry::UnitRegistry() {
  for (const auto& b : kBases) {
    add_base(b.symbol, b.dimension);
    for (const auto& p : kPrefixes) add_linear(std::string(p.symbol) + b.symbol, p.factor, b.symbol);
  }
  add_affine("°C", 1.0, 273.15, "K");
  add_affine("degC", 1.0, 273.15, "K");
  add_base("1", "dimensionless");
  add_linear("-", 1.0, "1");
  add_linear("%", 0.01, "1");
  add_base("at%", "atomic_fraction");
  add_base("wt%", "mass_fraction");
}

const UnitRegistry& UnitRegistry::builtin() {
  static const UnitRegistry registry;
  return registry;
}

void UnitRegistry::add_base(std::string symbol, std::string dimension) {
  insert(UnitDef{std::move(symbol), std::move(dimension), 1.0, 0.0});
}

void UnitRegistry::insert(UnitDef def) {
  if (units_.count(def.symbol)) throw Error(Errc::duplicate_name, "unit already registered: " + def.symbol);
  auto key = def.symbol;
  units_.emplace(std::move(key), std::move(def));
}

void UnitRegistry::add_linear(std::string symbol, double factor, std::string_view of_symbol) {
  add_affine(std::move(symbol), factor, 0.0, of_symbol);
}

void UnitRegistry::add_affine(std::string symbol, double scale, double offset, std::string_view of_symbol) {
  if (!(scale > 0.0) || !std::isfinite(offset))
    throw Error(Errc::invalid_argument, "unit scale must be positive and offset finite: " + symbol);
  const UnitDef& of = get(of_symbol);
  // Compose value -> of -> reference.
  insert(UnitDef{std::move(symbol), of.dimension, of.scale * scale, of.scale * offset + of.offset});
}

void UnitRegistry::load_text(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    auto bad = [&](const char* why) {
      return Error(Errc::invalid_config,
                   "unit file line " + std::to_string(line_no) + ": " + why + ": " + std::string(line));
    };
    if (comma == std::string_view::npos) throw bad("expected symbol,definition");
    const auto symbol = trim(line.substr(0, comma));
    const auto parts = split_ws(trim(line.substr(comma + 1)));
    if (symbol.empty()) throw bad("empty symbol");
    if (parts.size() == 2) {
      const auto factor = csv::parse_double(parts[0]);
      if (!factor) throw bad("bad factor");
      add_linear(std::string(symbol), *factor, parts[1]);
    } else if (parts.size() == 4 && parts[0] == "affine") {
      const auto scale = csv::parse_double(parts[1]);
      const auto offset = csv::parse_double(parts[2]);
      if (!scale || !offset) throw bad("bad affine coefficients");
      add_affine(std::string(symbol), *scale, *offset, parts[3]);
    } else {
      throw bad("expected '<factor> <unit>' or 'affine <scale> <offset> <unit>'");
    }
  }
}

void UnitRegistry::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open unit file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  load_text(ss.str());
}

bool UnitRegistry::contains(std::string_view symbol) const { return units_.find(symbol) != units_.end(); }

const UnitDef& UnitRegistry::get(std::string_view symbol) const {
  auto it = units_.find(symbol);
  if (it == units_.end()) throw Error(Errc::unknown_unit, "unknown unit: " + std::string(symbol));
  return it->second;
}

std::vector<std::string> UnitRegistry::symbols() const {
  std::vector<std::string> out;
  out.reserve(units_.size());
  for (const auto& [k, _] : units_) out.push_back(k);
  return out;
}

bool UnitRegistry::compatible(std::string_view from, std::string_view to) const {
  return get(from).dimension == get(to).dimension;
}

double UnitRegistry::convert(double value, std::string_view from, std::string_view to) const {
  const UnitDef& a = get(from);
  const UnitDef& b = get(to);
  if (a.dimension != b.dimension)
    throw Error(Errc::incompatible_dimension,
                "cannot convert " + a.symbol + " (" + a.dimension + ") to " + b.symbol + " (" + b.dimension + ")");
  if (a.symbol == b.symbol) return value;
  if (!a.affine() && !b.affine()) return value * (a.scale / b.scale);
  return (a.scale * value + a.offset - b.offset) / b.scale;
}

double convert_unit(double value, std::string_view from, std::string_view to) {
  return UnitRegistry::builtin().convert(value, from, to);
}

}  // namespace pmloop
