#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pmloop {

/// A unit is an affine map onto its dimension's reference unit:
/// reference_value = scale * value + offset.
struct UnitDef {
  std::string symbol;
  std::string dimension;
  double scale = 1.0;
  double offset = 0.0;

  bool affine() const { return offset != 0.0; }
};

/// Unit table used for schema annotation and harmonization.
///
/// The built-in table holds the SI prefixes (y through Y, with `u` and `µ`
/// both accepted for micro) over g, m, s, K, A, mol, V, Pa and J, the
/// affine Celsius pair (`°C`, alias `degC`), and dimensionless symbols
/// (`1`, `-`, `%`, `at%`, `wt%`). Extra units come from a text file with
/// one `symbol,definition` line each, where the definition is either
/// `<factor> <symbol>` or `affine <scale> <offset> <symbol>` relative to an
/// already registered unit. `#` starts a comment.
class UnitRegistry {
 public:
  /// Registry pre-loaded with the built-in table.
  UnitRegistry();

  static const UnitRegistry& builtin();

  /// Throws Error(duplicate_name) for an existing symbol, Error(unknown_unit)
  /// when the definition cites an unknown symbol.
  void add_linear(std::string symbol, double factor, std::string_view of_symbol);
  void add_affine(std::string symbol, double scale, double offset, std::string_view of_symbol);

  /// Throws Error(invalid_config) with the offending line on a parse error.
  void load_text(std::string_view text);
  void load_file(const std::string& path);

  bool contains(std::string_view symbol) const;
  const UnitDef& get(std::string_view symbol) const;
  std::vector<std::string> symbols() const;

  bool compatible(std::string_view from, std::string_view to) const;

  double convert(double value, std::string_view from, std::string_view to) const;

 private:
  void add_base(std::string symbol, std::string dimension);
  void insert(UnitDef def);

  std::map<std::string, UnitDef, std::less<>> units_;
};

/// Convenience over the built-in registry.
double convert_unit(double value, std::string_view from, std::string_view to);

}  // namespace pmloop
