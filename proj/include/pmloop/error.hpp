#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pmloop {

enum class Errc {
  invalid_argument,
  duplicate_name,
  invalid_template,
  invalid_form,
  unknown_field,
  type_mismatch,
  rule_violation,
  table_missing,
  validation_not_run,
  unknown_column,
  malformed_filter,
  unknown_unit,
  incompatible_dimension,
  degenerate_data,
  non_finite_input,
  not_positive_definite,
  dimension_mismatch,
  empty_archive,
  unknown_name,
  out_of_bounds,
  unknown_fidelity,
  invalid_reference,
  all_missing,
  invalid_phase,
  unknown_proposal,
  already_measured,
  arity_mismatch,
  invalid_config,
  empty_log,
  unknown_parent,
  io_failure,
  internal,
};

/// Stable machine-readable name, used in API error bodies and C API messages.
std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  /// `path` names the offending location in a JSON payload, e.g. "filter.any_of[1]".
  Error(Errc code, const std::string& message, std::string path)
      : std::runtime_error(message), code_(code), path_(std::move(path)) {}

  Errc code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }

 private:
  Errc code_;
  std::string path_;
};

}  // namespace pmloop
