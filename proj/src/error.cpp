#include "pmloop/error.hpp"

namespace pmloop {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::duplicate_name: return "duplicate_name";
    case Errc::invalid_template: return "invalid_template";
    case Errc::invalid_form: return "invalid_form";
    case Errc::unknown_field: return "unknown_field";
    case Errc::type_mismatch: return "type_mismatch";
    case Errc::rule_violation: return "rule_violation";
    case Errc::table_missing: return "table_missing";
    case Errc::validation_not_run: return "validation_not_run";
    case Errc::unknown_column: return "unknown_column";
    case Errc::malformed_filter: return "malformed_filter";
    case Errc::unknown_unit: return "unknown_unit";
    case Errc::incompatible_dimension: return "incompatible_dimension";
    case Errc::degenerate_data: return "degenerate_data";
    case Errc::non_finite_input: return "non_finite_input";
    case Errc::not_positive_definite: return "not_positive_definite";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::empty_archive: return "empty_archive";
    case Errc::unknown_name: return "unknown_name";
    case Errc::out_of_bounds: return "out_of_bounds";
    case Errc::unknown_fidelity: return "unknown_fidelity";
    case Errc::invalid_reference: return "invalid_reference";
    case Errc::all_missing: return "all_missing";
    case Errc::invalid_phase: return "invalid_phase";
    case Errc::unknown_proposal: return "unknown_proposal";
    case Errc::already_measured: return "already_measured";
    case Errc::arity_mismatch: return "arity_mismatch";
    case Errc::invalid_config: return "invalid_config";
    case Errc::empty_log: return "empty_log";
    case Errc::unknown_parent: return "unknown_parent";
    case Errc::io_failure: return "io_failure";
    case Errc::internal: return "internal";
  }
  return "internal";
}

}  // namespace pmloop
