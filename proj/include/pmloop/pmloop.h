#ifndef PMLOOP_H
#define PMLOOP_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PML_API __declspec(dllexport)
#else
#define PML_API __attribute__((visibility("default")))
#endif

/* Status codes. PML_OK is zero; every other value names a failure class.
   Details of the most recent failure on the calling thread are available
   from pml_last_error() and pml_last_error_path(). */
typedef enum pml_status {
  PML_OK = 0,
  PML_INVALID_ARGUMENT,
  PML_DUPLICATE_NAME,
  PML_INVALID_TEMPLATE,
  PML_INVALID_FORM,
  PML_UNKNOWN_FIELD,
  PML_TYPE_MISMATCH,
  PML_RULE_VIOLATION,
  PML_TABLE_MISSING,
  PML_VALIDATION_NOT_RUN,
  PML_UNKNOWN_COLUMN,
  PML_MALFORMED_FILTER,
  PML_UNKNOWN_UNIT,
  PML_INCOMPATIBLE_DIMENSION,
  PML_DEGENERATE_DATA,
  PML_NON_FINITE_INPUT,
  PML_NOT_POSITIVE_DEFINITE,
  PML_DIMENSION_MISMATCH,
  PML_EMPTY_ARCHIVE,
  PML_UNKNOWN_NAME,
  PML_OUT_OF_BOUNDS,
  PML_UNKNOWN_FIDELITY,
  PML_INVALID_REFERENCE,
  PML_ALL_MISSING,
  PML_INVALID_PHASE,
  PML_UNKNOWN_PROPOSAL,
  PML_ALREADY_MEASURED,
  PML_ARITY_MISMATCH,
  PML_INVALID_CONFIG,
  PML_EMPTY_LOG,
  PML_UNKNOWN_PARENT,
  PML_IO_FAILURE,
  PML_INTERNAL
} pml_status;

typedef struct pml_store pml_store;
typedef struct pml_campaign pml_campaign;

PML_API const char* pml_version(void);
/* Machine name of a status code, e.g. "invalid_config". */
PML_API const char* pml_status_name(pml_status status);
PML_API const char* pml_last_error(void);
PML_API const char* pml_last_error_path(void);

/* Strings returned through char** out-parameters are owned by the caller. */
PML_API void pml_free(char* s);

/* Store. data_dir may be NULL for an in-memory store. */
PML_API pml_status pml_store_open(const char* data_dir, pml_store** out);
PML_API void pml_store_close(pml_store* store);
PML_API pml_status pml_store_checkpoint(pml_store* store);
PML_API pml_status pml_table_create(pml_store* store, const char* schema_json, char** out_id);
PML_API pml_status pml_table_list(const pml_store* store, char** out_json);
PML_API pml_status pml_table_metadata(const pml_store* store, const char* table, char** out_json);
/* query_json: {"columns", "filter", "numRows", "cursor"}. With as_csv set the
   result is RFC-4180 text instead of JSON. */
PML_API pml_status pml_table_query(const pml_store* store, const char* table, const char* query_json, int as_csv,
                                   char** out);
/* form_json may be NULL for the table's plain form. Writes an ingest report
   {"accepted", "rejected", "violations"} even when no row is accepted. */
PML_API pml_status pml_table_ingest_csv(pml_store* store, const char* table, const char* csv_text,
                                        const char* form_json, const char* actor, char** out_report);

PML_API pml_status pml_benchmarks_list(char** out_json);

/* Parses and validates a campaign config; writes its canonical JSON. */
PML_API pml_status pml_config_canonical(const char* config_json, char** out_json);

/* store may be NULL for benchmark campaigns. */
PML_API pml_status pml_campaign_create(const char* config_json, const pml_store* store, pml_campaign** out);
PML_API pml_status pml_campaign_from_snapshot(const char* snapshot_json, pml_campaign** out);
PML_API void pml_campaign_free(pml_campaign* campaign);
PML_API pml_status pml_campaign_phase(const pml_campaign* campaign, char** out_phase);
/* Writes a JSON array of proposals. */
PML_API pml_status pml_campaign_propose(pml_campaign* campaign, char** out_json);
/* fidelity may be NULL to use the proposal's fidelity. */
PML_API pml_status pml_campaign_measure(pml_campaign* campaign, const char* proposal_id, const double* y,
                                        size_t n_objectives, const double* fidelity);
PML_API pml_status pml_campaign_expire(pml_campaign* campaign, const char* proposal_id);
/* Benchmark mode: advances one iteration. *recorded is set to 1 when an
   iteration record was produced. */
PML_API pml_status pml_campaign_step(pml_campaign* campaign, int* recorded);
PML_API pml_status pml_campaign_run(pml_campaign* campaign);
/* which: observations, proposals, iterations, front (CSV text), or summary,
   snapshot, diagnostics (JSON). */
PML_API pml_status pml_campaign_export(const pml_campaign* campaign, const char* which, char** out);

#ifdef __cplusplus
}
#endif

#endif
