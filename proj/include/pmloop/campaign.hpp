#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmloop/acquisition.hpp"
#include "pmloop/design.hpp"
#include "pmloop/gp.hpp"
#include "pmloop/pareto.hpp"

namespace pmloop {

class Datastore;

struct Imputation {
  enum class Kind { drop_rows, mean, median, constant };
  Kind kind = Kind::drop_rows;
  double value = 0;  // constant fill

  static Imputation from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ImputeReport {
  std::size_t rows_dropped = 0;
  std::size_t cells_filled = 0;
};

using Cells = std::vector<std::vector<std::optional<double>>>;

// Fills or drops missing cells in place (rows x columns).
ImputeReport impute(Cells& rows, const Imputation& strategy);

enum class CampaignMode { benchmark, dataset };

struct CampaignConfig {
  CampaignMode mode = CampaignMode::benchmark;
  std::string benchmark;
  std::string table;
  std::vector<std::string> x_columns, y_columns;
  std::optional<std::string> fidelity_column;
  std::vector<Direction> directions;
  Box bounds;
  std::optional<CostModel> fidelity;
  std::optional<double> init_fidelity;
  int iterations = 10;
  int init_n = 5;
  DesignMethod init_method = DesignMethod::lhs;
  AcqKind acquisition = AcqKind::ei;
  int q = 1;
  double beta = 1.0;
  int mc_samples = 512;
  std::uint64_t seed = 0;
  std::optional<double> budget;
  Imputation imputation;
  KernelFamily kernel = KernelFamily::matern52;
  std::optional<std::vector<double>> reference_point;  // user directions
  bool record_wall_time = false;

  std::size_t input_dim() const { return bounds.dim(); }
  std::size_t objectives() const { return directions.size(); }

  // Strict parse: unknown keys and bad values raise Error(invalid_config)
  // with the offending path. Benchmark defaults (bounds, directions,
  // acquisition) are filled in here.
  static CampaignConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

enum class Phase { configured, awaiting_measurement, updating, converged, budget_exhausted };
std::string to_string(Phase p);

struct Observation {
  int iter = 0;
  std::string proposal_id;  // empty for rows loaded from a table
  std::vector<double> x;
  std::optional<double> fidelity;
  double cost = 0;
  std::vector<double> y;         // as measured, user directions
  std::vector<double> y_target;  // target-fidelity values used for hypervolume
};

enum class ProposalStatus { pending, measured, expired };
std::string to_string(ProposalStatus s);

struct Proposal {
  std::string id;
  int iter = 0;
  ProposalStatus status = ProposalStatus::pending;
  std::vector<double> x;
  std::optional<double> fidelity;
  double acq_value = 0;
  double acq_weighted = 0;
  std::vector<double> pred_mean, pred_sd;  // user directions; empty when no model
  bool space_filling = false;
};

struct IterationRecord {
  int iter = 0;
  double hv = 0;
  double delta_hv = 0;
  std::optional<double> gd;
  double acq_raw = 0;
  double acq_costweighted = 0;
  std::vector<double> fidelities;
  double cum_cost = 0;
  double wall_ms = 0;
  double step_size = 0;
  std::vector<double> best;  // best target-fidelity value per objective, user directions
};

nlohmann::json to_json(const Proposal& p);
nlohmann::json to_json(const IterationRecord& r);

struct Diagnostics {
  std::vector<double> hv, delta_hv, acq_raw, acq_costweighted, step_size, cum_cost;
  std::vector<std::optional<double>> gd;
  std::map<std::string, std::size_t> fidelity_histogram;
  std::vector<double> best_so_far;
  std::vector<double> distance_to_optimum;

  nlohmann::json to_json() const;
};

enum class ExportKind { observations, proposals, iterations, front };
ExportKind parse_export_kind(const std::string& s);
std::string to_string(ExportKind k);

class Campaign {
 public:
  // Dataset mode reads its starting archive from `store`; benchmark mode
  // ignores it.
  static Campaign create(const CampaignConfig& config, const Datastore* store = nullptr);
  static Campaign from_snapshot(const nlohmann::json& snapshot);

  const CampaignConfig& config() const { return config_; }
  Phase phase() const { return phase_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const std::vector<Proposal>& proposals() const { return proposals_; }
  const std::vector<IterationRecord>& records() const { return records_; }
  const std::optional<Point>& reference_point() const { return reference_; }  // internal convention
  double cumulative_cost() const { return cum_cost_; }
  const ImputeReport& impute_report() const { return impute_report_; }
  std::vector<const Proposal*> pending() const;

  std::vector<Proposal> propose();
  void submit_measurement(const std::string& proposal_id, const std::vector<double>& y,
                          std::optional<double> fidelity = std::nullopt);
  void expire(const std::string& proposal_id);

  // Benchmark mode: propose, evaluate and ingest until one optimization
  // iteration has been recorded. Returns nothing when the campaign stops
  // before recording one.
  std::optional<IterationRecord> step_benchmark();
  void run();

  double hypervolume() const;
  Diagnostics diagnostics() const;
  std::vector<std::size_t> front_indices() const;

  std::string export_csv(ExportKind which) const;
  nlohmann::json summary() const;
  nlohmann::json snapshot() const;

  static std::vector<Observation> import_observations(const std::string& csv, std::size_t input_dim,
                                                      std::size_t objectives);

 private:
  Campaign() = default;

  void check_proposal_phase() const;
  Proposal& find_pending(const std::string& id);
  void resolve_batch_if_done();
  std::vector<double> evaluate_target(const std::vector<double>& x) const;
  std::vector<Point> hv_archive() const;
  std::vector<std::size_t> hv_indices() const;
  void freeze_reference();
  double remaining_budget() const;
  double eval_cost(std::optional<double> s) const;
  std::optional<FidelityDomain> affordable_domain() const;
  std::vector<Proposal> propose_initial(int count);
  std::vector<Proposal> propose_space_filling(int count, const FidelityDomain& domain);
  std::vector<Proposal> propose_model();
  std::string next_proposal_id();
  std::vector<Proposal> issue(std::vector<Proposal> batch);

  CampaignConfig config_;
  Phase phase_ = Phase::configured;
  std::vector<Observation> observations_;
  std::vector<Proposal> proposals_;
  std::vector<IterationRecord> records_;
  std::optional<Point> reference_;
  std::optional<double> hv_baseline_;
  bool init_done_ = false;
  bool batch_init_ = false;
  int init_rounds_ = 0;
  std::uint64_t proposal_counter_ = 0;
  double cum_cost_ = 0;
  double batch_started_ms_ = 0;
  std::size_t batch_begin_ = 0;
  std::vector<double> batch_prev_x_;
  double batch_acq_raw_ = 0, batch_acq_weighted_ = 0;
  ImputeReport impute_report_;
};

}  // namespace pmloop
