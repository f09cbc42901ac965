#include "pmloop/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>

#include "pmloop/benchmarks.hpp"
#include "pmloop/csv.hpp"
#include "pmloop/datastore.hpp"
#include "pmloop/error.hpp"
#include "pmloop/random.hpp"
#include "pmloop/uuid.hpp"

namespace pmloop {

namespace {

using nlohmann::json;

constexpr std::uint64_t kInitStream = 0x1;
constexpr std::uint64_t kFitStream = 0x2;
constexpr std::uint64_t kAcqStream = 0x3;
constexpr std::uint64_t kMcStream = 0x4;
constexpr std::uint64_t kFallbackStream = 0x5;
constexpr std::uint64_t kIdStream = 0x6;
constexpr std::uint64_t kScanSeed = 0x5CA9F0E7;
constexpr int kScanPoints = 100000;
constexpr int kReportSamples = 4096;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(Errc::invalid_config, path + ": " + what, path);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad(path, "out of range");
  return static_cast<int>(v);
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> as_strings(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_string(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::string fmt(double v) { return csv::format_double(v); }

std::optional<std::string> opt_fmt(std::optional<double> v) {
  if (!v) return std::nullopt;
  return fmt(*v);
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// Frozen dense reference front of a benchmark, internal convention.
struct ScanFront {
  std::vector<Point> front;
  Point reference;
};

const ScanFront& scan_front(const std::string& name) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<ScanFront>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[name];
  if (!slot) {
    const auto& def = find_benchmark(name);
    Box box{def.lower, def.upper};
    SobolSequence seq(def.dim, kScanSeed);
    std::vector<Point> pts;
    pts.reserve(kScanPoints);
    for (int i = 0; i < kScanPoints; ++i) {
      const Eigen::VectorXd x = box.from_unit(seq.next());
      pts.push_back(to_internal(eval_benchmark(name, std::vector<double>(x.data(), x.data() + x.size())),
                                def.directions));
    }
    auto s = std::make_unique<ScanFront>();
    for (auto i : pareto_front(pts)) s->front.push_back(pts[i]);
    s->reference = default_reference_point(pts);
    slot = std::move(s);
  }
  return *slot;
}

Eigen::MatrixXd row_matrix(const std::vector<double>& x, std::optional<double> s) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(x.size() + (s ? 1 : 0)));
  for (std::size_t i = 0; i < x.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = x[i];
  if (s) m(0, static_cast<Eigen::Index>(x.size())) = *s;
  return m;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

// ---------------------------------------------------------------- imputation

Imputation Imputation::from_json(const json& j) {
  Imputation m;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "drop_rows")
      m.kind = Kind::drop_rows;
    else if (s == "mean")
      m.kind = Kind::mean;
    else if (s == "median")
      m.kind = Kind::median;
    else
      bad("imputation", "expected drop_rows, mean, median or {\"constant\": v}");
    return m;
  }
  if (j.is_object() && j.size() == 1 && j.contains("constant")) {
    m.kind = Kind::constant;
    m.value = as_number(j.at("constant"), "imputation.constant");
    return m;
  }
  bad("imputation", "expected drop_rows, mean, median or {\"constant\": v}");
}

json Imputation::to_json() const {
  switch (kind) {
    case Kind::drop_rows: return "drop_rows";
    case Kind::mean: return "mean";
    case Kind::median: return "median";
    case Kind::constant: return json{{"constant", value}};
  }
  return "drop_rows";
}

ImputeReport impute(Cells& rows, const Imputation& strategy) {
  ImputeReport report;
  if (rows.empty()) return report;
  if (strategy.kind == Imputation::Kind::drop_rows) {
    const auto before = rows.size();
    std::erase_if(rows, [](const auto& r) { return std::any_of(r.begin(), r.end(), [](auto& c) { return !c; }); });
    report.rows_dropped = before - rows.size();
    return report;
  }
  const std::size_t cols = rows.front().size();
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> present;
    for (const auto& r : rows)
      if (r[c]) present.push_back(*r[c]);
    if (present.size() == rows.size()) continue;
    double fill = strategy.value;
    if (strategy.kind != Imputation::Kind::constant) {
      if (present.empty()) throw Error(Errc::all_missing, "column " + std::to_string(c) + " has no values to impute from");
      if (strategy.kind == Imputation::Kind::mean) {
        fill = std::accumulate(present.begin(), present.end(), 0.0) / static_cast<double>(present.size());
      } else {
        std::sort(present.begin(), present.end());
        const auto n = present.size();
        fill = n % 2 ? present[n / 2] : 0.5 * (present[n / 2 - 1] + present[n / 2]);
      }
    }
    for (auto& r : rows)
      if (!r[c]) {
        r[c] = fill;
        ++report.cells_filled;
      }
  }
  return report;
}

// -------------------------------------------------------------------- config

CampaignConfig CampaignConfig::from_json(const json& j) {
  static const std::vector<std::string> known = {
      "mode",     "benchmark",   "table",       "x_columns",      "y_columns",  "fidelity_column",
      "directions", "bounds",    "fidelity",    "init_fidelity",  "iterations", "init_n",
      "init_method", "acquisition", "q",        "beta",           "mc_samples", "seed",
      "budget",   "imputation",  "kernel",      "reference_point", "record_wall_time"};
  if (!j.is_object()) bad("config", "expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) bad(it.key(), "unknown field");

  CampaignConfig c;
  const std::string mode = j.contains("mode") ? as_string(j["mode"], "mode") : "benchmark";
  if (mode == "benchmark")
    c.mode = CampaignMode::benchmark;
  else if (mode == "dataset")
    c.mode = CampaignMode::dataset;
  else
    bad("mode", "expected benchmark or dataset");

  if (j.contains("iterations")) c.iterations = as_int(j["iterations"], "iterations");
  if (c.iterations < 1) bad("iterations", "must be at least 1");
  if (j.contains("init_n")) c.init_n = as_int(j["init_n"], "init_n");
  if (c.init_n < 2) bad("init_n", "must be at least 2");
  if (j.contains("init_method")) {
    try {
      c.init_method = parse_design_method(as_string(j["init_method"], "init_method"));
    } catch (const Error& e) {
      bad("init_method", e.what());
    }
  }
  if (j.contains("q")) c.q = as_int(j["q"], "q");
  if (c.q < 1) bad("q", "must be at least 1");
  if (j.contains("beta")) c.beta = as_number(j["beta"], "beta");
  if (c.beta < 0) bad("beta", "must be >= 0");
  if (j.contains("mc_samples")) c.mc_samples = as_int(j["mc_samples"], "mc_samples");
  if (c.mc_samples < 1) bad("mc_samples", "must be positive");
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      bad("seed", "expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("budget") && !j["budget"].is_null()) {
    c.budget = as_number(j["budget"], "budget");
    if (!(*c.budget > 0)) bad("budget", "must be positive");
  }
  if (j.contains("imputation")) c.imputation = Imputation::from_json(j["imputation"]);
  if (j.contains("kernel")) {
    const auto k = parse_kernel_family(as_string(j["kernel"], "kernel"));
    if (!k) bad("kernel", "expected matern52 or rbf");
    c.kernel = *k;
  }
  if (j.contains("record_wall_time")) {
    if (!j["record_wall_time"].is_boolean()) bad("record_wall_time", "expected a boolean");
    c.record_wall_time = j["record_wall_time"].get<bool>();
  }
  if (j.contains("fidelity") && !j["fidelity"].is_null()) {
    try {
      c.fidelity = CostModel::from_json(j["fidelity"]);
    } catch (const Error& e) {
      bad("fidelity", e.what());
    }
  }
  if (j.contains("init_fidelity") && !j["init_fidelity"].is_null()) {
    if (!c.fidelity) bad("init_fidelity", "requires a fidelity cost model");
    c.init_fidelity = as_number(j["init_fidelity"], "init_fidelity");
    if (!c.fidelity->valid_level(*c.init_fidelity)) bad("init_fidelity", "not a valid fidelity level");
  }

  std::optional<Box> bounds;
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    if (!b.is_object() || !b.contains("lower") || !b.contains("upper") || b.size() != 2)
      bad("bounds", "expected {\"lower\": [...], \"upper\": [...]}");
    bounds = Box{as_numbers(b["lower"], "bounds.lower"), as_numbers(b["upper"], "bounds.upper")};
    try {
      bounds->validate();
    } catch (const Error& e) {
      bad("bounds", e.what());
    }
  }

  if (c.mode == CampaignMode::benchmark) {
    for (const char* k : {"table", "x_columns", "y_columns", "fidelity_column"})
      if (j.contains(k)) bad(k, "only valid in dataset mode");
    if (!j.contains("benchmark")) bad("benchmark", "required in benchmark mode");
    c.benchmark = as_string(j["benchmark"], "benchmark");
    const BenchmarkDef* def = nullptr;
    try {
      def = &find_benchmark(c.benchmark);
    } catch (const Error& e) {
      bad("benchmark", e.what());
    }
    c.directions = def->directions;
    if (j.contains("directions")) {
      const auto dirs = as_strings(j["directions"], "directions");
      std::vector<Direction> parsed;
      for (const auto& d : dirs) {
        try {
          parsed.push_back(parse_direction(d));
        } catch (const Error& e) {
          bad("directions", e.what());
        }
      }
      if (parsed != def->directions) bad("directions", "must match the benchmark's directions");
    }
    if (bounds) {
      if (bounds->dim() != def->dim) bad("bounds", "dimension does not match the benchmark");
      for (std::size_t i = 0; i < def->dim; ++i)
        if (bounds->lower[i] < def->lower[i] || bounds->upper[i] > def->upper[i])
          bad("bounds", "must lie inside the benchmark domain");
      c.bounds = *bounds;
    } else {
      c.bounds = Box{def->lower, def->upper};
    }
  } else {
    if (j.contains("benchmark")) bad("benchmark", "only valid in benchmark mode");
    if (!j.contains("table")) bad("table", "required in dataset mode");
    c.table = as_string(j["table"], "table");
    if (!j.contains("x_columns")) bad("x_columns", "required in dataset mode");
    if (!j.contains("y_columns")) bad("y_columns", "required in dataset mode");
    c.x_columns = as_strings(j["x_columns"], "x_columns");
    c.y_columns = as_strings(j["y_columns"], "y_columns");
    if (c.x_columns.empty()) bad("x_columns", "needs at least one column");
    if (c.y_columns.empty()) bad("y_columns", "needs at least one column");
    if (!j.contains("directions")) bad("directions", "required in dataset mode");
    for (const auto& d : as_strings(j["directions"], "directions")) {
      try {
        c.directions.push_back(parse_direction(d));
      } catch (const Error& e) {
        bad("directions", e.what());
      }
    }
    if (c.directions.size() != c.y_columns.size()) bad("directions", "needs one entry per y column");
    if (j.contains("fidelity_column") && !j["fidelity_column"].is_null()) {
      if (!c.fidelity) bad("fidelity_column", "requires a fidelity cost model");
      c.fidelity_column = as_string(j["fidelity_column"], "fidelity_column");
    }
    if (!bounds) bad("bounds", "required in dataset mode");
    if (bounds->dim() != c.x_columns.size()) bad("bounds", "needs one entry per x column");
    c.bounds = *bounds;
  }

  const std::size_t m = c.directions.size();
  if (j.contains("acquisition")) {
    try {
      c.acquisition = parse_acq_kind(as_string(j["acquisition"], "acquisition"));
    } catch (const Error& e) {
      bad("acquisition", e.what());
    }
  } else {
    c.acquisition = m == 1 ? AcqKind::ei : (m == 2 && c.q == 1 ? AcqKind::ehvi : AcqKind::qehvi);
  }
  switch (c.acquisition) {
    case AcqKind::ei:
    case AcqKind::pi:
    case AcqKind::lcb:
      if (m != 1) bad("acquisition", to_string(c.acquisition) + " needs exactly one objective");
      break;
    case AcqKind::ehvi:
      if (m != 2) bad("acquisition", "EHVI needs exactly two objectives");
      break;
    case AcqKind::qehvi:
      if (m < 2) bad("acquisition", "qEHVI needs at least two objectives");
      if (c.mc_samples < 128) bad("mc_samples", "qEHVI needs at least 128 samples");
      break;
  }
  if (c.q > 1 && c.acquisition != AcqKind::qehvi) bad("q", "batches larger than one need qEHVI");
  if (c.acquisition == AcqKind::lcb && c.fidelity) bad("acquisition", "LCB scores can be negative and cannot be cost-weighted");

  if (j.contains("reference_point") && !j["reference_point"].is_null()) {
    c.reference_point = as_numbers(j["reference_point"], "reference_point");
    if (c.reference_point->size() != m) bad("reference_point", "needs one entry per objective");
  }
  return c;
}

json CampaignConfig::to_json() const {
  json j;
  j["mode"] = mode == CampaignMode::benchmark ? "benchmark" : "dataset";
  if (mode == CampaignMode::benchmark) {
    j["benchmark"] = benchmark;
  } else {
    j["table"] = table;
    j["x_columns"] = x_columns;
    j["y_columns"] = y_columns;
    if (fidelity_column) j["fidelity_column"] = *fidelity_column;
  }
  auto dirs = json::array();
  for (auto d : directions) dirs.push_back(pmloop::to_string(d));
  j["directions"] = dirs;
  j["bounds"] = {{"lower", bounds.lower}, {"upper", bounds.upper}};
  j["fidelity"] = fidelity ? fidelity->to_json() : json(nullptr);
  if (init_fidelity) j["init_fidelity"] = *init_fidelity;
  j["iterations"] = iterations;
  j["init_n"] = init_n;
  j["init_method"] = pmloop::to_string(init_method);
  j["acquisition"] = pmloop::to_string(acquisition);
  j["q"] = q;
  j["beta"] = beta;
  j["mc_samples"] = mc_samples;
  j["seed"] = seed;
  j["budget"] = budget ? json(*budget) : json(nullptr);
  j["imputation"] = imputation.to_json();
  j["kernel"] = std::string(pmloop::to_string(kernel));
  if (reference_point) j["reference_point"] = *reference_point;
  j["record_wall_time"] = record_wall_time;
  return j;
}

// -------------------------------------------------------------- enum strings

std::string to_string(Phase p) {
  switch (p) {
    case Phase::configured: return "configured";
    case Phase::awaiting_measurement: return "awaiting_measurement";
    case Phase::updating: return "updating";
    case Phase::converged: return "converged";
    case Phase::budget_exhausted: return "budget_exhausted";
  }
  return "configured";
}

namespace {

Phase parse_phase(const std::string& s) {
  for (auto p : {Phase::configured, Phase::awaiting_measurement, Phase::updating, Phase::converged,
                 Phase::budget_exhausted})
    if (to_string(p) == s) return p;
  throw Error(Errc::invalid_argument, "unknown phase '" + s + "'");
}

}  // namespace

std::string to_string(ProposalStatus s) {
  switch (s) {
    case ProposalStatus::pending: return "pending";
    case ProposalStatus::measured: return "measured";
    case ProposalStatus::expired: return "expired";
  }
  return "pending";
}

namespace {

ProposalStatus parse_status(const std::string& s) {
  for (auto p : {ProposalStatus::pending, ProposalStatus::measured, ProposalStatus::expired})
    if (to_string(p) == s) return p;
  throw Error(Errc::invalid_argument, "unknown proposal status '" + s + "'");
}

}  // namespace

std::string to_string(ExportKind k) {
  switch (k) {
    case ExportKind::observations: return "observations";
    case ExportKind::proposals: return "proposals";
    case ExportKind::iterations: return "iterations";
    case ExportKind::front: return "front";
  }
  return "observations";
}

ExportKind parse_export_kind(const std::string& s) {
  for (auto k : {ExportKind::observations, ExportKind::proposals, ExportKind::iterations, ExportKind::front})
    if (to_string(k) == s) return k;
  throw Error(Errc::invalid_argument, "unknown export '" + s + "'", "which");
}

// ------------------------------------------------------------------ campaign

Campaign Campaign::create(const CampaignConfig& config, const Datastore* store) {
  Campaign c;
  c.config_ = CampaignConfig::from_json(config.to_json());
  const auto& cfg = c.config_;
  const auto m = cfg.objectives();

  if (cfg.reference_point) {
    for (double v : *cfg.reference_point)
      if (!std::isfinite(v)) throw Error(Errc::invalid_reference, "reference point must be finite");
    c.reference_ = to_internal(*cfg.reference_point, cfg.directions);
  } else if (cfg.mode == CampaignMode::benchmark) {
    c.reference_ = scan_front(cfg.benchmark).reference;
  }

  if (cfg.mode == CampaignMode::dataset) {
    if (!store) throw Error(Errc::invalid_config, "dataset mode needs a datastore", "table");
    if (!store->has_table(cfg.table)) throw Error(Errc::table_missing, "no table named '" + cfg.table + "'", "table");
    const auto schema = store->schema(cfg.table);
    std::vector<std::string> cols = cfg.x_columns;
    cols.insert(cols.end(), cfg.y_columns.begin(), cfg.y_columns.end());
    if (cfg.fidelity_column) cols.push_back(*cfg.fidelity_column);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto* f = schema.find(cols[i]);
      const std::string path = i < cfg.x_columns.size()                        ? "x_columns"
                               : i < cfg.x_columns.size() + cfg.y_columns.size() ? "y_columns"
                                                                                 : "fidelity_column";
      if (!f) throw Error(Errc::invalid_config, path + ": no column '" + cols[i] + "'", path);
      if (f->dtype != DType::real) throw Error(Errc::invalid_config, path + ": column '" + cols[i] + "' is not real", path);
    }

    Cells cells;
    std::vector<std::optional<double>> fid;
    QueryRequest req;
    req.columns = cols;
    req.num_rows = 1000;
    for (;;) {
      const auto page = store->query(cfg.table, req);
      for (const auto& row : page.rows) {
        std::vector<std::optional<double>> r;
        for (std::size_t k = 0; k < row.size(); ++k) {
          const auto* d = std::get_if<double>(&row[k]);
          std::optional<double> v;
          if (d && std::isfinite(*d)) v = *d;
          if (cfg.fidelity_column && k + 1 == row.size())
            fid.push_back(v);
          else
            r.push_back(v);
        }
        cells.push_back(std::move(r));
      }
      if (!page.cursor) break;
      req.cursor = page.cursor;
    }
    // Keep the fidelity cell attached to its row through drop_rows.
    const std::size_t d = cfg.x_columns.size();
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].push_back(cfg.fidelity_column ? fid[i] : 1.0);
    {
      Cells xy = cells;
      for (auto& r : xy) r.pop_back();
      if (cfg.imputation.kind == Imputation::Kind::drop_rows) {
        std::erase_if(cells, [&](const auto& r) {
          return std::any_of(r.begin(), r.end() - 1, [](auto& v) { return !v; });
        });
        c.impute_report_.rows_dropped = xy.size() - cells.size();
      } else {
        c.impute_report_ = impute(xy, cfg.imputation);
        for (std::size_t i = 0; i < cells.size(); ++i)
          for (std::size_t k = 0; k < xy[i].size(); ++k) cells[i][k] = xy[i][k];
      }
    }
    for (const auto& r : cells) {
      Observation o;
      for (std::size_t k = 0; k < d; ++k) o.x.push_back(*r[k]);
      for (std::size_t k = 0; k < m; ++k) o.y.push_back(*r[d + k]);
      o.y_target = o.y;
      if (cfg.fidelity) {
        const double s = r.back().value_or(1.0);
        if (!cfg.fidelity->valid_level(s))
          throw Error(Errc::invalid_config, "fidelity_column: value " + fmt(s) + " is not a configured level",
                      "fidelity_column");
        o.fidelity = s;
      }
      c.observations_.push_back(std::move(o));
    }
  }
  return c;
}

std::vector<const Proposal*> Campaign::pending() const {
  std::vector<const Proposal*> out;
  for (const auto& p : proposals_)
    if (p.status == ProposalStatus::pending) out.push_back(&p);
  return out;
}

void Campaign::check_proposal_phase() const {
  if (phase_ != Phase::configured && phase_ != Phase::updating)
    throw Error(Errc::invalid_phase, "cannot propose while the campaign is " + to_string(phase_));
}

std::string Campaign::next_proposal_id() {
  UuidGenerator gen(derive_seed(config_.seed, kIdStream, proposal_counter_++));
  return gen.next().str();
}

double Campaign::eval_cost(std::optional<double> s) const {
  if (!config_.fidelity) return 1.0;
  return config_.fidelity->cost(s.value_or(1.0));
}

double Campaign::remaining_budget() const {
  if (!config_.budget) return std::numeric_limits<double>::infinity();
  return *config_.budget - cum_cost_;
}

std::optional<FidelityDomain> Campaign::affordable_domain() const {
  auto fits = [&](double cost) { return !config_.budget || cum_cost_ + cost <= *config_.budget; };
  if (!config_.fidelity) {
    if (!fits(1.0)) return std::nullopt;
    return FidelityDomain::none();
  }
  const auto& cm = *config_.fidelity;
  if (cm.mode == CostModel::Mode::discrete) {
    std::vector<double> levels;
    for (double s : cm.levels)
      if (fits(cm.cost(s))) levels.push_back(s);
    if (levels.empty()) return std::nullopt;
    return FidelityDomain::discrete(levels);
  }
  if (!fits(cm.cost(0.0))) return std::nullopt;
  double hi = 1.0;
  if (!fits(cm.cost(1.0))) {
    hi = std::min(1.0, std::pow(remaining_budget() - cm.c0, 1.0 / cm.exponent));
    while (hi > 0 && !fits(cm.cost(hi))) hi = std::nextafter(hi, 0.0);
  }
  return FidelityDomain::range(0.0, hi);
}

std::vector<double> Campaign::evaluate_target(const std::vector<double>& x) const {
  return eval_benchmark(config_.benchmark, x);
}

std::vector<std::size_t> Campaign::hv_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& o = observations_[i];
    if (config_.mode == CampaignMode::benchmark || !o.fidelity || *o.fidelity == 1.0) idx.push_back(i);
  }
  return idx;
}

std::vector<Point> Campaign::hv_archive() const {
  std::vector<Point> pts;
  for (auto i : hv_indices()) pts.push_back(to_internal(observations_[i].y_target, config_.directions));
  return pts;
}

void Campaign::freeze_reference() {
  if (reference_) return;
  auto pts = hv_archive();
  if (pts.empty())
    for (const auto& o : observations_) pts.push_back(to_internal(o.y, config_.directions));
  if (!pts.empty()) reference_ = default_reference_point(pts);
}

double Campaign::hypervolume() const {
  if (!reference_) return 0.0;
  const auto pts = hv_archive();
  if (pts.empty()) return 0.0;
  return pmloop::hypervolume(pts, *reference_).value;
}

std::vector<std::size_t> Campaign::front_indices() const {
  const auto idx = hv_indices();
  if (idx.empty()) return {};
  std::vector<std::size_t> out;
  for (auto k : pareto_front(hv_archive())) out.push_back(idx[k]);
  return out;
}

std::vector<Proposal> Campaign::issue(std::vector<Proposal> batch) {
  if (batch.empty()) {
    phase_ = Phase::budget_exhausted;
    return batch;
  }
  std::stable_sort(batch.begin(), batch.end(),
                   [](const Proposal& a, const Proposal& b) { return a.acq_value > b.acq_value; });
  for (auto& p : batch) {
    p.id = next_proposal_id();
    proposals_.push_back(p);
  }
  batch_started_ms_ = config_.record_wall_time ? now_ms() : 0.0;
  phase_ = Phase::awaiting_measurement;
  return batch;
}

std::vector<Proposal> Campaign::propose_initial(int count) {
  batch_init_ = true;
  std::optional<double> s;
  if (config_.fidelity) s = config_.init_fidelity.value_or(1.0);
  const double cost = eval_cost(s);
  int affordable = count;
  if (config_.budget) {
    affordable = 0;
    double spent = cum_cost_;
    while (affordable < count && spent + cost <= *config_.budget) {
      spent += cost;
      ++affordable;
    }
  }
  const auto x = initial_design(config_.bounds, count, config_.init_method,
                                derive_seed(config_.seed, kInitStream, static_cast<std::uint64_t>(init_rounds_++)));
  std::vector<Proposal> batch;
  for (int i = 0; i < affordable; ++i) {
    Proposal p;
    p.iter = 0;
    p.x = to_vec(x.row(i).transpose());
    p.fidelity = s;
    p.space_filling = true;
    batch.push_back(std::move(p));
  }
  return issue(std::move(batch));
}

std::vector<Proposal> Campaign::propose_space_filling(int count, const FidelityDomain& domain) {
  const int iter = static_cast<int>(records_.size()) + 1;
  SobolSequence seq(config_.input_dim(), derive_seed(config_.seed, kFallbackStream, static_cast<std::uint64_t>(iter)));
  std::optional<double> s;
  if (domain.active) s = domain.continuous ? domain.upper : domain.levels.back();
  std::vector<Proposal> batch;
  double spent = cum_cost_;
  for (int i = 0; i < count; ++i) {
    const double cost = eval_cost(s);
    if (config_.budget && spent + cost > *config_.budget) break;
    spent += cost;
    Proposal p;
    p.iter = iter;
    p.x = to_vec(config_.bounds.from_unit(seq.next()));
    p.fidelity = s;
    p.space_filling = true;
    batch.push_back(std::move(p));
  }
  batch_acq_raw_ = 0;
  batch_acq_weighted_ = 0;
  return issue(std::move(batch));
}

std::vector<Proposal> Campaign::propose_model() {
  batch_init_ = false;
  const auto domain = affordable_domain();
  if (!domain) return issue({});
  freeze_reference();

  const auto& cfg = config_;
  const int iter = static_cast<int>(records_.size()) + 1;
  const std::size_t d = cfg.input_dim(), m = cfg.objectives();
  const bool fid = cfg.fidelity.has_value();
  const auto n = static_cast<Eigen::Index>(observations_.size());
  const auto width = static_cast<Eigen::Index>(d + (fid ? 1 : 0));

  Eigen::MatrixXd X(n, width);
  std::vector<Eigen::VectorXd> Y(m, Eigen::VectorXd(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = observations_[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < d; ++c) X(i, static_cast<Eigen::Index>(c)) = o.x[c];
    if (fid) X(i, static_cast<Eigen::Index>(d)) = o.fidelity.value_or(1.0);
    const auto yi = to_internal(o.y, cfg.directions);
    for (std::size_t k = 0; k < m; ++k) Y[k][i] = yi[k];
  }
  FitOptions fo;
  fo.family = cfg.kernel;
  fo.lower = cfg.bounds.lower;
  fo.upper = cfg.bounds.upper;
  if (fid) {
    fo.lower->push_back(0.0);
    fo.upper->push_back(1.0);
  }
  std::vector<GpModel> models;
  bool degenerate = false;
  for (std::size_t k = 0; k < m; ++k) {
    fo.seed = derive_seed(cfg.seed, kFitStream, static_cast<std::uint64_t>(iter) * 16 + k);
    models.push_back(GpModel::fit(X, Y[k], fo));
    degenerate = degenerate || models.back().degenerate();
  }
  if (degenerate) return propose_space_filling(cfg.q, *domain);

  std::vector<const GpModel*> mp;
  for (const auto& g : models) mp.push_back(&g);

  auto predict = [&](const std::vector<double>& x, std::optional<double> s, Point& mean, Point& sd) {
    const auto row = row_matrix(x, s);
    mean.resize(m);
    sd.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto p = mp[k]->predict(row);
      mean[k] = p.mean[0];
      sd[k] = std::sqrt(std::max(p.variance[0], 0.0));
    }
  };

  // Improvement is always judged against target-fidelity predictions.
  std::vector<Point> front;
  double incumbent = -std::numeric_limits<double>::infinity();
  if (fid) {
    Point mean, sd;
    for (const auto& o : observations_) {
      predict(o.x, 1.0, mean, sd);
      front.push_back(mean);
    }
    bool any_target = false;
    for (const auto& o : observations_)
      if (o.fidelity && *o.fidelity == 1.0) {
        incumbent = std::max(incumbent, to_internal(o.y, cfg.directions)[0]);
        any_target = true;
      }
    if (!any_target)
      for (const auto& p : front) incumbent = std::max(incumbent, p[0]);
  } else {
    for (const auto& o : observations_) {
      front.push_back(to_internal(o.y, cfg.directions));
      incumbent = std::max(incumbent, front.back()[0]);
    }
  }

  auto cost_of = [&](const Candidate& c) { return fid ? cfg.fidelity->cost(*c.fidelity) : 1.0; };
  auto raw_score = [&](const std::vector<double>& x, std::optional<double> s) {
    Point mean, sd;
    predict(x, s, mean, sd);
    switch (cfg.acquisition) {
      case AcqKind::ei: return expected_improvement(mean[0], sd[0], incumbent);
      case AcqKind::pi: return probability_of_improvement(mean[0], sd[0], incumbent);
      case AcqKind::lcb: return -lower_confidence_bound(-mean[0], sd[0], cfg.beta);
      case AcqKind::ehvi: return ehvi_exact(mean, sd, front, *reference_);
      case AcqKind::qehvi: break;
    }
    return 0.0;
  };
  AcquisitionSpec spec{cfg.acquisition, cfg.q, cfg.beta, cfg.mc_samples,
                       derive_seed(cfg.seed, kMcStream, static_cast<std::uint64_t>(iter))};
  auto batch_matrix = [&](const std::vector<Candidate>& b) {
    Eigen::MatrixXd xb(static_cast<Eigen::Index>(b.size()), width);
    for (std::size_t i = 0; i < b.size(); ++i) {
      xb.row(static_cast<Eigen::Index>(i)).head(static_cast<Eigen::Index>(d)) = b[i].x.transpose();
      if (fid) xb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = *b[i].fidelity;
    }
    return xb;
  };

  BatchScore score = [&](const std::vector<Candidate>& b) {
    if (cfg.acquisition == AcqKind::qehvi) {
      double total_cost = 0;
      for (const auto& c : b) total_cost += cost_of(c);
      const double v = qehvi_mc(mp, batch_matrix(b), front, *reference_, spec);
      return fid ? v / total_cost : v;
    }
    const auto& c = b.back();
    const double v = raw_score(to_vec(c.x), c.fidelity);
    return fid ? v / cost_of(c) : v;
  };

  const auto found = optimize_acquisition(score, cfg.bounds, cfg.q, *domain,
                                          derive_seed(cfg.seed, kAcqStream, static_cast<std::uint64_t>(iter)));

  AcquisitionSpec report = spec;
  report.mc_samples = std::max(kReportSamples, cfg.mc_samples);
  std::vector<Proposal> batch;
  std::vector<Candidate> kept;
  double spent = cum_cost_;
  for (const auto& c : found) {
    const double cost = cost_of(c);
    if (cfg.budget && spent + cost > *cfg.budget) continue;
    spent += cost;
    kept.push_back(c);
    Proposal p;
    p.iter = iter;
    p.x = to_vec(c.x);
    p.fidelity = c.fidelity;
    if (cfg.acquisition == AcqKind::qehvi)
      p.acq_value = qehvi_mc(mp, batch_matrix({c}), front, *reference_, report);
    else
      p.acq_value = raw_score(p.x, p.fidelity);
    p.acq_weighted = fid ? p.acq_value / cost : p.acq_value;
    Point mean, sd;
    predict(p.x, p.fidelity, mean, sd);
    for (std::size_t k = 0; k < m; ++k) {
      p.pred_mean.push_back(cfg.directions[k] == Direction::minimize ? -mean[k] : mean[k]);
      p.pred_sd.push_back(sd[k]);
    }
    batch.push_back(std::move(p));
  }
  if (!batch.empty()) {
    if (cfg.acquisition == AcqKind::qehvi) {
      double total_cost = 0;
      for (const auto& c : kept) total_cost += cost_of(c);
      batch_acq_raw_ = qehvi_mc(mp, batch_matrix(kept), front, *reference_, report);
      batch_acq_weighted_ = fid ? batch_acq_raw_ / total_cost : batch_acq_raw_;
    } else {
      const auto top = std::max_element(batch.begin(), batch.end(), [](const Proposal& a, const Proposal& b) {
        return a.acq_value < b.acq_value;
      });
      batch_acq_raw_ = top->acq_value;
      batch_acq_weighted_ = top->acq_weighted;
    }
  }
  return issue(std::move(batch));
}

std::vector<Proposal> Campaign::propose() {
  check_proposal_phase();
  batch_begin_ = proposals_.size();
  batch_prev_x_ = observations_.empty() ? std::vector<double>{} : observations_.back().x;
  if (!init_done_) {
    const int need = config_.init_n - static_cast<int>(observations_.size());
    if (need > 0) return propose_initial(need);
    init_done_ = true;
    freeze_reference();
    hv_baseline_ = hypervolume();
  }
  return propose_model();
}

Proposal& Campaign::find_pending(const std::string& id) {
  for (auto& p : proposals_)
    if (p.id == id) {
      if (p.status == ProposalStatus::measured)
        throw Error(Errc::already_measured, "proposal " + id + " was already measured", "proposal_id");
      if (p.status == ProposalStatus::expired)
        throw Error(Errc::already_measured, "proposal " + id + " has expired", "proposal_id");
      return p;
    }
  throw Error(Errc::unknown_proposal, "no proposal with id " + id, "proposal_id");
}

void Campaign::submit_measurement(const std::string& proposal_id, const std::vector<double>& y,
                                  std::optional<double> fidelity) {
  if (phase_ != Phase::awaiting_measurement)
    throw Error(Errc::invalid_phase, "no measurements are expected while the campaign is " + to_string(phase_));
  Proposal& p = find_pending(proposal_id);
  if (y.size() != config_.objectives())
    throw Error(Errc::arity_mismatch,
                "expected " + std::to_string(config_.objectives()) + " objective values, got " + std::to_string(y.size()),
                "y");
  for (double v : y)
    if (!std::isfinite(v)) throw Error(Errc::non_finite_input, "objective values must be finite", "y");
  std::optional<double> s;
  if (config_.fidelity) {
    s = fidelity ? fidelity : p.fidelity;
    if (!s) s = 1.0;
    if (!config_.fidelity->valid_level(*s))
      throw Error(Errc::unknown_fidelity, "fidelity " + fmt(*s) + " is not a configured level", "fidelity");
  } else if (fidelity && *fidelity != 1.0) {
    throw Error(Errc::unknown_fidelity, "this campaign has no fidelity levels", "fidelity");
  }
  const double cost = eval_cost(s);
  if (config_.budget && cum_cost_ + cost > *config_.budget)
    throw Error(Errc::invalid_argument, "measurement at fidelity " + fmt(s.value_or(1.0)) + " would exceed the budget",
                "fidelity");

  Observation o;
  o.iter = p.iter;
  o.proposal_id = p.id;
  o.x = p.x;
  o.fidelity = s;
  o.cost = cost;
  o.y = y;
  o.y_target = config_.mode == CampaignMode::benchmark && s && *s != 1.0 ? evaluate_target(p.x) : y;
  observations_.push_back(std::move(o));
  cum_cost_ += cost;
  p.status = ProposalStatus::measured;
  resolve_batch_if_done();
}

void Campaign::expire(const std::string& proposal_id) {
  if (phase_ != Phase::awaiting_measurement)
    throw Error(Errc::invalid_phase, "nothing can expire while the campaign is " + to_string(phase_));
  find_pending(proposal_id).status = ProposalStatus::expired;
  resolve_batch_if_done();
}

void Campaign::resolve_batch_if_done() {
  for (std::size_t i = batch_begin_; i < proposals_.size(); ++i)
    if (proposals_[i].status == ProposalStatus::pending) return;

  if (batch_init_) {
    if (static_cast<int>(observations_.size()) >= config_.init_n) {
      init_done_ = true;
      freeze_reference();
      hv_baseline_ = hypervolume();
    }
  } else {
    IterationRecord r;
    r.iter = static_cast<int>(records_.size()) + 1;
    r.hv = hypervolume();
    const double prev = records_.empty() ? hv_baseline_.value_or(0.0) : records_.back().hv;
    r.delta_hv = r.hv - prev;
    if (config_.mode == CampaignMode::benchmark) {
      std::vector<Point> front;
      const auto pts = hv_archive();
      if (!pts.empty()) {
        for (auto k : pareto_front(pts)) front.push_back(pts[k]);
        r.gd = generational_distance(front, scan_front(config_.benchmark).front);
      }
    }
    r.acq_raw = batch_acq_raw_;
    r.acq_costweighted = batch_acq_weighted_;
    const Proposal* top = nullptr;
    for (std::size_t i = batch_begin_; i < proposals_.size(); ++i) {
      const auto& p = proposals_[i];
      if (!top) top = &p;
      if (p.status == ProposalStatus::measured) r.fidelities.push_back(p.fidelity.value_or(1.0));
    }
    r.cum_cost = cum_cost_;
    r.wall_ms = config_.record_wall_time ? now_ms() - batch_started_ms_ : 0.0;
    if (top && !batch_prev_x_.empty()) {
      double s2 = 0;
      for (std::size_t c = 0; c < top->x.size(); ++c) s2 += (top->x[c] - batch_prev_x_[c]) * (top->x[c] - batch_prev_x_[c]);
      r.step_size = std::sqrt(s2);
    }
    const auto idx = hv_indices();
    for (std::size_t k = 0; k < config_.objectives(); ++k) {
      const bool mini = config_.directions[k] == Direction::minimize;
      double best = mini ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      for (auto i : idx) best = mini ? std::min(best, observations_[i].y_target[k]) : std::max(best, observations_[i].y_target[k]);
      r.best.push_back(best);
    }
    records_.push_back(std::move(r));
  }

  if (static_cast<int>(records_.size()) >= config_.iterations) {
    phase_ = Phase::converged;
    return;
  }
  phase_ = Phase::updating;
  bool affordable = affordable_domain().has_value();
  if (affordable && !init_done_ && config_.fidelity) {
    const double c = eval_cost(config_.init_fidelity.value_or(1.0));
    affordable = !config_.budget || cum_cost_ + c <= *config_.budget;
  }
  if (!affordable) phase_ = Phase::budget_exhausted;
}

std::optional<IterationRecord> Campaign::step_benchmark() {
  if (config_.mode != CampaignMode::benchmark)
    throw Error(Errc::invalid_phase, "step is only available in benchmark mode");
  for (;;) {
    const auto batch = propose();
    if (batch.empty()) return std::nullopt;
    const bool init = batch_init_;
    for (const auto& p : batch) {
      std::vector<double> y;
      if (config_.fidelity)
        y = eval_fidelity(config_.benchmark, p.x, p.fidelity.value_or(1.0), *config_.fidelity).values;
      else
        y = eval_benchmark(config_.benchmark, p.x);
      submit_measurement(p.id, y, p.fidelity);
    }
    if (!init) return records_.back();
    if (phase_ != Phase::updating) return std::nullopt;
  }
}

void Campaign::run() {
  if (config_.mode != CampaignMode::benchmark)
    throw Error(Errc::invalid_phase, "run is only available in benchmark mode");
  while (phase_ == Phase::configured || phase_ == Phase::updating) step_benchmark();
}

Diagnostics Campaign::diagnostics() const {
  if (records_.empty()) throw Error(Errc::empty_log, "no iterations recorded yet");
  Diagnostics d;
  for (const auto& r : records_) {
    d.hv.push_back(r.hv);
    d.delta_hv.push_back(r.delta_hv);
    d.gd.push_back(r.gd);
    d.acq_raw.push_back(r.acq_raw);
    d.acq_costweighted.push_back(r.acq_costweighted);
    d.step_size.push_back(r.step_size);
    d.cum_cost.push_back(r.cum_cost);
  }
  for (const auto& o : observations_) {
    if (o.proposal_id.empty()) continue;
    ++d.fidelity_histogram[o.fidelity ? fmt(*o.fidelity) : "target"];
  }
  if (config_.objectives() == 1) {
    std::optional<double> optimum;
    if (config_.mode == CampaignMode::benchmark) optimum = find_benchmark(config_.benchmark).optimum;
    for (const auto& r : records_) {
      d.best_so_far.push_back(r.best[0]);
      if (optimum) d.distance_to_optimum.push_back(std::abs(r.best[0] - *optimum));
    }
  }
  return d;
}

json Diagnostics::to_json() const {
  json gdj = json::array();
  bool any_gd = false;
  for (const auto& g : gd) {
    gdj.push_back(optional_json(g));
    any_gd = any_gd || g.has_value();
  }
  json j{{"hv", hv},
         {"delta_hv", delta_hv},
         {"acq_raw", acq_raw},
         {"acq_costweighted", acq_costweighted},
         {"step_size", step_size},
         {"cum_cost", cum_cost},
         {"fidelity_histogram", fidelity_histogram}};
  if (any_gd) j["gd"] = gdj;
  if (!best_so_far.empty()) j["best_so_far"] = best_so_far;
  if (!distance_to_optimum.empty()) j["distance_to_optimum"] = distance_to_optimum;
  return j;
}

std::string Campaign::export_csv(ExportKind which) const {
  const std::size_t d = config_.input_dim(), m = config_.objectives();
  std::string out;
  std::vector<std::optional<std::string>> row;
  auto header = [&](std::initializer_list<std::string> before, std::initializer_list<std::pair<std::string, std::size_t>> groups,
                    std::initializer_list<std::string> after = {}) {
    row.clear();
    for (const auto& h : before) row.emplace_back(h);
    for (const auto& [prefix, count] : groups)
      for (std::size_t i = 1; i <= count; ++i) row.emplace_back(prefix + std::to_string(i));
    for (const auto& h : after) row.emplace_back(h);
    csv::write_row(out, row);
  };

  switch (which) {
    case ExportKind::observations: {
      row = {"iter", "proposal_id"};
      for (std::size_t i = 1; i <= d; ++i) row.emplace_back("x_" + std::to_string(i));
      row.emplace_back("fidelity");
      row.emplace_back("cost");
      for (std::size_t i = 1; i <= m; ++i) row.emplace_back("y_" + std::to_string(i));
      csv::write_row(out, row);
      for (const auto& o : observations_) {
        row.clear();
        row.emplace_back(std::to_string(o.iter));
        row.push_back(o.proposal_id.empty() ? std::nullopt : std::optional<std::string>(o.proposal_id));
        for (double v : o.x) row.emplace_back(fmt(v));
        row.push_back(opt_fmt(o.fidelity));
        row.emplace_back(fmt(o.cost));
        for (double v : o.y) row.emplace_back(fmt(v));
        csv::write_row(out, row);
      }
      break;
    }
    case ExportKind::proposals: {
      header({"id", "status"}, {{"x_", d}});
      out.erase(out.size() - 2);  // reopen the header line
      row.clear();
      std::string tail;
      std::vector<std::optional<std::string>> rest{"fidelity", "acq_value"};
      for (std::size_t i = 1; i <= m; ++i) rest.emplace_back("pred_mean_" + std::to_string(i));
      for (std::size_t i = 1; i <= m; ++i) rest.emplace_back("pred_sd_" + std::to_string(i));
      csv::write_row(tail, rest);
      out += "," + tail;
      for (const auto& p : proposals_) {
        row.clear();
        row.emplace_back(p.id);
        row.emplace_back(to_string(p.status));
        for (double v : p.x) row.emplace_back(fmt(v));
        row.push_back(opt_fmt(p.fidelity));
        row.emplace_back(fmt(p.acq_value));
        for (std::size_t k = 0; k < m; ++k)
          row.push_back(k < p.pred_mean.size() ? std::optional<std::string>(fmt(p.pred_mean[k])) : std::nullopt);
        for (std::size_t k = 0; k < m; ++k)
          row.push_back(k < p.pred_sd.size() ? std::optional<std::string>(fmt(p.pred_sd[k])) : std::nullopt);
        csv::write_row(out, row);
      }
      break;
    }
    case ExportKind::iterations: {
      header({"iter", "hv", "delta_hv", "gd", "acq_raw", "acq_costweighted", "fidelity", "cum_cost", "wall_ms"}, {});
      for (const auto& r : records_) {
        std::optional<std::string> fid;
        if (config_.fidelity) {
          std::string s;
          for (std::size_t i = 0; i < r.fidelities.size(); ++i) s += (i ? ";" : "") + fmt(r.fidelities[i]);
          fid = s;
        }
        row = {std::to_string(r.iter), fmt(r.hv), fmt(r.delta_hv), opt_fmt(r.gd), fmt(r.acq_raw),
               fmt(r.acq_costweighted), fid, fmt(r.cum_cost), fmt(r.wall_ms)};
        csv::write_row(out, row);
      }
      break;
    }
    case ExportKind::front: {
      header({}, {{"x_", d}, {"y_", m}});
      for (auto i : front_indices()) {
        row.clear();
        for (double v : observations_[i].x) row.emplace_back(fmt(v));
        for (double v : observations_[i].y_target) row.emplace_back(fmt(v));
        csv::write_row(out, row);
      }
      break;
    }
  }
  return out;
}

std::vector<Observation> Campaign::import_observations(const std::string& text, std::size_t input_dim,
                                                       std::size_t objectives) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(Errc::invalid_argument, "observations CSV is empty");
  const std::size_t width = 2 + input_dim + 2 + objectives;
  std::vector<std::string> expected{"iter", "proposal_id"};
  for (std::size_t i = 1; i <= input_dim; ++i) expected.push_back("x_" + std::to_string(i));
  expected.push_back("fidelity");
  expected.push_back("cost");
  for (std::size_t i = 1; i <= objectives; ++i) expected.push_back("y_" + std::to_string(i));
  if (rows[0].size() != width) throw Error(Errc::invalid_argument, "observations CSV header has the wrong width");
  for (std::size_t i = 0; i < width; ++i)
    if (rows[0][i].text != expected[i])
      throw Error(Errc::invalid_argument, "observations CSV header: expected '" + expected[i] + "'");

  auto number = [](const csv::Cell& c, std::size_t line) {
    auto v = csv::parse_double(c.text);
    if (!v) throw Error(Errc::invalid_argument, "observations CSV line " + std::to_string(line) + ": bad number");
    return *v;
  };
  std::vector<Observation> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != width)
      throw Error(Errc::invalid_argument, "observations CSV line " + std::to_string(r + 1) + " has the wrong width");
    Observation o;
    o.iter = static_cast<int>(number(row[0], r + 1));
    o.proposal_id = row[1].text;
    for (std::size_t i = 0; i < input_dim; ++i) o.x.push_back(number(row[2 + i], r + 1));
    if (!row[2 + input_dim].is_null()) o.fidelity = number(row[2 + input_dim], r + 1);
    o.cost = number(row[3 + input_dim], r + 1);
    for (std::size_t k = 0; k < objectives; ++k) o.y.push_back(number(row[4 + input_dim + k], r + 1));
    o.y_target = o.y;
    out.push_back(std::move(o));
  }
  return out;
}

json Campaign::summary() const {
  json j;
  j["mode"] = config_.mode == CampaignMode::benchmark ? "benchmark" : "dataset";
  if (config_.mode == CampaignMode::benchmark)
    j["benchmark"] = config_.benchmark;
  else
    j["table"] = config_.table;
  j["phase"] = to_string(phase_);
  std::size_t evaluations = 0;
  for (const auto& o : observations_) evaluations += !o.proposal_id.empty();
  j["evaluations"] = evaluations;
  j["iterations"] = records_.size();
  j["hypervolume"] = hypervolume();
  j["total_cost"] = cum_cost_;
  if (reference_) {
    Point r = *reference_;
    for (std::size_t k = 0; k < r.size(); ++k)
      if (config_.directions[k] == Direction::minimize) r[k] = -r[k];
    j["reference_point"] = r;
  }
  const auto front = front_indices();
  j["front_size"] = front.size();
  if (!records_.empty()) j["best"] = records_.back().best;
  if (config_.objectives() == 1 && !front.empty()) {
    j["best_x"] = observations_[front.front()].x;
    j["best_value"] = observations_[front.front()].y_target[0];
  }
  return j;
}

json to_json(const Proposal& p) {
  return {{"id", p.id},
          {"iter", p.iter},
          {"status", to_string(p.status)},
          {"x", p.x},
          {"fidelity", optional_json(p.fidelity)},
          {"acq_value", p.acq_value},
          {"acq_weighted", p.acq_weighted},
          {"pred_mean", p.pred_mean},
          {"pred_sd", p.pred_sd},
          {"space_filling", p.space_filling}};
}

json to_json(const IterationRecord& r) {
  return {{"iter", r.iter},
          {"hv", r.hv},
          {"delta_hv", r.delta_hv},
          {"gd", optional_json(r.gd)},
          {"acq_raw", r.acq_raw},
          {"acq_costweighted", r.acq_costweighted},
          {"fidelities", r.fidelities},
          {"cum_cost", r.cum_cost},
          {"wall_ms", r.wall_ms},
          {"step_size", r.step_size},
          {"best", r.best}};
}

json Campaign::snapshot() const {
  json obs = json::array();
  for (const auto& o : observations_)
    obs.push_back({{"iter", o.iter},
                   {"proposal_id", o.proposal_id},
                   {"x", o.x},
                   {"fidelity", optional_json(o.fidelity)},
                   {"cost", o.cost},
                   {"y", o.y},
                   {"y_target", o.y_target}});
  json props = json::array();
  for (const auto& p : proposals_) props.push_back(to_json(p));
  json recs = json::array();
  for (const auto& r : records_) recs.push_back(to_json(r));
  return {{"format", "pmloop-campaign"},
          {"version", 1},
          {"config", config_.to_json()},
          {"phase", to_string(phase_)},
          {"observations", obs},
          {"proposals", props},
          {"records", recs},
          {"reference", reference_ ? json(*reference_) : json(nullptr)},
          {"hv_baseline", optional_json(hv_baseline_)},
          {"init_done", init_done_},
          {"batch_init", batch_init_},
          {"batch_begin", batch_begin_},
          {"batch_prev_x", batch_prev_x_},
          {"batch_acq_raw", batch_acq_raw_},
          {"batch_acq_weighted", batch_acq_weighted_},
          {"init_rounds", init_rounds_},
          {"proposal_counter", proposal_counter_},
          {"cum_cost", cum_cost_},
          {"impute", {{"rows_dropped", impute_report_.rows_dropped}, {"cells_filled", impute_report_.cells_filled}}}};
}

Campaign Campaign::from_snapshot(const json& s) {
  try {
    if (!s.is_object() || s.value("format", "") != "pmloop-campaign" || s.value("version", 0) != 1)
      throw Error(Errc::invalid_argument, "not a campaign snapshot");
    Campaign c;
    c.config_ = CampaignConfig::from_json(s.at("config"));
    c.phase_ = parse_phase(s.at("phase").get<std::string>());
    for (const auto& o : s.at("observations")) {
      Observation ob;
      ob.iter = o.at("iter").get<int>();
      ob.proposal_id = o.at("proposal_id").get<std::string>();
      ob.x = o.at("x").get<std::vector<double>>();
      ob.fidelity = optional_from(o.at("fidelity"));
      ob.cost = o.at("cost").get<double>();
      ob.y = o.at("y").get<std::vector<double>>();
      ob.y_target = o.at("y_target").get<std::vector<double>>();
      c.observations_.push_back(std::move(ob));
    }
    for (const auto& p : s.at("proposals")) {
      Proposal pr;
      pr.id = p.at("id").get<std::string>();
      pr.iter = p.at("iter").get<int>();
      pr.status = parse_status(p.at("status").get<std::string>());
      pr.x = p.at("x").get<std::vector<double>>();
      pr.fidelity = optional_from(p.at("fidelity"));
      pr.acq_value = p.at("acq_value").get<double>();
      pr.acq_weighted = p.at("acq_weighted").get<double>();
      pr.pred_mean = p.at("pred_mean").get<std::vector<double>>();
      pr.pred_sd = p.at("pred_sd").get<std::vector<double>>();
      pr.space_filling = p.at("space_filling").get<bool>();
      c.proposals_.push_back(std::move(pr));
    }
    for (const auto& r : s.at("records")) {
      IterationRecord rec;
      rec.iter = r.at("iter").get<int>();
      rec.hv = r.at("hv").get<double>();
      rec.delta_hv = r.at("delta_hv").get<double>();
      rec.gd = optional_from(r.at("gd"));
      rec.acq_raw = r.at("acq_raw").get<double>();
      rec.acq_costweighted = r.at("acq_costweighted").get<double>();
      rec.fidelities = r.at("fidelities").get<std::vector<double>>();
      rec.cum_cost = r.at("cum_cost").get<double>();
      rec.wall_ms = r.at("wall_ms").get<double>();
      rec.step_size = r.at("step_size").get<double>();
      rec.best = r.at("best").get<std::vector<double>>();
      c.records_.push_back(std::move(rec));
    }
    if (!s.at("reference").is_null()) c.reference_ = s.at("reference").get<std::vector<double>>();
    c.hv_baseline_ = optional_from(s.at("hv_baseline"));
    c.init_done_ = s.at("init_done").get<bool>();
    c.batch_init_ = s.at("batch_init").get<bool>();
    c.batch_begin_ = s.at("batch_begin").get<std::size_t>();
    c.batch_prev_x_ = s.at("batch_prev_x").get<std::vector<double>>();
    c.batch_acq_raw_ = s.at("batch_acq_raw").get<double>();
    c.batch_acq_weighted_ = s.at("batch_acq_weighted").get<double>();
    c.init_rounds_ = s.at("init_rounds").get<int>();
    c.proposal_counter_ = s.at("proposal_counter").get<std::uint64_t>();
    c.cum_cost_ = s.at("cum_cost").get<double>();
    c.impute_report_.rows_dropped = s.at("impute").at("rows_dropped").get<std::size_t>();
    c.impute_report_.cells_filled = s.at("impute").at("cells_filled").get<std::size_t>();
    if (c.batch_begin_ > c.proposals_.size()) throw Error(Errc::invalid_argument, "snapshot batch index out of range");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed campaign snapshot: ") + e.what());
  }
}

}  // namespace pmloop
