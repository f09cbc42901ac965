#include <cmath>
#include <set>

#include "doctest.h"
#include "pmloop/benchmarks.hpp"
#include "pmloop/campaign.hpp"
#include "pmloop/datastore.hpp"
#include "pmloop/error.hpp"
#include "pmloop/random.hpp"

using namespace pmloop;
using nlohmann::json;

namespace {

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::internal;
}

template <typename F>
std::string path_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.path();
  }
  FAIL("expected an Error");
  return {};
}

Campaign make(const json& j, const Datastore* ds = nullptr) { return Campaign::create(CampaignConfig::from_json(j), ds); }

bool inside(const Box& b, const std::vector<double>& x) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < b.lower[i] || x[i] > b.upper[i]) return false;
  return true;
}

void measure_all(Campaign& c, const std::vector<Proposal>& batch) {
  for (const auto& p : batch) c.submit_measurement(p.id, eval_benchmark(c.config().benchmark, p.x), p.fidelity);
}

}  // namespace

TEST_CASE("imputation strategies") {
  const Cells base{{1.0, std::nullopt}, {3.0, 4.0}, {std::nullopt, 8.0}, {5.0, 6.0}};
  {
    Cells c = base;
    auto r = impute(c, {Imputation::Kind::drop_rows});
    CHECK(r.rows_dropped == 2);
    REQUIRE(c.size() == 2);
    CHECK(*c[0][0] == 3.0);
  }
  {
    Cells c = base;
    auto r = impute(c, {Imputation::Kind::mean});
    CHECK(r.cells_filled == 2);
    CHECK(*c[2][0] == 3.0);
    CHECK(*c[0][1] == 6.0);
  }
  {
    Cells c{{1.0}, {2.0}, {10.0}, {20.0}, {std::nullopt}};
    impute(c, {Imputation::Kind::median});
    CHECK(*c[4][0] == 6.0);
  }
  {
    Cells c = base;
    impute(c, {Imputation::Kind::constant, -1.5});
    CHECK(*c[0][1] == -1.5);
    CHECK(*c[2][0] == -1.5);
  }
  Cells none{{std::nullopt}, {std::nullopt}};
  CHECK(error_of([&] { impute(none, {Imputation::Kind::mean}); }) == Errc::all_missing);
  CHECK(Imputation::from_json(json{{"constant", 2}}).value == 2.0);
}

TEST_CASE("config parsing is strict and reports the offending field") {
  json ok{{"benchmark", "branin"}};
  auto c = CampaignConfig::from_json(ok);
  CHECK(c.acquisition == AcqKind::ei);
  CHECK(c.bounds.lower == std::vector<double>{-5, 0});
  CHECK(CampaignConfig::from_json(json{{"benchmark", "branin_currin"}}).acquisition == AcqKind::ehvi);
  CHECK(CampaignConfig::from_json(json{{"benchmark", "branin_currin"}, {"q", 3}}).acquisition == AcqKind::qehvi);

  auto bad = [](json j) { return path_of([&] { CampaignConfig::from_json(j); }); };
  CHECK(bad({{"benchmark", "branin"}, {"colour", 1}}) == "colour");
  CHECK(bad({{"benchmark", "nope"}}) == "benchmark");
  CHECK(bad({{"benchmark", "branin"}, {"init_n", 1}}) == "init_n");
  CHECK(bad({{"benchmark", "branin"}, {"acquisition", "EHVI"}}) == "acquisition");
  CHECK(bad({{"benchmark", "branin_currin"}, {"acquisition", "EI"}}) == "acquisition");
  CHECK(bad({{"benchmark", "branin"}, {"q", 2}}) == "q");
  CHECK(bad({{"benchmark", "branin"}, {"budget", -1}}) == "budget");
  CHECK(bad({{"benchmark", "branin"}, {"bounds", {{"lower", {-6, 0}}, {"upper", {10, 15}}}}}) == "bounds");
  CHECK(bad({{"benchmark", "branin"}, {"acquisition", "LCB"}, {"fidelity", {{"mode", "continuous"}}}}) ==
        "acquisition");
  CHECK(bad({{"mode", "dataset"}, {"table", "t"}, {"x_columns", {"a"}}, {"y_columns", {"y"}}, {"directions", {"min"}}}) ==
        "bounds");
  CHECK(bad({{"benchmark", "branin_currin"}, {"reference_point", {1.0}}}) == "reference_point");
  CHECK(error_of([] { CampaignConfig::from_json(json{{"benchmark", "branin"}, {"q", "x"}}); }) == Errc::invalid_config);

  const auto round = CampaignConfig::from_json(CampaignConfig::from_json(json{{"benchmark", "branin_currin"},
                                                                              {"q", 2},
                                                                              {"budget", 20},
                                                                              {"seed", 9}})
                                                   .to_json());
  CHECK(round.q == 2);
  CHECK(*round.budget == 20.0);
  CHECK(round.seed == 9);
}

TEST_CASE("initial design is proposed first without fitting a model") {
  auto c = make({{"benchmark", "branin_currin"}, {"init_n", 5}, {"seed", 3}});
  auto batch = c.propose();
  REQUIRE(batch.size() == 5);
  CHECK(c.phase() == Phase::awaiting_measurement);
  std::set<std::string> ids;
  for (const auto& p : batch) {
    CHECK(p.space_filling);
    CHECK(p.pred_mean.empty());
    CHECK(inside(c.config().bounds, p.x));
    ids.insert(p.id);
  }
  CHECK(ids.size() == 5);
  CHECK(error_of([&] { c.propose(); }) == Errc::invalid_phase);
  measure_all(c, batch);
  CHECK(c.records().empty());
  CHECK(c.phase() == Phase::updating);
  auto next = c.propose();
  REQUIRE(next.size() == 1);
  CHECK_FALSE(next[0].space_filling);
  CHECK(inside(c.config().bounds, next[0].x));
  CHECK(next[0].pred_mean.size() == 2);
  CHECK(next[0].acq_value >= 0);
}

TEST_CASE("state machine rejects out-of-order operations") {
  auto c = make({{"benchmark", "branin_currin"}, {"init_n", 3}, {"q", 3}, {"mc_samples", 128}, {"seed", 1}});
  CHECK(error_of([&] { c.submit_measurement("x", {1, 2}); }) == Errc::invalid_phase);
  auto init = c.propose();
  CHECK(error_of([&] { c.submit_measurement("nope", {1, 2}); }) == Errc::unknown_proposal);
  CHECK(error_of([&] { c.submit_measurement(init[0].id, {1}); }) == Errc::arity_mismatch);
  CHECK(error_of([&] { c.submit_measurement(init[0].id, {1, NAN}); }) == Errc::non_finite_input);
  CHECK(error_of([&] { c.submit_measurement(init[0].id, {1, 2}, 0.5); }) == Errc::unknown_fidelity);
  c.submit_measurement(init[0].id, {1, 2});
  CHECK(error_of([&] { c.submit_measurement(init[0].id, {1, 2}); }) == Errc::already_measured);
  measure_all(c, {init[1], init[2]});

  auto batch = c.propose();
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 1; i < batch.size(); ++i) CHECK(batch[i - 1].acq_value >= batch[i].acq_value);
  measure_all(c, {batch[0], batch[1]});
  CHECK(c.records().empty());
  c.expire(batch[2].id);
  CHECK(error_of([&] { c.expire(batch[2].id); }) == Errc::invalid_phase);
  REQUIRE(c.records().size() == 1);
  CHECK(c.records()[0].fidelities.size() == 2);
  CHECK(c.observations().size() == 5);
  CHECK(c.proposals()[5].status == ProposalStatus::expired);
}

TEST_CASE("random operation sequences keep the invariants") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    CAPTURE(seed);
    auto c = make({{"benchmark", "branin_currin"}, {"init_n", 3}, {"q", 2}, {"mc_samples", 128}, {"iterations", 4},
                   {"seed", seed}});
    Rng rng(seed + 100);
    std::size_t measured = 0;
    for (int step = 0; step < 200 && c.phase() != Phase::converged; ++step) {
      const int op = static_cast<int>(rng.below(4));
      if (op == 0) {
        const bool allowed = c.phase() == Phase::configured || c.phase() == Phase::updating;
        if (allowed)
          c.propose();
        else
          CHECK(error_of([&] { c.propose(); }) == Errc::invalid_phase);
      } else {
        const auto pend = c.pending();
        if (pend.empty()) {
          CHECK(error_of([&] { c.submit_measurement("missing", {0, 0}); }) != Errc::internal);
          continue;
        }
        const auto* p = pend[rng.below(pend.size())];
        if (op == 3) {
          c.expire(p->id);
        } else {
          c.submit_measurement(p->id, eval_benchmark("branin_currin", p->x));
          ++measured;
        }
      }
      CHECK(c.observations().size() == measured);
      for (std::size_t i = 1; i < c.records().size(); ++i) CHECK(c.records()[i].hv >= c.records()[i - 1].hv);
      for (const auto& o : c.observations()) CHECK(inside(c.config().bounds, o.x));
    }
    CHECK(c.phase() == Phase::converged);
    CHECK(c.records().size() == 4);
  }
}

TEST_CASE("seeded benchmark campaigns replay exactly") {
  const json cfg{{"benchmark", "branin_currin"}, {"iterations", 10}, {"seed", 42}};
  auto a = make(cfg);
  auto b = make(cfg);
  a.run();
  b.run();
  CHECK(a.phase() == Phase::converged);
  CHECK(a.observations().size() == 15);
  for (auto k : {ExportKind::observations, ExportKind::proposals, ExportKind::iterations, ExportKind::front})
    CHECK(a.export_csv(k) == b.export_csv(k));
  CHECK(a.summary() == b.summary());
  auto other = make({{"benchmark", "branin_currin"}, {"iterations", 10}, {"seed", 43}});
  other.run();
  CHECK(other.export_csv(ExportKind::observations) != a.export_csv(ExportKind::observations));
}

TEST_CASE("iteration log definitions") {
  auto c = make({{"benchmark", "branin_currin"}, {"iterations", 6}, {"seed", 7}});
  c.run();
  const auto& r = c.records();
  REQUIRE(r.size() == 6);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r[i].iter == static_cast<int>(i) + 1);
    if (i) CHECK(r[i].delta_hv == doctest::Approx(r[i].hv - r[i - 1].hv).epsilon(1e-12));
    CHECK(r[i].delta_hv >= 0);
    CHECK(r[i].gd.has_value());
    CHECK(r[i].cum_cost == static_cast<double>(5 + i + 1));
  }
  CHECK(c.hypervolume() == r.back().hv);
  const auto d = c.diagnostics();
  std::size_t total = 0;
  for (const auto& [k, v] : d.fidelity_histogram) total += v;
  CHECK(total == 11);

  std::vector<Point> internal;
  for (const auto& o : c.observations()) internal.push_back(to_internal(o.y_target, c.config().directions));
  const auto front = c.front_indices();
  CHECK(front == pareto_front(internal));
  CHECK(error_of([] { make({{"benchmark", "branin"}}).diagnostics(); }) == Errc::empty_log);
}

TEST_CASE("single-objective best-so-far and distance to optimum never get worse") {
  auto c = make({{"benchmark", "rastrigin"}, {"iterations", 12}, {"seed", 5}});
  c.run();
  const auto d = c.diagnostics();
  REQUIRE(d.distance_to_optimum.size() == 12);
  for (std::size_t i = 1; i < 12; ++i) {
    CHECK(d.distance_to_optimum[i] <= d.distance_to_optimum[i - 1]);
    CHECK(d.best_so_far[i] <= d.best_so_far[i - 1]);
  }
  double best = INFINITY;
  for (const auto& o : c.observations()) best = std::min(best, o.y[0]);
  CHECK(d.best_so_far.back() == best);
  CHECK(c.summary()["best_value"].get<double>() == best);
}

TEST_CASE("budget caps total cost") {
  auto c = make({{"benchmark", "branin"}, {"iterations", 50}, {"budget", 10}, {"seed", 2},
                 {"fidelity", {{"mode", "discrete"}, {"levels", {1.0}}, {"ratios", {1.2}}}}});
  c.run();
  CHECK(c.phase() == Phase::budget_exhausted);
  CHECK(c.observations().size() == 8);
  CHECK(c.cumulative_cost() <= 10.0);
  CHECK(error_of([&] { c.propose(); }) == Errc::invalid_phase);
}

TEST_CASE("iteration count includes the initial design") {
  auto c = make({{"benchmark", "branin"}, {"iterations", 35}, {"init_n", 5}, {"seed", 11}});
  c.run();
  CHECK(c.observations().size() == 40);
  CHECK(c.records().size() == 35);
  CHECK(c.summary()["evaluations"] == 40);
}

TEST_CASE("multi-fidelity campaigns stay within budget and cost-weight their scores") {
  for (const json fid : {json{{"mode", "continuous"}}, json{{"mode", "discrete"}, {"levels", {0.25, 0.5, 1.0}},
                                                            {"ratios", {0.1, 0.3, 1.0}}}}) {
    CAPTURE(fid.dump());
    auto c = make({{"benchmark", "branin_currin"}, {"iterations", 40}, {"budget", 12}, {"seed", 4}, {"fidelity", fid}});
    c.run();
    CHECK(c.cumulative_cost() <= 12.0);
    CHECK((c.phase() == Phase::budget_exhausted || c.phase() == Phase::converged));
    if (c.phase() == Phase::converged) CHECK(c.records().size() == 40);
    double total = 0;
    for (const auto& o : c.observations()) {
      REQUIRE(o.fidelity.has_value());
      CHECK(c.config().fidelity->valid_level(*o.fidelity));
      CHECK(o.y_target == eval_benchmark("branin_currin", o.x));
      total += o.cost;
    }
    CHECK(total == doctest::Approx(c.cumulative_cost()));
    for (const auto& p : c.proposals()) {
      if (p.space_filling) continue;
      CHECK(p.acq_weighted == doctest::Approx(p.acq_value / c.config().fidelity->cost(*p.fidelity)));
    }
    const auto d = c.diagnostics();
    std::size_t n = 0;
    for (const auto& [k, v] : d.fidelity_histogram) n += v;
    CHECK(n == c.observations().size());
  }
}

TEST_CASE("observations CSV round-trips exactly") {
  auto c = make({{"benchmark", "branin_currin"}, {"iterations", 3}, {"seed", 8},
                 {"fidelity", {{"mode", "discrete"}, {"levels", {0.5, 1.0}}, {"ratios", {0.2, 1.0}}}}});
  c.run();
  const auto text = c.export_csv(ExportKind::observations);
  CHECK(text.rfind("iter,proposal_id,x_1,x_2,fidelity,cost,y_1,y_2\r\n", 0) == 0);
  const auto back = Campaign::import_observations(text, 2, 2);
  REQUIRE(back.size() == c.observations().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = c.observations()[i];
    CHECK(back[i].iter == a.iter);
    CHECK(back[i].proposal_id == a.proposal_id);
    CHECK(back[i].x == a.x);
    CHECK(back[i].fidelity == a.fidelity);
    CHECK(back[i].cost == a.cost);
    CHECK(back[i].y == a.y);
  }
  CHECK(error_of([&] { Campaign::import_observations(text, 3, 2); }) == Errc::invalid_argument);
  const auto it = c.export_csv(ExportKind::iterations);
  CHECK(it.rfind("iter,hv,delta_hv,gd,acq_raw,acq_costweighted,fidelity,cum_cost,wall_ms\r\n", 0) == 0);
  const auto pr = c.export_csv(ExportKind::proposals);
  CHECK(pr.rfind("id,status,x_1,x_2,fidelity,acq_value,pred_mean_1,pred_mean_2,pred_sd_1,pred_sd_2\r\n", 0) == 0);
  CHECK(parse_export_kind("front") == ExportKind::front);
  CHECK(error_of([] { parse_export_kind("nope"); }) == Errc::invalid_argument);
}

TEST_CASE("snapshot resume continues identically") {
  const json cfg{{"benchmark", "branin_currin"}, {"iterations", 6}, {"q", 2}, {"mc_samples", 128}, {"seed", 21}};
  auto full = make(cfg);
  full.run();

  auto part = make(cfg);
  part.step_benchmark();
  part.step_benchmark();
  auto batch = part.propose();
  part.submit_measurement(batch[0].id, eval_benchmark("branin_currin", batch[0].x));
  const auto snap = part.snapshot();
  auto resumed = Campaign::from_snapshot(json::parse(snap.dump()));
  CHECK(resumed.snapshot() == snap);
  CHECK(resumed.phase() == Phase::awaiting_measurement);
  resumed.submit_measurement(batch[1].id, eval_benchmark("branin_currin", batch[1].x));
  resumed.run();
  for (auto k : {ExportKind::observations, ExportKind::proposals, ExportKind::iterations, ExportKind::front})
    CHECK(resumed.export_csv(k) == full.export_csv(k));
  CHECK(error_of([] { Campaign::from_snapshot(json{{"format", "x"}}); }) == Errc::invalid_argument);
}

TEST_CASE("dataset campaigns start from table rows") {
  Datastore ds;
  SchemaTemplate t;
  t.name = "alloys";
  t.fields.push_back({"a", DType::real, "-", true, std::nullopt});
  t.fields.push_back({"b", DType::real, "-", true, std::nullopt});
  t.fields.push_back({"y", DType::real, "-", true, std::nullopt});
  t.fields.push_back({"note", DType::text, std::nullopt, true, std::nullopt});
  ds.create_table(t);
  Rng rng(3);
  for (int i = 0; i < 8; ++i) {
    json rec{{"a", rng.uniform()}, {"b", rng.uniform()}};
    if (i != 2) rec["y"] = std::sin(3 * rec["a"].get<double>()) + rec["b"].get<double>();
    auto v = ds.validate("alloys", rec);
    REQUIRE(v.ok());
    ds.ingest(*v.record);
  }
  json cfg{{"mode", "dataset"},     {"table", "alloys"},
           {"x_columns", {"a", "b"}}, {"y_columns", {"y"}},
           {"directions", {"max"}},  {"bounds", {{"lower", {0, 0}}, {"upper", {1, 1}}}},
           {"iterations", 3},        {"seed", 6}};
  auto c = make(cfg, &ds);
  CHECK(c.observations().size() == 7);
  CHECK(c.impute_report().rows_dropped == 1);
  auto batch = c.propose();
  REQUIRE(batch.size() == 1);
  CHECK_FALSE(batch[0].space_filling);
  CHECK(c.reference_point().has_value());
  c.submit_measurement(batch[0].id, {0.5});
  CHECK(c.records().size() == 1);
  CHECK(c.observations().back().proposal_id == batch[0].id);
  CHECK(error_of([&] { c.step_benchmark(); }) == Errc::invalid_phase);

  cfg["imputation"] = "mean";
  CHECK(make(cfg, &ds).observations().size() == 8);
  cfg["y_columns"] = {"note"};
  CHECK(path_of([&] { make(cfg, &ds); }) == "y_columns");
  cfg["table"] = "missing";
  CHECK(error_of([&] { make(cfg, &ds); }) == Errc::table_missing);
}

TEST_CASE("degenerate objectives fall back to space-filling proposals") {
  Datastore ds;
  SchemaTemplate t;
  t.name = "flat";
  t.fields.push_back({"a", DType::real, "-", true, std::nullopt});
  t.fields.push_back({"y", DType::real, "-", true, std::nullopt});
  ds.create_table(t);
  for (int i = 0; i < 5; ++i) {
    auto v = ds.validate("flat", json{{"a", 0.2 * i}, {"y", 1.0}});
    REQUIRE(v.ok());
    ds.ingest(*v.record);
  }
  auto c = make({{"mode", "dataset"}, {"table", "flat"}, {"x_columns", {"a"}}, {"y_columns", {"y"}},
                 {"directions", {"min"}}, {"bounds", {{"lower", {0}}, {"upper", {1}}}}},
                &ds);
  auto batch = c.propose();
  REQUIRE(batch.size() == 1);
  CHECK(batch[0].space_filling);
  CHECK(inside(c.config().bounds, batch[0].x));
}
