#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include "doctest.h"
#include "pmloop/datastore.hpp"
#include "pmloop/error.hpp"
#include "pmloop/random.hpp"

using namespace pmloop;
using nlohmann::json;

namespace {

SchemaTemplate alloy_template() {
  SchemaTemplate t;
  t.name = "iqr_dataframe";
  for (const char* el : {"Nb", "Cr", "V", "W", "Zr"})
    t.fields.push_back({el, DType::real, "at%", true, "CompositionProperty"});
  t.fields.push_back({"Creep_Merit", DType::real, "-", true, "MechanicalProperty"});
  return t;
}

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

ProvenanceStamp must_ingest(Datastore& ds, const std::string& table, const json& rec, IngestOptions opt = {}) {
  auto v = ds.validate(table, rec);
  REQUIRE(v.ok());
  return ds.ingest(*v.record, opt);
}

}  // namespace

TEST_CASE("create_table") {
  Datastore ds;
  SchemaTemplate t;
  t.name = "creep";
  t.fields = {{"Nb", DType::real, "at%", false, std::nullopt}, {"Creep_Merit", DType::real, "-", false, std::nullopt}};
  CHECK(ds.create_table(t) == "creep");
  CHECK(ds.metadata("creep").row_count == 0);
  CHECK(error_of([&] { ds.create_table(t); }) == Errc::duplicate_name);

  SchemaTemplate empty;
  empty.name = "empty";
  CHECK(error_of([&] { ds.create_table(empty); }) == Errc::invalid_template);

  SchemaTemplate dup = t;
  dup.name = "dup";
  dup.fields.push_back(dup.fields[0]);
  CHECK(error_of([&] { ds.create_table(dup); }) == Errc::invalid_template);

  SchemaTemplate text_unit;
  text_unit.name = "text_unit";
  text_unit.fields = {{"label", DType::text, "g", true, std::nullopt}};
  CHECK(error_of([&] { ds.create_table(text_unit); }) == Errc::invalid_template);

  SchemaTemplate bad_tag;
  bad_tag.name = "bad_tag";
  bad_tag.fields = {{"x", DType::real, std::nullopt, true, "NotARealTerm"}};
  CHECK(error_of([&] { ds.create_table(bad_tag); }) == Errc::invalid_template);

  SchemaTemplate bad_arch_json = t;
  json j = bad_arch_json;
  j["archetype"] = "lab";
  CHECK_THROWS_AS(j.get<SchemaTemplate>(), Error);
}

TEST_CASE("template json round trip keeps key order stable") {
  auto t = alloy_template();
  json j = t;
  CHECK(j.get<SchemaTemplate>() == t);
  CHECK(json(j.get<SchemaTemplate>()).dump() == j.dump());
}

TEST_CASE("validate_record") {
  Datastore ds;
  SchemaTemplate comp;
  comp.name = "alloy";
  comp.fields = {{"formula", DType::text, std::nullopt, false, "CompositionProperty"},
                 {"Nb", DType::real, "at%", false, std::nullopt},
                 {"Cr", DType::real, "at%", false, std::nullopt},
                 {"Zr", DType::real, "at%", false, std::nullopt}};
  ds.create_table(comp);
  TravelerForm form;
  form.form_id = "alloy_v1";
  form.target_table = "alloy";
  form.rules = {SumRule{{"Nb", "Cr", "Zr"}, 1.0, 1e-9}, RangeRule{"Nb", 0.0, 1.0},
                RegexRule{"formula", "^([A-Z][a-z]?[0-9.]*)+$"}};
  ds.register_form(form);

  SUBCASE("fractions summing to one are accepted") {
    auto r = ds.validate(form, json{{"formula", "Nb0.5Cr0.3Zr0.2"}, {"Nb", 0.5}, {"Cr", 0.3}, {"Zr", 0.2}});
    CHECK(r.ok());
  }
  SUBCASE("bad sum is reported with the observed total") {
    auto r = ds.validate(form, json{{"formula", "NbCr"}, {"Nb", 0.5}, {"Cr", 0.3}, {"Zr", 0.3}});
    REQUIRE_FALSE(r.ok());
    CHECK(r.violations[0].rule == "sum");
  }
  SUBCASE("missing non-nullable field names the field") {
    auto r = ds.validate(form, json{{"formula", "NbCr"}, {"Nb", 0.5}, {"Cr", 0.5}});
    REQUIRE_FALSE(r.ok());
    CHECK(r.violations.size() == 1);
    CHECK(r.violations[0].field == "Zr");
    CHECK(r.violations[0].rule == "nullability");
  }
  SUBCASE("unknown field and type mismatch") {
    auto r = ds.validate(form, json{{"formula", 3}, {"Nb", "half"}, {"Cr", 0.5}, {"Zr", 0.5}, {"Hf", 0.0}});
    REQUIRE_FALSE(r.ok());
    std::set<std::string> rules;
    for (const auto& v : r.violations) rules.insert(v.field + ":" + v.rule);
    CHECK(rules.count("formula:type_mismatch"));
    CHECK(rules.count("Nb:type_mismatch"));
    CHECK(rules.count("Hf:unknown_field"));
  }
  SUBCASE("regex and range") {
    auto r = ds.validate(form, json{{"formula", "nb!"}, {"Nb", 1.5}, {"Cr", -0.5}, {"Zr", 0.0}});
    REQUIRE_FALSE(r.ok());
    std::set<std::string> rules;
    for (const auto& v : r.violations) rules.insert(v.rule);
    CHECK(rules == std::set<std::string>{"range", "regex"});
  }
}

TEST_CASE("branch predicates hide fields") {
  // Two-field fixture: anneal_temp is shown only when annealed == true.
  Datastore ds;
  SchemaTemplate t;
  t.name = "process";
  t.fields = {{"annealed", DType::boolean, std::nullopt, false, std::nullopt},
              {"anneal_temp", DType::real, "K", true, "ProcessingParameter"}};
  ds.create_table(t);
  TravelerForm f;
  f.form_id = "process_v1";
  f.target_table = "process";
  f.branches = {Branch{"anneal_temp", {Condition{"annealed", CompareOp::eq, true}}}};
  f.rules = {RequiredIfRule{"anneal_temp", {}}};
  ds.register_form(f);

  // annealed=false: predicate is false, field hidden, absence accepted.
  CHECK(ds.validate(f, json{{"annealed", false}}).ok());
  // annealed=true: field visible and required.
  auto r = ds.validate(f, json{{"annealed", true}});
  REQUIRE_FALSE(r.ok());
  CHECK(r.violations[0].rule == "required_if");
  CHECK(ds.validate(f, json{{"annealed", true}, {"anneal_temp", 1273.0}}).ok());
  // A value for a hidden field is rejected rather than silently dropped.
  CHECK_FALSE(ds.validate(f, json{{"annealed", false}, {"anneal_temp", 1.0}}).ok());

  TravelerForm forward = f;
  forward.form_id = "bad";
  forward.branches = {Branch{"annealed", {Condition{"anneal_temp", CompareOp::gt, 1.0}}}};
  CHECK(error_of([&] { ds.register_form(forward); }) == Errc::invalid_form);
}

TEST_CASE("ingest assigns fresh uuids and lineage") {
  Datastore ds(Datastore::Options{.uuid_seed = 7});
  ds.create_table(alloy_template());
  auto root = must_ingest(ds, "iqr_dataframe", json{{"Nb", 0.2}, {"Creep_Merit", 1.5}}, {.actor = "alice"});
  CHECK(root.parent_uuids.empty());
  CHECK(ds.metadata("iqr_dataframe").row_count == 1);

  auto child = must_ingest(ds, "iqr_dataframe", json{{"Nb", 0.2}, {"Creep_Merit", 1.6}},
                           {.actor = "alice", .transform = "recalibrated", .parents = {root.uuid}});
  CHECK(child.parent_uuids == std::vector<Uuid>{root.uuid});
  CHECK(child.timestamp >= root.timestamp);

  CHECK(error_of([&] { ds.ingest(ValidatedRecord{}); }) == Errc::validation_not_run);

  Uuid stranger = UuidGenerator(99).next();
  auto v = ds.validate("iqr_dataframe", json{{"Nb", 0.1}});
  CHECK(error_of([&] { ds.ingest(*v.record, {.parents = {stranger}}); }) == Errc::unknown_parent);

  std::set<Uuid> ids{root.uuid, child.uuid};
  for (int i = 0; i < 1000; ++i) ids.insert(must_ingest(ds, "iqr_dataframe", json{{"W", i * 0.001}}).uuid);
  CHECK(ids.size() == 1002);
  CHECK(ds.metadata("iqr_dataframe").row_count == 1002);
}

TEST_CASE("provenance graph stays acyclic") {
  Datastore ds(Datastore::Options{.uuid_seed = 3});
  ds.create_table(alloy_template());
  Rng rng(11);
  std::vector<Uuid> all;
  for (int i = 0; i < 200; ++i) {
    IngestOptions opt;
    for (int k = 0; k < 3 && !all.empty(); ++k) opt.parents.push_back(all[rng.below(all.size())]);
    all.push_back(must_ingest(ds, "iqr_dataframe", json{{"Nb", 0.1}}, opt).uuid);
  }
  // Depth-first cycle detection over parent links.
  std::map<Uuid, int> state;
  std::function<bool(const Uuid&)> cyclic = [&](const Uuid& u) {
    if (state[u] == 1) return true;
    if (state[u] == 2) return false;
    state[u] = 1;
    const auto stamp = ds.stamp(u);
    for (const auto& p : stamp->parent_uuids)
      if (cyclic(p)) return true;
    state[u] = 2;
    return false;
  };
  bool any = false;
  for (const auto& u : all) any = any || cyclic(u);
  CHECK_FALSE(any);
}

TEST_CASE("schema enforcement leaves row count unchanged") {
  Datastore ds;
  ds.create_table(alloy_template());
  auto r = ds.validate("iqr_dataframe", json{{"Nb", "lots"}});
  CHECK_FALSE(r.ok());
  CHECK_FALSE(r.violations.empty());
  CHECK(ds.metadata("iqr_dataframe").row_count == 0);
}

TEST_CASE("query_rows on a 1200-row alloy table") {
  Datastore ds(Datastore::Options{.uuid_seed = 1});
  ds.create_table(alloy_template());
  Rng rng(5);
  for (int i = 0; i < 1200; ++i)
    must_ingest(ds, "iqr_dataframe",
                json{{"Nb", rng.uniform()}, {"Cr", rng.uniform()}, {"V", rng.uniform()}, {"W", rng.uniform()},
                     {"Zr", rng.uniform()}, {"Creep_Merit", rng.uniform(0, 10)}});
  QueryRequest q{{"Nb", "Cr", "V", "W", "Zr", "Creep_Merit"}, std::nullopt, 1000, std::nullopt};
  auto rs = ds.query("iqr_dataframe", q);
  CHECK(rs.rows.size() == 1000);
  CHECK(rs.columns.size() == 6);
  REQUIRE(rs.cursor);
  q.cursor = rs.cursor;
  auto rest = ds.query("iqr_dataframe", q);
  CHECK(rest.rows.size() == 200);
  CHECK_FALSE(rest.cursor);

  q.filter = json{{"gt", {"Nb", 1e300}}};
  q.cursor.reset();
  CHECK(ds.query("iqr_dataframe", q).rows.empty());

  auto md = ds.metadata("iqr_dataframe");
  REQUIRE(md.columns.size() == 6);
  CHECK(md.columns[0].spec.name == "Nb");
  CHECK(md.columns[5].spec.name == "Creep_Merit");

  CHECK(error_of([&] { ds.query("iqr_dataframe", {{"Hf"}, std::nullopt, std::nullopt, std::nullopt}); }) ==
        Errc::unknown_column);
  CHECK(error_of([&] {
          ds.query("iqr_dataframe", {{"Nb"}, json{{"contains", {"Nb", "x"}}}, std::nullopt, std::nullopt});
        }) == Errc::malformed_filter);
  CHECK(error_of([&] { ds.query("nope", {{"Nb"}, std::nullopt, std::nullopt, std::nullopt}); }) ==
        Errc::table_missing);
}

TEST_CASE("hand-evaluated five-row filter fixture") {
  Datastore ds;
  SchemaTemplate t;
  t.name = "five";
  t.fields = {{"Cr", DType::real, std::nullopt, true, std::nullopt},
              {"Zr", DType::real, std::nullopt, true, std::nullopt}};
  ds.create_table(t);
  const json rows[] = {{{"Cr", 0.05}, {"Zr", 0.1}},
                       {{"Cr", 0.2}, {"Zr", 0.0}},
                       {{"Cr", 0.3}, {"Zr", 0.2}},
                       {{"Zr", 0.3}},
                       {{"Cr", 0.1}}};
  for (const auto& r : rows) must_ingest(ds, "five", r);
  json filter = json::parse(R"({"and": [{"ge": ["Cr", 0.1]}, {"not": {"eq": ["Zr", 0]}}]})");
  auto rs = ds.query("five", {{"Cr", "Zr"}, filter, std::nullopt, std::nullopt});
  // Row 2 passes outright; row 4 passes because eq on a null Zr is false.
  REQUIRE(rs.rows.size() == 2);
  CHECK(std::get<double>(rs.rows[0][0]) == 0.3);
  CHECK(std::get<double>(rs.rows[1][0]) == 0.1);
  CHECK(is_null(rs.rows[1][1]));
}

TEST_CASE("table_metadata counts missing values") {
  Datastore ds;
  SchemaTemplate t;
  t.name = "m";
  t.fields = {{"a", DType::real, "K", false, "ThermodynamicProperty"}, {"b", DType::text, std::nullopt, true, std::nullopt}};
  ds.create_table(t);
  auto fresh = ds.metadata("m");
  CHECK(fresh.row_count == 0);
  for (const auto& c : fresh.columns) CHECK(c.missing_count == 0);
  must_ingest(ds, "m", json{{"a", 1.0}, {"b", "x"}});
  must_ingest(ds, "m", json{{"a", 2.0}});
  must_ingest(ds, "m", json{{"a", 3.0}, {"b", "y"}});
  auto md = ds.metadata("m");
  CHECK(md.row_count == 3);
  CHECK(md.columns[0].missing_count == 0);
  CHECK(md.columns[1].missing_count == 1);
  CHECK(md.columns[0].spec.unit == "K");
  CHECK(md.columns[0].spec.ontology_tag == "ThermodynamicProperty");
  CHECK(error_of([&] { ds.metadata("none"); }) == Errc::table_missing);
}

TEST_CASE("NaN in a real column is recorded as missing") {
  Datastore ds;
  ds.create_table(alloy_template());
  auto report = ds.ingest_csv("iqr_dataframe", "Nb,Cr,V,W,Zr,Creep_Merit\r\nnan,0.1,0.1,0.1,0.1,2\r\n", nullptr);
  CHECK(report.accepted == 1);
  CHECK(ds.metadata("iqr_dataframe").columns[0].missing_count == 1);
}

TEST_CASE("csv ingest and export") {
  Datastore ds;
  ds.create_table(alloy_template());
  const std::string header = "Nb,Cr,V,W,Zr,Creep_Merit\r\n";
  auto good = ds.ingest_csv("iqr_dataframe",
                            header + "0.1,0.2,0.3,0.2,0.2,5\n0.2,0.2,0.2,0.2,0.2,4\n0.3,,0.1,0.3,0.3,1e-3\n"
                                     "0.1,0.1,0.1,0.1,0.6,7\nx,0.1,0.1,0.1,0.1,7\n",
                            nullptr);
  CHECK(good.accepted == 4);
  CHECK(good.rejected == 1);
  REQUIRE(good.violations.size() == 1);
  CHECK(good.violations[0].first == 5);
  CHECK(good.violations[0].second.rule == "type_mismatch");
  CHECK(error_of([&] { ds.ingest_csv("iqr_dataframe", "Nb,Cr\n1,2\n", nullptr); }) == Errc::invalid_argument);
  CHECK(ds.metadata("iqr_dataframe").row_count == 4);

  const auto text = ds.export_csv("iqr_dataframe");
  CHECK(text.substr(0, header.size()) == header);
  CHECK(text.find("0.3,\"\",0.1") != std::string::npos);

  Datastore copy;
  copy.create_table(alloy_template());
  CHECK(copy.ingest_csv("iqr_dataframe", text, nullptr).accepted == 4);
  CHECK(copy.export_csv("iqr_dataframe") == text);
}

TEST_CASE("journal and snapshot survive reopen") {
  const auto dir = std::filesystem::temp_directory_path() / "pmloop_ds_persist";
  std::filesystem::remove_all(dir);
  std::string before;
  {
    Datastore ds(Datastore::Options{.data_dir = dir, .uuid_seed = 2});
    ds.create_table(alloy_template());
    must_ingest(ds, "iqr_dataframe", json{{"Nb", 0.25}, {"Creep_Merit", 0.1}});
    ds.checkpoint();
    must_ingest(ds, "iqr_dataframe", json{{"Nb", 1.0 / 3.0}});
    before = ds.export_csv("iqr_dataframe");
  }
  Datastore reopened(Datastore::Options{.data_dir = dir});
  CHECK(reopened.export_csv("iqr_dataframe") == before);
  CHECK(reopened.stamp_count() == 2);
  auto rs = reopened.query("iqr_dataframe", {{"Nb"}, std::nullopt, std::nullopt, std::nullopt});
  CHECK(std::get<double>(rs.rows[1][0]) == 1.0 / 3.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent readers and writers") {
  Datastore ds;
  ds.create_table(alloy_template());
  std::thread writer([&] {
    for (int i = 0; i < 300; ++i) must_ingest(ds, "iqr_dataframe", json{{"Nb", i * 1.0}});
  });
  std::size_t last = 0;
  bool monotone = true;
  for (int i = 0; i < 200; ++i) {
    auto n = ds.query("iqr_dataframe", {{"Nb"}, std::nullopt, std::nullopt, std::nullopt}).rows.size();
    monotone = monotone && n >= last;
    last = n;
  }
  writer.join();
  CHECK(monotone);
  CHECK(ds.metadata("iqr_dataframe").row_count == 300);
}
