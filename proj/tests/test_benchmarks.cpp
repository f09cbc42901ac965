#include <cmath>

#include "doctest.h"
#include "pmloop/acquisition.hpp"
#include "pmloop/benchmarks.hpp"
#include "pmloop/design.hpp"
#include "pmloop/error.hpp"

using namespace pmloop;

TEST_CASE("listed optima are reproduced") {
  for (const auto& def : benchmark_registry()) {
    if (!def.optimum) continue;
    CAPTURE(def.name);
    REQUIRE_FALSE(def.optimizers.empty());
    for (const auto& x : def.optimizers) CHECK(std::abs(eval_single(def.name, x) - *def.optimum) <= def.optimum_tolerance);
  }
  CHECK(eval_single("rastrigin", {0, 0}) == 0.0);
  CHECK(std::abs(eval_single("goldstein_price", {0, -1}) - 3.0) <= 1e-9);
  CHECK(std::abs(eval_single("branin", {M_PI, 2.275}) - 0.397887) <= 1e-5);
  CHECK(std::abs(eval_single("eggholder", {512, 404.2319}) - (-959.6407)) <= 1e-3);
}

TEST_CASE("formulas agree with independently scripted values") {
  // Reference values from a separate NumPy evaluation of the published formulas.
  struct Case {
    const char* name;
    std::vector<double> x;
    double value;
  };
  const Case cases[] = {
      {"branin", {2.5, 7.5}, 24.129964413622268},       {"goldstein_price", {0.3, -1.2}, 128.16055824000017},
      {"schwefel", {100.5, -250.25}, 866.9256679884737}, {"ackley", {1.5, -2.25}, 8.467670048401617},
      {"rastrigin", {0.7, -3.3}, 37.56033988749894},     {"eggholder", {100.0, -200.0}, -81.68626748365273},
      {"booth", {0.5, -1.5}, 120.5},                     {"currin", {0.5, 0.5}, 7.40512391329881},
      {"hartmann3", {0.2, 0.4, 0.6}, -1.0023086415041336}, {"himmelblau", {1.0, -2.0}, 148.0},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(eval_single(c.name, c.x) == doctest::Approx(c.value).epsilon(1e-12));
  }
}

TEST_CASE("multi-objective pairs") {
  auto bc = eval_multi("branin_currin", {0.5, 0.5});
  REQUIRE(bc.size() == 2);
  CHECK(bc[0] == doctest::Approx(24.129964413622268).epsilon(1e-12));
  CHECK(bc[1] == doctest::Approx(7.40512391329881).epsilon(1e-12));
  CHECK(std::abs(eval_multi("booth_rastrigin", {0.55, 0.65})[0]) <= 1e-12);
  for (const auto& name : {"branin_currin", "booth_rastrigin"}) {
    auto v = eval_multi(name, {0, 0});
    for (double y : v) CHECK(std::isfinite(y));
  }
  auto hh = eval_multi("hartmann_himmelblau", {0.8, 0.7, 0.1});
  CHECK(hh[1] == doctest::Approx(eval_single("himmelblau", {3, 2})).epsilon(1e-12));
  CHECK(hh[0] == doctest::Approx(eval_single("hartmann3", {0.8, 0.7, 0.1})));
}

TEST_CASE("every function is finite on a low-discrepancy scan") {
  for (const auto& def : benchmark_registry()) {
    CAPTURE(def.name);
    SobolSequence seq(def.dim, 1);
    Box box{def.lower, def.upper};
    bool finite = true;
    for (int i = 0; i < 10000; ++i) {
      const Eigen::VectorXd x = box.from_unit(seq.next());
      for (double y : eval_benchmark(def.name, std::vector<double>(x.data(), x.data() + x.size())))
        finite = finite && std::isfinite(y);
    }
    CHECK(finite);
    // Corners too.
    for (int mask = 0; mask < (1 << def.dim); ++mask) {
      std::vector<double> x(def.dim);
      for (std::size_t i = 0; i < def.dim; ++i) x[i] = (mask >> i & 1) ? def.upper[i] : def.lower[i];
      for (double y : eval_benchmark(def.name, x)) CHECK(std::isfinite(y));
    }
  }
}

TEST_CASE("fidelity augmentation") {
  const std::vector<double> x{0.3, 0.8};
  auto hi = eval_fidelity("branin_currin", x, 1.0);
  CHECK(hi.values == eval_multi("branin_currin", x));
  CHECK(hi.cost == doctest::Approx(1.2));
  auto lo = eval_fidelity("branin_currin", x, 0.0);
  auto bias = fidelity_bias("branin_currin", x);
  for (int k = 0; k < 2; ++k) CHECK(lo.values[k] - hi.values[k] == doctest::Approx(bias[k]).epsilon(1e-12));
  CHECK(eval_fidelity("branin_currin", x, 0.5).cost == doctest::Approx(0.45));
  CHECK(std::abs(bias[0]) <= 0.1 * 307.7312086538769 + 1e-12);
  CHECK(bias == fidelity_bias("branin_currin", x));
  CHECK(fidelity_bias("booth_rastrigin", x) != bias);

  CostModel d;
  d.mode = CostModel::Mode::discrete;
  d.levels = {0.5, 1.0};
  d.ratios = {1, 5};
  CHECK(eval_fidelity("branin_currin", x, 0.5, d).cost == 1.0);
  CHECK_THROWS_AS(eval_fidelity("branin_currin", x, 0.7, d), Error);
  CHECK_THROWS_AS(eval_fidelity("branin_currin", x, 1.5), Error);
}

TEST_CASE("discrepancy shrinks as fidelity rises") {
  for (const auto& name : {"branin_currin", "booth_rastrigin", "hartmann_himmelblau", "branin"}) {
    const auto& def = find_benchmark(name);
    SobolSequence seq(def.dim, 4);
    Box box{def.lower, def.upper};
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd x = box.from_unit(seq.next());
      xs.emplace_back(x.data(), x.data() + x.size());
    }
    double prev = INFINITY;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      double worst = 0;
      for (const auto& x : xs) {
        const auto a = eval_fidelity(name, x, s).values, b = eval_fidelity(name, x, 1.0).values;
        double n2 = 0;
        for (std::size_t k = 0; k < a.size(); ++k) n2 += (a[k] - b[k]) * (a[k] - b[k]);
        worst = std::max(worst, std::sqrt(n2));
      }
      CHECK(worst <= prev);
      prev = worst;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("benchmark errors and registry") {
  try {
    eval_single("nope", {0, 0});
    FAIL("expected unknown_name");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unknown_name);
  }
  try {
    eval_single("branin", {-6, 0});
    FAIL("expected out_of_bounds");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::out_of_bounds);
  }
  CHECK_THROWS_AS(eval_multi("branin", {0.1, 0.1}), Error);
  CHECK_THROWS_AS(eval_multi("branin_currin", {0.1}), Error);
  CHECK(benchmark_registry().size() == 13);
  auto j = find_benchmark("goldstein_price").to_json();
  CHECK(j["optimum"] == 3.0);
  CHECK(find_benchmark("hartmann_himmelblau").dim == 3);
}
