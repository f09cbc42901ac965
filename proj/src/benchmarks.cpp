#include "pmloop/benchmarks.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "pmloop/acquisition.hpp"
#include "pmloop/error.hpp"
#include "pmloop/random.hpp"

namespace pmloop {

namespace {

using std::numbers::pi;
using Vec = std::vector<double>;

double branin(const Vec& x) {
  const double b = 5.1 / (4 * pi * pi), c = 5 / pi, t = 1 / (8 * pi);
  const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6;
  return u * u + 10 * (1 - t) * std::cos(x[0]) + 10;
}

double goldstein_price(const Vec& x) {
  const double a = x[0], b = x[1];
  const double p = a + b + 1, q = 2 * a - 3 * b;
  return (1 + p * p * (19 - 14 * a + 3 * a * a - 14 * b + 6 * a * b + 3 * b * b)) *
         (30 + q * q * (18 - 32 * a + 12 * a * a + 48 * b - 36 * a * b + 27 * b * b));
}

double schwefel(const Vec& x) {
  double s = 418.9828872724338 * static_cast<double>(x.size());
  for (double v : x) s -= v * std::sin(std::sqrt(std::abs(v)));
  return s;
}

double ackley(const Vec& x) {
  const double d = static_cast<double>(x.size());
  double sq = 0, cs = 0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(2 * pi * v);
  }
  return -20 * std::exp(-0.2 * std::sqrt(sq / d)) - std::exp(cs / d) + 20 + std::numbers::e;
}

double rastrigin(const Vec& x) {
  double s = 10 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10 * std::cos(2 * pi * v);
  return s;
}

double eggholder(const Vec& x) {
  const double a = x[0], b = x[1];
  return -(b + 47) * std::sin(std::sqrt(std::abs(b + a / 2 + 47))) - a * std::sin(std::sqrt(std::abs(a - (b + 47))));
}

double booth(const Vec& x) {
  const double p = x[0] + 2 * x[1] - 7, q = 2 * x[0] + x[1] - 5;
  return p * p + q * q;
}

double currin(const Vec& x) {
  const double a = x[0], b = x[1];
  const double f = b == 0 ? 1.0 : 1 - std::exp(-1 / (2 * b));
  return f * (2300 * a * a * a + 1900 * a * a + 2092 * a + 60) / (100 * a * a * a + 500 * a * a + 4 * a + 20);
}

double hartmann3(const Vec& x) {
  static constexpr double A[4][3] = {{3, 10, 30}, {0.1, 10, 35}, {3, 10, 30}, {0.1, 10, 35}};
  static constexpr double C[4] = {1, 1.2, 3, 3.2};
  static constexpr double P[4][3] = {
      {0.3689, 0.1170, 0.2673}, {0.4699, 0.4387, 0.7470}, {0.1091, 0.8732, 0.5547}, {0.0381, 0.5743, 0.8828}};
  double s = 0;
  for (int i = 0; i < 4; ++i) {
    double e = 0;
    for (int j = 0; j < 3; ++j) e += A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]);
    s += C[i] * std::exp(-e);
  }
  return -s;
}

double himmelblau(const Vec& x) {
  const double p = x[0] * x[0] + x[1] - 11, q = x[0] + x[1] * x[1] - 7;
  return p * p + q * q;
}

using Fn = double (*)(const Vec&);

struct Single {
  Fn fn;
  BenchmarkDef def;
};

BenchmarkDef single(std::string name, std::size_t d, double lo, double hi, std::optional<double> opt,
                    std::vector<Vec> at, double range, double tol = 1e-6) {
  BenchmarkDef b;
  b.name = std::move(name);
  b.dim = d;
  b.lower.assign(d, lo);
  b.upper.assign(d, hi);
  b.directions = {Direction::minimize};
  b.optimum = opt;
  b.optimizers = std::move(at);
  b.optimum_tolerance = tol;
  b.ranges = {range};
  return b;
}

const std::map<std::string, Single>& singles() {
  static const std::map<std::string, Single> table = [] {
    std::map<std::string, Single> t;
    auto add = [&](Fn f, BenchmarkDef d) {
      auto name = d.name;
      t.emplace(name, Single{f, std::move(d)});
    };
    auto branin_def = single("branin", 2, 0, 0, 0.39788735772973816,
                             {{-pi, 12.275}, {pi, 2.275}, {9.42477796076938, 2.475}}, 307.7312086538769);
    branin_def.lower = {-5, 0};
    branin_def.upper = {10, 15};
    add(branin, branin_def);
    add(goldstein_price, single("goldstein_price", 2, -2, 2, 3.0, {{0, -1}}, 1015687.2717980596));
    add(schwefel, single("schwefel", 2, -500, 500, 0.0, {{420.968746, 420.968746}}, 1675.9315490897352));
    add(ackley, single("ackley", 2, -32.768, 32.768, 0.0, {{0, 0}}, 22.320334848401284));
    add(rastrigin, single("rastrigin", 2, -5.12, 5.12, 0.0, {{0, 0}}, 80.70658038767792));
    add(eggholder, single("eggholder", 2, -512, 512, -959.6407, {{512, 404.2319}}, 2008.772286225344, 1e-3));
    add(booth, single("booth", 2, -10, 10, 0.0, {{1, 3}}, 2594.0));
    add(currin, single("currin", 2, 0, 1, std::nullopt, {}, 12.618314023866336));
    add(hartmann3, single("hartmann3", 3, 0, 1, -3.862779787332663,
                          {{0.11458888122541287, 0.5556488954739371, 0.8525469842172746}}, 3.862742060147521));
    add(himmelblau, single("himmelblau", 2, -5, 5, 0.0,
                           {{3, 2}, {-2.805118086952745, 3.131312518250573}, {-3.779310253377747, -3.283185991286170},
                            {3.584428340330492, -1.848126526964404}},
                           890.0));
    return t;
  }();
  return table;
}

// A pair's component k reads the first `dim` coordinates of the unit input,
// rescaled to its natural box.
struct Pair {
  BenchmarkDef def;
  std::vector<std::string> parts;
};

const std::map<std::string, Pair>& pairs() {
  static const std::map<std::string, Pair> table = [] {
    std::map<std::string, Pair> t;
    auto add = [&](std::string name, std::size_t d, std::vector<std::string> parts) {
      BenchmarkDef b;
      b.name = name;
      b.dim = d;
      b.lower.assign(d, 0.0);
      b.upper.assign(d, 1.0);
      b.objectives = parts.size();
      b.directions.assign(parts.size(), Direction::minimize);
      b.components = parts;
      for (const auto& p : parts) b.ranges.push_back(singles().at(p).def.ranges[0]);
      t.emplace(name, Pair{std::move(b), std::move(parts)});
    };
    add("branin_currin", 2, {"branin", "currin"});
    add("booth_rastrigin", 2, {"booth", "rastrigin"});
    add("hartmann_himmelblau", 3, {"hartmann3", "himmelblau"});
    return t;
  }();
  return table;
}

double eval_component(const std::string& part, const Vec& u) {
  const auto& s = singles().at(part);
  Vec x(s.def.dim);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = s.def.lower[i] + u[i] * (s.def.upper[i] - s.def.lower[i]);
  }
  return s.fn(x);
}

void check_input(const BenchmarkDef& def, const Vec& x) {
  if (x.size() != def.dim)
    throw Error(Errc::dimension_mismatch,
                def.name + " expects " + std::to_string(def.dim) + " inputs, got " + std::to_string(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw Error(Errc::non_finite_input, def.name + ": input is not finite");
    const double slack = 1e-9 * (def.upper[i] - def.lower[i]);
    if (x[i] < def.lower[i] - slack || x[i] > def.upper[i] + slack)
      throw Error(Errc::out_of_bounds, def.name + ": input " + std::to_string(i) + " outside its bounds");
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

nlohmann::json BenchmarkDef::to_json() const {
  nlohmann::json j{{"name", name}, {"dim", dim}, {"lower", lower}, {"upper", upper}, {"objectives", objectives}};
  auto dirs = nlohmann::json::array();
  for (auto d : directions) dirs.push_back(to_string(d));
  j["directions"] = dirs;
  if (!components.empty()) j["components"] = components;
  if (optimum) {
    j["optimum"] = *optimum;
    j["optimizers"] = optimizers;
  }
  return j;
}

const std::vector<BenchmarkDef>& benchmark_registry() {
  static const std::vector<BenchmarkDef> all = [] {
    std::vector<BenchmarkDef> v;
    for (const auto& [name, s] : singles()) v.push_back(s.def);
    for (const auto& [name, p] : pairs()) v.push_back(p.def);
    return v;
  }();
  return all;
}

const BenchmarkDef& find_benchmark(const std::string& name) {
  if (auto it = singles().find(name); it != singles().end()) return it->second.def;
  if (auto it = pairs().find(name); it != pairs().end()) return it->second.def;
  throw Error(Errc::unknown_name, "unknown benchmark '" + name + "'");
}

double eval_single(const std::string& name, const Vec& x) {
  auto it = singles().find(name);
  if (it == singles().end()) throw Error(Errc::unknown_name, "unknown single-objective benchmark '" + name + "'");
  check_input(it->second.def, x);
  return it->second.fn(x);
}

Vec eval_multi(const std::string& name, const Vec& x) {
  auto it = pairs().find(name);
  if (it == pairs().end()) throw Error(Errc::unknown_name, "unknown multi-objective benchmark '" + name + "'");
  check_input(it->second.def, x);
  Vec out;
  for (const auto& part : it->second.parts) out.push_back(eval_component(part, x));
  return out;
}

Vec eval_benchmark(const std::string& name, const Vec& x) {
  if (pairs().count(name)) return eval_multi(name, x);
  return {eval_single(name, x)};
}

Vec fidelity_bias(const std::string& name, const Vec& x) {
  const auto& def = find_benchmark(name);
  check_input(def, x);
  Vec out(def.objectives);
  for (std::size_t k = 0; k < def.objectives; ++k) {
    Rng rng(derive_seed(fnv1a(name), 0xB1A5, k));
    double phase = rng.uniform(0, 2 * pi);
    double arg = phase;
    for (std::size_t i = 0; i < def.dim; ++i) {
      const double w = rng.uniform(0.5, 1.5);
      arg += 2 * pi * w * (x[i] - def.lower[i]) / (def.upper[i] - def.lower[i]);
    }
    out[k] = 0.1 * def.ranges[k] * std::cos(arg);
  }
  return out;
}

FidelityEval eval_fidelity(const std::string& name, const Vec& x, double s) {
  return eval_fidelity(name, x, s, CostModel{});
}

FidelityEval eval_fidelity(const std::string& name, const Vec& x, double s, const CostModel& cost) {
  if (!(s >= 0 && s <= 1)) throw Error(Errc::unknown_fidelity, "fidelity must lie in [0,1]");
  FidelityEval out;
  out.cost = cost.cost(s);
  out.values = eval_benchmark(name, x);
  if (s != 1.0) {
    const auto bias = fidelity_bias(name, x);
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += (1 - s) * bias[k];
  }
  return out;
}

}  // namespace pmloop
