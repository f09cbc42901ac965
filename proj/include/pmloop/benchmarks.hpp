#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmloop/pareto.hpp"

namespace pmloop {

struct CostModel;

struct BenchmarkDef {
  std::string name;
  std::size_t dim = 0;
  std::vector<double> lower, upper;  // unit box for multi-objective pairs
  std::size_t objectives = 1;
  std::vector<Direction> directions;
  std::vector<std::string> components;  // component functions of a pair
  // Listed global optimum, where one is known.
  std::optional<double> optimum;
  std::vector<std::vector<double>> optimizers;
  double optimum_tolerance = 1e-6;
  std::vector<double> ranges;  // max - min per objective over the domain

  bool multi() const { return objectives > 1; }
  nlohmann::json to_json() const;
};

const std::vector<BenchmarkDef>& benchmark_registry();
const BenchmarkDef& find_benchmark(const std::string& name);

// Single-objective functions on their natural domains.
double eval_single(const std::string& name, const std::vector<double>& x);

// Objective pair on the shared unit box, raw (minimization) values.
std::vector<double> eval_multi(const std::string& name, const std::vector<double>& x);

// Any registered benchmark, on its own domain (natural bounds or unit box).
std::vector<double> eval_benchmark(const std::string& name, const std::vector<double>& x);

struct FidelityEval {
  std::vector<double> values;
  double cost = 0;
};

// Low-frequency bias field added at reduced fidelity, one value per objective.
std::vector<double> fidelity_bias(const std::string& name, const std::vector<double>& x);

FidelityEval eval_fidelity(const std::string& name, const std::vector<double>& x, double s);
FidelityEval eval_fidelity(const std::string& name, const std::vector<double>& x, double s, const CostModel& cost);

}  // namespace pmloop
