#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "pmloop/design.hpp"
#include "pmloop/pareto.hpp"

namespace pmloop {

class GpModel;

enum class AcqKind { ei, pi, lcb, ehvi, qehvi };

std::string to_string(AcqKind k);
AcqKind parse_acq_kind(const std::string& s);

struct AcquisitionSpec {
  AcqKind kind = AcqKind::ei;
  int q = 1;
  double beta = 1.0;
  int mc_samples = 512;
  std::uint64_t seed = 0;

  void validate() const;
};

// All scores use the maximize convention.
double expected_improvement(double mean, double sd, double incumbent);
double probability_of_improvement(double mean, double sd, double incumbent);
// mean - beta*sd; a minimizing caller selects the smallest value.
double lower_confidence_bound(double mean, double sd, double beta);

// E[(Y - h)+] for Y ~ N(mean, sd^2).
double normal_partial_moment(double mean, double sd, double h);

// Exact expected hypervolume improvement of one point with independent normal
// objectives, two objectives only.
double ehvi_exact(const Point& mean, const Point& sd, const std::vector<Point>& front, const Point& r);
double ehvi_exact(const std::vector<const GpModel*>& models, const Eigen::VectorXd& x,
                  const std::vector<Point>& front, const Point& r);

// Monte-Carlo expected improvement of a batch. means[k] and covs[k] are the
// joint posterior of objective k over the q batch points; deviations from the
// mean are scaled by spec.beta.
double qehvi_mc(const std::vector<Eigen::VectorXd>& means, const std::vector<Eigen::MatrixXd>& covs,
                const std::vector<Point>& front, const Point& r, const AcquisitionSpec& spec,
                double* std_error = nullptr);
double qehvi_mc(const std::vector<const GpModel*>& models, const Eigen::MatrixXd& x_batch,
                const std::vector<Point>& front, const Point& r, const AcquisitionSpec& spec,
                double* std_error = nullptr);

struct CostModel {
  enum class Mode { continuous, discrete };
  Mode mode = Mode::continuous;
  std::vector<double> levels;
  std::vector<double> ratios;
  double c0 = 0.2;
  double exponent = 2.0;

  void validate() const;
  bool valid_level(double s) const;
  double cost(double s) const;
  double min_cost() const;

  static CostModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

double cost_weighted(double acq_value, double fidelity, const CostModel& cost);

// Where the optimizer may place the fidelity coordinate.
struct FidelityDomain {
  bool active = false;
  bool continuous = false;
  std::vector<double> levels;
  double lower = 0.0, upper = 1.0;

  static FidelityDomain none() { return {}; }
  static FidelityDomain discrete(std::vector<double> levels);
  static FidelityDomain range(double lo, double hi);
};

struct Candidate {
  Eigen::VectorXd x;
  std::optional<double> fidelity;
  double score = 0;  // marginal gain when added to the batch
};

// Score of a whole batch: the last entry is the point being optimized, the
// earlier ones are fixed.
using BatchScore = std::function<double(const std::vector<Candidate>&)>;

struct OptimizerOptions {
  int seeds = 1024;
  int refine = 16;
  int nm_iterations = 60;
};

std::vector<Candidate> optimize_acquisition(const BatchScore& score, const Box& bounds, int q,
                                            const FidelityDomain& fidelity, std::uint64_t seed,
                                            const OptimizerOptions& options = {});

}  // namespace pmloop
