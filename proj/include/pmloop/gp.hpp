#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace pmloop {

enum class KernelFamily { matern52, rbf };

std::string_view to_string(KernelFamily f);
std::optional<KernelFamily> parse_kernel_family(std::string_view s);

/// Stationary ARD kernel with additive observation noise.
struct KernelConfig {
  KernelFamily family = KernelFamily::matern52;
  std::vector<double> lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-4;

  /// [log l_1 .. log l_d, log signal, log noise]
  Eigen::VectorXd log_params() const;
  static KernelConfig from_log_params(KernelFamily family, const Eigen::VectorXd& theta);
};

struct HyperparameterBounds {
  double lengthscale_min = 1e-3, lengthscale_max = 1e3;
  double signal_min = 1e-3, signal_max = 1e3;
  double noise_min = 1e-6, noise_max = 1e1;

  bool contains(const KernelConfig& k) const;
};

/// Kernel matrix between two sets of unit-box inputs (rows are points),
/// without the noise term.
Eigen::MatrixXd kernel_matrix(const KernelConfig& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct MarginalLikelihood {
  double value = 0.0;
  /// With respect to KernelConfig::log_params().
  Eigen::VectorXd gradient;
  /// Diagonal jitter that made the covariance factorizable.
  double jitter = 0.0;
};

/// Log marginal likelihood of already-normalized data and its gradient.
/// Jitter starts at 1e-10 and doubles until the Cholesky factorization
/// succeeds; past 1e-2 this throws Error(not_positive_definite).
MarginalLikelihood log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                           const KernelConfig& kernel, bool with_gradient = true);

struct FitOptions {
  KernelFamily family = KernelFamily::matern52;
  int restarts = 8;
  int max_iterations = 200;
  double gradient_tolerance = 1e-5;
  std::uint64_t seed = 0;
  HyperparameterBounds bounds;
  /// Input box used for normalization; the data's own range when absent.
  std::optional<std::vector<double>> lower, upper;
  /// Pins the noise variance (standardized units) instead of fitting it.
  std::optional<double> fixed_noise;
  /// Skips optimization entirely.
  std::optional<KernelConfig> fixed_kernel;
};

struct PosteriorSlice {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Exact GP regression on min-max normalized inputs and standardized targets.
/// Immutable once fitted.
class GpModel {
 public:
  /// Fits hyperparameters by multi-start projected gradient ascent on the
  /// log marginal likelihood (deterministic sub-seeds per restart).
  ///
  /// Needs at least two finite rows. Constant targets do not fail: the model
  /// is flagged degenerate, keeps the signal variance at its lower bound, and
  /// predicts the constant.
  static GpModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FitOptions& options = {});

  std::size_t input_dim() const { return static_cast<std::size_t>(inputs_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(inputs_.rows()); }
  const KernelConfig& kernel() const { return kernel_; }
  bool degenerate() const { return degenerate_; }
  double jitter() const { return jitter_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }

  /// Log marginal likelihood of this model's data under other parameters.
  MarginalLikelihood log_marginal_likelihood(const KernelConfig& params) const;
  double log_marginal_likelihood() const { return lml_; }

  /// Maps raw inputs into the unit box the model was trained in.
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;

  /// Latent posterior in original target units. Throws
  /// Error(dimension_mismatch) or Error(non_finite_input).
  PosteriorSlice predict(const Eigen::MatrixXd& xq) const;

  /// Joint posterior mean and covariance in original target units.
  void joint_posterior(const Eigen::MatrixXd& xq, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const;

  /// n_samples x m draws from the joint posterior at xq. `spread` scales
  /// the deviations (covariance by spread^2).
  Eigen::MatrixXd sample_posterior(const Eigen::MatrixXd& xq, int n_samples, std::uint64_t seed,
                                   double spread = 1.0) const;

  /// Hyperparameters, normalization constants and a digest of the training
  /// data, for campaign replay.
  nlohmann::json snapshot() const;

 private:
  void factorize();

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  std::vector<double> lower_, upper_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  KernelConfig kernel_;
  bool degenerate_ = false;
  double jitter_ = 0.0;
  double lml_ = 0.0;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  std::uint64_t digest_ = 0;
};

/// Lower Cholesky factor of a covariance with the escalating jitter policy.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& cov, double* jitter_used = nullptr);

}  // namespace pmloop
