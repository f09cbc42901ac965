#include "pmloop/gp.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "pmloop/error.hpp"
#include "pmloop/random.hpp"

namespace pmloop {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kJitterStart = 1e-10;
constexpr double kJitterCap = 1e-2;
constexpr std::uint64_t kRestartStream = 0x6770'6669'7473ULL;

// Kernel value and the radial factor g with dk/dlog(l_k) = g * d_k^2 / l_k^2.
inline void kernel_terms(KernelFamily family, double sf2, double r2, double& k, double& g) {
  if (family == KernelFamily::rbf) {
    const double e = std::exp(-0.5 * r2);
    k = sf2 * e;
    g = sf2 * e;
    return;
  }
  const double r = std::sqrt(r2);
  const double e = std::exp(-kSqrt5 * r);
  k = sf2 * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * e;
  g = sf2 * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e;
}

inline double scaled_r2(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j,
                        const std::vector<double>& ls) {
  double r2 = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = (a(i, c) - b(j, c)) / ls[static_cast<std::size_t>(c)];
    r2 += d * d;
  }
  return r2;
}

bool try_cholesky(const Eigen::MatrixXd& m, Eigen::MatrixXd& l) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
  return true;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw Error(Errc::non_finite_input, std::string(what) + " contains non-finite values");
}

struct LogBox {
  Eigen::VectorXd lo, hi;
};

LogBox log_box(const HyperparameterBounds& b, std::size_t d) {
  LogBox box{Eigen::VectorXd(d + 2), Eigen::VectorXd(d + 2)};
  for (std::size_t i = 0; i < d; ++i) {
    box.lo[i] = std::log(b.lengthscale_min);
    box.hi[i] = std::log(b.lengthscale_max);
  }
  box.lo[d] = std::log(b.signal_min);
  box.hi[d] = std::log(b.signal_max);
  box.lo[d + 1] = std::log(b.noise_min);
  box.hi[d + 1] = std::log(b.noise_max);
  return box;
}

}  // namespace

std::string_view to_string(KernelFamily f) { return f == KernelFamily::rbf ? "rbf" : "matern52"; }

std::optional<KernelFamily> parse_kernel_family(std::string_view s) {
  if (s == "matern52") return KernelFamily::matern52;
  if (s == "rbf") return KernelFamily::rbf;
  return std::nullopt;
}

Eigen::VectorXd KernelConfig::log_params() const {
  const auto d = lengthscales.size();
  Eigen::VectorXd t(d + 2);
  for (std::size_t i = 0; i < d; ++i) t[i] = std::log(lengthscales[i]);
  t[d] = std::log(signal_variance);
  t[d + 1] = std::log(noise_variance);
  return t;
}

KernelConfig KernelConfig::from_log_params(KernelFamily family, const Eigen::VectorXd& theta) {
  KernelConfig k;
  k.family = family;
  const auto d = static_cast<std::size_t>(theta.size() - 2);
  k.lengthscales.resize(d);
  for (std::size_t i = 0; i < d; ++i) k.lengthscales[i] = std::exp(theta[i]);
  k.signal_variance = std::exp(theta[d]);
  k.noise_variance = std::exp(theta[d + 1]);
  return k;
}

bool HyperparameterBounds::contains(const KernelConfig& k) const {
  for (double l : k.lengthscales)
    if (l < lengthscale_min || l > lengthscale_max) return false;
  return k.signal_variance >= signal_min && k.signal_variance <= signal_max && k.noise_variance >= noise_min &&
         k.noise_variance <= noise_max;
}

Eigen::MatrixXd kernel_matrix(const KernelConfig& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols() || static_cast<std::size_t>(a.cols()) != k.lengthscales.size())
    throw Error(Errc::dimension_mismatch, "kernel input dimension mismatch");
  Eigen::MatrixXd out(a.rows(), b.rows());
  double kv, g;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      kernel_terms(k.family, k.signal_variance, scaled_r2(a, i, b, j, k.lengthscales), kv, g);
      out(i, j) = kv;
    }
  return out;
}

namespace {

constexpr std::size_t kHistory = 6;

Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const std::vector<Eigen::VectorXd>& s,
                                const std::vector<Eigen::VectorXd>& y) {
  Eigen::VectorXd q = g;
  std::vector<double> a(s.size());
  for (std::size_t i = s.size(); i-- > 0;) {
    a[i] = s[i].dot(q) / y[i].dot(s[i]);
    q -= a[i] * y[i];
  }
  if (!s.empty()) q *= s.back().dot(y.back()) / y.back().squaredNorm();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double b = y[i].dot(q) / y[i].dot(s[i]);
    q += (a[i] - b) * s[i];
  }
  return q;
}

}  // namespace

Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& cov, double* jitter_used) {
  Eigen::MatrixXd l;
  for (double jitter = kJitterStart; jitter <= kJitterCap * (1.0 + 1e-12); jitter *= 2.0) {
    Eigen::MatrixXd m = cov;
    m.diagonal().array() += jitter;
    if (try_cholesky(m, l)) {
      if (jitter_used) *jitter_used = jitter;
      return l;
    }
  }
  throw Error(Errc::not_positive_definite, "covariance not positive definite after jitter escalation to 1e-2");
}

MarginalLikelihood log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                           const KernelConfig& kernel, bool with_gradient) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (static_cast<std::size_t>(d) != kernel.lengthscales.size() || y.size() != n)
    throw Error(Errc::dimension_mismatch, "log marginal likelihood: inconsistent dimensions");

  Eigen::MatrixXd kf(n, n), g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double kv, gv;
      kernel_terms(kernel.family, kernel.signal_variance, scaled_r2(x, i, x, j, kernel.lengthscales), kv, gv);
      kf(i, j) = kf(j, i) = kv;
      g(i, j) = g(j, i) = gv;
    }
  Eigen::MatrixXd cov = kf;
  cov.diagonal().array() += kernel.noise_variance;

  MarginalLikelihood out;
  const Eigen::MatrixXd l = robust_cholesky(cov, &out.jitter);
  const auto lt = l.triangularView<Eigen::Lower>();
  const Eigen::VectorXd alpha = lt.transpose().solve(lt.solve(y));
  out.value = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!with_gradient) return out;

  const Eigen::MatrixXd kinv = lt.transpose().solve(lt.solve(Eigen::MatrixXd::Identity(n, n)));
  const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;
  out.gradient = Eigen::VectorXd::Zero(d + 2);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double lc = kernel.lengthscales[static_cast<std::size_t>(c)];
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) {
        const double diff = (x(i, c) - x(j, c)) / lc;
        acc += w(i, j) * g(i, j) * diff * diff;
      }
    out.gradient[c] = acc;  // symmetric off-diagonal pairs: 2 * 0.5
  }
  out.gradient[d] = 0.5 * (w.array() * kf.array()).sum();
  out.gradient[d + 1] = 0.5 * kernel.noise_variance * w.trace();
  return out;
}

GpModel GpModel::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FitOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw Error(Errc::invalid_argument, "GP fit needs at least two observations");
  if (d < 1) throw Error(Errc::invalid_argument, "GP fit needs at least one input dimension");
  if (y.size() != n) throw Error(Errc::dimension_mismatch, "GP fit: X and y row counts differ");
  check_finite(x, "X");
  check_finite(y, "y");

  GpModel m;
  m.lower_.resize(d);
  m.upper_.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    if (options.lower && options.upper) {
      if (options.lower->size() != static_cast<std::size_t>(d) || options.upper->size() != static_cast<std::size_t>(d))
        throw Error(Errc::dimension_mismatch, "GP fit: bounds dimension mismatch");
      m.lower_[c] = (*options.lower)[c];
      m.upper_[c] = (*options.upper)[c];
    } else {
      m.lower_[c] = x.col(c).minCoeff();
      m.upper_[c] = x.col(c).maxCoeff();
    }
    if (!(m.upper_[c] > m.lower_[c])) m.upper_[c] = m.lower_[c] + 1.0;
  }
  m.inputs_ = m.normalize(x);

  m.y_mean_ = y.mean();
  const double var = (y.array() - m.y_mean_).square().mean();
  const double sd = std::sqrt(var);
  m.degenerate_ = !(sd > 1e-12 * std::max(1.0, std::abs(m.y_mean_)));
  m.y_scale_ = m.degenerate_ ? 1.0 : sd;
  m.targets_ = (y.array() - m.y_mean_) / m.y_scale_;
  if (m.degenerate_) m.targets_.setZero();

  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double v = x(i, c);
      h = fnv1a(h, &v, sizeof v);
    }
    const double v = y[i];
    h = fnv1a(h, &v, sizeof v);
  }
  m.digest_ = h;

  const auto& b = options.bounds;
  const double noise_floor = options.fixed_noise.value_or(b.noise_min);
  if (options.fixed_kernel) {
    m.kernel_ = *options.fixed_kernel;
    if (m.kernel_.lengthscales.size() != static_cast<std::size_t>(d))
      throw Error(Errc::dimension_mismatch, "fixed kernel has wrong lengthscale count");
    m.factorize();
    return m;
  }
  if (m.degenerate_) {
    m.kernel_ = KernelConfig{options.family, std::vector<double>(d, 0.5), b.signal_min, noise_floor};
    m.factorize();
    return m;
  }

  const auto box = log_box(b, static_cast<std::size_t>(d));
  Eigen::VectorXd lo = box.lo, hi = box.hi;
  if (options.fixed_noise) lo[d + 1] = hi[d + 1] = std::log(*options.fixed_noise);
  auto clamp = [&](Eigen::VectorXd t) { return t.cwiseMax(lo).cwiseMin(hi).eval(); };
  auto value_at = [&](const Eigen::VectorXd& t) {
    try {
      return pmloop::log_marginal_likelihood(m.inputs_, m.targets_, KernelConfig::from_log_params(options.family, t),
                                             false)
          .value;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Eigen::VectorXd theta(d + 2);
    if (r == 0) {
      theta.head(d).setConstant(std::log(0.3));
      theta[d] = 0.0;
      theta[d + 1] = std::log(1e-4);
    } else {
      Rng rng(derive_seed(options.seed, kRestartStream, static_cast<std::uint64_t>(r)));
      for (Eigen::Index c = 0; c < d; ++c) theta[c] = rng.uniform(std::log(0.05), std::log(2.0));
      theta[d] = rng.uniform(std::log(0.2), std::log(5.0));
      theta[d + 1] = rng.uniform(std::log(1e-6), std::log(1e-2));
    }
    theta = clamp(theta);

    MarginalLikelihood cur;
    try {
      cur = pmloop::log_marginal_likelihood(m.inputs_, m.targets_,
                                            KernelConfig::from_log_params(options.family, theta));
    } catch (const Error&) {
      continue;
    }
    // Ascent direction scaled by a limited-memory inverse-curvature estimate; the
    // history resets whenever the direction stops pointing uphill.
    std::vector<Eigen::VectorXd> hs, hy;
    for (int it = 0; it < options.max_iterations; ++it) {
      Eigen::VectorXd pg = cur.gradient;
      for (Eigen::Index i = 0; i < pg.size(); ++i)
        if ((theta[i] <= lo[i] && pg[i] < 0) || (theta[i] >= hi[i] && pg[i] > 0) || lo[i] == hi[i]) pg[i] = 0;
      if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) break;

      Eigen::VectorXd dir = lbfgs_direction(pg, hs, hy);
      for (Eigen::Index i = 0; i < dir.size(); ++i)
        if (pg[i] == 0) dir[i] = 0;
      if (!(dir.dot(pg) > 0)) {
        hs.clear();
        hy.clear();
        dir = pg;
      }

      bool accepted = false;
      Eigen::VectorXd cand;
      double cand_value = 0;
      double step = hs.empty() ? std::min(1.0, 1.0 / pg.lpNorm<Eigen::Infinity>()) : 1.0;
      for (; step > 1e-12; step *= 0.5) {
        cand = clamp(theta + step * dir);
        cand_value = value_at(cand);
        if (cand_value >= cur.value + 1e-4 * pg.dot(cand - theta)) {
          accepted = true;
          break;
        }
      }
      if (!accepted || (cand - theta).lpNorm<Eigen::Infinity>() < 1e-12) break;
      MarginalLikelihood next;
      try {
        next = pmloop::log_marginal_likelihood(m.inputs_, m.targets_,
                                               KernelConfig::from_log_params(options.family, cand));
      } catch (const Error&) {
        break;
      }
      Eigen::VectorXd sv = cand - theta;
      Eigen::VectorXd yv = cur.gradient - next.gradient;
      if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
        hs.push_back(std::move(sv));
        hy.push_back(std::move(yv));
        if (hs.size() > kHistory) {
          hs.erase(hs.begin());
          hy.erase(hy.begin());
        }
      }
      theta = cand;
      cur = std::move(next);
    }
    if (cur.value > best_value) {
      best_value = cur.value;
      best_theta = theta;
    }
  }
  if (best_theta.size() == 0)
    throw Error(Errc::not_positive_definite, "GP fit: no restart produced a factorizable covariance");
  m.kernel_ = KernelConfig::from_log_params(options.family, best_theta);
  m.factorize();
  return m;
}

void GpModel::factorize() {
  Eigen::MatrixXd cov = kernel_matrix(kernel_, inputs_, inputs_);
  cov.diagonal().array() += kernel_.noise_variance;
  chol_ = robust_cholesky(cov, &jitter_);
  const Eigen::MatrixXd& l = chol_;
  const auto lt = l.triangularView<Eigen::Lower>();
  alpha_ = lt.transpose().solve(lt.solve(targets_));
  lml_ = -0.5 * targets_.dot(alpha_) - chol_.diagonal().array().log().sum() -
         0.5 * static_cast<double>(targets_.size()) * kLog2Pi;
}

MarginalLikelihood GpModel::log_marginal_likelihood(const KernelConfig& params) const {
  return pmloop::log_marginal_likelihood(inputs_, targets_, params, true);
}

Eigen::MatrixXd GpModel::normalize(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != lower_.size())
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(lower_.size()) + " input columns, got " +
                                              std::to_string(x.cols()));
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    out.col(c) = (x.col(c).array() - lower_[c]) / (upper_[c] - lower_[c]);
  return out;
}

PosteriorSlice GpModel::predict(const Eigen::MatrixXd& xq) const {
  PosteriorSlice s;
  const Eigen::MatrixXd xn = normalize(xq);
  check_finite(xq, "query points");
  if (xq.rows() == 0) return s;
  const Eigen::MatrixXd ks = kernel_matrix(kernel_, xn, inputs_);
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
  s.mean = (ks * alpha_).array() * y_scale_ + y_mean_;
  s.variance = ((kernel_.signal_variance - v.colwise().squaredNorm().array()).max(0.0) * y_scale_ * y_scale_).matrix();
  return s;
}

void GpModel::joint_posterior(const Eigen::MatrixXd& xq, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
  const Eigen::MatrixXd xn = normalize(xq);
  check_finite(xq, "query points");
  const Eigen::MatrixXd ks = kernel_matrix(kernel_, xn, inputs_);
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
  mean = ((ks * alpha_).array() * y_scale_ + y_mean_).matrix();
  cov = (kernel_matrix(kernel_, xn, xn) - v.transpose() * v) * (y_scale_ * y_scale_);
  cov = 0.5 * (cov + cov.transpose()).eval();
}

Eigen::MatrixXd GpModel::sample_posterior(const Eigen::MatrixXd& xq, int n_samples, std::uint64_t seed,
                                          double spread) const {
  if (n_samples < 1) throw Error(Errc::invalid_argument, "n_samples must be at least 1");
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  joint_posterior(xq, mean, cov);
  const Eigen::Index m = mean.size();
  Eigen::MatrixXd out(n_samples, m);
  if (m == 0) return out;
  const Eigen::MatrixXd l = robust_cholesky(cov);
  Rng rng(seed);
  Eigen::VectorXd z(m);
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
    out.row(s) = (mean + spread * (l * z)).transpose();
  }
  return out;
}

nlohmann::json GpModel::snapshot() const {
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(digest_));
  return nlohmann::json{{"kernel", to_string(kernel_.family)},
                        {"lengthscales", kernel_.lengthscales},
                        {"signal_variance", kernel_.signal_variance},
                        {"noise_variance", kernel_.noise_variance},
                        {"jitter", jitter_},
                        {"input_lower", lower_},
                        {"input_upper", upper_},
                        {"target_mean", y_mean_},
                        {"target_scale", y_scale_},
                        {"degenerate", degenerate_},
                        {"n", inputs_.rows()},
                        {"log_marginal_likelihood", lml_},
                        {"training_digest", digest}};
}

}  // namespace pmloop
