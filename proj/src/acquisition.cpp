#include "pmloop/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmloop/error.hpp"
#include "pmloop/gp.hpp"
#include "pmloop/random.hpp"

namespace pmloop {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr std::uint64_t kSeedStream = 0x51;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

void check_finite(std::initializer_list<double> vals) {
  for (double v : vals)
    if (!std::isfinite(v)) throw Error(Errc::non_finite_input, "acquisition inputs must be finite");
}

void check_sd(double sd) {
  if (sd < 0) throw Error(Errc::invalid_argument, "standard deviation must be non-negative");
}

void check_reference(const std::vector<Point>& front, const Point& r, std::size_t m) {
  if (r.size() != m) throw Error(Errc::invalid_reference, "reference point has wrong length");
  for (double v : r)
    if (!std::isfinite(v)) throw Error(Errc::invalid_reference, "reference point must be finite");
  for (const auto& p : front)
    if (p.size() != m) throw Error(Errc::dimension_mismatch, "front point has wrong length");
}

}  // namespace

std::string to_string(AcqKind k) {
  switch (k) {
    case AcqKind::ei: return "EI";
    case AcqKind::pi: return "PI";
    case AcqKind::lcb: return "LCB";
    case AcqKind::ehvi: return "EHVI";
    case AcqKind::qehvi: return "qEHVI";
  }
  return "EI";
}

AcqKind parse_acq_kind(const std::string& s) {
  std::string u;
  for (char c : s) u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "EI") return AcqKind::ei;
  if (u == "PI") return AcqKind::pi;
  if (u == "LCB") return AcqKind::lcb;
  if (u == "EHVI") return AcqKind::ehvi;
  if (u == "QEHVI") return AcqKind::qehvi;
  throw Error(Errc::invalid_argument, "unknown acquisition '" + s + "'");
}

void AcquisitionSpec::validate() const {
  if (q < 1) throw Error(Errc::invalid_config, "q must be at least 1");
  if (q > 1 && kind != AcqKind::qehvi) throw Error(Errc::invalid_config, "q > 1 requires qEHVI");
  if (!(beta >= 0) || !std::isfinite(beta)) throw Error(Errc::invalid_config, "beta must be a finite value >= 0");
  if (mc_samples < 1) throw Error(Errc::invalid_config, "mc_samples must be positive");
}

double expected_improvement(double mean, double sd, double incumbent) {
  check_finite({mean, sd, incumbent});
  check_sd(sd);
  const double diff = mean - incumbent;
  if (sd == 0) return std::max(diff, 0.0);
  const double z = diff / sd;
  return std::max(0.0, diff * cdf(z) + sd * pdf(z));
}

double probability_of_improvement(double mean, double sd, double incumbent) {
  check_finite({mean, sd, incumbent});
  check_sd(sd);
  if (sd == 0) return mean > incumbent ? 1.0 : 0.0;
  return cdf((mean - incumbent) / sd);
}

double lower_confidence_bound(double mean, double sd, double beta) {
  check_finite({mean, sd, beta});
  check_sd(sd);
  if (beta < 0) throw Error(Errc::invalid_argument, "beta must be >= 0");
  return mean - beta * sd;
}

double normal_partial_moment(double mean, double sd, double h) {
  if (h == std::numeric_limits<double>::infinity()) return 0.0;
  if (sd == 0) return std::max(mean - h, 0.0);
  const double z = (mean - h) / sd;
  return std::max(0.0, sd * pdf(z) + (mean - h) * cdf(z));
}

double ehvi_exact(const Point& mean, const Point& sd, const std::vector<Point>& front, const Point& r) {
  if (mean.size() != 2 || sd.size() != 2) throw Error(Errc::dimension_mismatch, "exact EHVI needs two objectives");
  check_reference(front, r, 2);
  check_finite({mean[0], mean[1], sd[0], sd[1]});
  check_sd(sd[0]);
  check_sd(sd[1]);

  std::vector<Point> pts;
  for (const auto& p : front)
    if (p[0] > r[0] && p[1] > r[1]) pts.push_back(p);
  if (!pts.empty()) {
    std::vector<Point> nd;
    for (auto i : pareto_front(pts)) nd.push_back(pts[i]);
    pts = std::move(nd);
  }
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a[0] < b[0]; });

  // Vertical strips between consecutive front abscissae; within strip j the
  // front already covers everything below height h_j.
  const std::size_t k = pts.size();
  double total = 0;
  for (std::size_t j = 0; j <= k; ++j) {
    const double a = j == 0 ? r[0] : pts[j - 1][0];
    const double b = j == k ? std::numeric_limits<double>::infinity() : pts[j][0];
    const double h = j == k ? r[1] : pts[j][1];
    const double width = normal_partial_moment(mean[0], sd[0], a) - normal_partial_moment(mean[0], sd[0], b);
    if (width <= 0) continue;
    total += width * normal_partial_moment(mean[1], sd[1], h);
  }
  return std::max(total, 0.0);
}

double ehvi_exact(const std::vector<const GpModel*>& models, const Eigen::VectorXd& x,
                  const std::vector<Point>& front, const Point& r) {
  if (models.size() != 2) throw Error(Errc::dimension_mismatch, "exact EHVI needs two objectives");
  Point mean(2), sd(2);
  const Eigen::MatrixXd q = x.transpose();
  for (std::size_t k = 0; k < 2; ++k) {
    const auto p = models[k]->predict(q);
    mean[k] = p.mean[0];
    sd[k] = std::sqrt(std::max(p.variance[0], 0.0));
  }
  return ehvi_exact(mean, sd, front, r);
}

double qehvi_mc(const std::vector<Eigen::VectorXd>& means, const std::vector<Eigen::MatrixXd>& covs,
                const std::vector<Point>& front, const Point& r, const AcquisitionSpec& spec,
                double* std_error) {
  const std::size_t m = means.size();
  if (m == 0 || covs.size() != m) throw Error(Errc::dimension_mismatch, "one posterior per objective expected");
  check_reference(front, r, m);
  const Eigen::Index q = means.front().size();
  if (q < 1) throw Error(Errc::dimension_mismatch, "empty batch");
  for (std::size_t k = 0; k < m; ++k)
    if (means[k].size() != q || covs[k].rows() != q || covs[k].cols() != q)
      throw Error(Errc::dimension_mismatch, "posterior shapes disagree");
  if (spec.mc_samples < 1) throw Error(Errc::invalid_argument, "mc_samples must be positive");

  std::vector<Eigen::MatrixXd> chol(m);
  for (std::size_t k = 0; k < m; ++k) chol[k] = robust_cholesky(covs[k]) * spec.beta;

  std::vector<Point> base;
  for (const auto& p : front) {
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) ok = p[i] > r[i];
    if (ok) base.push_back(p);
  }
  const double hv0 = hypervolume(base, r).value;

  // Common random numbers: the draw sequence depends only on the seed.
  Rng rng(spec.seed);
  Eigen::VectorXd z(q);
  std::vector<Point> pts = base;
  pts.resize(base.size() + static_cast<std::size_t>(q), Point(m));
  double total = 0, total_sq = 0;
  for (int s = 0; s < spec.mc_samples; ++s) {
    for (std::size_t k = 0; k < m; ++k) {
      for (Eigen::Index i = 0; i < q; ++i) z[i] = rng.normal();
      const Eigen::VectorXd y = means[k] + chol[k] * z;
      for (Eigen::Index i = 0; i < q; ++i) pts[base.size() + static_cast<std::size_t>(i)][k] = y[i];
    }
    const double gain = std::max(0.0, hypervolume(pts, r).value - hv0);
    total += gain;
    total_sq += gain * gain;
  }
  const double n = spec.mc_samples;
  const double mean = total / n;
  if (std_error) *std_error = n > 1 ? std::sqrt(std::max(0.0, (total_sq - n * mean * mean) / (n - 1)) / n) : 0.0;
  return mean;
}

double qehvi_mc(const std::vector<const GpModel*>& models, const Eigen::MatrixXd& x_batch,
                const std::vector<Point>& front, const Point& r, const AcquisitionSpec& spec,
                double* std_error) {
  std::vector<Eigen::VectorXd> means(models.size());
  std::vector<Eigen::MatrixXd> covs(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) models[k]->joint_posterior(x_batch, means[k], covs[k]);
  return qehvi_mc(means, covs, front, r, spec, std_error);
}

void CostModel::validate() const {
  if (mode == Mode::discrete) {
    if (levels.empty() || levels.size() != ratios.size())
      throw Error(Errc::invalid_config, "discrete cost model needs one ratio per level");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!(levels[i] >= 0 && levels[i] <= 1)) throw Error(Errc::invalid_config, "fidelity levels must lie in [0,1]");
      if (i > 0 && !(levels[i] > levels[i - 1]))
        throw Error(Errc::invalid_config, "fidelity levels must be strictly increasing");
      if (!(ratios[i] > 0) || !std::isfinite(ratios[i])) throw Error(Errc::invalid_config, "costs must be positive");
    }
    if (levels.back() != 1.0) throw Error(Errc::invalid_config, "the highest fidelity level must be 1");
  } else {
    if (!(c0 >= 0) || !std::isfinite(c0) || !(exponent > 0) || !std::isfinite(exponent))
      throw Error(Errc::invalid_config, "continuous cost needs c0 >= 0 and exponent > 0");
    if (!(c0 > 0)) throw Error(Errc::invalid_config, "c0 must be positive so that every cost is positive");
  }
}

bool CostModel::valid_level(double s) const {
  if (mode == Mode::discrete) return std::find(levels.begin(), levels.end(), s) != levels.end();
  return s >= 0 && s <= 1;
}

double CostModel::cost(double s) const {
  if (mode == Mode::discrete) {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i] == s) return ratios[i];
    throw Error(Errc::unknown_fidelity, "fidelity " + std::to_string(s) + " is not a configured level");
  }
  if (!(s >= 0 && s <= 1)) throw Error(Errc::unknown_fidelity, "fidelity must lie in [0,1]");
  return c0 + std::pow(s, exponent);
}

double CostModel::min_cost() const {
  if (mode == Mode::discrete) return *std::min_element(ratios.begin(), ratios.end());
  return c0;
}

CostModel CostModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_config, "fidelity must be an object");
  CostModel c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    if (key != "mode" && key != "levels" && key != "ratios" && key != "c0" && key != "exponent")
      throw Error(Errc::invalid_config, "fidelity: unknown field '" + key + "'");
  }
  try {
    const std::string mode = j.value("mode", "continuous");
    if (mode == "discrete")
      c.mode = Mode::discrete;
    else if (mode == "continuous")
      c.mode = Mode::continuous;
    else
      throw Error(Errc::invalid_config, "fidelity.mode must be continuous or discrete");
    if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
    if (j.contains("ratios")) c.ratios = j.at("ratios").get<std::vector<double>>();
    if (j.contains("c0")) c.c0 = j.at("c0").get<double>();
    if (j.contains("exponent")) c.exponent = j.at("exponent").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("fidelity: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json CostModel::to_json() const {
  if (mode == Mode::discrete) return {{"mode", "discrete"}, {"levels", levels}, {"ratios", ratios}};
  return {{"mode", "continuous"}, {"c0", c0}, {"exponent", exponent}};
}

double cost_weighted(double acq_value, double fidelity, const CostModel& cost) {
  return acq_value / cost.cost(fidelity);
}

FidelityDomain FidelityDomain::discrete(std::vector<double> levels) {
  FidelityDomain d;
  d.active = true;
  d.levels = std::move(levels);
  return d;
}

FidelityDomain FidelityDomain::range(double lo, double hi) {
  FidelityDomain d;
  d.active = true;
  d.continuous = true;
  d.lower = lo;
  d.upper = hi;
  return d;
}

namespace {

struct Trial {
  Eigen::VectorXd u;  // unit-cube coordinates, fidelity last when continuous
  int level = -1;
  double value = kNegInf;
};

class BatchSearch {
 public:
  BatchSearch(const BatchScore& score, const Box& bounds, const FidelityDomain& fid,
              std::vector<Candidate> fixed)
      : score_(score), bounds_(bounds), fid_(fid), batch_(std::move(fixed)) {
    batch_.emplace_back();
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(bounds_.dim()) + (fid_.continuous ? 1 : 0); }

  Candidate candidate(const Eigen::VectorXd& u, int level) const {
    Candidate c;
    const auto d = static_cast<Eigen::Index>(bounds_.dim());
    c.x = bounds_.from_unit(u.head(d));
    if (fid_.active) {
      if (fid_.continuous)
        c.fidelity = std::clamp(fid_.lower + u[d] * (fid_.upper - fid_.lower), fid_.lower, fid_.upper);
      else
        c.fidelity = fid_.levels[static_cast<std::size_t>(level)];
    }
    return c;
  }

  double eval(const Eigen::VectorXd& u, int level) {
    batch_.back() = candidate(u, level);
    const double v = score_(batch_);
    return std::isfinite(v) ? v : kNegInf;
  }

  // Bounded Nelder-Mead on the unit cube; infeasible moves are projected.
  Trial refine(Trial start, int iterations) {
    const Eigen::Index n = dim();
    auto project = [](Eigen::VectorXd v) { return v.cwiseMax(0.0).cwiseMin(1.0).eval(); };
    std::vector<Eigen::VectorXd> simplex{start.u};
    std::vector<double> f{start.value};
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd v = start.u;
      v[i] += v[i] + 0.05 <= 1.0 ? 0.05 : -0.05;
      simplex.push_back(project(v));
      f.push_back(eval(simplex.back(), start.level));
    }
    std::vector<std::size_t> idx(simplex.size());
    for (int it = 0; it < iterations; ++it) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
      const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i + 1 < idx.size(); ++i) centroid += simplex[idx[i]];
      centroid /= static_cast<double>(n);

      const Eigen::VectorXd xr = project(centroid + (centroid - simplex[worst]));
      const double fr = eval(xr, start.level);
      if (fr > f[best]) {
        const Eigen::VectorXd xe = project(centroid + 2.0 * (centroid - simplex[worst]));
        const double fe = eval(xe, start.level);
        if (fe > fr) {
          simplex[worst] = xe;
          f[worst] = fe;
        } else {
          simplex[worst] = xr;
          f[worst] = fr;
        }
      } else if (fr > f[second]) {
        simplex[worst] = xr;
        f[worst] = fr;
      } else {
        const bool outside = fr > f[worst];
        const Eigen::VectorXd xc = outside ? project(centroid + 0.5 * (xr - centroid))
                                           : project(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(xc, start.level);
        if (fc > (outside ? fr : f[worst])) {
          simplex[worst] = xc;
          f[worst] = fc;
        } else {
          for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) continue;
            simplex[i] = project(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
            f[i] = eval(simplex[i], start.level);
          }
        }
      }
    }
    const auto top = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
    if (f[top] > start.value) {
      start.u = simplex[top];
      start.value = f[top];
    }
    return start;
  }

 private:
  const BatchScore& score_;
  const Box& bounds_;
  const FidelityDomain& fid_;
  std::vector<Candidate> batch_;
};

}  // namespace

std::vector<Candidate> optimize_acquisition(const BatchScore& score, const Box& bounds, int q,
                                            const FidelityDomain& fidelity, std::uint64_t seed,
                                            const OptimizerOptions& options) {
  bounds.validate();
  if (q < 1) throw Error(Errc::invalid_argument, "q must be at least 1");
  if (fidelity.active && !fidelity.continuous && fidelity.levels.empty())
    throw Error(Errc::invalid_argument, "discrete fidelity domain has no levels");

  std::vector<Candidate> chosen;
  for (int j = 0; j < q; ++j) {
    const double base = j == 0 ? 0.0 : score(chosen);
    BatchSearch search(score, bounds, fidelity, chosen);
    SobolSequence seq(static_cast<std::size_t>(search.dim()), derive_seed(seed, kSeedStream, static_cast<std::uint64_t>(j)));
    const int levels = fidelity.active && !fidelity.continuous ? static_cast<int>(fidelity.levels.size()) : 1;

    std::vector<Trial> trials;
    trials.reserve(static_cast<std::size_t>(options.seeds * levels));
    for (int i = 0; i < options.seeds; ++i) {
      const Eigen::VectorXd u = seq.next();
      for (int l = 0; l < levels; ++l) {
        Trial t{u, fidelity.active && !fidelity.continuous ? l : -1, 0};
        t.value = search.eval(u, t.level);
        trials.push_back(std::move(t));
      }
    }
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(options.refine, 1)), trials.size());
    std::stable_sort(trials.begin(), trials.end(), [](const Trial& a, const Trial& b) { return a.value > b.value; });
    trials.resize(keep);

    Trial best = trials.front();
    for (auto& t : trials) {
      Trial r = search.refine(t, options.nm_iterations);
      if (r.value > best.value) best = r;
    }
    Candidate c = search.candidate(best.u, best.level);
    c.score = std::isfinite(best.value) ? best.value - base : 0.0;
    chosen.push_back(std::move(c));
  }
  std::stable_sort(chosen.begin(), chosen.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  return chosen;
}

}  // namespace pmloop
