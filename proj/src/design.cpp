#include "pmloop/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/sobol.hpp>

#include "pmloop/error.hpp"
#include "pmloop/random.hpp"

namespace pmloop {

void Box::validate() const {
  if (lower.empty() || lower.size() != upper.size())
    throw Error(Errc::dimension_mismatch, "bounds need matching, non-empty lower and upper lists");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw Error(Errc::non_finite_input, "bounds must be finite");
    if (!(upper[i] > lower[i])) throw Error(Errc::invalid_argument, "upper bound must exceed lower bound");
  }
}

bool Box::contains(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  return true;
}

Eigen::VectorXd Box::from_unit(const Eigen::VectorXd& u) const {
  Eigen::VectorXd x(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    x[i] = std::clamp(lower[i] + u[i] * (upper[i] - lower[i]), lower[i], upper[i]);
  return x;
}

Eigen::VectorXd Box::to_unit(const Eigen::VectorXd& x) const {
  Eigen::VectorXd u(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = (x[i] - lower[i]) / (upper[i] - lower[i]);
  return u;
}

std::string to_string(DesignMethod m) {
  switch (m) {
    case DesignMethod::lhs: return "lhs";
    case DesignMethod::sobol: return "sobol";
    case DesignMethod::uniform: return "uniform";
  }
  return "lhs";
}

DesignMethod parse_design_method(const std::string& s) {
  if (s == "lhs") return DesignMethod::lhs;
  if (s == "sobol") return DesignMethod::sobol;
  if (s == "uniform") return DesignMethod::uniform;
  throw Error(Errc::invalid_argument, "unknown init_method '" + s + "'");
}

struct SobolSequence::Engine {
  explicit Engine(std::size_t d) : gen(d) {}
  boost::random::sobol gen;
};

SobolSequence::SobolSequence(std::size_t dim, std::uint64_t seed) : engine_(std::make_unique<Engine>(dim)) {
  Rng rng(seed);
  shift_.resize(dim);
  for (auto& s : shift_) s = rng.next();
}

SobolSequence::~SobolSequence() = default;
SobolSequence::SobolSequence(SobolSequence&&) noexcept = default;
SobolSequence& SobolSequence::operator=(SobolSequence&&) noexcept = default;

Eigen::VectorXd SobolSequence::next() {
  Eigen::VectorXd u(static_cast<Eigen::Index>(shift_.size()));
  for (std::size_t i = 0; i < shift_.size(); ++i) {
    const std::uint64_t v = static_cast<std::uint64_t>(engine_->gen()) ^ shift_[i];
    u[static_cast<Eigen::Index>(i)] = static_cast<double>(v >> 11) * 0x1.0p-53;
  }
  return u;
}

Eigen::MatrixXd initial_design(const Box& box, int n, DesignMethod method, std::uint64_t seed) {
  box.validate();
  if (n < 1) throw Error(Errc::invalid_argument, "initial design needs at least one point");
  const auto d = static_cast<Eigen::Index>(box.dim());
  Eigen::MatrixXd u(n, d);
  Rng rng(seed);
  switch (method) {
    case DesignMethod::lhs: {
      std::vector<int> perm(static_cast<std::size_t>(n));
      for (Eigen::Index c = 0; c < d; ++c) {
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
        for (int i = 0; i < n; ++i) u(i, c) = (perm[i] + rng.uniform()) / n;
      }
      break;
    }
    case DesignMethod::sobol: {
      SobolSequence seq(box.dim(), seed);
      for (int i = 0; i < n; ++i) u.row(i) = seq.next().transpose();
      break;
    }
    case DesignMethod::uniform:
      for (int i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < d; ++c) u(i, c) = rng.uniform();
      break;
  }
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) x.row(i) = box.from_unit(u.row(i).transpose()).transpose();
  return x;
}

}  // namespace pmloop
