#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmloop {

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  void validate() const;
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
};

enum class DesignMethod { lhs, sobol, uniform };

std::string to_string(DesignMethod m);
DesignMethod parse_design_method(const std::string& s);

// Digitally shifted Sobol points in [0,1)^d. The all-zero point is skipped.
class SobolSequence {
 public:
  SobolSequence(std::size_t dim, std::uint64_t seed);
  ~SobolSequence();
  SobolSequence(SobolSequence&&) noexcept;
  SobolSequence& operator=(SobolSequence&&) noexcept;

  Eigen::VectorXd next();
  std::size_t dim() const { return shift_.size(); }

 private:
  struct Engine;
  std::unique_ptr<Engine> engine_;
  std::vector<std::uint64_t> shift_;
};

// Rows are points in the original units of `box`.
Eigen::MatrixXd initial_design(const Box& box, int n, DesignMethod method, std::uint64_t seed);

}  // namespace pmloop
