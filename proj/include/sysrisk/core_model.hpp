#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sysrisk/error.hpp"

namespace sysrisk {

using Index = Eigen::Index;

/// Finite sample space. Scenario order is fixed here and every matrix in the
/// library indexes columns by it.
class ScenarioSpace {
 public:
  /// Validates and builds a space. Throws EmptySpace, DuplicateId, ZBelowOne
  /// or InvalidArgument (length mismatch, non-finite z).
  static std::shared_ptr<const ScenarioSpace> build(std::vector<std::string> ids,
                                                    std::vector<double> z_values);

  Index size() const noexcept { return static_cast<Index>(ids_.size()); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Eigen::VectorXd& z() const noexcept { return z_; }
  double max_z() const noexcept { return z_.maxCoeff(); }

  /// Position of a label; throws InvalidArgument when unknown.
  Index index_of(const std::string& id) const;

 private:
  ScenarioSpace() = default;

  std::vector<std::string> ids_;
  Eigen::VectorXd z_;
  std::unordered_map<std::string, Index> lookup_;
};

using SpacePtr = std::shared_ptr<const ScenarioSpace>;

/// N-agent payoff profile: entry (i, w) is agent i's payoff in scenario w.
class RandomVector {
 public:
  RandomVector(SpacePtr space, Eigen::MatrixXd values);

  static RandomVector zero(SpacePtr space, Index agents);
  /// Each agent i receives the scenario-independent amount c[i].
  static RandomVector constant(SpacePtr space, const Eigen::VectorXd& c);

  const SpacePtr& space() const noexcept { return space_; }
  Index agents() const noexcept { return values_.rows(); }
  Index scenarios() const noexcept { return values_.cols(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }

 private:
  SpacePtr space_;
  Eigen::MatrixXd values_;
};

/// Vector of nonnegative measures, one row per agent.
class MeasureVector {
 public:
  MeasureVector(SpacePtr space, Eigen::MatrixXd weights);

  const SpacePtr& space() const noexcept { return space_; }
  Index agents() const noexcept { return weights_.rows(); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

 private:
  SpacePtr space_;
  Eigen::MatrixXd weights_;
};

/// Vector of probability measures. Only obtainable through
/// validate_probability_vector, so every row sums to one.
class ProbabilityVector {
 public:
  const SpacePtr& space() const noexcept { return space_; }
  Index agents() const noexcept { return weights_.rows(); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  MeasureVector as_measure() const { return MeasureVector(space_, weights_); }

  /// Sum over agents of each scenario weight; the univariate measure seen by a
  /// payoff shared by all agents.
  Eigen::RowVectorXd aggregate() const { return weights_.colwise().sum(); }

 private:
  friend ProbabilityVector validate_probability_vector(const SpacePtr&, const Eigen::MatrixXd&,
                                                       double);
  ProbabilityVector(SpacePtr space, Eigen::MatrixXd weights)
      : space_(std::move(space)), weights_(std::move(weights)) {}

  SpacePtr space_;
  Eigen::MatrixXd weights_;
};

inline constexpr double kProbabilityTolerance = 1e-10;

/// Accepts rows summing to 1 +- tol with no weight below -tol. Small negatives
/// are clamped to zero and each row renormalized. Throws NotAProbability.
ProbabilityVector validate_probability_vector(const SpacePtr& space,
                                              const Eigen::MatrixXd& weights,
                                              double tol = kProbabilityTolerance);

ProbabilityVector validate_probability_vector(const MeasureVector& mu,
                                              double tol = kProbabilityTolerance);

/// Bilinear pairing sum_i sum_w X(i,w) mu(i,w) on raw matrices.
template <typename DerivedX, typename DerivedM>
double pairing(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedM>& mu) {
  if (x.rows() != mu.rows() || x.cols() != mu.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "pairing operands differ in shape");
  }
  return x.cwiseProduct(mu).sum();
}

double pairing(const RandomVector& x, const MeasureVector& mu);
double pairing(const RandomVector& x, const ProbabilityVector& q);

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what);

}  // namespace sysrisk
