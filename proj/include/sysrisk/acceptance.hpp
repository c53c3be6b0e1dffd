#pragma once

#include <Eigen/Dense>

#include <variant>
#include <vector>

#include "sysrisk/core_model.hpp"

namespace sysrisk {

/// A = {Y : Y(w) >= c for all w}, c <= 0.
struct Pointwise {
  double c = 0.0;
};

/// One test of an expectation family: sum_i E^{P^i}[Y] + alpha >= 0.
struct ExpectationTest {
  ProbabilityVector p;
  double alpha;
};

/// Finite family of expectation tests. Each test is increasing in Y, so the
/// set is upward closed without an explicit monotone hull.
struct ExpectationFamily {
  std::vector<ExpectationTest> tests;
};

/// coefficients . Y >= rhs
struct AcceptanceInequality {
  Eigen::RowVectorXd coefficients;
  double rhs;
};

inline constexpr double kAcceptanceTolerance = 1e-9;

/// Monotone acceptance set of univariate positions containing 0.
class Acceptance {
 public:
  using Variant = std::variant<Pointwise, ExpectationFamily>;

  Acceptance(Variant spec, SpacePtr space);

  const Variant& spec() const noexcept { return spec_; }
  const SpacePtr& space() const noexcept { return space_; }
  std::string_view kind() const noexcept;

  bool is_acceptable(const Eigen::Ref<const Eigen::RowVectorXd>& y, double tol = kAcceptanceTolerance) const;

  const std::vector<AcceptanceInequality>& constraints() const noexcept { return constraints_; }

 private:
  Variant spec_;
  SpacePtr space_;
  std::vector<AcceptanceInequality> constraints_;
};

}  // namespace sysrisk
