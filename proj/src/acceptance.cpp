#include "sysrisk/acceptance.hpp"

#include <cmath>

namespace sysrisk {

Acceptance::Acceptance(Variant spec, SpacePtr space) : spec_(std::move(spec)), space_(std::move(space)) {
  if (!space_) throw Error(ErrorCode::InvalidArgument, "acceptance set without a space");
  const Index n = space_->size();
  if (const auto* pw = std::get_if<Pointwise>(&spec_)) {
    if (!std::isfinite(pw->c) || pw->c > 0.0) {
      throw Error(ErrorCode::InvalidArgument, "pointwise threshold must satisfy c <= 0");
    }
    for (Index w = 0; w < n; ++w) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
      row(w) = 1.0;
      constraints_.push_back({row, pw->c});
    }
    return;
  }
  const auto& family = std::get<ExpectationFamily>(spec_);
  if (family.tests.empty()) {
    throw Error(ErrorCode::InvalidArgument, "expectation family needs at least one test");
  }
  for (const ExpectationTest& t : family.tests) {
    require_same_space(space_, t.p.space(), "expectation test");
    if (!std::isfinite(t.alpha) || t.alpha < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "expectation test penalty must be >= 0");
    }
    constraints_.push_back({t.p.aggregate(), -t.alpha});
  }
}

std::string_view Acceptance::kind() const noexcept {
  return std::holds_alternative<Pointwise>(spec_) ? "pointwise" : "expectation_family";
}

bool Acceptance::is_acceptable(const Eigen::Ref<const Eigen::RowVectorXd>& y, double tol) const {
  if (y.size() != space_->size()) throw Error(ErrorCode::DimensionMismatch, "position has wrong length");
  if (const auto* pw = std::get_if<Pointwise>(&spec_)) return y.minCoeff() >= pw->c - tol;
  for (const ExpectationTest& t : std::get<ExpectationFamily>(spec_).tests) {
    // sum_i E^{P^i}[Y], evaluated agent by agent.
    double total = 0.0;
    for (Index i = 0; i < t.p.agents(); ++i) total += t.p.weights().row(i).dot(y);
    if (total + t.alpha < -tol) return false;
  }
  return true;
}

}  // namespace sysrisk
