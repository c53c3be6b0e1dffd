#include "sysrisk/core_model.hpp"

#include <cmath>

namespace sysrisk {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySpace: return "EmptySpace";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ZBelowOne: return "ZBelowOne";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotAProbability: return "NotAProbability";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InnerLPFailed: return "InnerLPFailed";
    case ErrorCode::NonMeasurablePrices: return "NonMeasurablePrices";
    case ErrorCode::InvalidFiltration: return "InvalidFiltration";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::MissingGamma: return "MissingGamma";
    case ErrorCode::DualExtractionFailed: return "DualExtractionFailed";
    case ErrorCode::NotASpan: return "NotASpan";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

std::shared_ptr<const ScenarioSpace> ScenarioSpace::build(std::vector<std::string> ids,
                                                          std::vector<double> z_values) {
  if (ids.empty()) throw Error(ErrorCode::EmptySpace, "scenario list is empty");
  if (ids.size() != z_values.size()) {
    throw Error(ErrorCode::InvalidArgument, "ids and z values differ in length");
  }
  std::shared_ptr<ScenarioSpace> space(new ScenarioSpace());
  space->z_.resize(static_cast<Index>(z_values.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const double z = z_values[k];
    if (!std::isfinite(z)) throw Error(ErrorCode::InvalidArgument, "z value is not finite");
    if (z < 1.0) throw Error(ErrorCode::ZBelowOne, "Z(" + ids[k] + ") < 1");
    if (!space->lookup_.emplace(ids[k], static_cast<Index>(k)).second) {
      throw Error(ErrorCode::DuplicateId, "scenario id '" + ids[k] + "' repeated");
    }
    space->z_(static_cast<Index>(k)) = z;
  }
  space->ids_ = std::move(ids);
  return space;
}

Index ScenarioSpace::index_of(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + id + "'");
  return it->second;
}

void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (a.get() != b.get() && (a->ids() != b->ids())) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": scenario spaces differ");
  }
}

RandomVector::RandomVector(SpacePtr space, Eigen::MatrixXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw Error(ErrorCode::InvalidArgument, "random vector without a space");
  if (values_.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "random vector needs N >= 1");
  if (values_.cols() != space_->size()) {
    throw Error(ErrorCode::DimensionMismatch, "random vector column count differs from |Omega|");
  }
  if (!values_.allFinite()) throw Error(ErrorCode::InvalidArgument, "random vector has non-finite entries");
}

RandomVector RandomVector::zero(SpacePtr space, Index agents) {
  const Index n = space->size();
  return RandomVector(std::move(space), Eigen::MatrixXd::Zero(agents, n));
}

RandomVector RandomVector::constant(SpacePtr space, const Eigen::VectorXd& c) {
  const Index n = space->size();
  return RandomVector(std::move(space), c * Eigen::RowVectorXd::Ones(n));
}

MeasureVector::MeasureVector(SpacePtr space, Eigen::MatrixXd weights)
    : space_(std::move(space)), weights_(std::move(weights)) {
  if (!space_) throw Error(ErrorCode::InvalidArgument, "measure vector without a space");
  if (weights_.rows() < 1 || weights_.cols() != space_->size()) {
    throw Error(ErrorCode::DimensionMismatch, "measure vector shape does not match the space");
  }
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "measure weights must be finite and nonnegative");
  }
}

ProbabilityVector validate_probability_vector(const SpacePtr& space, const Eigen::MatrixXd& weights,
                                              double tol) {
  if (!space || weights.rows() < 1 || weights.cols() != space->size()) {
    throw Error(ErrorCode::DimensionMismatch, "probability vector shape does not match the space");
  }
  if (!weights.allFinite()) throw Error(ErrorCode::NotAProbability, "non-finite weight");
  if (weights.minCoeff() < -tol) {
    throw Error(ErrorCode::NotAProbability, "weight below -tol");
  }
  Eigen::MatrixXd cleaned = weights.cwiseMax(0.0);
  for (Index i = 0; i < weights.rows(); ++i) {
    const double raw = weights.row(i).sum();
    if (std::abs(raw - 1.0) > tol) {
      throw Error(ErrorCode::NotAProbability, "row " + std::to_string(i) + " sums to " +
                                                  std::to_string(raw));
    }
    cleaned.row(i) /= cleaned.row(i).sum();
  }
  return ProbabilityVector(space, std::move(cleaned));
}

ProbabilityVector validate_probability_vector(const MeasureVector& mu, double tol) {
  return validate_probability_vector(mu.space(), mu.weights(), tol);
}

double pairing(const RandomVector& x, const MeasureVector& mu) {
  require_same_space(x.space(), mu.space(), "pairing");
  return pairing(x.values(), mu.weights());
}

double pairing(const RandomVector& x, const ProbabilityVector& q) {
  require_same_space(x.space(), q.space(), "pairing");
  return pairing(x.values(), q.weights());
}

}  // namespace sysrisk
