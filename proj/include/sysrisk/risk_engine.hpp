#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sysrisk/acceptance.hpp"
#include "sysrisk/aggregation.hpp"
#include "sysrisk/core_model.hpp"
#include "sysrisk/lp.hpp"
#include "sysrisk/market.hpp"

namespace sysrisk {

/// A complete risk measurement setup. All parts share one scenario space and
/// one agent count; `gamma_agg` is only needed for the rho_Gamma variant.
struct Instance {
  SpacePtr space;
  Index agents;
  Aggregation lambda;
  Acceptance acceptance;
  MarketSet market;
  std::optional<Aggregation> gamma_agg;

  /// Throws DimensionMismatch when the parts disagree.
  void validate() const;
};

/// rho: capital added before aggregation and trades aggregated together with
/// the position. RhoGamma: trades aggregated separately through Gamma.
enum class Measure { Rho, RhoGamma };

enum class RiskStatus { Finite, MinusInfinity, PlusInfinity };

std::string_view to_string(RiskStatus status) noexcept;

/// Primal program plus the variable/row layout needed to read results back.
struct PrimalProgram {
  lp::LinearProgram lp;
  std::vector<Index> allocation_vars;
  std::vector<Index> trade_vars;
  // coupling_rows(i, w): row pinning agent i's aggregation input in scenario w
  // to m_i + X(i, w) (+ trade payoff for rho).
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> coupling_rows;
};

PrimalProgram assemble_primal(const Instance& inst, const RandomVector& x, Measure measure = Measure::Rho);

struct RiskResult {
  RiskStatus status = RiskStatus::PlusInfinity;
  double value = 0.0;
  Eigen::VectorXd allocation;  // m*; a feasible allocation when MinusInfinity
  Eigen::VectorXd trade;       // basis coefficients of g*
  // Improving direction of (m, h) when MinusInfinity.
  Eigen::VectorXd allocation_ray;
  Eigen::VectorXd trade_ray;
  std::shared_ptr<const lp::LinearProgram> program;
};

RiskResult compute_risk(const Instance& inst, const RandomVector& x, Measure measure);
RiskResult compute_rho(const Instance& inst, const RandomVector& x);
/// Throws MissingGamma when the instance has no Gamma.
RiskResult compute_rho_gamma(const Instance& inst, const RandomVector& x);

/// rho(0), or -infinity when the primal is unbounded.
double compute_gamma(const Instance& inst, Measure measure = Measure::Rho);

struct PenaltyParts {
  double acceptance = 0.0;  // sigma of Lambda^{-1}(A) at Q (or of the Gamma set)
  double market = 0.0;      // sigma_G(-Q); 0 for the Gamma variant
  double total() const { return acceptance + market; }
};

struct DualResult {
  ProbabilityVector q;
  double primal_value;
  double expectation;       // sum_i E^{Q_i}[-X^i]
  double penalty;           // reconstructed through support functions
  double multiplier_penalty;  // read off the primal LP multipliers
  PenaltyParts decomposition;
  double dual_value;
  double gap() const { return dual_value - primal_value; }
};

struct DualOptions {
  double probability_tol = 1e-9;
};

/// Dual optimizer read from the primal multipliers, with the penalty
/// recomputed independently. Throws DualExtractionFailed when the primal is
/// not finite or the multipliers are not a probability vector.
DualResult compute_dual(const Instance& inst, const RandomVector& x, Measure measure = Measure::Rho,
                        const DualOptions& options = {});

/// sup { sum_i E^{Q_i}[-W^i] : Lambda(W) in A }, +infinity when unbounded.
double support_acceptance(const Instance& inst, const ProbabilityVector& q);

/// sigma_G(sign * Q) = sup_{g in G} sum_i E^{sign Q_i}[-g^i].
double support_market(const MarketSet& market, const ProbabilityVector& q, int sign, double tol = 1e-9);

/// sup { sum_i E^{Q_i}[-W^i] : Lambda(W) + Gamma(g) in A for some g in G }.
double support_gamma_set(const Instance& inst, const ProbabilityVector& q);

/// (sigma_{Lambda^{-1}(A)}(Q), sigma_G(-Q)).
PenaltyParts penalty_decomposition(const Instance& inst, const ProbabilityVector& q);

/// |sum_i E^{Q_i}[g^i]| <= tol for every basis element. Throws NotASpan in
/// cone mode.
bool is_fair(const ProbabilityVector& q, const MarketSet& market, double tol);

struct ArbitrageCertificate {
  Eigen::VectorXd allocation;
  Eigen::VectorXd trade;
  double total;
};

struct ArbitrageVerdict {
  double gamma;
  double gamma_star;  // -infinity when rho(0) is unbounded
  bool arbitrage_free;
  std::optional<ArbitrageCertificate> certificate;
  std::vector<std::string> warnings;
};

ArbitrageVerdict detect_regulatory_arbitrage(const Instance& inst, double gamma,
                                             Measure measure = Measure::Rho);

struct FairMeasureReport {
  double gamma;
  double gamma_star;
  std::optional<ProbabilityVector> q;
  std::uint64_t seed;
  int samples = 0;
  double worst_slack = 0.0;  // min over samples of sum_i E^{Q_i}[X^i] - gamma
  bool validated = false;
};

FairMeasureReport find_fair_measure(const Instance& inst, double gamma, Measure measure = Measure::Rho,
                                    std::uint64_t seed = 20240601, int samples = 200);

struct AssumptionAStep {
  int n;
  bool success;
  Eigen::VectorXd witness;  // trade coefficients making the shifted position acceptable
  double implied_rho;       // rho(-n (Z - z_n)^+ 1)
  bool bound_holds;         // implied_rho <= N / n + gamma
};

struct AssumptionAReport {
  double gamma;
  double z;
  std::vector<AssumptionAStep> steps;
  std::optional<int> n0;  // every n in [n0, n_max] succeeded
  bool all_hold() const;
};

/// Checks condition (A) at finite scale for n = 1..n_max with z = max Z, so
/// the (Z - z)^+ term vanishes. Failures are reported, not thrown.
AssumptionAReport check_assumption_a(const Instance& inst, double gamma, int n_max,
                                     Measure measure = Measure::Rho);

}  // namespace sysrisk
