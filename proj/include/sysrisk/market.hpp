#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "sysrisk/core_model.hpp"

namespace sysrisk {

enum class MarketMode { Span, Cone };

/// Achievable zero-cost payoffs: all linear (span) or nonnegative (cone)
/// combinations of the basis. The empty combination puts 0 in the set.
class MarketSet {
 public:
  MarketSet(SpacePtr space, Index agents, MarketMode mode, std::vector<RandomVector> basis,
            bool per_agent = false);

  static MarketSet trivial(SpacePtr space, Index agents);

  const SpacePtr& space() const noexcept { return space_; }
  Index agents() const noexcept { return agents_; }
  MarketMode mode() const noexcept { return mode_; }
  bool per_agent() const noexcept { return per_agent_; }
  const std::vector<RandomVector>& basis() const noexcept { return basis_; }
  Index size() const noexcept { return static_cast<Index>(basis_.size()); }

  /// sum_k coefficients(k) * basis[k], as an N x |Omega| matrix.
  Eigen::MatrixXd payoff(const Eigen::Ref<const Eigen::VectorXd>& coefficients) const;

 private:
  SpacePtr space_;
  Index agents_;
  MarketMode mode_;
  std::vector<RandomVector> basis_;
  bool per_agent_;
};

/// Per-scenario price paths: prices[w] is (T+1) x (J+1), column 0 the
/// numeraire.
struct PricePaths {
  Index periods = 0;
  Index assets = 0;
  std::vector<Eigen::MatrixXd> prices;
};

/// Cells of scenario indices.
using Partition = std::vector<std::vector<Index>>;

/// One-step discounted gains 1_cell * (S_{t+1}^j / S_{t+1}^0 - S_t^j / S_t^0)
/// for every period t, every cell of filtration[t] and every risky asset j,
/// placed in each agent coordinate listed in agent_assignment[j - 1].
/// Their span is the set of terminal discounted gains of predictable
/// self-financing strategies started at zero cost.
std::vector<RandomVector> build_gain_basis(const SpacePtr& space, Index agents, const PricePaths& paths,
                                           const std::vector<std::vector<Index>>& agent_assignment,
                                           const std::vector<Partition>& filtration);

struct MarketArbitrage {
  Index agent;
  Eigen::VectorXd coefficients;
  double min_payoff;
};

/// Looks for a single-agent payoff (0, ..., g^i, ..., 0) in G with g^i >= eps
/// everywhere. The certificate is the minimum-l1 coefficient vector.
std::optional<MarketArbitrage> contains_market_arbitrage(const MarketSet& market, double eps);

}  // namespace sysrisk
