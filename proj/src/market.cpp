#include "sysrisk/market.hpp"

#include <algorithm>
#include <cmath>

#include "sysrisk/lp.hpp"

namespace sysrisk {

MarketSet::MarketSet(SpacePtr space, Index agents, MarketMode mode, std::vector<RandomVector> basis,
                     bool per_agent)
    : space_(std::move(space)), agents_(agents), mode_(mode), basis_(std::move(basis)), per_agent_(per_agent) {
  if (!space_ || agents_ < 1) throw Error(ErrorCode::InvalidArgument, "market needs a space and N >= 1");
  for (const RandomVector& g : basis_) {
    require_same_space(space_, g.space(), "market basis");
    if (g.agents() != agents_) throw Error(ErrorCode::DimensionMismatch, "market basis vector has wrong N");
    if (per_agent_) {
      const Index support = (g.values().rowwise().squaredNorm().array() > 0.0).count();
      if (support > 1) {
        throw Error(ErrorCode::InvalidArgument, "per-agent basis vector touches more than one agent");
      }
    }
  }
}

MarketSet MarketSet::trivial(SpacePtr space, Index agents) {
  return MarketSet(std::move(space), agents, MarketMode::Span, {}, true);
}

Eigen::MatrixXd MarketSet::payoff(const Eigen::Ref<const Eigen::VectorXd>& coefficients) const {
  if (coefficients.size() != size()) throw Error(ErrorCode::DimensionMismatch, "coefficient count differs from basis");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(agents_, space_->size());
  for (Index k = 0; k < size(); ++k) out += coefficients(k) * basis_[static_cast<std::size_t>(k)].values();
  return out;
}

namespace {

void validate_filtration(const std::vector<Partition>& filtration, Index periods, Index scenarios) {
  if (static_cast<Index>(filtration.size()) != periods) {
    throw Error(ErrorCode::InvalidFiltration, "need one partition per trading period");
  }
  std::vector<Index> parent(static_cast<std::size_t>(scenarios), -1);
  for (Index t = 0; t < periods; ++t) {
    const Partition& cells = filtration[static_cast<std::size_t>(t)];
    std::vector<Index> owner(static_cast<std::size_t>(scenarios), -1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) throw Error(ErrorCode::InvalidFiltration, "empty cell");
      for (Index w : cells[c]) {
        if (w < 0 || w >= scenarios) throw Error(ErrorCode::InvalidFiltration, "cell references unknown scenario");
        if (owner[static_cast<std::size_t>(w)] >= 0) throw Error(ErrorCode::InvalidFiltration, "cells overlap");
        owner[static_cast<std::size_t>(w)] = static_cast<Index>(c);
      }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
      throw Error(ErrorCode::InvalidFiltration, "partition does not cover every scenario");
    }
    if (t == 0 && cells.size() != 1) throw Error(ErrorCode::InvalidFiltration, "time-0 partition must be trivial");
    // Refinement: every cell at t sits inside one cell at t - 1.
    if (t > 0) {
      for (const auto& cell : cells) {
        const Index p = parent[static_cast<std::size_t>(cell.front())];
        for (Index w : cell) {
          if (parent[static_cast<std::size_t>(w)] != p) {
            throw Error(ErrorCode::InvalidFiltration, "partition at t=" + std::to_string(t) + " does not refine t-1");
          }
        }
      }
    }
    parent = owner;
  }
}

}  // namespace

std::vector<RandomVector> build_gain_basis(const SpacePtr& space, Index agents, const PricePaths& paths,
                                           const std::vector<std::vector<Index>>& agent_assignment,
                                           const std::vector<Partition>& filtration) {
  const Index scenarios = space->size();
  const Index periods = paths.periods;
  const Index assets = paths.assets;
  if (periods < 1 || assets < 0) throw Error(ErrorCode::InvalidArgument, "need T >= 1 and J >= 0");
  if (static_cast<Index>(paths.prices.size()) != scenarios) {
    throw Error(ErrorCode::DimensionMismatch, "one price path per scenario required");
  }
  if (static_cast<Index>(agent_assignment.size()) != assets) {
    throw Error(ErrorCode::DimensionMismatch, "agent assignment needs one entry per risky asset");
  }
  for (const auto& owners : agent_assignment) {
    for (Index a : owners) {
      if (a < 0 || a >= agents) throw Error(ErrorCode::InvalidArgument, "agent assignment out of range");
    }
  }
  for (const Eigen::MatrixXd& path : paths.prices) {
    if (path.rows() != periods + 1 || path.cols() != assets + 1) {
      throw Error(ErrorCode::DimensionMismatch, "price path must be (T+1) x (J+1)");
    }
    if (!path.allFinite() || (path.col(0).array() <= 0.0).any()) {
      throw Error(ErrorCode::InvalidArgument, "numeraire must be strictly positive");
    }
  }
  validate_filtration(filtration, periods, scenarios);

  for (Index t = 0; t < periods; ++t) {
    for (const auto& cell : filtration[static_cast<std::size_t>(t)]) {
      const Eigen::RowVectorXd ref = paths.prices[static_cast<std::size_t>(cell.front())].row(t);
      for (Index w : cell) {
        if (paths.prices[static_cast<std::size_t>(w)].row(t) != ref) {
          throw Error(ErrorCode::NonMeasurablePrices,
                      "prices at t=" + std::to_string(t) + " differ within a partition cell");
        }
      }
    }
  }

  std::vector<RandomVector> basis;
  for (Index t = 0; t < periods; ++t) {
    for (const auto& cell : filtration[static_cast<std::size_t>(t)]) {
      for (Index j = 1; j <= assets; ++j) {
        Eigen::RowVectorXd gain = Eigen::RowVectorXd::Zero(scenarios);
        for (Index w : cell) {
          const Eigen::MatrixXd& s = paths.prices[static_cast<std::size_t>(w)];
          gain(w) = s(t + 1, j) / s(t + 1, 0) - s(t, j) / s(t, 0);
        }
        for (Index agent : agent_assignment[static_cast<std::size_t>(j - 1)]) {
          Eigen::MatrixXd values = Eigen::MatrixXd::Zero(agents, scenarios);
          values.row(agent) = gain;
          basis.emplace_back(space, std::move(values));
        }
      }
    }
  }
  return basis;
}

std::optional<MarketArbitrage> contains_market_arbitrage(const MarketSet& market, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "arbitrage threshold must be positive");
  const Index k = market.size();
  if (k == 0) return std::nullopt;
  const Index n = market.agents();
  const Index scenarios = market.space()->size();
  const bool span = market.mode() == MarketMode::Span;

  for (Index agent = 0; agent < n; ++agent) {
    lp::LinearProgram prog;
    std::vector<Index> plus(static_cast<std::size_t>(k)), minus;
    for (Index b = 0; b < k; ++b) plus[static_cast<std::size_t>(b)] = prog.add_variable("p" + std::to_string(b), 0.0, lp::kInf, 1.0);
    if (span) {
      for (Index b = 0; b < k; ++b) minus.push_back(prog.add_variable("q" + std::to_string(b), 0.0, lp::kInf, 1.0));
    }
    for (Index i = 0; i < n; ++i) {
      for (Index w = 0; w < scenarios; ++w) {
        std::vector<lp::Term> terms;
        for (Index b = 0; b < k; ++b) {
          const double g = market.basis()[static_cast<std::size_t>(b)].values()(i, w);
          if (g == 0.0) continue;
          terms.push_back({plus[static_cast<std::size_t>(b)], g});
          if (span) terms.push_back({minus[static_cast<std::size_t>(b)], -g});
        }
        if (i == agent) {
          prog.add_row(std::move(terms), lp::Relation::GreaterEqual, eps);
        } else if (!terms.empty()) {
          prog.add_row(std::move(terms), lp::Relation::Equal, 0.0);
        }
      }
    }
    const lp::LPResult r = lp::solve(prog);
    if (r.status != lp::Status::Optimal) continue;
    Eigen::VectorXd coefficients(k);
    for (Index b = 0; b < k; ++b) {
      coefficients(b) = r.primal(plus[static_cast<std::size_t>(b)]) - (span ? r.primal(minus[static_cast<std::size_t>(b)]) : 0.0);
    }
    const double min_payoff = market.payoff(coefficients).row(agent).minCoeff();
    return MarketArbitrage{agent, coefficients, min_payoff};
  }
  return std::nullopt;
}

}  // namespace sysrisk
