#include "sysrisk/testing/oracle.hpp"

#include <cmath>
#include <limits>

namespace sysrisk::testing {

namespace {

void check_grid(const GridSpec& g) {
  if (!(g.step > 0.0) || !(g.lower < g.upper) || !std::isfinite(g.lower) || !std::isfinite(g.upper)) {
    throw Error(ErrorCode::InvalidArgument, "grid needs lower < upper and step > 0");
  }
}

double cells(const GridSpec& g) { return (g.upper - g.lower) / g.step; }

// Odometer over `dims` coordinates of one grid; returns false when exhausted.
bool advance(std::vector<Index>& at, Index points) {
  for (std::size_t d = 0; d < at.size(); ++d) {
    if (++at[d] < points) return true;
    at[d] = 0;
  }
  return false;
}

}  // namespace

Index GridSpec::points() const {
  check_grid(*this);
  return static_cast<Index>(std::floor(cells(*this) + 1e-9)) + 1;
}

double brute_force_rho(const Instance& inst, const RandomVector& x, const GridSpec& m_grid,
                       const GridSpec& h_grid) {
  inst.validate();
  require_same_space(inst.space, x.space(), "oracle position");
  const Index n = inst.agents;
  const Index k = inst.market.size();
  if (n > 2 || k > 2) throw Error(ErrorCode::InvalidArgument, "oracle supports N <= 2 and at most 2 basis vectors");
  if (x.agents() != n) throw Error(ErrorCode::DimensionMismatch, "oracle position has wrong N");
  double budget = std::pow(cells(m_grid), static_cast<double>(n));
  if (k > 0) budget *= std::pow(cells(h_grid), static_cast<double>(k));
  const Index mp = m_grid.points();
  const Index hp = k > 0 ? h_grid.points() : 1;
  if (budget > kGridBudget) throw Error(ErrorCode::BudgetExceeded, "grid search over budget");

  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> hi(static_cast<std::size_t>(k), 0);
  Eigen::VectorXd h(k), m(n);
  do {
    for (Index j = 0; j < k; ++j) h(j) = h_grid.lower + h_grid.step * static_cast<double>(hi[static_cast<std::size_t>(j)]);
    if (inst.market.mode() == MarketMode::Cone && (h.array() < 0.0).any()) continue;
    const Eigen::MatrixXd base = x.values() + inst.market.payoff(h);
    std::vector<Index> mi(static_cast<std::size_t>(n), 0);
    do {
      for (Index i = 0; i < n; ++i) m(i) = m_grid.lower + m_grid.step * static_cast<double>(mi[static_cast<std::size_t>(i)]);
      if (m.sum() >= best) continue;
      const Eigen::MatrixXd pos = base.colwise() + m;
      if (inst.acceptance.is_acceptable(inst.lambda.evaluate_columns(pos))) best = m.sum();
    } while (advance(mi, mp));
  } while (advance(hi, hp));
  return best;
}

double brute_force_network_lambda(const Eigen::MatrixXd& pi, double gamma_net, const Eigen::VectorXd& x,
                                  const GridSpec& grid) {
  const Index n = pi.rows();
  if (n < 1 || n > 3 || pi.cols() != n || x.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "network oracle supports square pi with N <= 3");
  }
  if (grid.upper > 0.0) throw Error(ErrorCode::InvalidArgument, "network grid must lie in y <= 0");
  if (std::pow(cells(grid), static_cast<double>(n)) > kGridBudget) {
    throw Error(ErrorCode::BudgetExceeded, "grid search over budget");
  }
  const Index points = grid.points();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<Index> at(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd y(n);
  do {
    for (Index i = 0; i < n; ++i) y(i) = grid.lower + grid.step * static_cast<double>(at[static_cast<std::size_t>(i)]);
    // x_i >= b_i + y_i - sum_j pi(j, i) y_j with b_i <= 0, objective increasing in b.
    const Eigen::VectorXd room = x - y + pi.transpose() * y;
    const double value = y.sum() + gamma_net * room.cwiseMin(0.0).sum();
    best = std::max(best, value);
  } while (advance(at, points));
  return best;
}

}  // namespace sysrisk::testing
