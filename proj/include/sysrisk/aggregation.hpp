#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

#include "sysrisk/core_model.hpp"
#include "sysrisk/lp.hpp"

namespace sysrisk {

/// x -> min_k (slope_k x + intercept_k). Concave by construction.
struct PiecewiseLinear {
  struct Piece {
    double slope;
    double intercept;
  };
  std::vector<Piece> pieces;

  double operator()(double x) const;
  /// Nonempty, slopes >= 0 and value 0 at the origin.
  void validate(const std::string& what) const;
};

/// alpha * u(sum_i x_i) + sum_i alpha_i u_i(x_i)
struct SumUtility {
  double alpha = 0.0;
  PiecewiseLinear u;
  Eigen::VectorXd alpha_i;
  std::vector<PiecewiseLinear> u_i;
};

/// -sum_i alpha_i (x_i)^-
struct NegativePart {
  Eigen::VectorXd alpha;
};

/// Network clearing value: max sum y + gamma_net * sum b over y, b <= 0 with
/// x_i >= b_i + y_i - sum_j pi(j, i) y_j, where pi(j, i) is the fraction of
/// firm j's debt owed to firm i.
struct Network {
  Eigen::MatrixXd pi;
  double gamma_net = 2.0;
};

/// min_k (slopes.row(k) x + intercepts(k))
struct AffineMax {
  Eigen::MatrixXd slopes;
  Eigen::VectorXd intercepts;
};

/// Polyhedral description of {(x, u) : u <= Lambda(x)} with auxiliary
/// variables: each row reads x_coef x + u_coef u + aux_coef aux (rel) rhs.
struct Hypograph {
  struct Row {
    Eigen::RowVectorXd x_coef;
    double u_coef;
    Eigen::RowVectorXd aux_coef;
    lp::Relation relation;
    double rhs;
  };
  Index dimension = 0;
  Index aux_count = 0;
  std::vector<double> aux_lower;
  std::vector<double> aux_upper;
  std::vector<std::string> aux_names;
  std::vector<Row> rows;
};

/// Concave, componentwise increasing aggregation R^N -> R with value 0 at the
/// origin. The constructor validates these structural requirements.
class Aggregation {
 public:
  using Variant = std::variant<SumUtility, NegativePart, Network, AffineMax>;

  explicit Aggregation(Variant spec);

  static Aggregation sum(Index n);

  Index dimension() const noexcept { return dimension_; }
  const Variant& spec() const noexcept { return spec_; }
  std::string_view kind() const noexcept;
  bool is_network() const noexcept { return std::holds_alternative<Network>(spec_); }

  /// Lambda(x). The network variant solves its clearing LP; solver failure
  /// surfaces as InnerLPFailed.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Applies evaluate to each column of an N x |Omega| profile.
  Eigen::RowVectorXd evaluate_columns(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  Hypograph hypograph() const;

 private:
  Variant spec_;
  Index dimension_ = 0;
};

/// Adds one copy of the hypograph to `lp`, with `x_vars` standing for x and
/// `u_var` for u. Auxiliary variable names get `prefix` prepended. Returns the
/// indices of the auxiliary variables.
std::vector<Index> append_hypograph(lp::LinearProgram& lp, const Hypograph& hyp,
                                    const std::vector<Index>& x_vars, Index u_var,
                                    const std::string& prefix);

}  // namespace sysrisk
