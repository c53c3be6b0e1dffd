#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sysrisk/error.hpp"

namespace sysrisk::lp {

using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, GreaterEqual, Equal };

struct Term {
  Index var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  Relation relation;
  double rhs;
  std::string name;
};

/// Bounded-variable LP in general form, built incrementally. Variables are
/// referenced by the index returned from add_variable.
class LinearProgram {
 public:
  explicit LinearProgram(Sense sense = Sense::Minimize) : sense_(sense) {}

  Index add_variable(std::string name, double lower = 0.0, double upper = kInf, double cost = 0.0);
  Index add_row(std::vector<Term> terms, Relation relation, double rhs, std::string name = {});

  void set_cost(Index var, double cost);
  void set_bounds(Index var, double lower, double upper);
  void set_sense(Sense sense) noexcept { sense_ = sense; }

  Sense sense() const noexcept { return sense_; }
  Index num_variables() const noexcept { return static_cast<Index>(names_.size()); }
  Index num_rows() const noexcept { return static_cast<Index>(rows_.size()); }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const Eigen::VectorXd& costs() const noexcept { return cost_; }
  const Eigen::VectorXd& lower() const noexcept { return lower_; }
  const Eigen::VectorXd& upper() const noexcept { return upper_; }

  /// Dense constraint matrix; repeated terms for one variable are summed.
  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd rhs() const;

  /// Text export, one constraint per line, stable ordering and 17 significant
  /// digits so identical programs give identical bytes.
  std::string to_text() const;

 private:
  Sense sense_;
  std::vector<std::string> names_;
  Eigen::VectorXd cost_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<Row> rows_;
};

enum class Status { Optimal, Unbounded, Infeasible };

std::string_view to_string(Status status) noexcept;

/// Outcome of solve().
///
/// Duals are sensitivities of the optimal value with respect to each row's
/// right-hand side, in the sense of the original problem. For a minimization
/// they are >= 0 on >= rows and <= 0 on <= rows. Reduced costs are
/// c - A^T y. On Infeasible, `duals` holds a Farkas certificate y with the same
/// sign convention such that sup over the bound box of (A^T y)^T x < b^T y. On
/// Unbounded, `primal` is a feasible point and `ray` an improving recession
/// direction.
struct LPResult {
  Status status = Status::Infeasible;
  double value = 0.0;
  Eigen::VectorXd primal;
  Eigen::VectorXd duals;
  Eigen::VectorXd reduced_costs;
  Eigen::VectorXd ray;
  std::size_t iterations = 0;
};

struct SolverOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  // Pivots below this magnitude are never accepted.
  double breakdown_tol = 1e-11;
  // Tableau is rebuilt from a fresh factorization of the basis after this
  // many pivots, or after one pivot per row when that is larger.
  std::size_t refactor_interval = 50;
};

/// Two-phase dense primal simplex with Bland's rule. Deterministic. Throws
/// NumericalBreakdown when no acceptable pivot exists or the final basis fails
/// its residual checks.
LPResult solve(const LinearProgram& lp, const SolverOptions& options = {});

// Certificate and residual checks, used by tests and by callers that want to
// audit a result.
double primal_residual(const LinearProgram& lp, const Eigen::VectorXd& x);
double dual_residual(const LinearProgram& lp, const LPResult& result);
double complementary_slackness_residual(const LinearProgram& lp, const LPResult& result);
/// b^T y plus the bound contributions of the reduced costs.
double dual_objective(const LinearProgram& lp, const Eigen::VectorXd& duals,
                      const Eigen::VectorXd& reduced_costs, double tol = 1e-9);
bool verify_farkas(const LinearProgram& lp, const Eigen::VectorXd& y, double tol = 1e-8);
bool verify_ray(const LinearProgram& lp, const Eigen::VectorXd& ray, double tol = 1e-8);

}  // namespace sysrisk::lp
