#include "sysrisk/lp.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sysrisk::lp {

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_bounds(double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower == kInf || upper == -kInf || lower > upper) {
    throw Error(ErrorCode::InvalidArgument, "invalid variable bounds");
  }
}

}  // namespace

std::string_view to_string(Status status) noexcept {
  switch (status) {
    case Status::Optimal: return "Optimal";
    case Status::Unbounded: return "Unbounded";
    case Status::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

Index LinearProgram::add_variable(std::string name, double lower, double upper, double cost) {
  check_bounds(lower, upper);
  if (!std::isfinite(cost)) throw Error(ErrorCode::InvalidArgument, "non-finite cost");
  const Index n = num_variables();
  names_.push_back(std::move(name));
  cost_.conservativeResize(n + 1);
  lower_.conservativeResize(n + 1);
  upper_.conservativeResize(n + 1);
  cost_(n) = cost;
  lower_(n) = lower;
  upper_(n) = upper;
  return n;
}

Index LinearProgram::add_row(std::vector<Term> terms, Relation relation, double rhs, std::string name) {
  if (!std::isfinite(rhs)) throw Error(ErrorCode::InvalidArgument, "non-finite right-hand side");
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= num_variables()) {
      throw Error(ErrorCode::DimensionMismatch, "row references an unknown variable");
    }
    if (!std::isfinite(t.coef)) throw Error(ErrorCode::InvalidArgument, "non-finite coefficient");
  }
  if (name.empty()) name = "r" + std::to_string(rows_.size());
  rows_.push_back(Row{std::move(terms), relation, rhs, std::move(name)});
  return num_rows() - 1;
}

void LinearProgram::set_cost(Index var, double cost) {
  if (!std::isfinite(cost)) throw Error(ErrorCode::InvalidArgument, "non-finite cost");
  cost_(var) = cost;
}

void LinearProgram::set_bounds(Index var, double lower, double upper) {
  check_bounds(lower, upper);
  lower_(var) = lower;
  upper_(var) = upper;
}

Eigen::MatrixXd LinearProgram::matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(num_rows(), num_variables());
  for (Index i = 0; i < num_rows(); ++i) {
    for (const Term& t : rows_[static_cast<std::size_t>(i)].terms) a(i, t.var) += t.coef;
  }
  return a;
}

Eigen::VectorXd LinearProgram::rhs() const {
  Eigen::VectorXd b(num_rows());
  for (Index i = 0; i < num_rows(); ++i) b(i) = rows_[static_cast<std::size_t>(i)].rhs;
  return b;
}

std::string LinearProgram::to_text() const {
  std::ostringstream out;
  out << (sense_ == Sense::Minimize ? "minimize" : "maximize") << ":";
  for (Index j = 0; j < num_variables(); ++j) {
    if (cost_(j) != 0.0) out << ' ' << format_number(cost_(j)) << ' ' << names_[static_cast<std::size_t>(j)];
  }
  out << '\n';
  const Eigen::MatrixXd a = matrix();
  for (Index i = 0; i < num_rows(); ++i) {
    const Row& row = rows_[static_cast<std::size_t>(i)];
    out << row.name << ":";
    for (Index j = 0; j < num_variables(); ++j) {
      if (a(i, j) != 0.0) out << ' ' << format_number(a(i, j)) << ' ' << names_[static_cast<std::size_t>(j)];
    }
    switch (row.relation) {
      case Relation::LessEqual: out << " <= "; break;
      case Relation::GreaterEqual: out << " >= "; break;
      case Relation::Equal: out << " = "; break;
    }
    out << format_number(row.rhs) << '\n';
  }
  for (Index j = 0; j < num_variables(); ++j) {
    out << "bound " << names_[static_cast<std::size_t>(j)] << ' ' << format_number(lower_(j)) << ' '
        << format_number(upper_(j)) << '\n';
  }
  return out.str();
}

namespace {

// Each original variable x_j = shift + sign * z_plus (- z_minus when free).
struct VariableMap {
  Index plus = -1;
  Index minus = -1;
  double sign = 1.0;
  double shift = 0.0;
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) { build(); }

  LPResult run();

 private:
  void build();
  void refactor();
  void compute_reduced_costs();
  bool iterate(bool phase_one, Index& unbounded_column);
  void pivot(Index row, Index col);
  void drive_out_artificials();
  Eigen::VectorXd basic_solution() const;
  Eigen::VectorXd row_duals() const;
  Eigen::VectorXd to_original(const Eigen::VectorXd& z) const;
  Eigen::VectorXd to_original_direction(const Eigen::VectorXd& dz) const;

  const LinearProgram& lp_;
  SolverOptions opt_;

  std::vector<VariableMap> vars_;
  Index structural_ = 0;
  Index slack_begin_ = 0;
  Index art_begin_ = 0;
  Index cols_ = 0;
  Index rows_ = 0;
  Index original_rows_ = 0;

  Eigen::MatrixXd a_;       // standard form, scaled
  Eigen::VectorXd b_;
  Eigen::VectorXd row_factor_;
  Eigen::VectorXd phase2_cost_;
  Eigen::VectorXd cost_;    // active phase cost

  // Row-major: pivots are row updates.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tab_;  // B^-1 A
  Eigen::VectorXd beta_;    // B^-1 b
  Eigen::VectorXd reduced_;
  std::vector<Index> basis_;
  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
  bool allow_artificial_ = true;
};

void Simplex::build() {
  const Index n = lp_.num_variables();
  vars_.resize(static_cast<std::size_t>(n));
  std::vector<Index> boxed;
  Index col = 0;
  for (Index j = 0; j < n; ++j) {
    VariableMap& v = vars_[static_cast<std::size_t>(j)];
    const double lo = lp_.lower()(j);
    const double up = lp_.upper()(j);
    v.plus = col++;
    if (std::isfinite(lo)) {
      v.shift = lo;
      if (std::isfinite(up)) boxed.push_back(j);
    } else if (std::isfinite(up)) {
      v.shift = up;
      v.sign = -1.0;
    } else {
      v.minus = col++;
    }
  }
  structural_ = col;
  original_rows_ = lp_.num_rows();
  rows_ = original_rows_ + static_cast<Index>(boxed.size());

  Index slacks = static_cast<Index>(boxed.size());
  for (const Row& r : lp_.rows()) {
    if (r.relation != Relation::Equal) ++slacks;
  }
  slack_begin_ = structural_;
  art_begin_ = structural_ + slacks;
  cols_ = art_begin_ + rows_;

  a_ = Eigen::MatrixXd::Zero(rows_, cols_);
  b_ = Eigen::VectorXd::Zero(rows_);
  Index slack = slack_begin_;
  for (Index i = 0; i < original_rows_; ++i) {
    const Row& r = lp_.rows()[static_cast<std::size_t>(i)];
    double rhs = r.rhs;
    for (const Term& t : r.terms) {
      const VariableMap& v = vars_[static_cast<std::size_t>(t.var)];
      a_(i, v.plus) += t.coef * v.sign;
      if (v.minus >= 0) a_(i, v.minus) -= t.coef;
      rhs -= t.coef * v.shift;
    }
    if (r.relation == Relation::LessEqual) a_(i, slack++) = 1.0;
    if (r.relation == Relation::GreaterEqual) a_(i, slack++) = -1.0;
    b_(i) = rhs;
  }
  for (std::size_t k = 0; k < boxed.size(); ++k) {
    const Index i = original_rows_ + static_cast<Index>(k);
    const Index j = boxed[k];
    a_(i, vars_[static_cast<std::size_t>(j)].plus) = 1.0;
    a_(i, slack++) = 1.0;
    b_(i) = lp_.upper()(j) - lp_.lower()(j);
  }

  row_factor_ = Eigen::VectorXd::Ones(rows_);
  for (Index i = 0; i < rows_; ++i) {
    const double scale = a_.row(i).head(art_begin_).cwiseAbs().maxCoeff();
    double f = scale > 0.0 ? 1.0 / scale : 1.0;
    if (b_(i) * f < 0.0) f = -f;
    row_factor_(i) = f;
    a_.row(i).head(art_begin_) *= f;
    b_(i) *= f;
  }
  a_.rightCols(rows_).setIdentity();

  const double sf = lp_.sense() == Sense::Minimize ? 1.0 : -1.0;
  phase2_cost_ = Eigen::VectorXd::Zero(cols_);
  for (Index j = 0; j < n; ++j) {
    const VariableMap& v = vars_[static_cast<std::size_t>(j)];
    phase2_cost_(v.plus) = sf * lp_.costs()(j) * v.sign;
    if (v.minus >= 0) phase2_cost_(v.minus) = -sf * lp_.costs()(j);
  }

  // Start from the slack of each row where it is feasible (positive after
  // scaling, since b >= 0 now), otherwise from the row's artificial.
  basis_.resize(static_cast<std::size_t>(rows_));
  for (Index i = 0; i < rows_; ++i) basis_[static_cast<std::size_t>(i)] = art_begin_ + i;
  for (Index j = slack_begin_; j < art_begin_; ++j) {
    Index row;
    if (a_.col(j).head(rows_).cwiseAbs().maxCoeff(&row) > 0.0 && a_(row, j) > 0.0) {
      basis_[static_cast<std::size_t>(row)] = j;
    }
  }
}

void Simplex::refactor() {
  Eigen::MatrixXd basis_matrix(rows_, rows_);
  for (Index i = 0; i < rows_; ++i) basis_matrix.col(i) = a_.col(basis_[static_cast<std::size_t>(i)]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
  if (rows_ > 0) {
    const Eigen::VectorXd u = lu.matrixLU().diagonal().cwiseAbs();
    if (!(u.minCoeff() > 1e-13 * std::max(1.0, u.maxCoeff()))) {
      throw Error(ErrorCode::NumericalBreakdown, "basis matrix became singular");
    }
  }
  // Once artificials are barred their columns are never read again.
  tab_ = lu.solve(a_.leftCols(allow_artificial_ ? cols_ : art_begin_));
  beta_ = lu.solve(b_);
  // Entries at round-off level are noise from the factorization.
  tab_ = tab_.unaryExpr([](double v) { return std::abs(v) < 1e-14 ? 0.0 : v; });
  since_refactor_ = 0;
  compute_reduced_costs();
}

void Simplex::compute_reduced_costs() {
  Eigen::VectorXd cb(rows_);
  for (Index i = 0; i < rows_; ++i) cb(i) = cost_(basis_[static_cast<std::size_t>(i)]);
  reduced_ = cost_.head(tab_.cols()) - tab_.transpose() * cb;
}

void Simplex::pivot(Index row, Index col) {
  const double p = tab_(row, col);
  if (std::abs(p) < opt_.breakdown_tol) {
    throw Error(ErrorCode::NumericalBreakdown, "pivot magnitude below breakdown tolerance");
  }
  tab_.row(row) /= p;
  beta_(row) /= p;
  tab_(row, col) = 1.0;
  for (Index i = 0; i < rows_; ++i) {
    if (i == row) continue;
    const double f = tab_(i, col);
    if (f == 0.0) continue;
    tab_.row(i) -= f * tab_.row(row);
    beta_(i) -= f * beta_(row);
    tab_(i, col) = 0.0;
  }
  const double f = reduced_(col);
  if (f != 0.0) reduced_ -= f * tab_.row(row).transpose();
  reduced_(col) = 0.0;
  basis_[static_cast<std::size_t>(row)] = col;
  ++iterations_;
  if (++since_refactor_ >= std::max(opt_.refactor_interval, static_cast<std::size_t>(rows_))) refactor();
}

// One Bland step. Returns false when optimal or unbounded; sets
// unbounded_column in the latter case.
bool Simplex::iterate(bool phase_one, Index& unbounded_column) {
  unbounded_column = -1;
  const Index limit = allow_artificial_ ? cols_ : art_begin_;
  Index entering = -1;
  for (Index j = 0; j < limit; ++j) {
    if (reduced_(j) < -opt_.optimality_tol) {
      entering = j;
      break;
    }
  }
  if (entering < 0) return false;

  Index leaving = -1;
  double best = kInf;
  for (Index i = 0; i < rows_; ++i) {
    const double t = tab_(i, entering);
    if (t <= opt_.pivot_tol) continue;
    const double ratio = std::max(beta_(i), 0.0) / t;
    const double tie = 1e-12 * (1.0 + std::abs(best));
    if (leaving < 0 || ratio < best - tie) {
      leaving = i;
      best = ratio;
    } else if (ratio <= best + tie &&
               basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)]) {
      leaving = i;
      best = std::min(best, ratio);
    }
  }
  if (leaving < 0) {
    if (phase_one) throw Error(ErrorCode::NumericalBreakdown, "phase one reported unbounded");
    unbounded_column = entering;
    return false;
  }
  pivot(leaving, entering);
  return true;
}

void Simplex::drive_out_artificials() {
  for (Index i = 0; i < rows_; ++i) {
    if (basis_[static_cast<std::size_t>(i)] < art_begin_) continue;
    Index best = -1;
    double mag = opt_.pivot_tol;
    for (Index j = 0; j < art_begin_; ++j) {
      if (std::abs(tab_(i, j)) > mag) {
        best = j;
        break;
      }
    }
    // Rows with no structural entry are redundant; the artificial stays at zero.
    if (best >= 0) pivot(i, best);
  }
}

Eigen::VectorXd Simplex::basic_solution() const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(cols_);
  for (Index i = 0; i < rows_; ++i) z(basis_[static_cast<std::size_t>(i)]) = beta_(i);
  return z;
}

Eigen::VectorXd Simplex::row_duals() const {
  Eigen::MatrixXd basis_matrix(rows_, rows_);
  Eigen::VectorXd cb(rows_);
  for (Index i = 0; i < rows_; ++i) {
    basis_matrix.col(i) = a_.col(basis_[static_cast<std::size_t>(i)]);
    cb(i) = cost_(basis_[static_cast<std::size_t>(i)]);
  }
  if (rows_ == 0) return Eigen::VectorXd();
  return basis_matrix.transpose().fullPivLu().solve(cb);
}

Eigen::VectorXd Simplex::to_original(const Eigen::VectorXd& z) const {
  Eigen::VectorXd x(lp_.num_variables());
  for (Index j = 0; j < lp_.num_variables(); ++j) {
    const VariableMap& v = vars_[static_cast<std::size_t>(j)];
    x(j) = v.shift + v.sign * z(v.plus) - (v.minus >= 0 ? z(v.minus) : 0.0);
  }
  return x;
}

Eigen::VectorXd Simplex::to_original_direction(const Eigen::VectorXd& dz) const {
  Eigen::VectorXd dx(lp_.num_variables());
  for (Index j = 0; j < lp_.num_variables(); ++j) {
    const VariableMap& v = vars_[static_cast<std::size_t>(j)];
    dx(j) = v.sign * dz(v.plus) - (v.minus >= 0 ? dz(v.minus) : 0.0);
  }
  return dx;
}

LPResult Simplex::run() {
  LPResult result;
  const std::size_t max_iterations = 50000 + 200 * static_cast<std::size_t>(rows_ + cols_);
  Index unbounded = -1;

  cost_ = Eigen::VectorXd::Zero(cols_);
  cost_.tail(rows_).setOnes();
  allow_artificial_ = true;
  // Every starting basic column is a positive multiple of a unit vector.
  tab_ = a_;
  beta_ = b_;
  for (Index i = 0; i < rows_; ++i) {
    const double d = a_(i, basis_[static_cast<std::size_t>(i)]);
    tab_.row(i) /= d;
    beta_(i) /= d;
  }
  compute_reduced_costs();
  while (iterate(true, unbounded)) {
    if (iterations_ > max_iterations) throw Error(ErrorCode::NumericalBreakdown, "iteration limit");
  }
  refactor();
  const double infeasibility = cost_.tail(rows_).dot(basic_solution().tail(rows_));
  const double scale = std::max(1.0, b_.cwiseAbs().maxCoeff());
  if (infeasibility > opt_.feasibility_tol * scale) {
    const Eigen::VectorXd pi = row_duals();
    result.status = Status::Infeasible;
    result.duals = pi.head(original_rows_).cwiseProduct(row_factor_.head(original_rows_));
    result.iterations = iterations_;
    return result;
  }

  drive_out_artificials();
  allow_artificial_ = false;
  cost_ = phase2_cost_;
  refactor();
  while (iterate(false, unbounded)) {
    if (iterations_ > max_iterations) throw Error(ErrorCode::NumericalBreakdown, "iteration limit");
  }
  const double sf = lp_.sense() == Sense::Minimize ? 1.0 : -1.0;
  result.iterations = iterations_;

  if (unbounded >= 0) {
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(cols_);
    dz(unbounded) = 1.0;
    for (Index i = 0; i < rows_; ++i) dz(basis_[static_cast<std::size_t>(i)]) = -tab_(i, unbounded);
    Eigen::VectorXd ray = to_original_direction(dz);
    const double norm = ray.cwiseAbs().maxCoeff();
    if (norm > 0.0) ray /= norm;
    result.status = Status::Unbounded;
    result.primal = to_original(basic_solution());
    result.ray = ray;
    result.value = -sf * kInf;
    return result;
  }

  refactor();
  result.status = Status::Optimal;
  result.primal = to_original(basic_solution());
  const Eigen::VectorXd pi = row_duals();
  result.duals = sf * pi.head(original_rows_).cwiseProduct(row_factor_.head(original_rows_));
  result.reduced_costs = lp_.costs() - lp_.matrix().transpose() * result.duals;
  result.value = lp_.costs().dot(result.primal);

  const Eigen::VectorXd b = lp_.rhs();
  const double tol = 1e-6 * (1.0 + (b.size() ? b.cwiseAbs().maxCoeff() : 0.0));
  if (primal_residual(lp_, result.primal) > tol) {
    throw Error(ErrorCode::NumericalBreakdown, "final basis violates the constraints");
  }
  return result;
}

}  // namespace

LPResult solve(const LinearProgram& lp, const SolverOptions& options) {
  Simplex simplex(lp, options);
  return simplex.run();
}

double primal_residual(const LinearProgram& lp, const Eigen::VectorXd& x) {
  double worst = 0.0;
  const Eigen::VectorXd ax = lp.matrix() * x;
  for (Index i = 0; i < lp.num_rows(); ++i) {
    const Row& r = lp.rows()[static_cast<std::size_t>(i)];
    const double gap = ax(i) - r.rhs;
    double viol = 0.0;
    switch (r.relation) {
      case Relation::LessEqual: viol = std::max(gap, 0.0); break;
      case Relation::GreaterEqual: viol = std::max(-gap, 0.0); break;
      case Relation::Equal: viol = std::abs(gap); break;
    }
    worst = std::max(worst, viol);
  }
  for (Index j = 0; j < lp.num_variables(); ++j) {
    worst = std::max(worst, lp.lower()(j) - x(j));
    worst = std::max(worst, x(j) - lp.upper()(j));
  }
  return worst;
}

double dual_residual(const LinearProgram& lp, const LPResult& result) {
  const double sf = lp.sense() == Sense::Minimize ? 1.0 : -1.0;
  double worst = 0.0;
  for (Index i = 0; i < lp.num_rows(); ++i) {
    const double y = sf * result.duals(i);
    switch (lp.rows()[static_cast<std::size_t>(i)].relation) {
      case Relation::LessEqual: worst = std::max(worst, y); break;
      case Relation::GreaterEqual: worst = std::max(worst, -y); break;
      case Relation::Equal: break;
    }
  }
  // A reduced cost pushing against an infinite bound is a dual violation.
  for (Index j = 0; j < lp.num_variables(); ++j) {
    const double d = sf * result.reduced_costs(j);
    if (!std::isfinite(lp.lower()(j))) worst = std::max(worst, d);
    if (!std::isfinite(lp.upper()(j))) worst = std::max(worst, -d);
  }
  return worst;
}

double complementary_slackness_residual(const LinearProgram& lp, const LPResult& result) {
  double worst = 0.0;
  const Eigen::VectorXd ax = lp.matrix() * result.primal;
  for (Index i = 0; i < lp.num_rows(); ++i) {
    worst = std::max(worst, std::abs(result.duals(i) * (ax(i) - lp.rows()[static_cast<std::size_t>(i)].rhs)));
  }
  const double sf = lp.sense() == Sense::Minimize ? 1.0 : -1.0;
  for (Index j = 0; j < lp.num_variables(); ++j) {
    const double d = sf * result.reduced_costs(j);
    const double x = result.primal(j);
    if (d > 0.0) worst = std::max(worst, d * std::abs(x - lp.lower()(j)));
    if (d < 0.0) worst = std::max(worst, -d * std::abs(lp.upper()(j) - x));
  }
  return worst;
}

double dual_objective(const LinearProgram& lp, const Eigen::VectorXd& duals,
                      const Eigen::VectorXd& reduced_costs, double tol) {
  const double sf = lp.sense() == Sense::Minimize ? 1.0 : -1.0;
  double value = lp.rhs().dot(duals);
  for (Index j = 0; j < lp.num_variables(); ++j) {
    const double d = reduced_costs(j);
    if (std::abs(d) <= tol) continue;
    const double bound = sf * d > 0.0 ? lp.lower()(j) : lp.upper()(j);
    value += d * bound;
  }
  return value;
}

bool verify_farkas(const LinearProgram& lp, const Eigen::VectorXd& y, double tol) {
  if (y.size() != lp.num_rows()) return false;
  for (Index i = 0; i < lp.num_rows(); ++i) {
    switch (lp.rows()[static_cast<std::size_t>(i)].relation) {
      case Relation::LessEqual:
        if (y(i) > tol) return false;
        break;
      case Relation::GreaterEqual:
        if (y(i) < -tol) return false;
        break;
      case Relation::Equal: break;
    }
  }
  // Aggregated inequality w^T x >= y^T b must be violated everywhere on the box.
  const Eigen::VectorXd w = lp.matrix().transpose() * y;
  double sup = 0.0;
  for (Index j = 0; j < lp.num_variables(); ++j) {
    if (std::abs(w(j)) <= tol) {
      // Round-off sized weights only count against finite bounds.
      double best = 0.0;
      if (std::isfinite(lp.lower()(j))) best = w(j) * lp.lower()(j);
      if (std::isfinite(lp.upper()(j))) best = std::max(best, w(j) * lp.upper()(j));
      sup += best;
      continue;
    }
    const double bound = w(j) > 0.0 ? lp.upper()(j) : lp.lower()(j);
    if (!std::isfinite(bound)) return false;
    sup += w(j) * bound;
  }
  return sup < lp.rhs().dot(y) - tol;
}

bool verify_ray(const LinearProgram& lp, const Eigen::VectorXd& ray, double tol) {
  if (ray.size() != lp.num_variables() || ray.cwiseAbs().maxCoeff() <= tol) return false;
  const Eigen::VectorXd ad = lp.matrix() * ray;
  for (Index i = 0; i < lp.num_rows(); ++i) {
    switch (lp.rows()[static_cast<std::size_t>(i)].relation) {
      case Relation::LessEqual:
        if (ad(i) > tol) return false;
        break;
      case Relation::GreaterEqual:
        if (ad(i) < -tol) return false;
        break;
      case Relation::Equal:
        if (std::abs(ad(i)) > tol) return false;
        break;
    }
  }
  for (Index j = 0; j < lp.num_variables(); ++j) {
    if (std::isfinite(lp.lower()(j)) && ray(j) < -tol) return false;
    if (std::isfinite(lp.upper()(j)) && ray(j) > tol) return false;
  }
  const double slope = lp.costs().dot(ray);
  return lp.sense() == Sense::Minimize ? slope < -tol : slope > tol;
}

}  // namespace sysrisk::lp
