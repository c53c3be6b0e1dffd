#include "sysrisk/aggregation.hpp"

#include <cmath>
#include <limits>

namespace sysrisk {

namespace {

constexpr double kZeroTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

Index validate(const SumUtility& s) {
  const Index n = s.alpha_i.size();
  require(n >= 1, "sum_utility needs at least one agent");
  require(std::isfinite(s.alpha) && s.alpha >= 0.0, "sum_utility alpha must be >= 0");
  require(s.alpha_i.allFinite() && (s.alpha_i.array() >= 0.0).all(), "sum_utility alpha_i must be >= 0");
  require(static_cast<Index>(s.u_i.size()) == n, "sum_utility needs one u_i per agent");
  if (s.alpha > 0.0) s.u.validate("u");
  for (Index i = 0; i < n; ++i) s.u_i[static_cast<std::size_t>(i)].validate("u_" + std::to_string(i));
  return n;
}

Index validate(const NegativePart& s) {
  require(s.alpha.size() >= 1, "negative_part needs at least one agent");
  require(s.alpha.allFinite() && (s.alpha.array() >= 0.0).all(), "negative_part alpha_i must be >= 0");
  return s.alpha.size();
}

Index validate(const Network& s) {
  const Index n = s.pi.rows();
  require(n >= 1 && s.pi.cols() == n, "network liability matrix must be square");
  require(s.pi.allFinite() && (s.pi.array() >= 0.0).all() && (s.pi.array() <= 1.0).all(),
          "network liability fractions must lie in [0, 1]");
  require(s.pi.diagonal().cwiseAbs().maxCoeff() == 0.0, "network liability matrix needs a zero diagonal");
  require((s.pi.rowwise().sum().array() <= 1.0 + kZeroTol).all(), "network row sums must be <= 1");
  require(std::isfinite(s.gamma_net) && s.gamma_net > 1.0, "network gamma_net must exceed 1");
  return n;
}

Index validate(const AffineMax& s) {
  const Index k = s.slopes.rows();
  require(k >= 1 && s.slopes.cols() >= 1, "affine_max needs at least one piece");
  require(s.intercepts.size() == k, "affine_max intercept count differs from piece count");
  require(s.slopes.allFinite() && s.intercepts.allFinite(), "affine_max data must be finite");
  require((s.slopes.array() >= 0.0).all(), "affine_max slopes must be >= 0");
  require(std::abs(s.intercepts.minCoeff()) <= kZeroTol, "affine_max needs min intercept 0");
  return s.slopes.cols();
}

double network_value(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Index n = net.pi.rows();
  lp::LinearProgram prog(lp::Sense::Maximize);
  std::vector<Index> y(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = prog.add_variable("y" + std::to_string(i), -lp::kInf, 0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    b[static_cast<std::size_t>(i)] = prog.add_variable("b" + std::to_string(i), -lp::kInf, 0.0, net.gamma_net);
  }
  for (Index i = 0; i < n; ++i) {
    std::vector<lp::Term> terms{{b[static_cast<std::size_t>(i)], 1.0}, {y[static_cast<std::size_t>(i)], 1.0}};
    for (Index j = 0; j < n; ++j) {
      if (net.pi(j, i) != 0.0) terms.push_back({y[static_cast<std::size_t>(j)], -net.pi(j, i)});
    }
    prog.add_row(std::move(terms), lp::Relation::LessEqual, x(i));
  }
  lp::LPResult r;
  try {
    r = lp::solve(prog);
  } catch (const Error& e) {
    throw Error(ErrorCode::InnerLPFailed, e.what());
  }
  if (r.status != lp::Status::Optimal) {
    throw Error(ErrorCode::InnerLPFailed, "network clearing LP is " + std::string(lp::to_string(r.status)));
  }
  return r.value;
}

}  // namespace

double PiecewiseLinear::operator()(double x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Piece& p : pieces) best = std::min(best, p.slope * x + p.intercept);
  return best;
}

void PiecewiseLinear::validate(const std::string& what) const {
  require(!pieces.empty(), what + " needs at least one piece");
  double at_zero = std::numeric_limits<double>::infinity();
  for (const Piece& p : pieces) {
    require(std::isfinite(p.slope) && std::isfinite(p.intercept), what + " pieces must be finite");
    require(p.slope >= 0.0, what + " must be increasing (slopes >= 0)");
    at_zero = std::min(at_zero, p.intercept);
  }
  require(std::abs(at_zero) <= kZeroTol, what + "(0) must be 0");
}

Aggregation::Aggregation(Variant spec) : spec_(std::move(spec)) {
  dimension_ = std::visit([](const auto& s) { return validate(s); }, spec_);
  const double at_zero = evaluate(Eigen::VectorXd::Zero(dimension_));
  const double tol = is_network() ? 1e-9 : kZeroTol;
  require(std::abs(at_zero) <= tol, "aggregation must vanish at the origin");
}

Aggregation Aggregation::sum(Index n) {
  return Aggregation(AffineMax{Eigen::MatrixXd::Ones(1, n), Eigen::VectorXd::Zero(1)});
}

std::string_view Aggregation::kind() const noexcept {
  return std::visit(overloaded{[](const SumUtility&) { return std::string_view("sum_utility"); },
                               [](const NegativePart&) { return std::string_view("negative_part"); },
                               [](const Network&) { return std::string_view("network"); },
                               [](const AffineMax&) { return std::string_view("affine_max"); }},
                    spec_);
}

double Aggregation::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dimension_) throw Error(ErrorCode::DimensionMismatch, "aggregation input has wrong length");
  if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "aggregation input must be finite");
  return std::visit(
      overloaded{
          [&](const SumUtility& s) {
            double v = s.alpha > 0.0 ? s.alpha * s.u(x.sum()) : 0.0;
            for (Index i = 0; i < dimension_; ++i) {
              if (s.alpha_i(i) > 0.0) v += s.alpha_i(i) * s.u_i[static_cast<std::size_t>(i)](x(i));
            }
            return v;
          },
          [&](const NegativePart& s) { return -s.alpha.dot(x.cwiseMin(0.0).cwiseAbs()); },
          [&](const Network& s) { return network_value(s, x); },
          [&](const AffineMax& s) { return (s.slopes * x + s.intercepts).minCoeff(); }},
      spec_);
}

Eigen::RowVectorXd Aggregation::evaluate_columns(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  Eigen::RowVectorXd out(x.cols());
  for (Index w = 0; w < x.cols(); ++w) out(w) = evaluate(x.col(w));
  return out;
}

Hypograph Aggregation::hypograph() const {
  const Index n = dimension_;
  Hypograph h;
  h.dimension = n;
  auto add_aux = [&](std::string name, double lower, double upper) {
    h.aux_names.push_back(std::move(name));
    h.aux_lower.push_back(lower);
    h.aux_upper.push_back(upper);
    return h.aux_count++;
  };
  // Rows are built after all aux variables exist so every aux_coef has full width.
  struct Pending {
    Eigen::RowVectorXd x_coef;
    double u_coef;
    std::vector<std::pair<Index, double>> aux;
    lp::Relation relation;
    double rhs;
  };
  std::vector<Pending> pending;

  std::visit(
      overloaded{
          [&](const SumUtility& s) {
            std::vector<std::pair<Index, double>> top{};
            if (s.alpha > 0.0) {
              const Index t = add_aux("t_sum", -lp::kInf, lp::kInf);
              for (const auto& p : s.u.pieces) {
                pending.push_back({-p.slope * Eigen::RowVectorXd::Ones(n), 0.0, {{t, 1.0}},
                                   lp::Relation::LessEqual, p.intercept});
              }
              top.push_back({t, -s.alpha});
            }
            for (Index i = 0; i < n; ++i) {
              if (s.alpha_i(i) == 0.0) continue;
              const Index t = add_aux("t" + std::to_string(i), -lp::kInf, lp::kInf);
              for (const auto& p : s.u_i[static_cast<std::size_t>(i)].pieces) {
                Eigen::RowVectorXd xc = Eigen::RowVectorXd::Zero(n);
                xc(i) = -p.slope;
                pending.push_back({xc, 0.0, {{t, 1.0}}, lp::Relation::LessEqual, p.intercept});
              }
              top.push_back({t, -s.alpha_i(i)});
            }
            pending.push_back({Eigen::RowVectorXd::Zero(n), 1.0, top, lp::Relation::LessEqual, 0.0});
          },
          [&](const NegativePart& s) {
            std::vector<std::pair<Index, double>> top;
            for (Index i = 0; i < n; ++i) {
              const Index t = add_aux("t" + std::to_string(i), -lp::kInf, 0.0);
              Eigen::RowVectorXd xc = Eigen::RowVectorXd::Zero(n);
              xc(i) = -s.alpha(i);
              pending.push_back({xc, 0.0, {{t, 1.0}}, lp::Relation::LessEqual, 0.0});
              top.push_back({t, -1.0});
            }
            pending.push_back({Eigen::RowVectorXd::Zero(n), 1.0, top, lp::Relation::LessEqual, 0.0});
          },
          [&](const Network& s) {
            std::vector<Index> y(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = add_aux("y" + std::to_string(i), -lp::kInf, 0.0);
            for (Index i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = add_aux("b" + std::to_string(i), -lp::kInf, 0.0);
            std::vector<std::pair<Index, double>> top;
            for (Index i = 0; i < n; ++i) {
              top.push_back({y[static_cast<std::size_t>(i)], -1.0});
              top.push_back({b[static_cast<std::size_t>(i)], -s.gamma_net});
            }
            pending.push_back({Eigen::RowVectorXd::Zero(n), 1.0, top, lp::Relation::LessEqual, 0.0});
            for (Index i = 0; i < n; ++i) {
              Eigen::RowVectorXd xc = Eigen::RowVectorXd::Zero(n);
              xc(i) = 1.0;
              std::vector<std::pair<Index, double>> aux{{b[static_cast<std::size_t>(i)], -1.0},
                                                        {y[static_cast<std::size_t>(i)], -1.0}};
              for (Index j = 0; j < n; ++j) {
                if (s.pi(j, i) != 0.0) aux.push_back({y[static_cast<std::size_t>(j)], s.pi(j, i)});
              }
              pending.push_back({xc, 0.0, aux, lp::Relation::GreaterEqual, 0.0});
            }
          },
          [&](const AffineMax& s) {
            for (Index k = 0; k < s.slopes.rows(); ++k) {
              pending.push_back({-s.slopes.row(k), 1.0, {}, lp::Relation::LessEqual, s.intercepts(k)});
            }
          }},
      spec_);

  for (const Pending& p : pending) {
    Eigen::RowVectorXd aux = Eigen::RowVectorXd::Zero(h.aux_count);
    for (const auto& [idx, c] : p.aux) aux(idx) += c;
    h.rows.push_back({p.x_coef, p.u_coef, aux, p.relation, p.rhs});
  }
  return h;
}

std::vector<Index> append_hypograph(lp::LinearProgram& lp, const Hypograph& hyp,
                                    const std::vector<Index>& x_vars, Index u_var,
                                    const std::string& prefix) {
  if (static_cast<Index>(x_vars.size()) != hyp.dimension) {
    throw Error(ErrorCode::DimensionMismatch, "hypograph embedding has the wrong number of x variables");
  }
  std::vector<Index> aux(static_cast<std::size_t>(hyp.aux_count));
  for (Index k = 0; k < hyp.aux_count; ++k) {
    const auto s = static_cast<std::size_t>(k);
    aux[s] = lp.add_variable(prefix + hyp.aux_names[s], hyp.aux_lower[s], hyp.aux_upper[s]);
  }
  for (const Hypograph::Row& row : hyp.rows) {
    std::vector<lp::Term> terms;
    for (Index i = 0; i < hyp.dimension; ++i) {
      if (row.x_coef(i) != 0.0) terms.push_back({x_vars[static_cast<std::size_t>(i)], row.x_coef(i)});
    }
    if (row.u_coef != 0.0) terms.push_back({u_var, row.u_coef});
    for (Index k = 0; k < hyp.aux_count; ++k) {
      if (row.aux_coef(k) != 0.0) terms.push_back({aux[static_cast<std::size_t>(k)], row.aux_coef(k)});
    }
    lp.add_row(std::move(terms), row.relation, row.rhs, prefix + "hyp" + std::to_string(lp.num_rows()));
  }
  return aux;
}

}  // namespace sysrisk
