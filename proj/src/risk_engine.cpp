#include "sysrisk/risk_engine.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace sysrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string idx(Index i) { return std::to_string(i); }

void add_acceptance_rows(lp::LinearProgram& prog, const Acceptance& acceptance, const std::vector<Index>& u,
                         const std::vector<Index>* v) {
  for (const AcceptanceInequality& ineq : acceptance.constraints()) {
    std::vector<lp::Term> terms;
    for (Index w = 0; w < ineq.coefficients.size(); ++w) {
      const double c = ineq.coefficients(w);
      if (c == 0.0) continue;
      terms.push_back({u[static_cast<std::size_t>(w)], c});
      if (v) terms.push_back({(*v)[static_cast<std::size_t>(w)], c});
    }
    prog.add_row(std::move(terms), lp::Relation::GreaterEqual, ineq.rhs, "acc" + idx(prog.num_rows()));
  }
}

std::vector<Index> add_trade_vars(lp::LinearProgram& prog, const MarketSet& market) {
  std::vector<Index> h;
  const double lower = market.mode() == MarketMode::Span ? -lp::kInf : 0.0;
  for (Index k = 0; k < market.size(); ++k) h.push_back(prog.add_variable("h[" + idx(k) + "]", lower, lp::kInf));
  return h;
}

// Adds z_w = (G h)(., w) variables and their defining rows for every scenario,
// followed by one Gamma hypograph per scenario. Returns the v_w variables.
std::vector<Index> add_gamma_side(lp::LinearProgram& prog, const Instance& inst, const std::vector<Index>& h) {
  const Hypograph hyp = inst.gamma_agg->hypograph();
  const Index n = inst.agents;
  std::vector<Index> v;
  for (Index w = 0; w < inst.space->size(); ++w) {
    std::vector<Index> z;
    for (Index i = 0; i < n; ++i) {
      const Index zi = prog.add_variable("z[" + idx(i) + "," + idx(w) + "]", -lp::kInf, lp::kInf);
      std::vector<lp::Term> terms{{zi, 1.0}};
      for (Index k = 0; k < inst.market.size(); ++k) {
        const double g = inst.market.basis()[static_cast<std::size_t>(k)].values()(i, w);
        if (g != 0.0) terms.push_back({h[static_cast<std::size_t>(k)], -g});
      }
      prog.add_row(std::move(terms), lp::Relation::Equal, 0.0, "trade[" + idx(i) + "," + idx(w) + "]");
      z.push_back(zi);
    }
    const Index vw = prog.add_variable("v[" + idx(w) + "]", -lp::kInf, lp::kInf);
    append_hypograph(prog, hyp, z, vw, "w" + idx(w) + ".G.");
    v.push_back(vw);
  }
  return v;
}

struct Solved {
  PrimalProgram program;
  lp::LPResult result;
};

Solved solve_primal(const Instance& inst, const RandomVector& x, Measure measure) {
  Solved s{assemble_primal(inst, x, measure), {}};
  s.result = lp::solve(s.program.lp);
  return s;
}

Eigen::VectorXd gather(const Eigen::VectorXd& values, const std::vector<Index>& vars) {
  Eigen::VectorXd out(static_cast<Index>(vars.size()));
  for (std::size_t k = 0; k < vars.size(); ++k) out(static_cast<Index>(k)) = values(vars[k]);
  return out;
}

RiskResult to_result(Solved&& s) {
  RiskResult r;
  switch (s.result.status) {
    case lp::Status::Optimal:
      r.status = RiskStatus::Finite;
      r.value = s.result.value;
      r.allocation = gather(s.result.primal, s.program.allocation_vars);
      r.trade = gather(s.result.primal, s.program.trade_vars);
      break;
    case lp::Status::Unbounded:
      r.status = RiskStatus::MinusInfinity;
      r.value = -kInf;
      r.allocation = gather(s.result.primal, s.program.allocation_vars);
      r.trade = gather(s.result.primal, s.program.trade_vars);
      r.allocation_ray = gather(s.result.ray, s.program.allocation_vars);
      r.trade_ray = gather(s.result.ray, s.program.trade_vars);
      break;
    case lp::Status::Infeasible:
      r.status = RiskStatus::PlusInfinity;
      r.value = kInf;
      break;
  }
  r.program = std::make_shared<const lp::LinearProgram>(std::move(s.program.lp));
  return r;
}

// LP over the set whose support function is wanted: maximize
// sum_i E^{Q_i}[-W^i] over W with Lambda(W) (+ Gamma(G h)) acceptable.
double support_program(const Instance& inst, const ProbabilityVector& q, bool with_gamma) {
  inst.validate();
  require_same_space(inst.space, q.space(), "support function");
  if (q.agents() != inst.agents) throw Error(ErrorCode::DimensionMismatch, "Q has the wrong number of agents");
  const Index n = inst.agents;
  const Index scenarios = inst.space->size();
  lp::LinearProgram prog(lp::Sense::Maximize);
  const Hypograph hyp = inst.lambda.hypograph();
  std::vector<Index> u;
  for (Index w = 0; w < scenarios; ++w) {
    std::vector<Index> wv;
    for (Index i = 0; i < n; ++i) {
      wv.push_back(prog.add_variable("W[" + idx(i) + "," + idx(w) + "]", -lp::kInf, lp::kInf, -q.weights()(i, w)));
    }
    const Index uw = prog.add_variable("u[" + idx(w) + "]", -lp::kInf, lp::kInf);
    append_hypograph(prog, hyp, wv, uw, "w" + idx(w) + ".");
    u.push_back(uw);
  }
  std::vector<Index> v;
  if (with_gamma) {
    const std::vector<Index> h = add_trade_vars(prog, inst.market);
    v = add_gamma_side(prog, inst, h);
  }
  add_acceptance_rows(prog, inst.acceptance, u, with_gamma ? &v : nullptr);
  const lp::LPResult r = lp::solve(prog);
  switch (r.status) {
    case lp::Status::Optimal: return r.value;
    case lp::Status::Unbounded: return kInf;
    case lp::Status::Infeasible: return -kInf;
  }
  return kInf;
}

// Smallest t (to bisection accuracy) with accept(t) true, approached from the
// acceptable side. accept must be monotone in t.
template <class Pred>
std::optional<double> minimal_shift(Pred accept) {
  constexpr double kLimit = 1e6;
  double hi = 1.0;
  while (!accept(hi)) {
    hi *= 2.0;
    if (hi > kLimit) return std::nullopt;
  }
  double lo = hi > 1.0 ? hi / 2.0 : 0.0;
  double step = 1.0;
  while (accept(lo)) {
    hi = lo;
    lo -= step;
    step *= 2.0;
    if (lo < -kLimit) return hi;
  }
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (accept(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

std::string_view to_string(RiskStatus status) noexcept {
  switch (status) {
    case RiskStatus::Finite: return "Finite";
    case RiskStatus::MinusInfinity: return "MinusInfinity";
    case RiskStatus::PlusInfinity: return "PlusInfinity";
  }
  return "Unknown";
}

void Instance::validate() const {
  if (!space) throw Error(ErrorCode::InvalidArgument, "instance without a space");
  if (agents < 1) throw Error(ErrorCode::InvalidArgument, "instance needs N >= 1");
  if (lambda.dimension() != agents) throw Error(ErrorCode::DimensionMismatch, "Lambda dimension differs from N");
  if (gamma_agg && gamma_agg->dimension() != agents) {
    throw Error(ErrorCode::DimensionMismatch, "Gamma dimension differs from N");
  }
  require_same_space(space, acceptance.space(), "acceptance set");
  require_same_space(space, market.space(), "market");
  if (market.agents() != agents) throw Error(ErrorCode::DimensionMismatch, "market N differs from instance N");
  if (const auto* family = std::get_if<ExpectationFamily>(&acceptance.spec())) {
    for (const ExpectationTest& t : family->tests) {
      if (t.p.agents() != agents) throw Error(ErrorCode::DimensionMismatch, "expectation test has wrong N");
    }
  }
}

PrimalProgram assemble_primal(const Instance& inst, const RandomVector& x, Measure measure) {
  inst.validate();
  require_same_space(inst.space, x.space(), "position");
  if (x.agents() != inst.agents) throw Error(ErrorCode::DimensionMismatch, "position has the wrong number of agents");
  if (measure == Measure::RhoGamma && !inst.gamma_agg) {
    throw Error(ErrorCode::MissingGamma, "rho_Gamma needs a Gamma aggregation");
  }
  const Index n = inst.agents;
  const Index scenarios = inst.space->size();
  const bool market_in_lambda = measure == Measure::Rho;

  PrimalProgram p;
  lp::LinearProgram& prog = p.lp;
  for (Index i = 0; i < n; ++i) {
    p.allocation_vars.push_back(prog.add_variable("m[" + idx(i) + "]", -lp::kInf, lp::kInf, 1.0));
  }
  p.trade_vars = add_trade_vars(prog, inst.market);
  p.coupling_rows.resize(n, scenarios);

  const Hypograph hyp = inst.lambda.hypograph();
  std::vector<Index> u;
  for (Index w = 0; w < scenarios; ++w) {
    std::vector<Index> xw;
    for (Index i = 0; i < n; ++i) {
      const Index xi = prog.add_variable("x[" + idx(i) + "," + idx(w) + "]", -lp::kInf, lp::kInf);
      std::vector<lp::Term> terms{{xi, 1.0}, {p.allocation_vars[static_cast<std::size_t>(i)], -1.0}};
      if (market_in_lambda) {
        for (Index k = 0; k < inst.market.size(); ++k) {
          const double g = inst.market.basis()[static_cast<std::size_t>(k)].values()(i, w);
          if (g != 0.0) terms.push_back({p.trade_vars[static_cast<std::size_t>(k)], -g});
        }
      }
      p.coupling_rows(i, w) = prog.add_row(std::move(terms), lp::Relation::Equal, x.values()(i, w),
                                           "couple[" + idx(i) + "," + idx(w) + "]");
      xw.push_back(xi);
    }
    const Index uw = prog.add_variable("u[" + idx(w) + "]", -lp::kInf, lp::kInf);
    append_hypograph(prog, hyp, xw, uw, "w" + idx(w) + ".");
    u.push_back(uw);
  }
  if (market_in_lambda) {
    add_acceptance_rows(prog, inst.acceptance, u, nullptr);
  } else {
    const std::vector<Index> v = add_gamma_side(prog, inst, p.trade_vars);
    add_acceptance_rows(prog, inst.acceptance, u, &v);
  }
  return p;
}

RiskResult compute_risk(const Instance& inst, const RandomVector& x, Measure measure) {
  return to_result(solve_primal(inst, x, measure));
}

RiskResult compute_rho(const Instance& inst, const RandomVector& x) { return compute_risk(inst, x, Measure::Rho); }

RiskResult compute_rho_gamma(const Instance& inst, const RandomVector& x) {
  return compute_risk(inst, x, Measure::RhoGamma);
}

double compute_gamma(const Instance& inst, Measure measure) {
  const RiskResult r = compute_risk(inst, RandomVector::zero(inst.space, inst.agents), measure);
  return r.value;
}

double support_acceptance(const Instance& inst, const ProbabilityVector& q) {
  return support_program(inst, q, false);
}

double support_gamma_set(const Instance& inst, const ProbabilityVector& q) {
  if (!inst.gamma_agg) throw Error(ErrorCode::MissingGamma, "Gamma set support needs a Gamma aggregation");
  return support_program(inst, q, true);
}

double support_market(const MarketSet& market, const ProbabilityVector& q, int sign, double tol) {
  require_same_space(market.space(), q.space(), "market support function");
  if (q.agents() != market.agents()) throw Error(ErrorCode::DimensionMismatch, "Q has the wrong number of agents");
  if (sign != 1 && sign != -1) throw Error(ErrorCode::InvalidArgument, "sign must be +1 or -1");
  // sup_h sum_k h_k * slope_k with slope_k = -sign * sum_i E^{Q_i}[g_k^i].
  for (const RandomVector& g : market.basis()) {
    const double slope = -sign * pairing(g.values(), q.weights());
    if (market.mode() == MarketMode::Span ? std::abs(slope) > tol : slope > tol) return kInf;
  }
  return 0.0;
}

PenaltyParts penalty_decomposition(const Instance& inst, const ProbabilityVector& q) {
  return {support_acceptance(inst, q), support_market(inst.market, q, -1)};
}

DualResult compute_dual(const Instance& inst, const RandomVector& x, Measure measure, const DualOptions& options) {
  Solved s = solve_primal(inst, x, measure);
  if (s.result.status != lp::Status::Optimal) {
    throw Error(ErrorCode::DualExtractionFailed,
                "primal is " + std::string(lp::to_string(s.result.status)) + ", no dual optimizer exists");
  }
  const Index n = inst.agents;
  const Index scenarios = inst.space->size();
  Eigen::MatrixXd raw(n, scenarios);
  double coupling_part = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index w = 0; w < scenarios; ++w) {
      const double y = s.result.duals(s.program.coupling_rows(i, w));
      raw(i, w) = -y;
      coupling_part += y * x.values()(i, w);
    }
  }
  std::optional<ProbabilityVector> q;
  try {
    q = validate_probability_vector(inst.space, raw, options.probability_tol);
  } catch (const Error& e) {
    throw Error(ErrorCode::DualExtractionFailed, e.what());
  }
  const double lp_dual = lp::dual_objective(s.program.lp, s.result.duals, s.result.reduced_costs);

  const PenaltyParts parts = measure == Measure::Rho ? penalty_decomposition(inst, *q)
                                                     : PenaltyParts{support_gamma_set(inst, *q), 0.0};
  const double expectation = -pairing(x.values(), q->weights());
  const double penalty = parts.total();
  return DualResult{*q,
                    s.result.value,
                    expectation,
                    penalty,
                    -(lp_dual - coupling_part),
                    parts,
                    expectation - penalty};
}

bool is_fair(const ProbabilityVector& q, const MarketSet& market, double tol) {
  if (market.mode() != MarketMode::Span) throw Error(ErrorCode::NotASpan, "fairness needs a linear market");
  require_same_space(market.space(), q.space(), "fairness");
  if (q.agents() != market.agents()) throw Error(ErrorCode::DimensionMismatch, "Q has the wrong number of agents");
  for (const RandomVector& g : market.basis()) {
    if (std::abs(pairing(g.values(), q.weights())) > tol) return false;
  }
  return true;
}

ArbitrageVerdict detect_regulatory_arbitrage(const Instance& inst, double gamma, Measure measure) {
  if (std::isnan(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma is NaN");
  const RiskResult r = compute_risk(inst, RandomVector::zero(inst.space, inst.agents), measure);
  ArbitrageVerdict v{gamma, r.value, true, std::nullopt, {}};
  if (gamma > 0.0) v.warnings.push_back("supplied gamma > 0 is outside the normalization gamma <= 0");
  if (r.status == RiskStatus::Finite) {
    v.arbitrage_free = r.value >= gamma;
    if (!v.arbitrage_free) v.certificate = ArbitrageCertificate{r.allocation, r.trade, r.allocation.sum()};
    return v;
  }
  // Unbounded: walk along the improving ray until the total drops below gamma.
  v.arbitrage_free = false;
  const double slope = r.allocation_ray.sum();
  const double start = r.allocation.sum();
  const double t = std::isfinite(gamma) ? std::max(0.0, (start - gamma) / -slope) + 1.0 : 1.0;
  Eigen::VectorXd m = r.allocation + t * r.allocation_ray;
  Eigen::VectorXd h = r.trade + t * r.trade_ray;
  v.certificate = ArbitrageCertificate{m, h, m.sum()};
  return v;
}

FairMeasureReport find_fair_measure(const Instance& inst, double gamma, Measure measure, std::uint64_t seed,
                                    int samples) {
  FairMeasureReport report;
  report.gamma = gamma;
  report.seed = seed;
  const RandomVector zero = RandomVector::zero(inst.space, inst.agents);
  const RiskResult base = compute_risk(inst, zero, measure);
  report.gamma_star = base.value;
  if (base.status != RiskStatus::Finite || gamma > base.value + 1e-9) return report;

  const DualResult dual = compute_dual(inst, zero, measure);
  report.q = dual.q;

  const Index n = inst.agents;
  const Index scenarios = inst.space->size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> position(-2.0, 2.0);
  std::uniform_real_distribution<double> coefficient(measure == Measure::Rho && inst.market.mode() == MarketMode::Cone
                                                         ? 0.0
                                                         : -1.0,
                                                     1.0);
  report.worst_slack = kInf;
  int attempts = 0;
  while (report.samples < samples && attempts < 20 * samples) {
    ++attempts;
    const Eigen::MatrixXd base_position =
        Eigen::MatrixXd::NullaryExpr(n, scenarios, [&] { return position(rng); });
    Eigen::VectorXd h(inst.market.size());
    for (Index k = 0; k < h.size(); ++k) {
      h(k) = inst.market.mode() == MarketMode::Cone ? std::abs(coefficient(rng)) : coefficient(rng);
    }
    Eigen::MatrixXd g;
    Eigen::RowVectorXd trade_value;

    // Shift the base position along 1 to the boundary of the relevant set.
    auto accept = [&](double t) {
      const Eigen::MatrixXd shifted = base_position.array() + t;
      Eigen::RowVectorXd aggregate = inst.lambda.evaluate_columns(shifted);
      if (measure == Measure::RhoGamma) aggregate += trade_value;
      return inst.acceptance.is_acceptable(aggregate);
    };
    std::optional<double> t;
    // A bounded Lambda cannot offset a trade with very negative Gamma(g), so
    // for rho_Gamma the trade shrinks until a shift exists; g = 0 always works.
    for (int shrink = 0; shrink < 40 && !t; ++shrink, h *= 0.5) {
      if (shrink == 39) h.setZero();
      g = inst.market.payoff(h);
      if (measure == Measure::RhoGamma) trade_value = inst.gamma_agg->evaluate_columns(g);
      t = minimal_shift(accept);
      if (measure == Measure::Rho) break;
    }
    if (!t) continue;
    const Eigen::MatrixXd w = base_position.array() + *t;
    // rho: X = W - g satisfies Lambda(X + g) in A. rho_Gamma: X = W itself.
    const Eigen::MatrixXd xm = measure == Measure::Rho ? Eigen::MatrixXd(w - g) : w;
    const double slack = pairing(xm, dual.q.weights()) - gamma;
    report.worst_slack = std::min(report.worst_slack, slack);
    ++report.samples;
  }
  report.validated = report.samples == samples && report.worst_slack >= -1e-6;
  return report;
}

bool AssumptionAReport::all_hold() const {
  for (const AssumptionAStep& s : steps) {
    if (!s.success || !s.bound_holds) return false;
  }
  return !steps.empty();
}

AssumptionAReport check_assumption_a(const Instance& inst, double gamma, int n_max, Measure measure) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  if (!std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be finite");
  const Index n_agents = inst.agents;
  AssumptionAReport report{gamma, inst.space->max_z(), {}, std::nullopt};
  const Eigen::RowVectorXd excess = (inst.space->z().array() - report.z).cwiseMax(0.0).transpose();

  for (int n = 1; n <= n_max; ++n) {
    AssumptionAStep step{n, false, Eigen::VectorXd(), 0.0, false};
    const RandomVector shortfall(inst.space, Eigen::VectorXd::Ones(n_agents) * (-static_cast<double>(n) * excess));
    PrimalProgram p = assemble_primal(inst, shortfall, measure);
    const double level = gamma / static_cast<double>(n_agents) + 1.0 / static_cast<double>(n);
    for (Index var : p.allocation_vars) p.lp.set_bounds(var, level, level);
    const lp::LPResult r = lp::solve(p.lp);
    if (r.status == lp::Status::Optimal) {
      step.success = true;
      step.witness = gather(r.primal, p.trade_vars);
    }
    step.implied_rho = compute_risk(inst, shortfall, measure).value;
    step.bound_holds = step.implied_rho <= static_cast<double>(n_agents) / n + gamma + 1e-8;
    report.steps.push_back(std::move(step));
  }
  for (int n = n_max; n >= 1; --n) {
    if (!report.steps[static_cast<std::size_t>(n - 1)].success) break;
    report.n0 = n;
  }
  return report;
}

}  // namespace sysrisk
