#include "sysrisk/cli/run.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <random>

#include "sysrisk/cli/io.hpp"

namespace sysrisk::cli {

namespace {

using oj = nlohmann::ordered_json;

constexpr double kCashTol = 1e-8;

oj vector_json(const Eigen::VectorXd& v) {
  oj out = oj::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

oj matrix_json(const Eigen::MatrixXd& m) {
  oj out = oj::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

const char* measure_name(Measure m) { return m == Measure::Rho ? "rho" : "rho_gamma"; }

std::string number_text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v + 0.0);
  return buf;
}

std::string scalar_text(const oj& v) {
  if (v.is_number_float()) return number_text(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "none";
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + scalar_text(v[k]);
    return s + "]";
  }
  return v.dump();
}

void render_text(std::ostream& os, const oj& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  for (const auto& [key, v] : j.items()) {
    bool nested = v.is_object();
    if (v.is_array()) {
      for (const auto& e : v) nested = nested || e.is_structured();
    }
    if (!nested) {
      os << pad << key << ": " << scalar_text(v) << "\n";
      continue;
    }
    os << pad << key << ":\n";
    if (v.is_object()) {
      render_text(os, v, depth + 1);
      continue;
    }
    for (const auto& e : v) {
      if (e.is_object()) {
        os << pad << "  -\n";
        render_text(os, e, depth + 2);
      } else {
        os << pad << "  - " << scalar_text(e) << "\n";
      }
    }
  }
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InnerLPFailed:
    case ErrorCode::NumericalBreakdown:
    case ErrorCode::DualExtractionFailed:
      return exit_code::kNumericalError;
    default:
      return exit_code::kInputError;
  }
}

struct Context {
  const RunConfig& cfg;
  Instance inst;
  RandomVector x;
  Measure measure;
  double gamma_star;
};

oj header(const Context& c) {
  oj j;
  j["command"] = std::string(to_string(c.cfg.command));
  j["instance"] = c.cfg.instance_path;
  j["measure"] = measure_name(c.measure);
  j["gamma_star"] = c.gamma_star;
  j["gamma_star_status"] = std::isfinite(c.gamma_star) ? "Finite" : "MinusInfinity";
  return j;
}

oj assumption_summary(const Context& c) {
  oj j;
  if (!std::isfinite(c.gamma_star)) {
    j["status"] = "not_applicable";
    j["reason"] = "gamma* is -infinity";
    return j;
  }
  const AssumptionAReport r = check_assumption_a(c.inst, c.gamma_star, c.cfg.n_max, c.measure);
  j["status"] = r.all_hold() ? "holds" : "fails";
  j["gamma"] = r.gamma;
  j["n_max"] = c.cfg.n_max;
  j["n0"] = r.n0 ? oj(*r.n0) : oj(nullptr);
  return j;
}

// Threshold for arbitrage/fair/check-a: the flag, else gamma*, else 0 when
// gamma* is -infinity (the top of the admissible range gamma <= 0).
std::pair<double, const char*> resolve_gamma(const Context& c) {
  if (c.cfg.gamma) return {*c.cfg.gamma, "flag"};
  if (std::isfinite(c.gamma_star)) return {c.gamma_star, "gamma_star"};
  return {0.0, "zero"};
}

oj risk_body(const RiskResult& r) {
  oj j;
  j["status"] = std::string(to_string(r.status));
  j["value"] = r.value;
  j["allocation"] = vector_json(r.allocation);
  j["trade"] = vector_json(r.trade);
  if (r.status == RiskStatus::MinusInfinity) {
    j["allocation_ray"] = vector_json(r.allocation_ray);
    j["trade_ray"] = vector_json(r.trade_ray);
  }
  return j;
}

bool fairness_applies(const Context& c) {
  return c.measure == Measure::Rho && c.inst.market.mode() == MarketMode::Span;
}

oj dual_body(const Context& c, const DualResult& d) {
  oj j;
  j["status"] = "Finite";
  j["primal_value"] = d.primal_value;
  j["dual_value"] = d.dual_value;
  j["gap"] = d.gap();
  j["expectation"] = d.expectation;
  j["penalty"] = d.penalty;
  j["multiplier_penalty"] = d.multiplier_penalty;
  j["decomposition"] = {{"acceptance", d.decomposition.acceptance}, {"market", d.decomposition.market}};
  j["q"] = matrix_json(d.q.weights());
  j["fair"] = fairness_applies(c) ? oj(is_fair(d.q, c.inst.market, c.cfg.tolerance)) : oj(nullptr);
  return j;
}

bool certificate_valid(const Context& c, const ArbitrageCertificate& cert, double gamma) {
  if (!(cert.total < gamma)) return false;
  const Eigen::MatrixXd g = c.inst.market.payoff(cert.trade);
  Eigen::RowVectorXd y;
  if (c.measure == Measure::Rho) {
    y = c.inst.lambda.evaluate_columns(g.colwise() + cert.allocation);
  } else {
    y = c.inst.gamma_agg->evaluate_columns(g).array() + c.inst.lambda.evaluate(cert.allocation);
  }
  return c.inst.acceptance.is_acceptable(y, 1e-8 * (1.0 + y.cwiseAbs().maxCoeff()));
}

oj property(const std::string& name, bool passed, oj detail) {
  oj j;
  j["name"] = name;
  j["passed"] = passed;
  j["detail"] = std::move(detail);
  return j;
}

void verify_measure(const Context& c, oj& props, bool& all) {
  const std::string tag = std::string(measure_name(c.measure)) + ".";
  auto add = [&](const std::string& name, bool ok, oj detail) {
    all = all && ok;
    props.push_back(property(tag + name, ok, std::move(detail)));
  };
  const double tol = c.cfg.tolerance;

  if (!std::isfinite(c.gamma_star)) {
    // Arbitrage branch: certificate for finite thresholds, no dual, no fair measure.
    bool certs = true;
    for (double gamma : {0.0, -1e3}) {
      const ArbitrageVerdict v = detect_regulatory_arbitrage(c.inst, gamma, c.measure);
      certs = certs && !v.arbitrage_free && v.certificate && certificate_valid(c, *v.certificate, gamma);
    }
    add("arbitrage_certificate", certs, {{"thresholds", {0.0, -1e3}}});
    bool refused = false;
    try {
      compute_dual(c.inst, RandomVector::zero(c.inst.space, c.inst.agents), c.measure);
    } catch (const Error& e) {
      refused = e.code() == ErrorCode::DualExtractionFailed;
    }
    add("dual_refused", refused, oj(nullptr));
    add("no_fair_measure", !find_fair_measure(c.inst, 0.0, c.measure, c.cfg.seed).q, oj(nullptr));
    return;
  }

  const RiskResult r = compute_risk(c.inst, c.x, c.measure);
  if (r.status != RiskStatus::Finite) {
    add("rho_finite", false, {{"status", std::string(to_string(r.status))}});
    return;
  }
  const DualResult d = compute_dual(c.inst, c.x, c.measure);
  const double scale = 1.0 + std::abs(r.value);
  add("duality_gap", std::abs(d.gap()) <= tol * scale, {{"gap", d.gap()}, {"tolerance", tol * scale}});
  add("penalty_decomposition", std::abs(d.multiplier_penalty - d.penalty) <= tol * (1.0 + std::abs(d.penalty)),
      {{"support_functions", d.penalty}, {"multipliers", d.multiplier_penalty}});
  if (fairness_applies(c)) add("dual_optimizer_fair", is_fair(d.q, c.inst.market, tol), oj(nullptr));

  std::mt19937_64 rng(c.cfg.seed);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd cash(c.inst.agents);
    for (Index i = 0; i < cash.size(); ++i) cash(i) = shift(rng);
    const RandomVector xc(c.inst.space, c.x.values().colwise() + cash);
    const double moved = compute_risk(c.inst, xc, c.measure).value;
    worst = std::max(worst, std::abs(moved - (r.value - cash.sum())) / scale);
  }
  add("cash_additivity", worst <= kCashTol, {{"worst_relative_error", worst}});

  const FairMeasureReport fair = find_fair_measure(c.inst, c.gamma_star, c.measure, c.cfg.seed);
  add("fair_measure", fair.q && fair.validated, {{"samples", fair.samples}, {"worst_slack", fair.worst_slack}});
  add("arbitrage_free_at_gamma_star", detect_regulatory_arbitrage(c.inst, c.gamma_star, c.measure).arbitrage_free,
      oj(nullptr));
  const AssumptionAReport a = check_assumption_a(c.inst, c.gamma_star, c.cfg.n_max, c.measure);
  add("assumption_a", a.all_hold(), {{"n_max", c.cfg.n_max}, {"n0", a.n0 ? oj(*a.n0) : oj(nullptr)}});
}

int dispatch(const Context& c, oj& report) {
  switch (c.cfg.command) {
    case Command::Rho:
    case Command::RhoGamma:
      report.update(risk_body(compute_risk(c.inst, c.x, c.measure)));
      return exit_code::kOk;
    case Command::Gamma:
      report["gamma"] = c.gamma_star;
      return exit_code::kOk;
    case Command::Dual: {
      const RiskResult r = compute_risk(c.inst, c.x, c.measure);
      if (r.status != RiskStatus::Finite) {
        report["status"] = std::string(to_string(r.status));
        report["message"] = "no dual optimizer: the primal value is not finite";
        return exit_code::kPropertyFail;
      }
      report.update(dual_body(c, compute_dual(c.inst, c.x, c.measure)));
      return exit_code::kOk;
    }
    case Command::Arbitrage: {
      const auto [gamma, source] = resolve_gamma(c);
      const ArbitrageVerdict v = detect_regulatory_arbitrage(c.inst, gamma, c.measure);
      report["gamma"] = gamma;
      report["gamma_source"] = source;
      report["arbitrage_free"] = v.arbitrage_free;
      if (v.certificate) {
        report["certificate"] = {{"allocation", vector_json(v.certificate->allocation)},
                                 {"trade", vector_json(v.certificate->trade)},
                                 {"total", v.certificate->total}};
      } else {
        report["certificate"] = nullptr;
      }
      report["warnings"] = v.warnings;
      return v.arbitrage_free ? exit_code::kOk : exit_code::kPropertyFail;
    }
    case Command::Fair: {
      const auto [gamma, source] = resolve_gamma(c);
      const FairMeasureReport f = find_fair_measure(c.inst, gamma, c.measure, c.cfg.seed);
      report["gamma"] = gamma;
      report["gamma_source"] = source;
      report["found"] = f.q.has_value();
      report["q"] = f.q ? matrix_json(f.q->weights()) : oj(nullptr);
      report["seed"] = f.seed;
      report["samples"] = f.samples;
      report["worst_slack"] = f.q ? oj(f.worst_slack) : oj(nullptr);
      report["validated"] = f.validated;
      report["fair"] = f.q && fairness_applies(c) ? oj(is_fair(*f.q, c.inst.market, c.cfg.tolerance)) : oj(nullptr);
      return f.q && f.validated ? exit_code::kOk : exit_code::kPropertyFail;
    }
    case Command::CheckA: {
      const auto [gamma, source] = resolve_gamma(c);
      if (!c.cfg.gamma && !std::isfinite(c.gamma_star)) {
        report["status"] = "not_applicable";
        report["message"] = "gamma* is -infinity; pass --gamma to test a threshold";
        return exit_code::kPropertyFail;
      }
      const AssumptionAReport a = check_assumption_a(c.inst, gamma, c.cfg.n_max, c.measure);
      report["gamma"] = gamma;
      report["gamma_source"] = source;
      report["z"] = a.z;
      oj steps = oj::array();
      for (const AssumptionAStep& s : a.steps) {
        steps.push_back({{"n", s.n},
                         {"success", s.success},
                         {"witness", s.success ? vector_json(s.witness) : oj(nullptr)},
                         {"implied_rho", s.implied_rho},
                         {"bound", static_cast<double>(c.inst.agents) / s.n + gamma},
                         {"bound_holds", s.bound_holds}});
      }
      report["steps"] = steps;
      report["n0"] = a.n0 ? oj(*a.n0) : oj(nullptr);
      report["all_hold"] = a.all_hold();
      return a.all_hold() ? exit_code::kOk : exit_code::kPropertyFail;
    }
    case Command::Verify: {
      oj props = oj::array();
      bool all = true;
      verify_measure(c, props, all);
      if (c.inst.gamma_agg && c.measure == Measure::Rho) {
        const Context other{c.cfg, c.inst, c.x, Measure::RhoGamma, compute_gamma(c.inst, Measure::RhoGamma)};
        verify_measure(other, props, all);
      }
      report["properties"] = props;
      report["passed"] = all;
      return all ? exit_code::kOk : exit_code::kPropertyFail;
    }
  }
  return exit_code::kInputError;
}

void write(const RunConfig& cfg, const oj& report, std::ostream& out) {
  if (cfg.format == Format::Json) {
    out << dump_stable(report) << "\n";
  } else {
    render_text(out, report, 0);
  }
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  for (Command c : {Command::Rho, Command::RhoGamma, Command::Dual, Command::Gamma, Command::Arbitrage,
                    Command::Fair, Command::CheckA, Command::Verify}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Command command) noexcept {
  switch (command) {
    case Command::Rho: return "rho";
    case Command::RhoGamma: return "rho-gamma";
    case Command::Dual: return "dual";
    case Command::Gamma: return "gamma";
    case Command::Arbitrage: return "arbitrage";
    case Command::Fair: return "fair";
    case Command::CheckA: return "check-a";
    case Command::Verify: return "verify";
  }
  return "unknown";
}

double default_tolerance() {
  static const double value = [] {
    const char* env = std::getenv(kToleranceEnv);
    if (!env) return 1e-6;
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    return end != env && *end == '\0' && v > 0.0 && std::isfinite(v) ? v : 1e-6;
  }();
  return value;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (!(cfg.tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    if (cfg.n_max < 1) throw Error(ErrorCode::InvalidArgument, "--n-max must be >= 1");
    if (cfg.gamma && std::isnan(*cfg.gamma)) throw Error(ErrorCode::InvalidArgument, "--gamma is NaN");
    Instance inst = load_instance(cfg.instance_path);
    RandomVector x = cfg.x_path ? load_random_vector(*cfg.x_path, inst.space)
                                : RandomVector::zero(inst.space, inst.agents);
    if (x.agents() != inst.agents) throw Error(ErrorCode::DimensionMismatch, "position has the wrong number of agents");
    const Measure measure = cfg.command == Command::RhoGamma ? Measure::RhoGamma : cfg.measure;
    if (measure == Measure::RhoGamma && !inst.gamma_agg) {
      throw Error(ErrorCode::MissingGamma, "instance has no \"gamma_agg\"");
    }
    const double gamma_star = compute_gamma(inst, measure);
    Context ctx{cfg, std::move(inst), std::move(x), measure, gamma_star};
    oj report = header(ctx);
    const int code = dispatch(ctx, report);
    report["assumption_a"] = assumption_summary(ctx);
    write(cfg, report, out);
    return code;
  } catch (const Error& e) {
    if (cfg.format == Format::Json) {
      oj report;
      report["command"] = std::string(to_string(cfg.command));
      report["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
      out << dump_stable(report) << "\n";
    }
    err << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kNumericalError;
  }
}

}  // namespace sysrisk::cli
