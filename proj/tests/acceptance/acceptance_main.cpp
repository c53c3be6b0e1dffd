// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/generators.hpp"
#include "support/lp_oracle.hpp"
#include "sysrisk/cli/io.hpp"
#include "sysrisk/risk_engine.hpp"
#include "sysrisk/testing/oracle.hpp"

using namespace sysrisk;
using testing::AcceptanceKind;
using testing::GammaKind;
using testing::InstanceShape;
using testing::LambdaKind;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  int failures = 0;
  std::string first_failure;

  void fail(const std::string& what) {
    pass = false;
    if (failures++ == 0) first_failure = what;
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
};

double rel_err(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Measure measure_of(GammaKind g) { return g == GammaKind::None ? Measure::Rho : Measure::RhoGamma; }

// A finite-gamma* instance together with one position and its dual optimizer.
struct Solved {
  Instance inst;
  RandomVector x;
  DualResult dual;
  double rho;
};

// Draws instances cycling through all twelve family combinations until
// `count` of them have finite gamma*. Returns the number skipped.
int finite_instances(std::mt19937_64& rng, int count, GammaKind gamma, Index max_scenarios,
                     const std::function<void(const Instance&, const InstanceShape&)>& visit) {
  int skipped = 0;
  for (int k = 0, done = 0; done < count; ++k) {
    const InstanceShape shape = testing::cycle_shape(rng, k, gamma, 3, max_scenarios);
    const Instance inst = testing::random_instance(rng, shape);
    if (!std::isfinite(compute_gamma(inst, measure_of(gamma)))) {
      ++skipped;
      continue;
    }
    visit(inst, shape);
    ++done;
  }
  return skipped;
}

// Strong duality on finite-gamma* instances; solved cases are kept for the
// penalty checks.
void duality(Outcome& out, int count, GammaKind gamma, std::vector<Solved>& solved) {
  std::mt19937_64 rng(gamma == GammaKind::None ? 101 : 701);
  const Measure m = measure_of(gamma);
  std::map<std::string, int> combos;
  double worst = 0.0;
  const int skipped = finite_instances(rng, count, gamma, 12, [&](const Instance& inst, const InstanceShape& s) {
    const std::string combo = std::to_string(static_cast<int>(s.lambda)) + std::to_string(static_cast<int>(s.acceptance)) +
                              (s.market_size > 0 ? "G" : "0");
    ++combos[combo];
    const RandomVector x = testing::random_position(rng, inst);
    const RiskResult r = compute_risk(inst, x, m);
    if (r.status != RiskStatus::Finite) {
      out.fail(testing::describe(s) + ": rho not finite with finite gamma*");
      return;
    }
    const DualResult d = compute_dual(inst, x, m);
    const double gap = std::abs(d.gap()) / (1.0 + std::abs(r.value));
    worst = std::max(worst, gap);
    out.expect(gap <= 1e-6, testing::describe(s) + ": gap " + fmt(gap));
    solved.push_back({inst, x, d, r.value});
  });
  out.expect(combos.size() == 12, "only " + std::to_string(combos.size()) + " family combinations hit");
  if (out.detail.tellp() > 0) out.detail << "; ";
  out.detail << count << " instances over " << combos.size() << " combinations (" << skipped
             << " infinite gamma* skipped), max relative gap " << fmt(worst);
}

// Cash additivity, monotonicity and convexity, `count` checks each.
void measure_properties(Outcome& out, int count, GammaKind gamma) {
  std::mt19937_64 rng(gamma == GammaKind::None ? 202 : 802);
  const Measure m = measure_of(gamma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int cash = 0, mono = 0, conv = 0;
  double worst_cash = 0.0;
  finite_instances(rng, count, gamma, 8, [&](const Instance& inst, const InstanceShape& s) {
    const RandomVector x = testing::random_position(rng, inst);
    const RandomVector y = testing::random_position(rng, inst);
    const double rx = compute_risk(inst, x, m).value;
    const double ry = compute_risk(inst, y, m).value;
    const std::string tag = testing::describe(s);

    Eigen::VectorXd c(inst.agents);
    for (Index i = 0; i < c.size(); ++i) c(i) = 4.0 * unit(rng) - 2.0;
    const double shifted = compute_risk(inst, RandomVector(inst.space, x.values().colwise() + c), m).value;
    const double err = std::abs(shifted - (rx - c.sum())) / std::max(1.0, std::abs(rx));
    worst_cash = std::max(worst_cash, err);
    out.expect(err <= 1e-8, tag + ": cash additivity off by " + fmt(err));
    ++cash;

    Eigen::MatrixXd bump = Eigen::MatrixXd::Zero(x.agents(), x.scenarios());
    for (Index i = 0; i < bump.rows(); ++i) {
      for (Index w = 0; w < bump.cols(); ++w) bump(i, w) = unit(rng) < 0.5 ? 0.0 : unit(rng);
    }
    const double up = compute_risk(inst, RandomVector(inst.space, x.values() + bump), m).value;
    out.expect(up <= rx + 1e-8 * (1.0 + std::abs(rx)), tag + ": monotonicity");
    ++mono;

    const double lam = unit(rng);
    const double mix = compute_risk(inst, RandomVector(inst.space, lam * x.values() + (1 - lam) * y.values()), m).value;
    out.expect(mix <= lam * rx + (1 - lam) * ry + 1e-8 * (1.0 + std::abs(rx) + std::abs(ry)), tag + ": convexity");
    ++conv;
  });
  if (out.detail.tellp() > 0) out.detail << "; ";
  out.detail << cash << " cash additivity, " << mono << " monotonicity, " << conv
             << " convexity checks; max cash error " << fmt(worst_cash);
}

// Adds a strictly positive payoff for one agent to the market.
Instance with_positive_payoff(std::mt19937_64& rng, const Instance& inst) {
  std::uniform_real_distribution<double> pay(0.1, 1.5);
  const Index agent = std::uniform_int_distribution<Index>(0, inst.agents - 1)(rng);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(inst.agents, inst.space->size());
  for (Index w = 0; w < g.cols(); ++w) g(agent, w) = pay(rng);
  std::vector<RandomVector> basis = inst.market.basis();
  basis.emplace_back(inst.space, g);
  Instance out = inst;
  out.market = MarketSet(inst.space, inst.agents, MarketMode::Span, std::move(basis));
  return out;
}

// Independent feasibility LP: Q >= 0, rows summing to one, zero total price
// for every basis vector.
bool fair_measure_exists(const Instance& inst) {
  lp::LinearProgram prog;
  const Index n = inst.agents, s = inst.space->size();
  for (Index i = 0; i < n; ++i) {
    for (Index w = 0; w < s; ++w) prog.add_variable("q");
  }
  for (Index i = 0; i < n; ++i) {
    std::vector<lp::Term> row;
    for (Index w = 0; w < s; ++w) row.push_back({i * s + w, 1.0});
    prog.add_row(row, lp::Relation::Equal, 1.0);
  }
  for (const RandomVector& g : inst.market.basis()) {
    std::vector<lp::Term> row;
    for (Index i = 0; i < n; ++i) {
      for (Index w = 0; w < s; ++w) row.push_back({i * s + w, g.values()(i, w)});
    }
    prog.add_row(row, lp::Relation::Equal, 0.0);
  }
  return lp::solve(prog).status == lp::Status::Optimal;
}

bool certificate_acceptable(const Instance& inst, const ArbitrageCertificate& c, Measure m) {
  const Eigen::MatrixXd trade = inst.market.payoff(c.trade);
  const Eigen::MatrixXd cash = Eigen::MatrixXd::Zero(inst.agents, inst.space->size()).colwise() + c.allocation;
  const Eigen::RowVectorXd y = m == Measure::Rho
                                   ? inst.lambda.evaluate_columns(cash + trade)
                                   : Eigen::RowVectorXd(inst.lambda.evaluate_columns(cash) +
                                                        inst.gamma_agg->evaluate_columns(trade));
  return inst.acceptance.is_acceptable(y, 1e-7);
}

void equivalence_chain(Outcome& out, int count, GammaKind gamma) {
  std::mt19937_64 rng(gamma == GammaKind::None ? 303 : 903);
  const Measure m = measure_of(gamma);

  // Arbitrage branch. A NegativePart Gamma is bounded above by zero, so a
  // positive payoff can only create arbitrage through a Sum Gamma.
  const GammaKind arb_gamma = gamma == GammaKind::None ? GammaKind::None : GammaKind::Sum;
  int arbitrage = 0;
  for (int k = 0; arbitrage < count; ++k) {
    const InstanceShape shape = testing::cycle_shape(rng, k, arb_gamma, 3, 8);
    const Instance inst = with_positive_payoff(rng, testing::random_instance(rng, shape));
    const std::string tag = "arbitrage " + testing::describe(shape);
    ++arbitrage;
    out.expect(compute_gamma(inst, m) == -kInf, tag + ": gamma* finite");
    for (double g : {0.0, -10.0, -1e3}) {
      const ArbitrageVerdict v = detect_regulatory_arbitrage(inst, g, m);
      const bool ok = !v.arbitrage_free && v.certificate && v.certificate->total < g &&
                      std::abs(v.certificate->allocation.sum() - v.certificate->total) <= 1e-9 * (1 + std::abs(g)) &&
                      certificate_acceptable(inst, *v.certificate, m);
      out.expect(ok, tag + ": no valid certificate at gamma " + fmt(g));
    }
    out.expect(!find_fair_measure(inst, 0.0, m).q, tag + ": fair measure reported");
    if (m == Measure::Rho) out.expect(!fair_measure_exists(inst), tag + ": oracle found a fair measure");
    bool refused = false;
    try {
      compute_dual(inst, testing::random_position(rng, inst), m);
    } catch (const Error& e) {
      refused = e.code() == ErrorCode::DualExtractionFailed;
    }
    out.expect(refused, tag + ": dual not refused");
  }

  // Finite branch.
  int finite = 0;
  finite_instances(rng, count, gamma, 8, [&](const Instance& inst, const InstanceShape& s) {
    const std::string tag = "finite " + testing::describe(s);
    ++finite;
    const double gs = compute_gamma(inst, m);
    out.expect(detect_regulatory_arbitrage(inst, gs, m).arbitrage_free, tag + ": arbitrage at gamma*");
    const FairMeasureReport f = find_fair_measure(inst, gs, m);
    out.expect(f.q && f.validated, tag + ": no validated fair measure (samples " + std::to_string(f.samples) +
                                       ", worst slack " + fmt(f.worst_slack) + ")");
    if (f.q && m == Measure::Rho) {
      out.expect(is_fair(*f.q, inst.market, 1e-6), tag + ": measure not fair");
      out.expect(fair_measure_exists(inst), tag + ": oracle disagrees");
    }
    if (f.q && m == Measure::RhoGamma) {
      out.expect(std::isfinite(support_gamma_set(inst, *f.q)), tag + ": measure outside the Gamma barrier cone");
    }
    const RandomVector x = testing::random_position(rng, inst);
    const RiskResult r = compute_risk(inst, x, m);
    const DualResult d = compute_dual(inst, x, m);
    out.expect(std::abs(d.gap()) <= 1e-6 * (1 + std::abs(r.value)), tag + ": dual gap open");
  });
  if (out.detail.tellp() > 0) out.detail << "; ";
  out.detail << arbitrage << " arbitrage instances, " << finite << " finite instances";
}

void penalty_checks(Outcome& out, const std::vector<Solved>& solved, GammaKind gamma) {
  std::mt19937_64 rng(gamma == GammaKind::None ? 404 : 1004);
  const Measure m = measure_of(gamma);
  double worst = 0.0;
  for (const Solved& s : solved) {
    const ProbabilityVector& q = s.dual.q;
    const double recomputed = m == Measure::Rho
                                  ? support_acceptance(s.inst, q) + support_market(s.inst.market, q, -1)
                                  : support_gamma_set(s.inst, q);
    const double e1 = rel_err(s.dual.multiplier_penalty, recomputed);
    const double e2 = rel_err(s.dual.decomposition.total(), recomputed);
    worst = std::max({worst, e1, e2});
    out.expect(e1 <= 1e-6 && e2 <= 1e-6, "penalty mismatch " + fmt(std::max(e1, e2)));
  }
  // Weak duality at fair measures that are optimal for a different position.
  int weak = 0;
  for (std::size_t k = 0; k < solved.size() && weak < 100; ++k, ++weak) {
    const Solved& s = solved[k];
    const RandomVector other = testing::random_position(rng, s.inst);
    const ProbabilityVector q = compute_dual(s.inst, other, m).q;
    const double penalty =
        m == Measure::Rho ? penalty_decomposition(s.inst, q).total() : support_gamma_set(s.inst, q);
    const double bound = pairing(RandomVector(s.inst.space, -s.x.values()), q) - penalty;
    out.expect(s.rho >= bound - 1e-6 * (1 + std::abs(s.rho)), "weak duality violated");
  }
  if (out.detail.tellp() > 0) out.detail << "; ";
  out.detail << solved.size() << " dual optimizers, max penalty error " << fmt(worst) << "; " << weak
             << " weak duality checks";
}

void oracle_equivalence(Outcome& out) {
  std::mt19937_64 rng(505);
  const testing::GridSpec m_grid{-5.0, 5.0, 0.01};
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    InstanceShape s;
    s.lambda = k % 2 == 0 ? LambdaKind::SumUtility : LambdaKind::NegativePart;
    s.acceptance = (k / 2) % 2 == 0 ? AcceptanceKind::Pointwise : AcceptanceKind::ExpectationFamily;
    s.agents = 2;
    s.scenarios = 2 + k % 3;
    const Instance inst = testing::random_instance(rng, s);
    const RandomVector x = testing::random_position(rng, inst, 1.0);
    const double rho = compute_rho(inst, x).value;
    const double brute = testing::brute_force_rho(inst, x, m_grid, m_grid);
    const double err = std::abs(rho - brute);
    worst = std::max(worst, err);
    out.expect(err <= 0.03, testing::describe(s) + ": rho " + fmt(rho) + " vs grid " + fmt(brute));
  }
  out.detail << "50 rho cases, max error " << fmt(worst);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_net = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Index n = k % 5 == 4 ? 3 : 2;
    const Aggregation agg = testing::random_aggregation(rng, LambdaKind::Network, n);
    const Network& net = std::get<Network>(agg.spec());
    Eigen::VectorXd x(n);
    for (Index i = 0; i < n; ++i) x(i) = n == 2 ? 3.0 * unit(rng) - 1.5 : 0.4 * unit(rng) - 0.1;
    const double step = 0.01;
    const double reach = net.gamma_net * (-x.cwiseMin(0.0).sum());
    const double lower = -step * std::max(1.0, std::ceil(reach / step));
    const double brute = testing::brute_force_network_lambda(net.pi, net.gamma_net, x, {lower, 0.0, step});
    const double exact = agg.evaluate(x);
    const double tol = (1.0 + net.gamma_net) * static_cast<double>(n) * step;
    worst_net = std::max(worst_net, std::abs(exact - brute) / tol);
    out.expect(std::abs(exact - brute) <= tol && brute <= exact + 1e-9, "network N=" + std::to_string(n) +
                                                                           ": " + fmt(exact) + " vs " + fmt(brute));
  }
  out.detail << "; 50 network cases, max error " << fmt(worst_net) << " of tolerance";
}

void assumption_a(Outcome& out) {
  int checked = 0, skipped = 0;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(SYSRISK_INSTANCE_DIR)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    if (!cli::read_json_file(path.string()).contains("space")) continue;  // position files
    const Instance inst = cli::load_instance(path.string());
    std::vector<Measure> measures{Measure::Rho};
    if (inst.gamma_agg) measures.push_back(Measure::RhoGamma);
    for (Measure m : measures) {
      const double gs = compute_gamma(inst, m);
      if (!std::isfinite(gs)) {
        ++skipped;
        continue;
      }
      ++checked;
      const std::string tag = path.filename().string();
      const AssumptionAReport r = check_assumption_a(inst, gs, 10, m);
      out.expect(r.steps.size() == 10 && r.n0 && *r.n0 == 1, tag + ": some n failed");
      for (const AssumptionAStep& step : r.steps) {
        out.expect(step.success, tag + ": n=" + std::to_string(step.n) + " not acceptable");
        const double bound = static_cast<double>(inst.agents) / step.n + gs;
        out.expect(step.implied_rho <= bound + 1e-8, tag + ": bound fails at n=" + std::to_string(step.n));
      }
    }
  }
  out.expect(checked >= 5, "too few finite instances");
  out.detail << checked << " finite-gamma* instance/measure pairs, " << skipped << " with gamma* = -inf skipped";
}

void lp_kernel(Outcome& out) {
  std::mt19937_64 rng(808);
  int compared = 0, drawn = 0;
  double worst = 0.0;
  while (compared < 500) {
    const lp::LinearProgram prog = testing::random_bounded_lp(rng);
    ++drawn;
    if (testing::vertex_enumeration_cost(prog) > 20000) continue;
    ++compared;
    const lp::LPResult r = lp::solve(prog);
    const auto oracle = testing::vertex_enumeration(prog);
    if (r.status != lp::Status::Optimal || !oracle) {
      out.fail("bounded program not solved");
      continue;
    }
    const double err = rel_err(r.value, *oracle);
    worst = std::max(worst, err);
    out.expect(err <= 1e-8, "value off by " + fmt(err));
    out.expect(lp::primal_residual(prog, r.primal) <= 1e-8, "primal residual");
  }
  int infeasible = 0, unbounded = 0, optimal = 0;
  for (int k = 0; k < 500; ++k) {
    const lp::LinearProgram prog = testing::random_general_lp(rng);
    const lp::LPResult r = lp::solve(prog);
    switch (r.status) {
      case lp::Status::Infeasible:
        ++infeasible;
        out.expect(lp::verify_farkas(prog, r.duals), "Farkas certificate rejected");
        break;
      case lp::Status::Unbounded:
        ++unbounded;
        out.expect(lp::primal_residual(prog, r.primal) <= 1e-8 && lp::verify_ray(prog, r.ray), "ray rejected");
        break;
      case lp::Status::Optimal:
        ++optimal;
        out.expect(lp::primal_residual(prog, r.primal) <= 1e-8, "general primal residual");
        break;
    }
  }
  out.expect(infeasible > 0 && unbounded > 0, "general programs missed a status");
  out.detail << compared << " programs vs vertex enumeration (" << drawn - compared
             << " over the enumeration cap), max relative error " << fmt(worst) << "; general: " << optimal
             << " optimal, " << infeasible << " infeasible, " << unbounded << " unbounded, all certified";
}

}  // namespace

// Optional arguments select criteria by number; all run by default.
int main(int argc, char** argv) {
  std::vector<Solved> rho_solved, gamma_solved;
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"strong duality", [&](Outcome& o) { duality(o, 300, GammaKind::None, rho_solved); }},
      {"monotone, convex, cash additive", [](Outcome& o) { measure_properties(o, 1000, GammaKind::None); }},
      {"equivalence chain", [](Outcome& o) { equivalence_chain(o, 20, GammaKind::None); }},
      {"penalty decomposition", [&](Outcome& o) { penalty_checks(o, rho_solved, GammaKind::None); }},
      {"oracle equivalence", [](Outcome& o) { oracle_equivalence(o); }},
      {"assumption (A) at finite scale", [](Outcome& o) { assumption_a(o); }},
      {"rho_Gamma mirror",
       [&](Outcome& o) {
         // Alternate Sum and NegativePart Gamma across the two halves.
         for (GammaKind g : {GammaKind::Sum, GammaKind::NegativePart}) {
           Outcome part;
           duality(part, 60, g, gamma_solved);
           measure_properties(part, 300, g);
           equivalence_chain(part, 20, g);
           penalty_checks(part, gamma_solved, g);
           gamma_solved.clear();
           o.detail << (g == GammaKind::Sum ? "[Gamma sum] " : " [Gamma negative_part] ") << part.detail.str() << ".";
           if (!part.pass) o.fail(part.first_failure);
           o.failures += part.failures > 0 ? part.failures - 1 : 0;
         }
       }},
      {"LP kernel", [](Outcome& o) { lp_kernel(o); }},
  };

  int failed = 0;
  std::vector<bool> selected(criteria.size(), argc <= 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[static_cast<std::size_t>(k - 1)] = true;
  }
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected[k]) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s: %s. %s (%.1f s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.str().c_str(), secs);
    if (!o.pass) {
      std::printf("  %d failing checks, first: %s\n", o.failures, o.first_failure.c_str());
      ++failed;
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
