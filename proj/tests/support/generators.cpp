#include "support/generators.hpp"

namespace sysrisk::testing {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

SpacePtr random_space(std::mt19937_64& rng, Index scenarios) {
  std::vector<std::string> ids;
  std::vector<double> z;
  for (Index w = 0; w < scenarios; ++w) {
    ids.push_back("s" + std::to_string(w));
    z.push_back(1.0 + std::floor(uniform(rng, 0.0, 4.0)));
  }
  return ScenarioSpace::build(ids, z);
}

Eigen::RowVectorXd random_probability_row(std::mt19937_64& rng, Index scenarios) {
  Eigen::RowVectorXd p(scenarios);
  for (Index w = 0; w < scenarios; ++w) p(w) = uniform(rng, 0.2, 1.0);
  return p / p.sum();
}

}  // namespace

std::string describe(const InstanceShape& s) {
  static const char* lambdas[] = {"sum_utility", "negative_part", "network"};
  static const char* accs[] = {"pointwise", "expectation_family"};
  static const char* gammas[] = {"none", "sum", "negative_part"};
  return std::string(lambdas[static_cast<int>(s.lambda)]) + "/" + accs[static_cast<int>(s.acceptance)] +
         "/G=" + std::to_string(s.market_size) + (s.mode == MarketMode::Cone ? "c" : "") + "/Gamma=" +
         gammas[static_cast<int>(s.gamma)] + "/N=" + std::to_string(s.agents) +
         "/W=" + std::to_string(s.scenarios);
}

InstanceShape cycle_shape(std::mt19937_64& rng, int k, GammaKind gamma, Index max_agents, Index max_scenarios) {
  InstanceShape s;
  s.lambda = static_cast<LambdaKind>(k % 3);
  s.acceptance = static_cast<AcceptanceKind>((k / 3) % 2);
  const bool with_market = (k / 6) % 2 == 1;
  s.gamma = gamma;
  s.agents = uniform_index(rng, 1, max_agents);
  s.scenarios = uniform_index(rng, 2, max_scenarios);
  s.market_size = with_market ? static_cast<int>(uniform_index(rng, 1, 3)) : 0;
  return s;
}

PiecewiseLinear random_utility(std::mt19937_64& rng, bool capped) {
  PiecewiseLinear u;
  const double s = uniform(rng, 0.5, 2.0);
  u.pieces.push_back({s, 0.0});
  if (capped) u.pieces.push_back({0.0, uniform(rng, 0.0, 1.5)});
  else u.pieces.push_back({s * uniform(rng, 0.2, 0.9), uniform(rng, 0.1, 1.0)});
  // Steeper piece for losses.
  u.pieces.push_back({s * uniform(rng, 1.1, 2.5), uniform(rng, 0.1, 1.5)});
  return u;
}

Aggregation random_aggregation(std::mt19937_64& rng, LambdaKind kind, Index agents) {
  switch (kind) {
    case LambdaKind::SumUtility: {
      SumUtility s;
      s.alpha = uniform(rng, 0.5, 1.5);
      s.u = random_utility(rng, false);
      s.alpha_i = Eigen::VectorXd(agents);
      for (Index i = 0; i < agents; ++i) {
        s.alpha_i(i) = uniform(rng, 0.0, 1.0) < 0.25 ? 0.0 : uniform(rng, 0.2, 1.0);
        s.u_i.push_back(random_utility(rng, true));
      }
      return Aggregation(s);
    }
    case LambdaKind::NegativePart: {
      Eigen::VectorXd a(agents);
      for (Index i = 0; i < agents; ++i) a(i) = uniform(rng, 0.5, 2.0);
      return Aggregation(NegativePart{a});
    }
    case LambdaKind::Network: {
      Network net;
      net.pi = Eigen::MatrixXd::Zero(agents, agents);
      for (Index i = 0; i < agents; ++i) {
        for (Index j = 0; j < agents; ++j) {
          if (i != j) net.pi(i, j) = uniform(rng, 0.0, 1.0);
        }
        const double row = net.pi.row(i).sum();
        if (row > 0.0) net.pi.row(i) *= uniform(rng, 0.3, 1.0) / row;
      }
      net.gamma_net = uniform(rng, 1.5, 3.0);
      return Aggregation(net);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown lambda kind");
}

Instance random_instance(std::mt19937_64& rng, const InstanceShape& shape) {
  const Index n = shape.agents;
  const Index scenarios = shape.scenarios;
  SpacePtr space = random_space(rng, scenarios);
  Aggregation lambda = random_aggregation(rng, shape.lambda, n);

  // Common pricing measure for the market. For expectation families it is the
  // agent-average of the first test, so the set Lambda^{-1}(A) stays bounded
  // in the relevant direction.
  Eigen::RowVectorXd q;
  std::optional<Acceptance> acceptance;
  if (shape.acceptance == AcceptanceKind::Pointwise) {
    const double c = uniform(rng, 0.0, 1.0) < 0.3 ? 0.0 : -uniform(rng, 0.0, 1.0);
    acceptance.emplace(Pointwise{c}, space);
    q = random_probability_row(rng, scenarios);
  } else {
    ExpectationFamily fam;
    const int tests = static_cast<int>(uniform_index(rng, 1, 3));
    for (int k = 0; k < tests; ++k) {
      Eigen::MatrixXd p(n, scenarios);
      for (Index i = 0; i < n; ++i) p.row(i) = random_probability_row(rng, scenarios);
      const double alpha = k == 0 && uniform(rng, 0.0, 1.0) < 0.4 ? 0.0 : uniform(rng, 0.0, 1.5);
      fam.tests.push_back({validate_probability_vector(space, p), alpha});
    }
    q = fam.tests.front().p.aggregate() / static_cast<double>(n);
    acceptance.emplace(fam, space);
  }

  std::vector<RandomVector> basis;
  for (int k = 0; k < shape.market_size; ++k) {
    Eigen::MatrixXd g(n, scenarios);
    for (Index i = 0; i < n; ++i) {
      for (Index w = 0; w < scenarios; ++w) g(i, w) = uniform(rng, -1.5, 1.5);
      if (shape.mode == MarketMode::Span || uniform(rng, 0.0, 1.0) < 0.7) g.row(i).array() -= g.row(i).dot(q);
    }
    basis.emplace_back(space, g);
  }
  MarketSet market(space, n, shape.mode, std::move(basis));

  std::optional<Aggregation> gamma_agg;
  if (shape.gamma == GammaKind::Sum) gamma_agg = Aggregation::sum(n);
  if (shape.gamma == GammaKind::NegativePart) {
    Eigen::VectorXd a(n);
    for (Index i = 0; i < n; ++i) a(i) = uniform(rng, 0.5, 2.0);
    gamma_agg = Aggregation(NegativePart{a});
  }
  Instance inst{space, n, std::move(lambda), std::move(*acceptance), std::move(market), std::move(gamma_agg)};
  inst.validate();
  return inst;
}

RandomVector random_position(std::mt19937_64& rng, const Instance& inst, double scale) {
  Eigen::MatrixXd x(inst.agents, inst.space->size());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index w = 0; w < x.cols(); ++w) x(i, w) = uniform(rng, -scale, scale);
  }
  return RandomVector(inst.space, x);
}

Instance running_example(const Eigen::RowVectorXd* g1) {
  SpacePtr space = ScenarioSpace::build({"w1", "w2"}, {1.0, 1.0});
  std::vector<RandomVector> basis;
  if (g1) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
    g.row(0) = *g1;
    basis.emplace_back(space, g);
  }
  return Instance{space,
                  2,
                  Aggregation::sum(2),
                  Acceptance(Pointwise{0.0}, space),
                  MarketSet(space, 2, MarketMode::Span, std::move(basis)),
                  std::nullopt};
}

RandomVector running_position(const Instance& inst) {
  Eigen::MatrixXd x(2, 2);
  x << 1.0, -2.0, 0.0, 1.0;
  return RandomVector(inst.space, x);
}

}  // namespace sysrisk::testing
