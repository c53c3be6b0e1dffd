#include "doctest.h"

#include <random>

#include "sysrisk/acceptance.hpp"

using namespace sysrisk;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

SpacePtr two_scenarios() { return ScenarioSpace::build({"a", "b"}, {1.0, 1.0}); }

Acceptance half_half_family(const SpacePtr& space, double alpha) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(2, 2, 0.5);
  return Acceptance(ExpectationFamily{{{validate_probability_vector(space, p), alpha}}}, space);
}

}  // namespace

TEST_CASE("pointwise acceptance") {
  auto space = two_scenarios();
  Acceptance a(Pointwise{0.0}, space);
  CHECK(a.is_acceptable(row({0.0, 0.0})));
  CHECK_FALSE(a.is_acceptable(row({-0.1, 5.0})));
  REQUIRE(a.constraints().size() == 2);
  CHECK(a.constraints()[0].coefficients == row({1.0, 0.0}));
  CHECK(a.constraints()[1].coefficients == row({0.0, 1.0}));
  CHECK(a.constraints()[0].rhs == 0.0);
  CHECK_THROWS_AS(Acceptance(Pointwise{0.5}, space), Error);
}

TEST_CASE("expectation family acceptance") {
  auto space = two_scenarios();
  const Acceptance a = half_half_family(space, 1.0);
  CHECK(a.is_acceptable(row({-1.0, 0.0})));
  CHECK(a.is_acceptable(row({0.0, 0.0})));
  CHECK_FALSE(a.is_acceptable(row({-1.0, -0.1})));
  REQUIRE(a.constraints().size() == 1);
  CHECK(a.constraints()[0].coefficients.isApprox(row({1.0, 1.0})));
  CHECK(a.constraints()[0].rhs == -1.0);

  CHECK_THROWS_AS(Acceptance(ExpectationFamily{}, space), Error);
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 2, 0.5);
  CHECK_THROWS_AS(Acceptance(ExpectationFamily{{{validate_probability_vector(space, p), -1.0}}}, space), Error);
}

TEST_CASE("acceptance properties") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-3.0, 3.0), up(0.0, 2.0), unit(0.0, 1.0);
  auto space = ScenarioSpace::build({"a", "b", "c", "d"}, {1.0, 1.0, 2.0, 3.0});
  std::vector<Acceptance> sets{Acceptance(Pointwise{-0.5}, space)};
  {
    Eigen::MatrixXd p1(2, 4), p2(2, 4);
    p1 << 0.1, 0.2, 0.3, 0.4, 0.25, 0.25, 0.25, 0.25;
    p2 << 0.7, 0.1, 0.1, 0.1, 0.0, 0.0, 0.5, 0.5;
    sets.emplace_back(ExpectationFamily{{{validate_probability_vector(space, p1), 0.0},
                                         {validate_probability_vector(space, p2), 0.5}}},
                      space);
  }
  for (const Acceptance& a : sets) {
    for (int k = 0; k < 500; ++k) {
      Eigen::RowVectorXd y(4), d(4);
      for (Index w = 0; w < 4; ++w) {
        y(w) = val(rng);
        d(w) = up(rng);
      }
      bool by_rows = true;
      for (const auto& c : a.constraints()) by_rows = by_rows && c.coefficients.dot(y) >= c.rhs - 1e-9;
      CHECK(a.is_acceptable(y) == by_rows);
      if (a.is_acceptable(y)) CHECK(a.is_acceptable(y + d));
    }
  }
  // min alpha = 0 rejects every negative constant.
  for (double c : {-1e-3, -0.5, -10.0}) CHECK_FALSE(sets[1].is_acceptable(Eigen::RowVectorXd::Constant(4, c)));
}
