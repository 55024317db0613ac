#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "medlfrm/random.hpp"
#include "medlfrm/svm.hpp"
#include "oracles.hpp"

using namespace medlfrm;

namespace {

SvmProblem one_example(double margin, double box) {
  SvmProblem p;
  p.features.resize(1, 1);
  p.features(0, 0) = 1.0;
  p.labels = {1};
  p.margins = {margin};
  p.boxes = {box};
  return p;
}

SvmProblem random_problem(Rng& rng, int M, int P) {
  SvmProblem p;
  p.features.resize(M, P);
  for (int m = 0; m < M; ++m) {
    for (int d = 0; d < P; ++d) p.features(m, d) = rng.normal();
    p.labels.push_back(rng.bernoulli(0.5) ? 1 : -1);
    p.margins.push_back(rng.uniform(-1.0, 3.0));
    p.boxes.push_back(rng.uniform(0.05, 5.0));
  }
  return p;
}

}  // namespace

TEST_CASE("solve: one-variable examples") {
  auto sol = solve(one_example(1.0, 10.0));
  CHECK(sol.converged);
  CHECK(sol.weights[0] == doctest::Approx(1.0));
  CHECK(sol.duals[0] == doctest::Approx(1.0));

  sol = solve(one_example(1.0, 0.3));
  CHECK(sol.duals[0] == doctest::Approx(0.3));
  CHECK(sol.weights[0] == doctest::Approx(0.3));
}

TEST_CASE("solve: zero margins give the zero solution") {
  Rng rng(1);
  auto p = random_problem(rng, 8, 3);
  p.margins.assign(8, 0.0);
  const auto sol = solve(p);
  CHECK(sol.weights.norm() == 0.0);
  CHECK(sol.duals.norm() == 0.0);
  CHECK(sol.primal_obj == 0.0);
  CHECK(sol.dual_obj == 0.0);
}

TEST_CASE("solve: argument errors") {
  auto p = one_example(1.0, 1.0);
  p.features.resize(1, 0);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  p = one_example(1.0, 0.0);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  p = one_example(1.0, 1.0);
  CHECK_THROWS_AS(solve(p, Eigen::VectorXd::Constant(1, 2.0)), std::invalid_argument);
  CHECK_THROWS_AS(solve(p, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("primal_objective: examples") {
  Rng rng(2);
  const auto p = random_problem(rng, 5, 3);
  double expected = 0.0;
  for (int m = 0; m < 5; ++m) expected += p.boxes[m] * std::max(0.0, p.margins[m]);
  CHECK(primal_objective(p, Eigen::VectorXd::Zero(3)) == doctest::Approx(expected));
  const Eigen::VectorXd w = Eigen::VectorXd::Random(3);
  const Eigen::MatrixXd x = p.features;
  CHECK(primal_objective(p, w) == doctest::Approx(oracle::svm_primal(x, p.labels, p.margins, p.boxes, w)));

  // Margins met everywhere: only the regularizer remains.
  SvmProblem sep = one_example(1.0, 1.0);
  Eigen::VectorXd w2(1);
  w2 << 2.0;
  CHECK(primal_objective(sep, w2) == doctest::Approx(2.0));
}

TEST_CASE("solve: matches projected-gradient oracle with KKT and weak duality") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const int M = 1 + static_cast<int>(rng.below(10));
    const int P = 1 + static_cast<int>(rng.below(5));
    auto p = random_problem(rng, M, P);
    p.tol = 1e-10;
    p.max_sweeps = 200000;
    p.seed = static_cast<std::uint64_t>(t);
    const auto sol = solve(p);
    CHECK(sol.converged);
    const Eigen::MatrixXd x = p.features;
    const auto ref = oracle::projected_gradient_qp(x, p.labels, p.margins, p.boxes);
    CHECK(std::abs(sol.primal_obj - ref.dual) <= 1e-6);
    CHECK(sol.dual_obj <= sol.primal_obj + 1e-12);
    CHECK((sol.weights - recover_weights(p, sol.duals)).norm() <= 1e-12);
    for (int m = 0; m < M; ++m) {
      CHECK(sol.duals[m] >= 0.0);
      CHECK(sol.duals[m] <= p.boxes[m]);
      const double slack = p.margins[m] - p.labels[m] * p.features.row(m).dot(sol.weights);
      if (sol.duals[m] > 1e-9 && sol.duals[m] < p.boxes[m] - 1e-9) CHECK(std::abs(slack) <= 1e-8);
      if (sol.duals[m] == 0.0) CHECK(slack <= 1e-8);
      if (sol.duals[m] == p.boxes[m]) CHECK(slack >= -1e-8);
    }
  }
}

TEST_CASE("solve: weak duality on unconverged iterates") {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    auto p = random_problem(rng, 30, 4);
    p.max_sweeps = 1;
    p.tol = 1e-12;
    const auto sol = solve(p);
    CHECK(sol.dual_obj <= sol.primal_obj + 1e-9);
    CHECK(sol.dual_obj == doctest::Approx(dual_objective(p, sol.duals)));
  }
}

TEST_CASE("solve: warm start from the optimum stops within two sweeps") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    auto p = random_problem(rng, 40, 5);
    const auto cold = solve(p);
    REQUIRE(cold.converged);
    const auto warm = solve(p, cold.duals);
    CHECK(warm.converged);
    CHECK(warm.iterations <= 2);
  }
}

TEST_CASE("solve: deterministic given seed") {
  Rng rng(6);
  auto p = random_problem(rng, 25, 4);
  p.max_sweeps = 3;
  const auto a = solve(p);
  const auto b = solve(p);
  CHECK(a.duals == b.duals);
}
