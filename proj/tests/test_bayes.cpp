#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numeric>

#include "medlfrm/bayes.hpp"
#include "medlfrm/model.hpp"
#include "medlfrm/random.hpp"
#include "oracles.hpp"

using namespace medlfrm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> entries(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& kappa) {
  std::vector<double> v(lambda.data(), lambda.data() + lambda.size());
  v.insert(v.end(), kappa.data(), kappa.data() + kappa.size());
  return v;
}

}  // namespace

TEST_CASE("update_hyper: single pseudo-observation") {
  const auto hp = update_hyper(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd(), kInf, HyperPrior{});
  CHECK(hp.mu == doctest::Approx(1.0));
  CHECK(hp.n == doctest::Approx(2.0));
  CHECK(hp.nu == doctest::Approx(3.0));
  CHECK(hp.s == doctest::Approx(3.0));
}

TEST_CASE("update_hyper: data at the prior mean") {
  HyperPrior prior{0.7, 2.0, 3.0, 1.5};
  const auto hp =
      update_hyper(Eigen::MatrixXd::Constant(3, 3, 0.7), Eigen::VectorXd::Constant(2, 0.7), kInf, prior);
  CHECK(hp.mu == doctest::Approx(0.7));
  CHECK(hp.s == doctest::Approx(1.5));
  CHECK(hp.n == 2.0 + 11.0);
  CHECK(hp.nu == 3.0 + 11.0);
}

TEST_CASE("update_hyper: sequential conjugate oracle") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const int K = 1 + static_cast<int>(rng.below(5));
    const int D = static_cast<int>(rng.below(4));
    const Eigen::MatrixXd lam = Eigen::MatrixXd::NullaryExpr(K, K, [&] { return rng.normal() * 2.0 + 0.5; });
    const Eigen::VectorXd kap = Eigen::VectorXd::NullaryExpr(D, [&] { return rng.normal(); });
    HyperPrior prior{rng.uniform(-1, 1), rng.uniform(0.1, 5), rng.uniform(0.5, 5), rng.uniform(0.1, 5)};
    const auto hp = update_hyper(lam, kap, kInf, prior);
    const auto ref = oracle::sequential_normal_gamma(entries(lam, kap), {prior.mu0, prior.n0, prior.nu0, prior.s0});
    CHECK(std::abs(hp.mu - ref.mu) <= 1e-10 * std::max(1.0, std::abs(ref.mu)));
    CHECK(std::abs(hp.n - ref.n) <= 1e-10);
    CHECK(std::abs(hp.nu - ref.nu) <= 1e-10);
    CHECK(std::abs(hp.s - ref.s) <= 1e-10 * std::max(1.0, ref.s));
  }
}

TEST_CASE("update_hyper: finite precision adds posterior variance") {
  const Eigen::MatrixXd lam = Eigen::MatrixXd::Constant(2, 2, 1.0);
  const auto sharp = update_hyper(lam, Eigen::VectorXd(), kInf, HyperPrior{});
  const auto soft = update_hyper(lam, Eigen::VectorXd(), 2.0, HyperPrior{});
  CHECK(soft.s == doctest::Approx(sharp.s + (4.0 - 1.0) / 2.0));  // (P - 1) / lambda
  CHECK(soft.mu == sharp.mu);
  CHECK_THROWS_AS(update_hyper(lam, Eigen::VectorXd(), 0.0, HyperPrior{}), std::invalid_argument);
  CHECK_THROWS_AS(update_hyper(lam, Eigen::VectorXd(), kInf, HyperPrior{0, 0, 2, 1}), std::invalid_argument);
}

TEST_CASE("update_hyper: relations are pooled") {
  std::vector<WeightPosterior> ws(2);
  ws[0].lambda = Eigen::MatrixXd::Constant(2, 2, 1.0);
  ws[0].precision = kInf;
  ws[1].lambda = Eigen::MatrixXd::Constant(2, 2, -1.0);
  ws[1].precision = kInf;
  const auto hp = update_hyper(ws, HyperPrior{});
  const auto ref = oracle::sequential_normal_gamma({1, 1, 1, 1, -1, -1, -1, -1}, {0, 1, 2, 1});
  CHECK(hp.mu == doctest::Approx(ref.mu));
  CHECK(hp.s == doctest::Approx(ref.s));
  CHECK(hp.n == 9.0);
}

TEST_CASE("hyper_moments: examples") {
  auto m = hyper_moments(HyperPosterior{1.0, 2.0, 3.0, 3.0});
  CHECK(m.e_mu == 1.0);
  CHECK(m.e_tau == doctest::Approx(1.0));
  REQUIRE(m.var_mu.has_value());
  CHECK(*m.var_mu == doctest::Approx(1.5));
  CHECK(hyper_moments(HyperPosterior{0.0, 1.0, 4.5, 4.5}).e_tau == doctest::Approx(1.0));
  CHECK_FALSE(hyper_moments(HyperPosterior{0.0, 1.0, 2.0, 1.0}).var_mu.has_value());
}

TEST_CASE("adaptive_margins: examples") {
  const std::vector<int> y{1, -1, 1};
  const std::vector<double> z{2.0, 3.0, 0.0};
  const auto same = adaptive_margins(0.0, 9.0, y, z, {});
  for (double v : same) CHECK(v == 9.0);
  // Deterministic rows: the Zbar sum is the product of feature counts.
  const auto m = adaptive_margins(2.0, 9.0, y, std::vector<double>{2.0 * 3.0, 1.0 * 4.0, 0.0}, {});
  CHECK(m[0] == doctest::Approx(9.0 - 12.0));
  CHECK(m[1] == doctest::Approx(9.0 + 8.0));
  CHECK(m[2] == 9.0);
  const auto with_x = adaptive_margins(1.0, 1.0, y, z, std::vector<double>{1.0, 1.0, 1.0});
  CHECK(with_x[0] == doctest::Approx(-2.0));
  CHECK_THROWS_AS(adaptive_margins(1.0, 1.0, y, std::vector<double>{1.0}, {}), std::invalid_argument);
}

TEST_CASE("bayes_svm_problem at prior moments is the plain problem with C = rho / 2") {
  const auto synth = synth_generate(12, 2, 3);
  const auto split = split_holdout(synth.dataset, 0.2, 3);
  const ObservedLinks obs(synth.dataset, split.observed, 9.0, 10.0);
  ModelState s;
  Rng rng(3);
  s.features.psi = Eigen::MatrixXd::NullaryExpr(12, 4, [&] { return rng.uniform(); });
  s.weights.resize(1);
  const HyperPrior prior{};  // nu0 / s0 = 2
  const auto moments = hyper_moments(HyperPosterior::from_prior(prior));
  CHECK(moments.e_tau == 2.0);
  const auto shifted = bayes_svm_problem(s, obs, 0, false, moments);
  const auto plain = build_svm_problem(s, obs, 0, false);
  CHECK(shifted.features == plain.features);
  for (std::size_t m = 0; m < plain.size(); ++m) {
    CHECK(shifted.margins[m] == 9.0);
    const double rho = plain.labels[m] > 0 ? 10.0 : 1.0;
    CHECK(shifted.boxes[m] == doctest::Approx(rho / 2.0));
  }
}

TEST_CASE("bayes_svm_problem: weight recovery through the shift") {
  const auto synth = synth_generate(10, 2, 5);
  const auto split = split_holdout(synth.dataset, 0.2, 5);
  const ObservedLinks obs(synth.dataset, split.observed, 9.0);
  ModelState s;
  Rng rng(5);
  s.features.psi = Eigen::MatrixXd::NullaryExpr(10, 3, [&] { return rng.uniform(); });
  s.weights.resize(1);
  HyperMoments moments;
  moments.e_mu = 0.4;
  moments.e_tau = 1.7;
  auto prob = bayes_svm_problem(s, obs, 0, false, moments);
  prob.tol = 1e-9;
  prob.max_sweeps = 100000;
  const auto sol = solve(prob);
  auto wp = unpack_weights(sol.weights, 3, 0, false);
  wp.lambda.array() += moments.e_mu;
  // Lambda - E[mu] is the weighted dual sum, and f - E[mu] sum(Zbar) meets
  // the shifted margin wherever the dual is strictly inside its box.
  const Eigen::MatrixXd centred = wp.lambda.array() - moments.e_mu;
  CHECK((unpack_weights(recover_weights(prob, sol.duals), 3, 0, false).lambda - centred).norm() <= 1e-10);
  s.weights[0] = wp;
  for (std::size_t m = 0; m < prob.size(); ++m) {
    if (sol.duals[m] > 1e-6 && sol.duals[m] < prob.boxes[m] - 1e-6) {
      const auto& l = synth.dataset.link(obs.by_relation(0)[m]);
      CHECK(l.label * discriminant(synth.dataset, s, 0, l.source, l.target) == doctest::Approx(9.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("bayes_weight_kl is zero-free and finite") {
  std::vector<WeightPosterior> ws(1);
  ws[0].lambda = Eigen::MatrixXd::Constant(2, 2, 0.3);
  ws[0].precision = 2.0;
  const auto hp = update_hyper(ws, HyperPrior{});
  const double kl = bayes_weight_kl(ws, hp, HyperPrior{});
  CHECK(std::isfinite(kl));
}

TEST_CASE("fit_bayes: constant n and nu, tau fixed point, mode check") {
  // Noise-free labels: the run settles, so the fixed point is meaningful.
  const auto synth = synth_generate(30, 3, 6, 0.3, 1.0, 0.0);
  const auto split = split_holdout(synth.dataset, 0.2, 6);
  TrainConfig cfg;
  cfg.truncation = 8;
  cfg.mode = Mode::kBayesMedLFRM;
  cfg.max_outer = 200;
  cfg.seed = 6;
  const auto model = fit_bayes(synth.dataset, split, cfg, split.heldout);
  REQUIRE(model.state.hyper.has_value());
  REQUIRE(model.objective_converged);
  const double n = model.trace[1].hyper->n, nu = model.trace[1].hyper->nu;
  CHECK(n == 1.0 + 64.0);
  CHECK(nu == 2.0 + 64.0);
  for (std::size_t t = 1; t < model.trace.size(); ++t) {
    CHECK(model.trace[t].hyper->n == n);
    CHECK(model.trace[t].hyper->nu == nu);
  }
  const auto& last = *model.trace.back().hyper;
  const auto& before = *model.trace[model.trace.size() - 2].hyper;
  CHECK(std::abs(last.nu / last.s - before.nu / before.s) <= 0.01 * (before.nu / before.s));
  CHECK(model.trace.back().objective < model.trace.front().objective);

  cfg.mode = Mode::kMedLFRM;
  CHECK_THROWS_AS(fit_bayes(synth.dataset, split, cfg), std::invalid_argument);
}
