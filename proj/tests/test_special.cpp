#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <random>

#include "medlfrm/random.hpp"
#include "medlfrm/special.hpp"

using namespace medlfrm;

TEST_CASE("digamma against boost") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(1e4));
  for (int t = 0; t < 2000; ++t) {
    const double x = std::exp(logx(gen));
    const double ref = boost::math::digamma(x);
    CHECK(std::abs(digamma(x) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("digamma fixed values") {
  const double euler = 0.57721566490153286061;
  CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-12));
  CHECK(digamma(2.0) - digamma(3.0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(digamma(0.0), std::invalid_argument);
  CHECK_THROWS_AS(digamma(-1.5), std::invalid_argument);
}

TEST_CASE("sigmoid is stable at extremes") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(-800.0) < 1e-300);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}

TEST_CASE("log_beta and xlogx") {
  CHECK(log_beta(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(log_beta(2.0, 3.0) == doctest::Approx(std::log(1.0 / 12.0)));
  CHECK(xlogx(0.0) == 0.0);
  CHECK(xlogx(0.5) == doctest::Approx(0.5 * std::log(0.5)));
}

TEST_CASE("rng is reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(3);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    const double z = r.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  r.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}
