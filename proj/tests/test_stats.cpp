#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "obq/rng.hpp"
#include "obq/stats.hpp"

using namespace obq;

TEST_CASE("average ranks with and without ties") {
  const std::vector<double> plain{3.0, 1.0, 2.0};
  CHECK(average_ranks(plain) == std::vector<double>{3.0, 1.0, 2.0});
  const std::vector<double> tied{1.0, 2.0, 2.0, 3.0};
  CHECK(average_ranks(tied) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  const std::vector<double> constant{5.0, 5.0, 5.0};
  CHECK(average_ranks(constant) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("correlations on exact linear data") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> up{2, 4, 6, 8};
  const std::vector<double> down{8, 6, 4, 2};
  CHECK(pearson(x, up) == doctest::Approx(1.0));
  CHECK(pearson(x, down) == doctest::Approx(-1.0));
  CHECK(spearman(x, up) == doctest::Approx(1.0));
  CHECK(kendall_tau(x, down) == doctest::Approx(-1.0));
}

TEST_CASE("correlations on a known partial ordering") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 3, 2, 4};
  CHECK(pearson(x, y) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(spearman(x, y) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(kendall_tau(x, y) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("tie handling matches the tau-b and rank conventions") {
  const std::vector<double> x{1, 2, 2, 3};
  const std::vector<double> y{1, 2, 3, 4};
  CHECK(spearman(x, y) == doctest::Approx(0.9486832980505138).epsilon(1e-12));
  CHECK(kendall_tau(x, y) ==
        doctest::Approx(0.9128709291752769).epsilon(1e-12));
}

TEST_CASE("monotone nonlinear data separates the coefficients") {
  std::vector<double> x, y;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i);
    y.push_back(std::pow(static_cast<double>(i), 3.0));
  }
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  CHECK(kendall_tau(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, y) < 1.0);
  CHECK(pearson(x, y) > 0.8);
}

TEST_CASE("constant inputs follow the degenerate convention") {
  const std::vector<double> c{2, 2, 2, 2};
  const std::vector<double> v{1, 2, 3, 4};
  // Both constant: vacuously perfectly related.
  CorrelationTriple both = correlate(c, c);
  CHECK(both.degenerate);
  CHECK(both.pearson == 1.0);
  CHECK(both.spearman == 1.0);
  CHECK(both.kendall_tau == 1.0);
  // One constant: no association measurable.
  CorrelationTriple one = correlate(c, v);
  CHECK(one.degenerate);
  CHECK(one.pearson == 0.0);
  CHECK(one.spearman == 0.0);
  CHECK(one.kendall_tau == 0.0);
  CorrelationTriple none = correlate(v, v);
  CHECK_FALSE(none.degenerate);
}

TEST_CASE("correlation inputs are validated") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 2};
  CHECK_THROWS_AS(pearson(a, b), std::invalid_argument);
  CHECK_THROWS_AS(correlate(std::vector<double>{1.0},
                            std::vector<double>{2.0}),
                  std::invalid_argument);
}

TEST_CASE("coefficients are invariant under monotone rescaling of ranks") {
  Rng rng(7);
  std::vector<double> x, y;
  for (int i = 0; i < 60; ++i) {
    const double v = rng.unit();
    x.push_back(v);
    y.push_back(v + 0.15 * rng.unit());
  }
  std::vector<double> x_scaled;
  for (const double v : x) x_scaled.push_back(std::exp(3.0 * v));
  CHECK(spearman(x_scaled, y) == doctest::Approx(spearman(x, y)));
  CHECK(kendall_tau(x_scaled, y) == doctest::Approx(kendall_tau(x, y)));
  CHECK(spearman(x, y) > 0.8);
}
