#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "obq/loss.hpp"
#include "obq/rng.hpp"

using namespace obq;

namespace {

LossConfig literal_cfg() {
  LossConfig cfg;
  cfg.negative_branch = NegativeBranch::kLiteral;
  return cfg;
}

// Central finite difference of the pointwise loss.
double fd_grad(double x, double y, const LossConfig& cfg, double h = 1e-6) {
  return (ld_pointwise(x + h, y, cfg) - ld_pointwise(x - h, y, cfg)) /
         (2.0 * h);
}

}  // namespace

TEST_CASE("loss config validation") {
  LossConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.beta = -0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("pointwise loss matches hand-computed values") {
  const LossConfig cfg;
  // Positive labels: alpha |y-x| scaled cross entropy.
  CHECK(ld_pointwise(0.9, 1.0, cfg) ==
        doctest::Approx(0.0026340128914456563).epsilon(1e-12));
  CHECK(ld_pointwise(0.3, 0.7, cfg) ==
        doctest::Approx(0.094978344620977484).epsilon(1e-12));
  // Perfect prediction: zero loss.
  CHECK(ld_pointwise(0.7, 0.7, cfg) == 0.0);
  // Negative labels, focal-consistent branch.
  CHECK(ld_pointwise(0.5, 0.0, cfg) ==
        doctest::Approx(0.12996509635498973).epsilon(1e-12));
  CHECK(ld_pointwise(0.2, 0.0, cfg) ==
        doctest::Approx(0.0066943065394262941).epsilon(1e-12));
  // Literal branch penalizes low predictions on negatives instead.
  CHECK(ld_pointwise(0.2, 0.0, literal_cfg()) ==
        doctest::Approx(0.7725301979683683).epsilon(1e-12));
  // Both branches agree at x = 1/2 where the powers coincide.
  CHECK(ld_pointwise(0.5, 0.0, literal_cfg()) ==
        doctest::Approx(ld_pointwise(0.5, 0.0, cfg)).epsilon(1e-12));
}

TEST_CASE("pointwise loss is non-negative and validates its domain") {
  const LossConfig cfg;
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(1e-6, 1.0 - 1e-6);
    const double y = rng.unit() < 0.3 ? 0.0 : rng.unit();
    CHECK(ld_pointwise(x, y, cfg) >= 0.0);
    CHECK(ld_pointwise(x, y, literal_cfg()) >= 0.0);
  }
  CHECK_THROWS_AS(ld_pointwise(0.0, 0.5, cfg), std::domain_error);
  CHECK_THROWS_AS(ld_pointwise(1.0, 0.5, cfg), std::domain_error);
  CHECK_THROWS_AS(ld_pointwise(0.5, -0.1, cfg), std::domain_error);
  CHECK_THROWS_AS(ld_pointwise(0.5, 1.1, cfg), std::domain_error);
}

TEST_CASE("analytic gradient agrees with central differences") {
  // Both negative-branch variants, positives and negatives, away from the
  // non-differentiable point x == y. x stays 1e-3 clear of the endpoints:
  // closer in, the third derivative (~1/x^3) makes the central-difference
  // reference itself inaccurate at h = 1e-6, not the analytic gradient.
  for (const LossConfig cfg : {LossConfig{}, literal_cfg()}) {
    Rng rng(cfg.negative_branch == NegativeBranch::kFocal ? 101 : 202);
    int checked = 0;
    while (checked < 2000) {
      const double x = rng.uniform(1e-3, 1.0 - 1e-3);
      const double y = rng.unit() < 0.4 ? 0.0 : rng.unit();
      if (std::abs(x - y) < 1e-4) continue;
      const double g = ld_pointwise_grad(x, y, cfg);
      const double fd = fd_grad(x, y, cfg);
      const double denom = std::max({std::abs(g), std::abs(fd), 1e-8});
      CHECK(std::abs(g - fd) / denom < 1e-5);
      ++checked;
    }
  }
  // At the minimum the gradient is defined as zero.
  CHECK(ld_pointwise_grad(0.4, 0.4, LossConfig{}) == 0.0);
}

TEST_CASE("gradient drives predictions toward the label") {
  const LossConfig cfg;
  // Positive label, underestimate: pushing x up must lower the loss.
  CHECK(ld_pointwise_grad(0.3, 0.9, cfg) < 0.0);
  // Positive label, overestimate: gradient positive.
  CHECK(ld_pointwise_grad(0.9, 0.3, cfg) > 0.0);
  // Negative label (focal): any confidence is penalized.
  CHECK(ld_pointwise_grad(0.6, 0.0, cfg) > 0.0);
}

TEST_CASE("heatmap loss normalizes by label mass") {
  const Gridd grid(2, 1, {0, 0}, 1.0);
  Heatmapd pred(grid), label(grid);
  pred.at(0, 0) = 0.5;
  pred.at(1, 0) = 0.5;
  label.at(0, 0) = 0.5;
  label.at(1, 0) = 0.0;
  // First pixel hits the x == y minimum; second is a focal negative; the sum
  // is divided by the label mass 0.5.
  CHECK(ld_loss(pred, label) ==
        doctest::Approx(0.25993019270997947).epsilon(1e-12));
  // Scaling only the grid stride must not change anything.
  Heatmapd pred2(Gridd(2, 1, {0, 0}, 2.0)), label2(Gridd(2, 1, {0, 0}, 2.0));
  pred2.values = pred.values;
  label2.values = label.values;
  CHECK(ld_loss(pred2, label2) == doctest::Approx(ld_loss(pred, label)));
}

TEST_CASE("heatmap loss clamps raw predictions into (0,1)") {
  const Gridd grid(2, 1, {0, 0}, 1.0);
  Heatmapd pred(grid), label(grid);
  pred.at(0, 0) = 0.0;  // would be log(0) without the clamp
  pred.at(1, 0) = 1.0;
  label.at(0, 0) = 1.0;
  label.at(1, 0) = 0.0;
  const double loss = ld_loss(pred, label);
  CHECK(std::isfinite(loss));
  CHECK(loss > 0.0);
}

TEST_CASE("heatmap loss input validation") {
  const Gridd grid(2, 2, {0, 0}, 1.0);
  Heatmapd pred(grid), label(grid);
  CHECK_THROWS_AS(ld_loss(pred, label), std::domain_error);  // no mass
  label.at(0, 0) = 0.5;
  Heatmapd off(Gridd(2, 2, {1, 0}, 1.0));
  CHECK_THROWS_AS(ld_loss(pred, off), std::invalid_argument);
}

TEST_CASE("loss gradient field matches the pointwise gradient") {
  const Gridd grid(3, 2, {0, 0}, 1.0);
  Heatmapd pred(grid), label(grid);
  Rng rng(55);
  for (int k = 0; k < 6; ++k) {
    pred.values.data()[k] = rng.uniform(0.05, 0.95);
    label.values.data()[k] = rng.unit() < 0.5 ? 0.0 : rng.unit();
  }
  label.at(0, 0) = 0.8;  // ensure positive mass
  const double mass = label.values.sum();
  const DenseField<double> g = ld_loss_gradient(pred, label);
  for (int k = 0; k < 6; ++k)
    CHECK(g.data()[k] ==
          doctest::Approx(ld_pointwise_grad(pred.values.data()[k],
                                            label.values.data()[k],
                                            LossConfig{}) /
                          mass));
  // And against a finite difference of the full loss.
  const int probe = 4;
  const double h = 1e-7;
  Heatmapd up = pred, down = pred;
  up.values.data()[probe] += h;
  down.values.data()[probe] -= h;
  const double fd = (ld_loss(up, label) - ld_loss(down, label)) / (2 * h);
  CHECK(g.data()[probe] == doctest::Approx(fd).epsilon(1e-4));
}
