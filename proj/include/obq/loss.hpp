#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "obq/heatmap.hpp"

namespace obq {

// Predictions are clamped into [kPredictionClamp, 1 - kPredictionClamp]
// before the loss touches a logarithm.
inline constexpr double kPredictionClamp = 1e-6;

// Two readings of the zero-label branch. kFocal down-weights easy negatives
// the way a focal term does, -(1-alpha) x^beta log(1-x), and is the default;
// kLiteral keeps the mirrored form -(1-alpha) (1-x)^beta log(x), which
// instead *rewards* confident negatives and is kept selectable for
// comparison.
enum class NegativeBranch { kFocal, kLiteral };

struct LossConfig {
  double alpha = 0.25;
  double beta = 2.0;
  double lambda = 1.5;  // weight of the loss inside a composite objective
  NegativeBranch negative_branch = NegativeBranch::kFocal;

  void validate() const {
    if (!(alpha > 0.0) || !(alpha < 1.0))
      throw std::invalid_argument("loss alpha must lie in (0,1)");
    if (!(beta >= 0.0)) throw std::invalid_argument("loss beta must be >= 0");
    if (!(lambda > 0.0))
      throw std::invalid_argument("loss lambda must be positive");
  }
};

// Pointwise label-dependent loss for prediction x in (0,1) against label y in
// [0,1]. Positive labels use a cross entropy scaled by alpha |y - x|;
// zero labels use the configured negative branch.
template <typename Scalar>
Scalar ld_pointwise(Scalar x, Scalar y, const LossConfig& cfg) {
  if (!(x > Scalar(0)) || !(x < Scalar(1)))
    throw std::domain_error("ld_pointwise needs x strictly inside (0,1)");
  if (!(y >= Scalar(0)) || !(y <= Scalar(1)))
    throw std::domain_error("ld_pointwise needs y in [0,1]");
  const Scalar alpha = static_cast<Scalar>(cfg.alpha);
  const Scalar beta = static_cast<Scalar>(cfg.beta);
  if (y > Scalar(0)) {
    const Scalar ce = y * std::log(x) + (Scalar(1) - y) * std::log1p(-x);
    return -alpha * std::abs(y - x) * ce;
  }
  if (cfg.negative_branch == NegativeBranch::kFocal)
    return -(Scalar(1) - alpha) * std::pow(x, beta) * std::log1p(-x);
  return -(Scalar(1) - alpha) * std::pow(Scalar(1) - x, beta) * std::log(x);
}

// d/dx of ld_pointwise at fixed y. The |y - x| factor is not differentiable
// at x == y, where the loss attains its minimum 0; the gradient is defined
// as 0 there.
template <typename Scalar>
Scalar ld_pointwise_grad(Scalar x, Scalar y, const LossConfig& cfg) {
  if (!(x > Scalar(0)) || !(x < Scalar(1)))
    throw std::domain_error("ld_pointwise_grad needs x strictly inside (0,1)");
  if (!(y >= Scalar(0)) || !(y <= Scalar(1)))
    throw std::domain_error("ld_pointwise_grad needs y in [0,1]");
  const Scalar alpha = static_cast<Scalar>(cfg.alpha);
  const Scalar beta = static_cast<Scalar>(cfg.beta);
  if (y > Scalar(0)) {
    if (x == y) return Scalar(0);
    const Scalar ce = y * std::log(x) + (Scalar(1) - y) * std::log1p(-x);
    const Scalar ce_dx = y / x - (Scalar(1) - y) / (Scalar(1) - x);
    const Scalar sgn = x > y ? Scalar(1) : Scalar(-1);
    return -alpha * (sgn * ce + std::abs(y - x) * ce_dx);
  }
  if (cfg.negative_branch == NegativeBranch::kFocal) {
    const Scalar t1 = beta == Scalar(0)
                          ? Scalar(0)
                          : beta * std::pow(x, beta - 1) * std::log1p(-x);
    const Scalar t2 = std::pow(x, beta) / (Scalar(1) - x);
    return -(Scalar(1) - alpha) * (t1 - t2);
  }
  const Scalar t1 = beta == Scalar(0)
                        ? Scalar(0)
                        : -beta * std::pow(Scalar(1) - x, beta - 1) *
                              std::log(x);
  const Scalar t2 = std::pow(Scalar(1) - x, beta) / x;
  return -(Scalar(1) - alpha) * (t1 + t2);
}

// Label-dependent loss of a predicted heatmap against a label heatmap on the
// same grid: the pointwise losses summed over the grid and normalized by the
// label's total mass. Predictions are clamped into the open unit interval
// first. A label with no positive mass provides no supervision and is
// rejected.
template <typename Scalar>
Scalar ld_loss(const Heatmap<Scalar>& pred, const Heatmap<Scalar>& label,
               const LossConfig& cfg = {}) {
  cfg.validate();
  if (!(pred.grid == label.grid))
    throw std::invalid_argument("prediction and label grids differ");
  const Scalar mass = label.values.sum();
  if (!(mass > Scalar(0)))
    throw std::domain_error("label heatmap has no positive mass");
  const Scalar lo = static_cast<Scalar>(kPredictionClamp);
  const Scalar hi = Scalar(1) - lo;
  Scalar acc = 0;
  const Scalar* x = pred.values.data();
  const Scalar* y = label.values.data();
  const std::int64_t n = pred.grid.cells();
  for (std::int64_t k = 0; k < n; ++k)
    acc += ld_pointwise(std::clamp(x[k], lo, hi), y[k], cfg);
  return acc / mass;
}

// Gradient of ld_loss with respect to the (clamped) predictions, as a dense
// field on the same grid. Entries whose prediction hit the clamp are the
// gradient at the clamped value.
template <typename Scalar>
DenseField<Scalar> ld_loss_gradient(const Heatmap<Scalar>& pred,
                                    const Heatmap<Scalar>& label,
                                    const LossConfig& cfg = {}) {
  cfg.validate();
  if (!(pred.grid == label.grid))
    throw std::invalid_argument("prediction and label grids differ");
  const Scalar mass = label.values.sum();
  if (!(mass > Scalar(0)))
    throw std::domain_error("label heatmap has no positive mass");
  const Scalar lo = static_cast<Scalar>(kPredictionClamp);
  const Scalar hi = Scalar(1) - lo;
  DenseField<Scalar> g(pred.grid.height, pred.grid.width);
  const Scalar* x = pred.values.data();
  const Scalar* y = label.values.data();
  Scalar* out = g.data();
  const std::int64_t n = pred.grid.cells();
  for (std::int64_t k = 0; k < n; ++k)
    out[k] = ld_pointwise_grad(std::clamp(x[k], lo, hi), y[k], cfg) / mass;
  return g;
}

}  // namespace obq
