#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "obq/consistency.hpp"
#include "obq/rng.hpp"

using namespace obq;

namespace {

// 1x3 grid with prescribed values; pixel set = all three pixels.
Heatmapd tiny(const std::vector<double>& v) {
  Heatmapd h(Gridd(3, 1, {0, 0}, 1.0));
  for (int i = 0; i < 3; ++i) h.at(i, 0) = v[static_cast<std::size_t>(i)];
  return h;
}

PixelSet all3() { return PixelSet{{0, 1, 2}}; }

}  // namespace

TEST_CASE("metric names round-trip") {
  for (const MetricKind m :
       {MetricKind::kVolumeIoU, MetricKind::kMae, MetricKind::kKld})
    CHECK(metric_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(metric_from_string("iou"), std::invalid_argument);
}

TEST_CASE("metrics against hand-computed values") {
  const Heatmapd h = tiny({0.2, 0.5, 0.8});
  const Heatmapd f = tiny({0.4, 0.5, 0.6});
  const PixelSet ps = all3();
  CHECK(volume_iou(h, f, ps) ==
        doctest::Approx(0.76470588235294101).epsilon(1e-12));
  CHECK(mae_similarity(h, f, ps) ==
        doctest::Approx(0.8666666666666667).epsilon(1e-12));
  CHECK(kld_similarity(h, f, ps) ==
        doctest::Approx(0.94081306523573227).epsilon(1e-12));
  // All three are symmetric in intent but only viou/mae in value; check the
  // identical-input fixed point instead.
  for (const MetricKind m :
       {MetricKind::kVolumeIoU, MetricKind::kMae, MetricKind::kKld})
    CHECK(integrate(h, h, ps, m) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metrics handle zero-mass fields per convention") {
  const Heatmapd z = tiny({0.0, 0.0, 0.0});
  const Heatmapd f = tiny({0.4, 0.5, 0.6});
  const PixelSet ps = all3();
  CHECK(volume_iou(z, z, ps) == 0.0);
  CHECK(volume_iou(z, f, ps) == 0.0);
  CHECK(kld_similarity(z, f, ps) == 0.0);
  CHECK(mae_similarity(z, f, ps) == doctest::Approx(1.0 - 0.5));
  // Localized mass where the self-encoding has none: divergence is infinite.
  const Heatmapd l = tiny({0.5, 0.5, 0.5});
  const Heatmapd g = tiny({0.0, 0.5, 0.5});
  CHECK(kld_similarity(l, g, ps) == 0.0);
  // The reverse is fine: L may skip pixels G covers.
  CHECK(kld_similarity(g, l, ps) > 0.0);
}

TEST_CASE("metrics validate their inputs") {
  const Heatmapd h = tiny({0.2, 0.5, 0.8});
  Heatmapd other(Gridd(3, 1, {0, 0}, 2.0));
  CHECK_THROWS_AS(volume_iou(h, other, all3()), std::invalid_argument);
  CHECK_THROWS_AS(integrate(h, h, PixelSet{}, MetricKind::kMae),
                  std::invalid_argument);
}

TEST_CASE("metrics stay within [0,1] on random fields") {
  Rng rng(31);
  const Gridd grid(8, 8, {0, 0}, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Heatmapd a(grid), b(grid);
    PixelSet ps;
    for (int k = 0; k < 64; ++k) {
      a.values.data()[k] = rng.unit();
      b.values.data()[k] = rng.unit();
      if (rng.unit() < 0.4) ps.indices.push_back(k);
    }
    if (ps.empty()) ps.indices.push_back(0);
    for (const MetricKind m :
         {MetricKind::kVolumeIoU, MetricKind::kMae, MetricKind::kKld}) {
      const double q = integrate(a, b, ps, m);
      CHECK(q >= 0.0);
      CHECK(q <= 1.0);
    }
  }
}

TEST_CASE("a perfect prediction scores 1 under every metric") {
  const OrientedBoxd gt(0, 0, 10, 4, 0.35);
  const std::vector<OrientedBoxd> boxes{gt};
  const Gridd grid = covering_grid<double>(boxes, 0.2);
  const Heatmapd h = global_label<double>(boxes, grid);
  for (const MetricKind m :
       {MetricKind::kVolumeIoU, MetricKind::kMae, MetricKind::kKld})
    CHECK(quality(gt, h, m).q == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stretched prediction reproduces the reference scenario") {
  // GT 2x1 vs a prediction stretched to 3x1 at the same center: exact IoU is
  // 2/3 while the KLD similarity stays near 0.83 on a fine grid, with the
  // volume IoU strictly below it.
  const OrientedBoxd gt(0, 0, 2, 1, 0);
  const OrientedBoxd pred(0, 0, 3, 1, 0);
  CHECK(exact_iou(gt, pred) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  const std::vector<OrientedBoxd> both{gt, pred};
  const Gridd grid = covering_grid<double>(gt.center(), both, 0.02);
  const std::vector<OrientedBoxd> gt_only{gt};
  const Heatmapd h = global_label<double>(gt_only, grid);
  const double q_kld = quality(pred, h, MetricKind::kKld).q;
  const double q_viou = quality(pred, h, MetricKind::kVolumeIoU).q;
  const double q_mae = quality(pred, h, MetricKind::kMae).q;
  CHECK(q_kld == doctest::Approx(0.8288).epsilon(0.015));
  CHECK(q_viou == doctest::Approx(0.6672).epsilon(0.015));
  CHECK(q_mae == doctest::Approx(0.8833).epsilon(0.015));
  CHECK(q_viou < q_kld);
}

TEST_CASE("classification-aware quality composes multiplicatively") {
  // Two detections of the same object: a well-localized low-confidence box
  // and a poorly localized high-confidence one. The composed score prefers
  // the former; the plain MAE similarity would prefer the latter.
  const OrientedBoxd gt(0, 0, 100, 50, 0);
  const OrientedBoxd box_a(6, 0, 100, 50, 0, 0.82);
  const OrientedBoxd box_b(16, 0, 100, 50, 0, 0.97);
  const std::vector<OrientedBoxd> gt_only{gt};
  const std::vector<OrientedBoxd> all{gt, box_a, box_b};
  const Gridd grid = covering_grid<double>(gt.center(), all, 1.0);
  const Heatmapd h = global_label<double>(gt_only, grid);
  const QualityReport ra = quality(box_a, h, MetricKind::kVolumeIoU);
  const QualityReport rb = quality(box_b, h, MetricKind::kVolumeIoU);
  CHECK(ra.q == doctest::Approx(0.8310).epsilon(0.02));
  CHECK(rb.q == doctest::Approx(0.6160).epsilon(0.02));
  CHECK(ra.cls.value() == 0.82);
  CHECK(rb.cls.value() == 0.97);
  CHECK(ra.cq.value() == doctest::Approx(0.82 * ra.q));
  CHECK(rb.cq.value() == doctest::Approx(0.97 * rb.q));
  CHECK(ra.cq.value() > rb.cq.value());
  // MAE saturates: it ranks the worse box higher once confidence is folded
  // in.
  const QualityReport ma = quality(box_a, h, MetricKind::kMae);
  const QualityReport mb = quality(box_b, h, MetricKind::kMae);
  CHECK(ma.cq.value() < mb.cq.value());
  // Without a score there is no composed quality.
  const QualityReport plain = quality(OrientedBoxd(6, 0, 100, 50, 0), h);
  CHECK_FALSE(plain.cls.has_value());
  CHECK_FALSE(plain.cq.has_value());
}

TEST_CASE("boxes that cover no pixel centers are rejected") {
  const Gridd grid(11, 11, {-5, -5}, 1.0);
  std::vector<OrientedBoxd> boxes{{0, 0, 8, 8, 0}};
  const Heatmapd h = global_label<double>(boxes, grid);
  // A sliver between pixel centers.
  CHECK_THROWS_AS(quality(OrientedBoxd(0.5, 0.5, 0.4, 0.4, 0.3), h),
                  std::domain_error);
}
