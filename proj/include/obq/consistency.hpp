#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "obq/heatmap.hpp"

namespace obq {

// Spatial-consistency metric used to compare a localized heatmap against a
// box's self-encoding.
enum class MetricKind { kVolumeIoU, kMae, kKld };

inline std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::kVolumeIoU: return "viou";
    case MetricKind::kMae: return "mae";
    case MetricKind::kKld: return "kld";
  }
  throw std::invalid_argument("unknown metric kind");
}

inline MetricKind metric_from_string(const std::string& s) {
  if (s == "viou") return MetricKind::kVolumeIoU;
  if (s == "mae") return MetricKind::kMae;
  if (s == "kld") return MetricKind::kKld;
  throw std::invalid_argument("unknown metric '" + s + "' (viou|mae|kld)");
}

namespace detail {

template <typename Scalar>
void require_same_grid(const Heatmap<Scalar>& a, const Heatmap<Scalar>& b) {
  if (!(a.grid == b.grid))
    throw std::invalid_argument("heatmaps live on different grids");
}

}  // namespace detail

// Volume IoU over a pixel set: sum of pointwise minima over sum of pointwise
// maxima. Defined as 0 when both fields vanish on the set.
template <typename Scalar>
Scalar volume_iou(const Heatmap<Scalar>& h, const Heatmap<Scalar>& f,
                  const PixelSet& ps) {
  detail::require_same_grid(h, f);
  if (ps.empty()) throw std::invalid_argument("volume_iou over empty pixel set");
  Scalar num = 0, den = 0;
  const Scalar* a = h.values.data();
  const Scalar* b = f.values.data();
  for (const std::int64_t k : ps.indices) {
    num += std::min(a[k], b[k]);
    den += std::max(a[k], b[k]);
  }
  if (!(den > Scalar(0))) return Scalar(0);
  return num / den;
}

// Mean-absolute-error similarity over a pixel set: 1 - mean |H - F|. Values
// in [0,1] guarantee the result stays in [0,1].
template <typename Scalar>
Scalar mae_similarity(const Heatmap<Scalar>& h, const Heatmap<Scalar>& f,
                      const PixelSet& ps) {
  detail::require_same_grid(h, f);
  if (ps.empty())
    throw std::invalid_argument("mae_similarity over empty pixel set");
  Scalar acc = 0;
  const Scalar* a = h.values.data();
  const Scalar* b = f.values.data();
  for (const std::int64_t k : ps.indices) acc += std::abs(a[k] - b[k]);
  return Scalar(1) - acc / static_cast<Scalar>(ps.size());
}

// KL-divergence similarity over a pixel set: both fields are normalized to
// distributions on the set, and the result is exp(-KL(L || G)). Zero-mass L
// terms contribute nothing; a zero-mass localized heatmap scores 0, and a
// zero-mass self-encoding cannot occur for pixel sets meeting the box.
template <typename Scalar>
Scalar kld_similarity(const Heatmap<Scalar>& h, const Heatmap<Scalar>& f,
                      const PixelSet& ps) {
  detail::require_same_grid(h, f);
  if (ps.empty())
    throw std::invalid_argument("kld_similarity over empty pixel set");
  const Scalar* a = h.values.data();
  const Scalar* b = f.values.data();
  Scalar sum_l = 0, sum_g = 0;
  for (const std::int64_t k : ps.indices) {
    sum_l += a[k];
    sum_g += b[k];
  }
  if (!(sum_l > Scalar(0))) return Scalar(0);
  if (!(sum_g > Scalar(0)))
    throw std::domain_error("kld_similarity against a zero self-encoding");
  Scalar kl = 0;
  for (const std::int64_t k : ps.indices) {
    const Scalar l = a[k] / sum_l;
    if (!(l > Scalar(0))) continue;
    const Scalar g = b[k] / sum_g;
    if (!(g > Scalar(0)))
      return Scalar(0);  // L puts mass where G has none: infinite divergence
    kl += l * std::log(l / g);
  }
  return std::exp(-std::max<Scalar>(kl, Scalar(0)));
}

template <typename Scalar>
Scalar integrate(const Heatmap<Scalar>& h, const Heatmap<Scalar>& f,
                 const PixelSet& ps, MetricKind metric) {
  switch (metric) {
    case MetricKind::kVolumeIoU: return volume_iou(h, f, ps);
    case MetricKind::kMae: return mae_similarity(h, f, ps);
    case MetricKind::kKld: return kld_similarity(h, f, ps);
  }
  throw std::invalid_argument("unknown metric kind");
}

// Quality verdict for one box. `q` is the localization quality; `cls` and
// `cq` are present only when the box carried a classification score.
struct QualityReport {
  double q = 0;
  std::optional<double> cls;
  std::optional<double> cq;
  MetricKind metric = MetricKind::kVolumeIoU;
  bool lite_bypass = false;
};

// Localization quality of one box against a global heatmap, over a
// caller-supplied pixel set (e.g. a subsampled one): Q = S(H_i, F_i).
template <typename Scalar>
QualityReport quality_on(const OrientedBox<Scalar>& box,
                         const Heatmap<Scalar>& h, const PixelSet& ps,
                         MetricKind metric = MetricKind::kVolumeIoU,
                         PositionEncoding enc = PositionEncoding::kGaussian) {
  if (ps.empty())
    throw std::invalid_argument("quality_on over empty pixel set");
  const Heatmap<Scalar> h_i = localized_heatmap(h, ps);
  const Heatmap<Scalar> f_i = self_encoding(box, ps, h.grid, enc);
  QualityReport r;
  r.metric = metric;
  r.q = static_cast<double>(integrate(h_i, f_i, ps, metric));
  if (box.score) {
    r.cls = static_cast<double>(*box.score);
    r.cq = *r.cls * r.q;
  }
  return r;
}

// As `quality_on`, but integrated over the box's own pixels. A box whose
// interior contains no pixel centers cannot be scored.
template <typename Scalar>
QualityReport quality(const OrientedBox<Scalar>& box, const Heatmap<Scalar>& h,
                      MetricKind metric = MetricKind::kVolumeIoU,
                      PositionEncoding enc = PositionEncoding::kGaussian) {
  const PixelSet ps = pixels_in_box(box, h.grid);
  if (ps.empty())
    throw std::domain_error(
        "box covers no pixel centers; refine the grid stride");
  return quality_on(box, h, ps, metric, enc);
}

}  // namespace obq
