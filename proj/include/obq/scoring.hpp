#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "obq/consistency.hpp"
#include "obq/heatmap.hpp"
#include "obq/parallel.hpp"

namespace obq {

// Fast-path configuration: only the top_k boxes by sampled center confidence
// get the full integration, over a deterministic gamma-fraction subsample of
// their pixels; the rest are scored by their sampled center value alone.
struct LiteConfig {
  std::size_t top_k = 1500;
  double gamma = 0.5;

  void validate() const {
    if (top_k == 0) throw std::invalid_argument("lite top_k must be >= 1");
    if (!(gamma > 0.0) || !(gamma <= 1.0))
      throw std::invalid_argument("lite gamma must lie in (0,1]");
  }
};

// Keeps element k iff floor(k * gamma) > floor((k-1) * gamma): an arithmetic
// stride that needs no RNG, keeps the first pixel, and reduces to the
// identity at gamma == 1.
inline PixelSet lite_subsample(const PixelSet& ps, double gamma) {
  if (gamma >= 1.0) return ps;
  PixelSet out;
  out.indices.reserve(
      static_cast<std::size_t>(std::ceil(gamma * ps.size())) + 1);
  for (std::size_t k = 0; k < ps.indices.size(); ++k) {
    const double prev =
        std::floor((static_cast<double>(k) - 1.0) * gamma);
    const double cur = std::floor(static_cast<double>(k) * gamma);
    if (cur > prev) out.indices.push_back(ps.indices[k]);
  }
  return out;
}

// One scored box of a batch. Exactly one of `report` / `error` is meaningful.
struct ScoreOutcome {
  std::size_t index = 0;
  std::optional<QualityReport> report;
  std::string error;
};

struct ScoreOptions {
  MetricKind metric = MetricKind::kVolumeIoU;
  PositionEncoding encoding = PositionEncoding::kGaussian;
  std::optional<LiteConfig> lite;  // nullopt: full-quality path for every box
  int threads = 1;
};

namespace detail {

inline void score_one(const OrientedBoxd& box, const Heatmapd& h,
                      const ScoreOptions& opts, double gamma,
                      ScoreOutcome& out) {
  try {
    PixelSet ps = pixels_in_box(box, h.grid);
    if (ps.empty())
      throw std::domain_error(
          "box covers no pixel centers; refine the grid stride");
    if (gamma < 1.0) ps = lite_subsample(ps, gamma);
    out.report = quality_on(box, h, ps, opts.metric, opts.encoding);
  } catch (const std::exception& e) {
    out.report.reset();
    out.error = e.what();
  }
}

}  // namespace detail

// Scores a batch of boxes against one heatmap. Outcomes are returned in input
// order; per-box failures (e.g. a box that misses the grid) are reported in
// place rather than aborting the batch. Results are independent of
// opts.threads.
inline std::vector<ScoreOutcome> score_boxes(std::span<const OrientedBoxd> boxes,
                                             const Heatmapd& h,
                                             const ScoreOptions& opts = {}) {
  std::vector<ScoreOutcome> out(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) out[i].index = i;
  if (!opts.lite) {
    parallel_for_index(boxes.size(), opts.threads, [&](std::size_t i) {
      detail::score_one(boxes[i], h, opts, 1.0, out[i]);
    });
    return out;
  }
  opts.lite->validate();
  // Rank boxes by the heatmap sampled at their centers; sampling failures
  // (center off the grid) become per-box errors and leave the ranking.
  std::vector<double> center_value(boxes.size());
  std::vector<std::size_t> ranked;
  ranked.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    try {
      center_value[i] = sample(h, boxes[i].center());
      ranked.push_back(i);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  }
  std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    if (center_value[a] != center_value[b])
      return center_value[a] > center_value[b];
    return a < b;  // ties broken by input order for determinism
  });
  const std::size_t n_full = std::min(opts.lite->top_k, ranked.size());
  std::vector<std::size_t> full(ranked.begin(), ranked.begin() + n_full);
  parallel_for_index(full.size(), opts.threads, [&](std::size_t k) {
    detail::score_one(boxes[full[k]], h, opts, opts.lite->gamma,
                      out[full[k]]);
  });
  for (std::size_t k = n_full; k < ranked.size(); ++k) {
    const std::size_t i = ranked[k];
    QualityReport r;
    r.metric = opts.metric;
    r.q = center_value[i];
    r.lite_bypass = true;
    if (boxes[i].score) {
      r.cls = *boxes[i].score;
      r.cq = *r.cls * r.q;
    }
    out[i].report = r;
  }
  return out;
}

}  // namespace obq
