#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "obq/consistency.hpp"
#include "obq/geometry.hpp"
#include "obq/heatmap.hpp"
#include "obq/stats.hpp"

namespace obq {

// ---------------------------------------------------------------------------
// Heatmap perturbation: touch a `fraction` of the pixels, scaling each by
// (1 +/- magnitude) with a fair sign coin, clamped back into [0,1].
// ---------------------------------------------------------------------------

struct PerturbSpec {
  double fraction = 0.0;   // share of pixels to touch, in [0,1]
  double magnitude = 0.0;  // relative change per touched pixel, >= 0
  std::uint64_t seed = 0;

  void validate() const;
};

void perturb_heatmap(Heatmap<double>& h, const PerturbSpec& spec);

// ---------------------------------------------------------------------------
// Controlled-degradation sweeps: one GT box, a family of predictions obtained
// by varying a single parameter, and all three consistency metrics evaluated
// against exact IoU at every step.
// ---------------------------------------------------------------------------

enum class SweepKind { kAngle, kCenterOffset, kAspectRatio };
enum class OffsetDirection { kDiagonal, kWidthAxis };
enum class AspectMode { kHeightPreserving, kAreaPreserving };

std::string to_string(SweepKind k);
SweepKind sweep_from_string(const std::string& s);

struct SweepSpec {
  SweepKind kind = SweepKind::kAngle;
  OrientedBoxd gt{0.0, 0.0, 100.0, 50.0, 0.0};
  int steps = 41;
  // Parameter range; when unset, per-kind defaults apply: angle +/- pi/4
  // radians, center offset +/- 0.5 box widths, aspect multiplier 1/3 .. 3
  // (geometrically spaced).
  std::optional<double> lo, hi;
  double stride_fraction = 0.02;  // grid stride = fraction * min(gt.w, gt.h)
  OffsetDirection offset_direction = OffsetDirection::kDiagonal;
  AspectMode aspect_mode = AspectMode::kHeightPreserving;
  PositionEncoding encoding = PositionEncoding::kGaussian;
  std::int64_t cell_cap = kDefaultGridCellCap;

  void validate() const;
};

struct SweepRow {
  int step = 0;
  double param = 0;
  double gt_iou = 0;
  double q_viou = 0;
  double q_mae = 0;
  double q_kld = 0;
};

// Parameter value at `step` (linear for angle/offset, geometric for aspect).
double sweep_param(const SweepSpec& spec, int step);
// The perturbed prediction for one parameter value.
OrientedBoxd sweep_pred(const SweepSpec& spec, double param);

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads = 1);

// Mean |Q - IoU| per metric over the sweep: how faithfully each metric
// tracks exact IoU.
struct SweepSummary {
  double fid_viou = 0;
  double fid_mae = 0;
  double fid_kld = 0;
};
SweepSummary summarize_sweep(std::span<const SweepRow> rows);

// ---------------------------------------------------------------------------
// Synthetic GT/prediction ensembles shared by the correlation and robustness
// studies. GT boxes sit at the origin with uniform extents and angle; the
// prediction jitters all five parameters.
// ---------------------------------------------------------------------------

struct BoxGenConfig {
  double w_min = 20.0, w_max = 80.0;
  double h_min = 10.0, h_max = 50.0;
  double center_jitter = 0.25;     // shift as a fraction of each extent
  double log_scale_jitter = 0.3;   // extents scale by exp(U(-j, j))
  double angle_jitter = 0.35;      // radians
  double stride_divisor = 30.0;    // stride = min extent of the pair / divisor
  std::int64_t cell_cap = kDefaultGridCellCap;

  void validate() const;
};

struct BoxPair {
  OrientedBoxd gt;
  OrientedBoxd pred;
};

BoxPair make_pair(const BoxGenConfig& gen, std::uint64_t seed);
// Pair i is seeded with mix_seed(seed, i): any prefix of the ensemble is
// stable under changes of n.
std::vector<BoxPair> make_pairs(const BoxGenConfig& gen, int n,
                                std::uint64_t seed);

struct PairQuality {
  double gt_iou = 0;
  double q_viou = 0;
  double q_mae = 0;
  double q_kld = 0;
};

// Scores one pair on its own covering grid: label heatmap from the GT box,
// quality of the prediction under all three metrics. gamma < 1 subsamples
// the integration pixels (the fast path); `perturb` optionally degrades the
// label heatmap first.
PairQuality score_pair(const BoxPair& pair, const BoxGenConfig& gen,
                       double gamma = 1.0,
                       const PerturbSpec* perturb = nullptr);

// ---------------------------------------------------------------------------
// Correlation study: each metric's agreement with exact IoU over an ensemble.
// ---------------------------------------------------------------------------

struct CorrelationConfig {
  int n_pairs = 500;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  BoxGenConfig gen;
  int threads = 1;
};

struct CorrelationReport {
  std::vector<PairQuality> samples;
  CorrelationTriple viou, mae, kld;  // each metric vs exact IoU
};

CorrelationReport run_correlation(const CorrelationConfig& cfg);

// ---------------------------------------------------------------------------
// Perturbation robustness: rank stability of pixel-level quality vs a
// box-level scalar baseline under matched noise levels.
// ---------------------------------------------------------------------------

struct RobustnessConfig {
  int n_pairs = 1000;
  std::uint64_t seed = 0;
  MetricKind metric = MetricKind::kVolumeIoU;
  BoxGenConfig gen;
  int threads = 1;
};

struct RobustnessRow {
  double fraction = 0;
  double magnitude = 0;
  double spearman_pixel = 0;
  double drop_pixel = 0;
  double spearman_box = 0;
  double drop_box = 0;
};

struct RobustnessReport {
  double base_spearman_pixel = 0;
  double base_spearman_box = 0;
  std::vector<RobustnessRow> rows;
};

inline constexpr std::array<std::pair<double, double>, 4>
    kDefaultPerturbLevels{{{0.0, 0.0}, {0.1, 0.2}, {0.2, 0.3}, {0.3, 0.4}}};

RobustnessReport run_robustness(
    const RobustnessConfig& cfg,
    std::span<const std::pair<double, double>> levels);

}  // namespace obq
