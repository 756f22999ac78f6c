#include "obq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "obq/parallel.hpp"
#include "obq/rng.hpp"
#include "obq/scoring.hpp"

namespace obq {

// ---------------------------------------------------------------------------
// Perturbation
// ---------------------------------------------------------------------------

void PerturbSpec::validate() const {
  if (!(fraction >= 0.0) || !(fraction <= 1.0))
    throw std::invalid_argument("perturbation fraction must lie in [0,1]");
  if (!(magnitude >= 0.0))
    throw std::invalid_argument("perturbation magnitude must be >= 0");
}

void perturb_heatmap(Heatmap<double>& h, const PerturbSpec& spec) {
  spec.validate();
  const std::int64_t n = h.grid.cells();
  const std::int64_t m =
      static_cast<std::int64_t>(std::floor(spec.fraction * n));
  if (m == 0) return;
  Rng rng(spec.seed);
  // Partial Fisher-Yates: the first m slots become a uniform sample without
  // replacement.
  std::vector<std::int64_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  for (std::int64_t j = 0; j < m; ++j)
    std::swap(idx[j], idx[j + static_cast<std::int64_t>(rng.below(
                                  static_cast<std::uint64_t>(n - j)))]);
  double* v = h.values.data();
  for (std::int64_t j = 0; j < m; ++j) {
    const double scaled = v[idx[j]] * (1.0 + rng.sign() * spec.magnitude);
    v[idx[j]] = std::clamp(scaled, 0.0, 1.0);
  }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::kAngle: return "angle";
    case SweepKind::kCenterOffset: return "offset";
    case SweepKind::kAspectRatio: return "aspect";
  }
  throw std::invalid_argument("unknown sweep kind");
}

SweepKind sweep_from_string(const std::string& s) {
  if (s == "angle") return SweepKind::kAngle;
  if (s == "offset") return SweepKind::kCenterOffset;
  if (s == "aspect") return SweepKind::kAspectRatio;
  throw std::invalid_argument("unknown sweep '" + s +
                              "' (angle|offset|aspect)");
}

namespace {

std::pair<double, double> sweep_range(const SweepSpec& spec) {
  double lo, hi;
  switch (spec.kind) {
    case SweepKind::kAngle:
      lo = -std::numbers::pi / 4;
      hi = std::numbers::pi / 4;
      break;
    case SweepKind::kCenterOffset:
      lo = -0.5;
      hi = 0.5;
      break;
    case SweepKind::kAspectRatio:
      lo = 1.0 / 3.0;
      hi = 3.0;
      break;
    default:
      throw std::invalid_argument("unknown sweep kind");
  }
  if (spec.lo) lo = *spec.lo;
  if (spec.hi) hi = *spec.hi;
  return {lo, hi};
}

}  // namespace

void SweepSpec::validate() const {
  if (steps < 1) throw std::invalid_argument("sweep needs at least one step");
  if (!(stride_fraction > 0.0))
    throw std::invalid_argument("sweep stride fraction must be positive");
  const auto [lo_, hi_] = sweep_range(*this);
  if (!(lo_ <= hi_)) throw std::invalid_argument("sweep range is reversed");
  if (kind == SweepKind::kAspectRatio && !(lo_ > 0.0))
    throw std::invalid_argument("aspect sweep range must be positive");
}

double sweep_param(const SweepSpec& spec, int step) {
  if (step < 0 || step >= spec.steps)
    throw std::out_of_range("sweep step out of range");
  const auto [lo, hi] = sweep_range(spec);
  if (spec.steps == 1) return lo;
  const double t = static_cast<double>(step) / (spec.steps - 1);
  if (spec.kind == SweepKind::kAspectRatio)
    return std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  return lo + t * (hi - lo);
}

OrientedBoxd sweep_pred(const SweepSpec& spec, double param) {
  const OrientedBoxd& gt = spec.gt;
  switch (spec.kind) {
    case SweepKind::kAngle:
      return {gt.cx, gt.cy, gt.w, gt.h, gt.theta + param};
    case SweepKind::kCenterOffset: {
      Vec2<double> dir;
      if (spec.offset_direction == OffsetDirection::kWidthAxis)
        dir = gt.width_axis();
      else
        dir = (gt.w * gt.width_axis() + gt.h * gt.height_axis()).normalized();
      const Vec2<double> c = gt.center() + param * gt.w * dir;
      return {c.x(), c.y(), gt.w, gt.h, gt.theta};
    }
    case SweepKind::kAspectRatio:
      if (spec.aspect_mode == AspectMode::kAreaPreserving) {
        const double s = std::sqrt(param);
        return {gt.cx, gt.cy, gt.w * s, gt.h / s, gt.theta};
      }
      return {gt.cx, gt.cy, gt.w * param, gt.h, gt.theta};
  }
  throw std::invalid_argument("unknown sweep kind");
}

namespace {

// All three metric scores of `pred` against the label heatmap built from
// `gt`, plus exact IoU, sharing one pixel set and self-encoding.
void score_against_label(const OrientedBoxd& gt, const OrientedBoxd& pred,
                         const Heatmapd& label, PositionEncoding enc,
                         double gamma, PairQuality& out) {
  PixelSet ps = pixels_in_box(pred, label.grid);
  if (gamma < 1.0) ps = lite_subsample(ps, gamma);
  if (ps.empty())
    throw std::domain_error(
        "prediction covers no pixel centers; refine the grid stride");
  const Heatmapd h_i = localized_heatmap(label, ps);
  const Heatmapd f_i = self_encoding(pred, ps, label.grid, enc);
  out.gt_iou = exact_iou(gt, pred);
  out.q_viou = volume_iou(h_i, f_i, ps);
  out.q_mae = mae_similarity(h_i, f_i, ps);
  out.q_kld = kld_similarity(h_i, f_i, ps);
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads) {
  spec.validate();
  std::vector<SweepRow> rows(spec.steps);
  const double stride =
      spec.stride_fraction * std::min(spec.gt.w, spec.gt.h);
  parallel_for_index(static_cast<std::size_t>(spec.steps), threads,
                     [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.step = static_cast<int>(i);
    row.param = sweep_param(spec, row.step);
    const OrientedBoxd pred = sweep_pred(spec, row.param);
    const std::array<OrientedBoxd, 2> both{spec.gt, pred};
    const Gridd grid =
        covering_grid<double>(spec.gt.center(), both, stride, spec.cell_cap);
    const std::array<OrientedBoxd, 1> gt_only{spec.gt};
    const Heatmapd label = global_label<double>(gt_only, grid, spec.encoding);
    PairQuality q;
    score_against_label(spec.gt, pred, label, spec.encoding, 1.0, q);
    row.gt_iou = q.gt_iou;
    row.q_viou = q.q_viou;
    row.q_mae = q.q_mae;
    row.q_kld = q.q_kld;
  });
  return rows;
}

SweepSummary summarize_sweep(std::span<const SweepRow> rows) {
  if (rows.empty())
    throw std::invalid_argument("cannot summarize an empty sweep");
  SweepSummary s;
  for (const SweepRow& r : rows) {
    s.fid_viou += std::abs(r.q_viou - r.gt_iou);
    s.fid_mae += std::abs(r.q_mae - r.gt_iou);
    s.fid_kld += std::abs(r.q_kld - r.gt_iou);
  }
  const double n = static_cast<double>(rows.size());
  s.fid_viou /= n;
  s.fid_mae /= n;
  s.fid_kld /= n;
  return s;
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

void BoxGenConfig::validate() const {
  if (!(w_min > 0.0) || !(w_max >= w_min) || !(h_min > 0.0) ||
      !(h_max >= h_min))
    throw std::invalid_argument("box generator extent ranges are invalid");
  if (!(center_jitter >= 0.0) || !(log_scale_jitter >= 0.0) ||
      !(angle_jitter >= 0.0))
    throw std::invalid_argument("box generator jitters must be >= 0");
  if (!(stride_divisor > 0.0))
    throw std::invalid_argument("box generator stride divisor must be > 0");
}

BoxPair make_pair(const BoxGenConfig& gen, std::uint64_t seed) {
  Rng rng(seed);
  const double w = rng.uniform(gen.w_min, gen.w_max);
  const double h = rng.uniform(gen.h_min, gen.h_max);
  const double theta =
      rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
  const double dx = rng.uniform(-gen.center_jitter, gen.center_jitter) * w;
  const double dy = rng.uniform(-gen.center_jitter, gen.center_jitter) * h;
  const double sw =
      w * std::exp(rng.uniform(-gen.log_scale_jitter, gen.log_scale_jitter));
  const double sh =
      h * std::exp(rng.uniform(-gen.log_scale_jitter, gen.log_scale_jitter));
  const double dth = rng.uniform(-gen.angle_jitter, gen.angle_jitter);
  return {OrientedBoxd(0.0, 0.0, w, h, theta),
          OrientedBoxd(dx, dy, sw, sh, theta + dth)};
}

std::vector<BoxPair> make_pairs(const BoxGenConfig& gen, int n,
                                std::uint64_t seed) {
  gen.validate();
  if (n < 1) throw std::invalid_argument("ensemble needs at least one pair");
  std::vector<BoxPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    pairs.push_back(make_pair(gen, mix_seed(seed, static_cast<std::uint64_t>(i))));
  return pairs;
}

namespace {

double pair_stride(const BoxPair& pair, const BoxGenConfig& gen) {
  const double min_extent = std::min({pair.gt.w, pair.gt.h, pair.pred.w,
                                      pair.pred.h});
  return min_extent / gen.stride_divisor;
}

Heatmapd pair_label(const BoxPair& pair, const BoxGenConfig& gen) {
  const std::array<OrientedBoxd, 2> both{pair.gt, pair.pred};
  const Gridd grid = covering_grid<double>(pair.gt.center(), both,
                                           pair_stride(pair, gen),
                                           gen.cell_cap);
  const std::array<OrientedBoxd, 1> gt_only{pair.gt};
  return global_label<double>(gt_only, grid);
}

}  // namespace

PairQuality score_pair(const BoxPair& pair, const BoxGenConfig& gen,
                       double gamma, const PerturbSpec* perturb) {
  gen.validate();
  Heatmapd label = pair_label(pair, gen);
  if (perturb) perturb_heatmap(label, *perturb);
  PairQuality q;
  score_against_label(pair.gt, pair.pred, label, PositionEncoding::kGaussian,
                      gamma, q);
  return q;
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

CorrelationReport run_correlation(const CorrelationConfig& cfg) {
  if (!(cfg.gamma > 0.0) || !(cfg.gamma <= 1.0))
    throw std::invalid_argument("correlation gamma must lie in (0,1]");
  const std::vector<BoxPair> pairs =
      make_pairs(cfg.gen, cfg.n_pairs, cfg.seed ^ seed_tag::kCorrelation);
  CorrelationReport rep;
  rep.samples.resize(pairs.size());
  parallel_for_index(pairs.size(), cfg.threads, [&](std::size_t i) {
    rep.samples[i] = score_pair(pairs[i], cfg.gen, cfg.gamma);
  });
  std::vector<double> iou(pairs.size()), qv(pairs.size()), qm(pairs.size()),
      qk(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    iou[i] = rep.samples[i].gt_iou;
    qv[i] = rep.samples[i].q_viou;
    qm[i] = rep.samples[i].q_mae;
    qk[i] = rep.samples[i].q_kld;
  }
  rep.viou = correlate(qv, iou);
  rep.mae = correlate(qm, iou);
  rep.kld = correlate(qk, iou);
  return rep;
}

// ---------------------------------------------------------------------------
// Robustness
// ---------------------------------------------------------------------------

RobustnessReport run_robustness(
    const RobustnessConfig& cfg,
    std::span<const std::pair<double, double>> levels) {
  if (levels.empty())
    throw std::invalid_argument("robustness needs at least one noise level");
  const std::vector<BoxPair> pairs =
      make_pairs(cfg.gen, cfg.n_pairs, cfg.seed ^ seed_tag::kCorrelation);
  const std::size_t n = pairs.size();
  std::vector<double> iou(n), q_base(n);
  std::vector<std::vector<double>> q_pert(levels.size(),
                                          std::vector<double>(n));
  parallel_for_index(n, cfg.threads, [&](std::size_t i) {
    const BoxPair& pair = pairs[i];
    const Heatmapd label = pair_label(pair, cfg.gen);
    PixelSet ps = pixels_in_box(pair.pred, label.grid);
    if (ps.empty())
      throw std::domain_error(
          "prediction covers no pixel centers; refine the grid stride");
    const Heatmapd f_i = self_encoding(pair.pred, ps, label.grid);
    iou[i] = exact_iou(pair.gt, pair.pred);
    {
      const Heatmapd h_i = localized_heatmap(label, ps);
      q_base[i] = integrate(h_i, f_i, ps, cfg.metric);
    }
    for (std::size_t r = 0; r < levels.size(); ++r) {
      Heatmapd noisy = label;
      const PerturbSpec spec{
          levels[r].first, levels[r].second,
          mix_seed(cfg.seed ^ seed_tag::kPerturb,
                   (static_cast<std::uint64_t>(r) << 32) |
                       static_cast<std::uint64_t>(i))};
      perturb_heatmap(noisy, spec);
      const Heatmapd h_i = localized_heatmap(noisy, ps);
      q_pert[r][i] = integrate(h_i, f_i, ps, cfg.metric);
    }
  });
  RobustnessReport rep;
  rep.base_spearman_pixel = spearman(q_base, iou);
  rep.base_spearman_box = spearman(iou, iou);
  rep.rows.resize(levels.size());
  for (std::size_t r = 0; r < levels.size(); ++r) {
    RobustnessRow& row = rep.rows[r];
    row.fraction = levels[r].first;
    row.magnitude = levels[r].second;
    row.spearman_pixel = spearman(q_pert[r], iou);
    row.drop_pixel = rep.base_spearman_pixel - row.spearman_pixel;
    // Box-level baseline: the same noise applied to the scalar IoU itself.
    std::vector<double> noisy_iou = iou;
    const std::int64_t m = static_cast<std::int64_t>(
        std::floor(levels[r].first * static_cast<double>(n)));
    if (m > 0) {
      Rng rng(mix_seed(cfg.seed ^ seed_tag::kBoxArm,
                       static_cast<std::uint64_t>(r)));
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::int64_t j = 0; j < m; ++j)
        std::swap(idx[j],
                  idx[j + static_cast<std::size_t>(rng.below(
                              static_cast<std::uint64_t>(n - j)))]);
      for (std::int64_t j = 0; j < m; ++j) {
        double& v = noisy_iou[idx[j]];
        v = std::clamp(v * (1.0 + rng.sign() * levels[r].second), 0.0, 1.0);
      }
    }
    row.spearman_box = spearman(noisy_iou, iou);
    row.drop_box = rep.base_spearman_box - row.spearman_box;
  }
  return rep;
}

}  // namespace obq
