// obq: oriented-box localization-quality assessment tool.
//
// Subcommands build Gaussian position heatmaps from oriented boxes, score
// boxes against heatmaps, evaluate the label-dependent loss, and run the
// sweep / correlation / robustness studies. Every output file is accompanied
// by `<output>.manifest.json` recording the command line, seed, version,
// input digests and timestamp.
//
// Exit codes: 0 success, 2 invalid input, 3 grid cell cap exceeded,
// 4 strict-mode violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "obq/consistency.hpp"
#include "obq/experiments.hpp"
#include "obq/geometry.hpp"
#include "obq/heatmap.hpp"
#include "obq/io.hpp"
#include "obq/loss.hpp"
#include "obq/manifest.hpp"
#include "obq/rng.hpp"
#include "obq/scoring.hpp"
#include "obq/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitGridCap = 3;
constexpr int kExitStrict = 4;

// Options shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  std::int64_t grid_cap = obq::kDefaultGridCellCap;
  std::string command_line;
};

std::int64_t grid_cap_from_env() {
  if (const char* env = std::getenv("OBQ_GRID_CAP"); env && *env) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end == env || *end != '\0' || v <= 0)
      throw std::invalid_argument("OBQ_GRID_CAP must be a positive integer");
    return v;
  }
  return obq::kDefaultGridCellCap;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Base RNG seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (results are identical for any value)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--grid-cap", c.grid_cap,
                  "Maximum grid cells (default 2^24; env OBQ_GRID_CAP overrides)");
}

obq::RunManifest make_manifest(const Common& c,
                               const std::vector<std::string>& inputs) {
  obq::RunManifest m;
  m.command_line = c.command_line;
  m.seed = c.seed;
  m.version = std::string(obq::kVersion);
  for (const std::string& path : inputs)
    m.inputs.emplace_back(path, obq::sha256_file_hex(path));
  m.timestamp = obq::iso8601_utc_now();
  return m;
}

obq::PositionEncoding encoding_from_string(const std::string& s) {
  if (s == "gaussian") return obq::PositionEncoding::kGaussian;
  if (s == "centerness") return obq::PositionEncoding::kCenterness;
  throw std::invalid_argument("unknown encoding '" + s +
                              "' (gaussian|centerness)");
}

obq::OrientedBoxd parse_box_arg(const std::string& s) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string tok =
        s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse box component '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (v.size() != 5)
    throw std::invalid_argument("box must be 'cx,cy,w,h,theta'");
  return {v[0], v[1], v[2], v[3], v[4]};
}

std::vector<std::pair<double, double>> parse_levels(const std::string& s) {
  std::vector<std::pair<double, double>> levels;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string tok =
        s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    const std::size_t colon = tok.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("noise level '" + tok +
                                  "' is not 'fraction:magnitude'");
    try {
      levels.emplace_back(std::stod(tok.substr(0, colon)),
                          std::stod(tok.substr(colon + 1)));
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse noise level '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (levels.empty())
    throw std::invalid_argument("at least one noise level is required");
  return levels;
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

struct HeatmapArgs {
  Common common;
  std::string boxes_path, out_path, pgm_path, encoding = "gaussian";
  double stride = 0;           // absolute, exclusive with fraction
  double stride_fraction = 0;  // of the smallest box extent
};

int run_heatmap(const HeatmapArgs& a) {
  const auto records = obq::read_boxes_jsonl(a.boxes_path);
  if (records.empty())
    throw obq::ParseError(a.boxes_path + ": no boxes to rasterize");
  const auto boxes = obq::boxes_of(records);
  double min_extent = std::numeric_limits<double>::max();
  for (const auto& b : boxes)
    min_extent = std::min({min_extent, b.w, b.h});
  double stride = a.stride;
  if (stride <= 0) {
    const double f = a.stride_fraction > 0 ? a.stride_fraction : 1.0 / 30.0;
    stride = f * min_extent;
  }
  const obq::Gridd grid =
      obq::covering_grid<double>(boxes, stride, a.common.grid_cap);
  const obq::Heatmapd h = obq::global_label<double>(
      boxes, grid, encoding_from_string(a.encoding));
  const obq::RunManifest m = make_manifest(a.common, {a.boxes_path});
  obq::write_heatmap_csv(a.out_path, h);
  obq::write_manifest_alongside(a.out_path, m);
  if (!a.pgm_path.empty()) {
    obq::write_heatmap_pgm(a.pgm_path, h);
    obq::write_manifest_alongside(a.pgm_path, m);
  }
  std::cout << "wrote " << a.out_path << " (" << grid.width << "x"
            << grid.height << " @ " << obq::format_g9(stride) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

struct ScoreArgs {
  Common common;
  std::string boxes_path, heatmap_path, out_path, gt_path;
  std::string metric = "viou", encoding = "gaussian";
  bool lite = false;
  std::size_t top_k = 1500;
  double gamma = 0.5;
  bool strict = false;
};

int run_score(const ScoreArgs& a) {
  const auto records = obq::read_boxes_jsonl(a.boxes_path);
  const obq::Heatmapd h =
      obq::read_heatmap_csv(a.heatmap_path, a.common.grid_cap);
  const auto boxes = obq::boxes_of(records);
  obq::ScoreOptions opts;
  opts.metric = obq::metric_from_string(a.metric);
  opts.encoding = encoding_from_string(a.encoding);
  opts.threads = a.common.threads;
  if (a.lite) opts.lite = obq::LiteConfig{a.top_k, a.gamma};
  const auto outcomes = obq::score_boxes(boxes, h, opts);
  std::vector<std::string> inputs = {a.boxes_path, a.heatmap_path};
  std::vector<double> gt_iou;
  if (!a.gt_path.empty()) {
    inputs.push_back(a.gt_path);
    const auto gt_records = obq::read_boxes_jsonl(a.gt_path);
    if (gt_records.empty())
      throw obq::ParseError(a.gt_path + ": no ground-truth boxes");
    gt_iou.resize(boxes.size(), 0.0);
    for (std::size_t i = 0; i < boxes.size(); ++i)
      for (const auto& gt : gt_records)
        gt_iou[i] = std::max(gt_iou[i], obq::exact_iou(boxes[i], gt.box));
  }
  obq::write_quality_jsonl(a.out_path, outcomes, records, gt_iou);
  obq::write_manifest_alongside(a.out_path, make_manifest(a.common, inputs));
  std::size_t failed = 0;
  for (const auto& o : outcomes)
    if (!o.report) ++failed;
  std::cout << "scored " << outcomes.size() - failed << "/" << outcomes.size()
            << " boxes -> " << a.out_path << "\n";
  if (failed > 0 && a.strict) {
    std::cerr << "error: " << failed << " box(es) failed to score\n";
    return kExitStrict;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// iou
// ---------------------------------------------------------------------------

struct IouArgs {
  Common common;
  std::string a_path, b_path, out_path;
  std::uint64_t mc_samples = 0;
};

int run_iou(const IouArgs& a) {
  const auto recs_a = obq::read_boxes_jsonl(a.a_path);
  const auto recs_b = obq::read_boxes_jsonl(a.b_path);
  if (recs_a.size() != recs_b.size())
    throw obq::ParseError("box files differ in length (" +
                          std::to_string(recs_a.size()) + " vs " +
                          std::to_string(recs_b.size()) + ")");
  if (recs_a.empty()) throw obq::ParseError(a.a_path + ": no boxes");
  std::ostringstream body;
  body << (a.mc_samples > 0 ? "index,exact_iou,mc_iou\n" : "index,exact_iou\n");
  for (std::size_t i = 0; i < recs_a.size(); ++i) {
    const double exact = obq::exact_iou(recs_a[i].box, recs_b[i].box);
    body << i << ',' << obq::format_g9(exact);
    if (a.mc_samples > 0) {
      const double mc = obq::mc_iou(
          recs_a[i].box, recs_b[i].box, a.mc_samples,
          obq::mix_seed(a.common.seed ^ obq::seed_tag::kMcIou, i));
      body << ',' << obq::format_g9(mc);
    }
    body << '\n';
  }
  if (a.out_path.empty()) {
    std::cout << body.str();
    return kExitOk;
  }
  std::ofstream out(a.out_path);
  if (!out)
    throw std::runtime_error("cannot open '" + a.out_path + "' for writing");
  out << body.str();
  out.flush();
  if (!out) throw std::runtime_error("failed while writing '" + a.out_path + "'");
  obq::write_manifest_alongside(a.out_path,
                                make_manifest(a.common, {a.a_path, a.b_path}));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

struct LossArgs {
  Common common;
  std::string pred_path, label_path, out_path, grad_path;
  double alpha = 0.25, beta = 2.0, lambda = 1.5;
  bool literal = false;
};

int run_loss(const LossArgs& a) {
  const obq::Heatmapd pred =
      obq::read_heatmap_csv(a.pred_path, a.common.grid_cap);
  const obq::Heatmapd label =
      obq::read_heatmap_csv(a.label_path, a.common.grid_cap);
  obq::LossConfig cfg;
  cfg.alpha = a.alpha;
  cfg.beta = a.beta;
  cfg.lambda = a.lambda;
  cfg.negative_branch = a.literal ? obq::NegativeBranch::kLiteral
                                  : obq::NegativeBranch::kFocal;
  const double loss = obq::ld_loss(pred, label, cfg);
  const nlohmann::json result{{"loss", loss},
                              {"lambda", cfg.lambda},
                              {"weighted_loss", cfg.lambda * loss},
                              {"negative_branch",
                               a.literal ? "literal" : "focal"}};
  std::cout << result.dump() << "\n";
  const obq::RunManifest m =
      make_manifest(a.common, {a.pred_path, a.label_path});
  if (!a.out_path.empty()) {
    obq::write_json(a.out_path, result);
    obq::write_manifest_alongside(a.out_path, m);
  }
  if (!a.grad_path.empty()) {
    const obq::DenseField<double> g = obq::ld_loss_gradient(pred, label, cfg);
    obq::write_field_csv(a.grad_path, pred.grid, g);
    obq::write_manifest_alongside(a.grad_path, m);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  Common common;
  std::string kind = "angle", out_path;
  std::string gt = "0,0,100,50,0";
  int steps = 41;
  std::optional<double> lo, hi;
  double stride_fraction = 0.02;
  std::string offset_dir = "diag", aspect_mode = "height";
  std::string encoding = "gaussian";
};

int run_sweep_cmd(const SweepArgs& a) {
  obq::SweepSpec spec;
  spec.kind = obq::sweep_from_string(a.kind);
  spec.gt = parse_box_arg(a.gt);
  spec.steps = a.steps;
  spec.lo = a.lo;
  spec.hi = a.hi;
  spec.stride_fraction = a.stride_fraction;
  if (a.offset_dir == "diag")
    spec.offset_direction = obq::OffsetDirection::kDiagonal;
  else if (a.offset_dir == "width")
    spec.offset_direction = obq::OffsetDirection::kWidthAxis;
  else
    throw std::invalid_argument("unknown offset direction '" + a.offset_dir +
                                "' (diag|width)");
  if (a.aspect_mode == "height")
    spec.aspect_mode = obq::AspectMode::kHeightPreserving;
  else if (a.aspect_mode == "area")
    spec.aspect_mode = obq::AspectMode::kAreaPreserving;
  else
    throw std::invalid_argument("unknown aspect mode '" + a.aspect_mode +
                                "' (height|area)");
  spec.encoding = encoding_from_string(a.encoding);
  spec.cell_cap = a.common.grid_cap;
  const auto rows = obq::run_sweep(spec, a.common.threads);
  const auto summary = obq::summarize_sweep(rows);
  obq::write_sweep_csv(a.out_path, rows);
  const nlohmann::json sidecar{
      {"kind", obq::to_string(spec.kind)},
      {"gt", {{"cx", spec.gt.cx}, {"cy", spec.gt.cy}, {"w", spec.gt.w},
              {"h", spec.gt.h}, {"theta", spec.gt.theta}}},
      {"steps", spec.steps},
      {"lo", rows.front().param},
      {"hi", rows.back().param},
      {"stride_fraction", spec.stride_fraction},
      {"offset_direction", a.offset_dir},
      {"aspect_mode", a.aspect_mode},
      {"encoding", a.encoding},
      {"mean_abs_dev",
       {{"viou", summary.fid_viou}, {"mae", summary.fid_mae},
        {"kld", summary.fid_kld}}}};
  obq::write_json(a.out_path + ".spec.json", sidecar);
  obq::write_manifest_alongside(a.out_path, make_manifest(a.common, {}));
  std::cout << "sweep " << obq::to_string(spec.kind) << ": mean |Q - IoU| "
            << "viou=" << obq::format_g9(summary.fid_viou)
            << " mae=" << obq::format_g9(summary.fid_mae)
            << " kld=" << obq::format_g9(summary.fid_kld) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// correlate
// ---------------------------------------------------------------------------

struct CorrelateArgs {
  Common common;
  std::string out_path;
  int n_pairs = 500;
  double gamma = 1.0;
};

int run_correlate(const CorrelateArgs& a) {
  obq::CorrelationConfig cfg;
  cfg.n_pairs = a.n_pairs;
  cfg.seed = a.common.seed;
  cfg.gamma = a.gamma;
  cfg.gen.cell_cap = a.common.grid_cap;
  cfg.threads = a.common.threads;
  const auto rep = obq::run_correlation(cfg);
  obq::write_correlation_csv(a.out_path, rep.samples);
  const auto triple_json = [](const obq::CorrelationTriple& t) {
    return nlohmann::json{{"pearson", t.pearson},
                          {"spearman", t.spearman},
                          {"kendall_tau", t.kendall_tau},
                          {"degenerate", t.degenerate}};
  };
  const nlohmann::json sidecar{{"n_pairs", cfg.n_pairs},
                               {"seed", cfg.seed},
                               {"gamma", cfg.gamma},
                               {"metrics",
                                {{"viou", triple_json(rep.viou)},
                                 {"mae", triple_json(rep.mae)},
                                 {"kld", triple_json(rep.kld)}}}};
  obq::write_json(a.out_path + ".spec.json", sidecar);
  obq::write_manifest_alongside(a.out_path, make_manifest(a.common, {}));
  std::cout << "correlate n=" << cfg.n_pairs
            << ": spearman viou=" << obq::format_g9(rep.viou.spearman)
            << " mae=" << obq::format_g9(rep.mae.spearman)
            << " kld=" << obq::format_g9(rep.kld.spearman) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// robustness
// ---------------------------------------------------------------------------

struct RobustnessArgs {
  Common common;
  std::string out_path;
  int n_pairs = 1000;
  std::string metric = "viou";
  std::string levels = "0:0,0.1:0.2,0.2:0.3,0.3:0.4";
};

int run_robustness_cmd(const RobustnessArgs& a) {
  obq::RobustnessConfig cfg;
  cfg.n_pairs = a.n_pairs;
  cfg.seed = a.common.seed;
  cfg.metric = obq::metric_from_string(a.metric);
  cfg.gen.cell_cap = a.common.grid_cap;
  cfg.threads = a.common.threads;
  const auto levels = parse_levels(a.levels);
  const auto rep = obq::run_robustness(cfg, levels);
  obq::write_robustness_csv(a.out_path, rep);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"fraction", r.fraction},
                    {"magnitude", r.magnitude},
                    {"spearman_pixel", r.spearman_pixel},
                    {"drop_pixel", r.drop_pixel},
                    {"spearman_box", r.spearman_box},
                    {"drop_box", r.drop_box}});
  const nlohmann::json sidecar{{"n_pairs", cfg.n_pairs},
                               {"seed", cfg.seed},
                               {"metric", a.metric},
                               {"base_spearman_pixel", rep.base_spearman_pixel},
                               {"base_spearman_box", rep.base_spearman_box},
                               {"rows", rows}};
  obq::write_json(a.out_path + ".spec.json", sidecar);
  obq::write_manifest_alongside(a.out_path, make_manifest(a.common, {}));
  std::cout << "robustness n=" << cfg.n_pairs << " over " << rep.rows.size()
            << " noise levels -> " << a.out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pixel-level localization-quality assessment for oriented boxes"};
  app.set_version_flag("--version", std::string(obq::kVersion));
  app.require_subcommand(1);

  HeatmapArgs ha;
  CLI::App* heatmap = app.add_subcommand(
      "heatmap", "Rasterize a global position heatmap from boxes");
  add_common(heatmap, ha.common);
  heatmap->add_option("--boxes", ha.boxes_path, "Boxes JSONL")->required();
  heatmap->add_option("--out", ha.out_path, "Output heatmap CSV")->required();
  heatmap->add_option("--pgm", ha.pgm_path, "Optional 16-bit PGM rendering");
  heatmap->add_option("--encoding", ha.encoding,
                      "Position encoding (gaussian|centerness)")
      ->capture_default_str();
  auto* stride_opt =
      heatmap->add_option("--stride", ha.stride, "Grid stride (world units)");
  heatmap->add_option("--stride-fraction", ha.stride_fraction,
                      "Grid stride as a fraction of the smallest box extent "
                      "(default 1/30)")
      ->excludes(stride_opt);

  ScoreArgs sa;
  CLI::App* score = app.add_subcommand(
      "score", "Score boxes against a heatmap (full or lite path)");
  add_common(score, sa.common);
  score->add_option("--boxes", sa.boxes_path, "Boxes JSONL")->required();
  score->add_option("--heatmap", sa.heatmap_path, "Heatmap CSV")->required();
  score->add_option("--out", sa.out_path, "Output quality JSONL")->required();
  score->add_option("--gt", sa.gt_path,
                    "Ground-truth boxes JSONL; attaches gt_iou (max IoU over "
                    "ground truth) to each report");
  score->add_option("--metric", sa.metric, "Consistency metric (viou|mae|kld)")
      ->capture_default_str();
  score->add_option("--encoding", sa.encoding,
                    "Position encoding (gaussian|centerness)")
      ->capture_default_str();
  auto* lite_flag = score->add_flag(
      "--lite", sa.lite, "Fast path: full integration only for the top-k "
                         "boxes, over a gamma-fraction pixel subsample");
  score->add_option("--top-k", sa.top_k, "Lite: boxes given full integration")
      ->needs(lite_flag)
      ->capture_default_str();
  score->add_option("--gamma", sa.gamma, "Lite: pixel subsample fraction")
      ->needs(lite_flag)
      ->capture_default_str();
  score->add_flag("--strict", sa.strict,
                  "Exit 4 if any box fails to score");

  IouArgs ia;
  CLI::App* iou = app.add_subcommand(
      "iou", "Exact (and optionally Monte Carlo) IoU of paired boxes");
  add_common(iou, ia.common);
  iou->add_option("--a", ia.a_path, "First boxes JSONL")->required();
  iou->add_option("--b", ia.b_path, "Second boxes JSONL (same length)")
      ->required();
  iou->add_option("--out", ia.out_path, "Output CSV (stdout when omitted)");
  iou->add_option("--mc", ia.mc_samples,
                  "Also estimate IoU with this many Monte Carlo samples");

  LossArgs la;
  CLI::App* loss = app.add_subcommand(
      "loss", "Label-dependent loss of a predicted heatmap against a label");
  add_common(loss, la.common);
  loss->add_option("--pred", la.pred_path, "Prediction heatmap CSV")
      ->required();
  loss->add_option("--label", la.label_path, "Label heatmap CSV")->required();
  loss->add_option("--out", la.out_path, "Optional JSON result file");
  loss->add_option("--grad-out", la.grad_path,
                   "Optional gradient field CSV (d loss / d prediction)");
  loss->add_option("--alpha", la.alpha, "Positive/negative balance in (0,1)")
      ->capture_default_str();
  loss->add_option("--beta", la.beta, "Negative-branch focusing power")
      ->capture_default_str();
  loss->add_option("--lambda", la.lambda, "Loss weight")
      ->capture_default_str();
  loss->add_flag("--ld-literal", la.literal,
                 "Use the literal negative branch -(1-a)(1-x)^b log(x) "
                 "instead of the focal-consistent default");

  SweepArgs wa;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Degrade one GT box along a parameter and track Q vs IoU");
  add_common(sweep, wa.common);
  sweep->add_option("--kind", wa.kind, "Sweep kind (angle|offset|aspect)")
      ->capture_default_str();
  sweep->add_option("--out", wa.out_path, "Output CSV")->required();
  sweep->add_option("--gt", wa.gt, "GT box 'cx,cy,w,h,theta'")
      ->capture_default_str();
  sweep->add_option("--steps", wa.steps, "Number of steps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  double lo_val = 0, hi_val = 0;
  auto* lo_opt = sweep->add_option("--lo", lo_val, "Range start");
  auto* hi_opt = sweep->add_option("--hi", hi_val, "Range end");
  sweep->add_option("--stride-fraction", wa.stride_fraction,
                    "Grid stride as a fraction of min(gt.w, gt.h)")
      ->capture_default_str();
  sweep->add_option("--offset-dir", wa.offset_dir,
                    "Offset sweep direction (diag|width)")
      ->capture_default_str();
  sweep->add_option("--aspect-mode", wa.aspect_mode,
                    "Aspect sweep mode (height|area)")
      ->capture_default_str();
  sweep->add_option("--encoding", wa.encoding,
                    "Position encoding (gaussian|centerness)")
      ->capture_default_str();

  CorrelateArgs ca;
  CLI::App* correlate = app.add_subcommand(
      "correlate", "Correlation of each metric with exact IoU on a synthetic "
                   "ensemble");
  add_common(correlate, ca.common);
  correlate->add_option("--out", ca.out_path, "Output CSV")->required();
  correlate->add_option("--n", ca.n_pairs, "Ensemble size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  correlate->add_option("--gamma", ca.gamma,
                        "Pixel subsample fraction in (0,1]")
      ->capture_default_str();

  RobustnessArgs ra;
  CLI::App* robustness = app.add_subcommand(
      "robustness", "Rank stability under heatmap noise vs a box-level "
                    "scalar baseline");
  add_common(robustness, ra.common);
  robustness->add_option("--out", ra.out_path, "Output CSV")->required();
  robustness->add_option("--n", ra.n_pairs, "Ensemble size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  robustness->add_option("--metric", ra.metric,
                         "Consistency metric (viou|mae|kld)")
      ->capture_default_str();
  robustness->add_option("--levels", ra.levels,
                         "Noise levels 'fraction:magnitude,...'")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  const std::string command_line = obq::command_line_of(argc, argv);
  try {
    std::int64_t env_cap = grid_cap_from_env();
    const auto finish_common = [&](Common& c, CLI::App* cmd) {
      c.command_line = command_line;
      if (cmd->count("--grid-cap") == 0) c.grid_cap = env_cap;
      if (c.grid_cap <= 0)
        throw std::invalid_argument("--grid-cap must be positive");
    };
    if (heatmap->parsed()) {
      finish_common(ha.common, heatmap);
      return run_heatmap(ha);
    }
    if (score->parsed()) {
      finish_common(sa.common, score);
      return run_score(sa);
    }
    if (iou->parsed()) {
      finish_common(ia.common, iou);
      return run_iou(ia);
    }
    if (loss->parsed()) {
      finish_common(la.common, loss);
      return run_loss(la);
    }
    if (sweep->parsed()) {
      finish_common(wa.common, sweep);
      if (lo_opt->count()) wa.lo = lo_val;
      if (hi_opt->count()) wa.hi = hi_val;
      return run_sweep_cmd(wa);
    }
    if (correlate->parsed()) {
      finish_common(ca.common, correlate);
      return run_correlate(ca);
    }
    if (robustness->parsed()) {
      finish_common(ra.common, robustness);
      return run_robustness_cmd(ra);
    }
    std::cerr << "error: no subcommand\n";
    return kExitInput;
  } catch (const obq::GridCapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGridCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
