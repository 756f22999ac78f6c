#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "obq/experiments.hpp"
#include "obq/geometry.hpp"
#include "obq/heatmap.hpp"
#include "obq/scoring.hpp"

namespace obq {

// Malformed input files (syntax, schema, or value violations). Messages
// carry the path and 1-based line where applicable.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One line of a boxes JSONL file: the box plus an optional caller-supplied
// identifier (string or number; null when absent).
struct BoxRecord {
  OrientedBoxd box;
  nlohmann::json id = nullptr;
};

// JSONL with objects {cx, cy, w, h, theta[, score][, id]}. Blank lines are
// skipped. Numbers round-trip bit-exactly through write_boxes_jsonl.
std::vector<BoxRecord> read_boxes_jsonl(const std::string& path);
void write_boxes_jsonl(const std::string& path,
                       std::span<const BoxRecord> records);

std::vector<OrientedBoxd> boxes_of(std::span<const BoxRecord> records);

// Heatmap CSV: header line `width,height,origin_x,origin_y,stride`, then
// width*height values in row-major order (any comma/newline layout on read;
// one grid row per line on write), each formatted %.9g. Values must lie in
// [0,1] on read.
Heatmap<double> read_heatmap_csv(const std::string& path,
                                 std::int64_t cell_cap = kDefaultGridCellCap);
void write_heatmap_csv(const std::string& path, const Heatmap<double>& h);
// Same layout for fields that are not confined to [0,1] (e.g. gradients).
void write_field_csv(const std::string& path, const Grid<double>& grid,
                     const DenseField<double>& values);

// 16-bit binary PGM (P5, big-endian samples, values scaled by 65535) for
// quick visual inspection; not a round-trip format.
void write_heatmap_pgm(const std::string& path, const Heatmap<double>& h);

// Quality reports, one JSON object per box in input order. `box_id` is the
// record's id when given, the 0-based input index otherwise; `gt_iou` is
// attached when provided (same length as outcomes). Failed boxes carry an
// `error` field instead of scores.
void write_quality_jsonl(const std::string& path,
                         std::span<const ScoreOutcome> outcomes,
                         std::span<const BoxRecord> records,
                         std::span<const double> gt_iou = {});

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows);
void write_correlation_csv(const std::string& path,
                           std::span<const PairQuality> samples);
void write_robustness_csv(const std::string& path,
                          const RobustnessReport& report);

void write_json(const std::string& path, const nlohmann::json& j);

// %.9g, the numeric format shared by every CSV this tool writes.
std::string format_g9(double v);

}  // namespace obq
