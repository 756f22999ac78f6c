#include "obq/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "obq/consistency.hpp"

namespace obq {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line,
                            const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

double require_number(const json& obj, const char* key,
                      const std::string& path, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end())
    fail_line(path, line, std::string("missing required key '") + key + "'");
  if (!it->is_number())
    fail_line(path, line, std::string("key '") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Boxes JSONL
// ---------------------------------------------------------------------------

std::vector<BoxRecord> read_boxes_jsonl(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<BoxRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(path, line_no, e.what());
    }
    if (!obj.is_object()) fail_line(path, line_no, "expected a JSON object");
    const double cx = require_number(obj, "cx", path, line_no);
    const double cy = require_number(obj, "cy", path, line_no);
    const double w = require_number(obj, "w", path, line_no);
    const double h = require_number(obj, "h", path, line_no);
    const double theta = require_number(obj, "theta", path, line_no);
    std::optional<double> score;
    if (const auto it = obj.find("score"); it != obj.end()) {
      if (!it->is_number())
        fail_line(path, line_no, "key 'score' must be a number");
      score = it->get<double>();
    }
    json id = nullptr;
    if (const auto it = obj.find("id"); it != obj.end()) {
      if (!it->is_string() && !it->is_number())
        fail_line(path, line_no, "key 'id' must be a string or number");
      id = *it;
    }
    try {
      records.push_back({OrientedBoxd(cx, cy, w, h, theta, score), id});
    } catch (const std::invalid_argument& e) {
      fail_line(path, line_no, e.what());
    }
  }
  return records;
}

void write_boxes_jsonl(const std::string& path,
                       std::span<const BoxRecord> records) {
  std::ofstream out = open_out(path);
  for (const BoxRecord& r : records) {
    json obj{{"cx", r.box.cx}, {"cy", r.box.cy}, {"w", r.box.w},
             {"h", r.box.h},   {"theta", r.box.theta}};
    if (r.box.score) obj["score"] = *r.box.score;
    if (!r.id.is_null()) obj["id"] = r.id;
    out << obj.dump() << '\n';
  }
  finish_out(out, path);
}

std::vector<OrientedBoxd> boxes_of(std::span<const BoxRecord> records) {
  std::vector<OrientedBoxd> boxes;
  boxes.reserve(records.size());
  for (const BoxRecord& r : records) boxes.push_back(r.box);
  return boxes;
}

// ---------------------------------------------------------------------------
// Heatmap CSV / PGM
// ---------------------------------------------------------------------------

Heatmap<double> read_heatmap_csv(const std::string& path,
                                 std::int64_t cell_cap) {
  std::ifstream in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) fail_line(path, 1, "missing header line");
  std::replace(header.begin(), header.end(), ',', ' ');
  std::istringstream hs(header);
  long long w = 0, hgt = 0;
  double ox = 0, oy = 0, stride = 0;
  std::string extra;
  if (!(hs >> w >> hgt >> ox >> oy >> stride) || (hs >> extra))
    fail_line(path, 1,
              "header must be 'width,height,origin_x,origin_y,stride'");
  if (w <= 0 || hgt <= 0 || w > INT32_MAX || hgt > INT32_MAX)
    fail_line(path, 1, "grid dimensions must be positive integers");
  Heatmap<double> hm;
  try {
    hm = Heatmap<double>(Grid<double>(static_cast<int>(w),
                                      static_cast<int>(hgt), {ox, oy}, stride,
                                      cell_cap));
  } catch (const std::invalid_argument& e) {
    fail_line(path, 1, e.what());
  }
  const std::int64_t n = hm.grid.cells();
  std::int64_t k = 0;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double v;
    while (ls >> v) {
      if (k >= n)
        fail_line(path, line_no,
                  "more than width*height values (" + std::to_string(n) + ")");
      if (!(v >= 0.0) || !(v <= 1.0))
        fail_line(path, line_no,
                  "heatmap value " + format_g9(v) + " outside [0,1]");
      hm.values.data()[k++] = v;
    }
    if (!ls.eof()) fail_line(path, line_no, "malformed numeric value");
  }
  if (k != n)
    throw ParseError(path + ": expected " + std::to_string(n) +
                     " values, found " + std::to_string(k));
  return hm;
}

void write_field_csv(const std::string& path, const Grid<double>& grid,
                     const DenseField<double>& values) {
  if (values.rows() != grid.height || values.cols() != grid.width)
    throw std::invalid_argument("field shape does not match its grid");
  std::ofstream out = open_out(path);
  out << grid.width << ',' << grid.height << ',' << format_g9(grid.origin.x())
      << ',' << format_g9(grid.origin.y()) << ',' << format_g9(grid.stride)
      << '\n';
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      if (ix) out << ',';
      out << format_g9(values(iy, ix));
    }
    out << '\n';
  }
  finish_out(out, path);
}

void write_heatmap_csv(const std::string& path, const Heatmap<double>& h) {
  write_field_csv(path, h.grid, h.values);
}

void write_heatmap_pgm(const std::string& path, const Heatmap<double>& h) {
  std::ofstream out = open_out(path, /*binary=*/true);
  out << "P5\n" << h.grid.width << ' ' << h.grid.height << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(h.grid.width) * 2);
  for (int iy = 0; iy < h.grid.height; ++iy) {
    for (int ix = 0; ix < h.grid.width; ++ix) {
      const double v = std::clamp(h.values(iy, ix), 0.0, 1.0);
      const auto s = static_cast<unsigned>(std::lround(v * 65535.0));
      row[2 * ix] = static_cast<unsigned char>(s >> 8);
      row[2 * ix + 1] = static_cast<unsigned char>(s & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  finish_out(out, path);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

void write_quality_jsonl(const std::string& path,
                         std::span<const ScoreOutcome> outcomes,
                         std::span<const BoxRecord> records,
                         std::span<const double> gt_iou) {
  if (outcomes.size() != records.size())
    throw std::invalid_argument("outcomes and records differ in length");
  if (!gt_iou.empty() && gt_iou.size() != outcomes.size())
    throw std::invalid_argument("gt_iou and outcomes differ in length");
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const ScoreOutcome& o = outcomes[i];
    json obj;
    obj["box_id"] = records[i].id.is_null()
                        ? json(static_cast<std::int64_t>(i))
                        : records[i].id;
    if (o.report) {
      obj["q"] = o.report->q;
      obj["metric"] = to_string(o.report->metric);
      obj["lite_bypass"] = o.report->lite_bypass;
      if (o.report->cls) obj["cls"] = *o.report->cls;
      if (o.report->cq) obj["cq"] = *o.report->cq;
      if (!gt_iou.empty()) obj["gt_iou"] = gt_iou[i];
    } else {
      obj["error"] = o.error;
    }
    out << obj.dump() << '\n';
  }
  finish_out(out, path);
}

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
  std::ofstream out = open_out(path);
  out << "step,param_value,gt_iou,q_viou,q_mae,q_kld\n";
  for (const SweepRow& r : rows)
    out << r.step << ',' << format_g9(r.param) << ',' << format_g9(r.gt_iou)
        << ',' << format_g9(r.q_viou) << ',' << format_g9(r.q_mae) << ','
        << format_g9(r.q_kld) << '\n';
  finish_out(out, path);
}

void write_correlation_csv(const std::string& path,
                           std::span<const PairQuality> samples) {
  std::ofstream out = open_out(path);
  out << "pair,gt_iou,q_viou,q_mae,q_kld\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    out << i << ',' << format_g9(samples[i].gt_iou) << ','
        << format_g9(samples[i].q_viou) << ',' << format_g9(samples[i].q_mae)
        << ',' << format_g9(samples[i].q_kld) << '\n';
  finish_out(out, path);
}

void write_robustness_csv(const std::string& path,
                          const RobustnessReport& report) {
  std::ofstream out = open_out(path);
  out << "fraction,magnitude,spearman_pixel,drop_pixel,spearman_box,drop_box\n";
  for (const RobustnessRow& r : report.rows)
    out << format_g9(r.fraction) << ',' << format_g9(r.magnitude) << ','
        << format_g9(r.spearman_pixel) << ',' << format_g9(r.drop_pixel)
        << ',' << format_g9(r.spearman_box) << ',' << format_g9(r.drop_box)
        << '\n';
  finish_out(out, path);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish_out(out, path);
}

}  // namespace obq
