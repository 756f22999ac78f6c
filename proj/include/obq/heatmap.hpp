#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "obq/geometry.hpp"

namespace obq {

// Thrown when a requested grid would exceed the configured cell cap.
class GridCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kDefaultGridCellCap = std::int64_t{1} << 24;

// Uniform pixel grid. Pixel (ix, iy) has world-space center
// origin + stride * (ix, iy); ix runs along x (width), iy along y (height).
template <typename Scalar>
struct Grid {
  int width = 0;
  int height = 0;
  Vec2<Scalar> origin = Vec2<Scalar>::Zero();
  Scalar stride = Scalar(1);

  Grid() = default;
  Grid(int width_, int height_, const Vec2<Scalar>& origin_, Scalar stride_,
       std::int64_t cell_cap = kDefaultGridCellCap)
      : width(width_), height(height_), origin(origin_), stride(stride_) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("grid dimensions must be positive");
    if (!(stride > Scalar(0)) || !std::isfinite(stride))
      throw std::invalid_argument("grid stride must be positive");
    if (!origin.allFinite())
      throw std::invalid_argument("grid origin must be finite");
    if (cells() > cell_cap)
      throw GridCapError("grid of " + std::to_string(cells()) +
                         " cells exceeds cap of " + std::to_string(cell_cap));
  }

  std::int64_t cells() const {
    return static_cast<std::int64_t>(width) * height;
  }

  Vec2<Scalar> pixel_center(int ix, int iy) const {
    return origin + stride * Vec2<Scalar>(static_cast<Scalar>(ix),
                                          static_cast<Scalar>(iy));
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width == b.width && a.height == b.height &&
           a.origin.x() == b.origin.x() && a.origin.y() == b.origin.y() &&
           a.stride == b.stride;
  }
};

using Gridd = Grid<double>;

// Row-major dense field indexed (iy, ix); row-major order matches the
// serialization order of every on-disk format.
template <typename Scalar>
using DenseField =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct Heatmap {
  Grid<Scalar> grid;
  DenseField<Scalar> values;  // shape (grid.height, grid.width), values in [0,1]

  Heatmap() = default;
  explicit Heatmap(const Grid<Scalar>& g)
      : grid(g), values(DenseField<Scalar>::Zero(g.height, g.width)) {}

  Scalar at(int ix, int iy) const { return values(iy, ix); }
  Scalar& at(int ix, int iy) { return values(iy, ix); }
};

using Heatmapd = Heatmap<double>;

// A subset of grid pixels, stored as flat row-major indices (iy * width + ix)
// in strictly increasing order, which both deduplicates and makes every
// accumulation over the set order-deterministic.
struct PixelSet {
  std::vector<std::int64_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

// Gaussian parameters induced by a box: mean at the center and
// Sigma^(1/2) = U diag(w/4, h/4) U^T with U the rotation by theta.
template <typename Scalar>
struct GaussianParams {
  Vec2<Scalar> mu = Vec2<Scalar>::Zero();
  Mat2<Scalar> sigma_sqrt = Mat2<Scalar>::Identity();

  Mat2<Scalar> sigma() const { return sigma_sqrt * sigma_sqrt; }

  // Closed-form 2x2 inverse; Sigma is positive definite by construction.
  Mat2<Scalar> sigma_inverse() const {
    const Mat2<Scalar> s = sigma();
    const Scalar det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    Mat2<Scalar> inv;
    inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    return inv / det;
  }
};

template <typename Scalar>
GaussianParams<Scalar> gaussian_params(const OrientedBox<Scalar>& box) {
  const Scalar c = std::cos(box.theta), s = std::sin(box.theta);
  Mat2<Scalar> u;
  u << c, -s, s, c;
  Mat2<Scalar> lambda;
  lambda << box.w / 4, Scalar(0), Scalar(0), box.h / 4;
  return {box.center(), u * lambda * u.transpose()};
}

// Positional score of point p under the box's Gaussian, zero outside the box.
// Computed in the box frame, where the quadratic form diagonalizes; equals
// exp(-0.5 (p-mu)^T Sigma^{-1} (p-mu)) inside the box.
template <typename Scalar>
Scalar phi(const Vec2<Scalar>& p, const OrientedBox<Scalar>& box) {
  if (!contains(box, p)) return Scalar(0);
  const Vec2<Scalar> uv = box.to_box_frame(p);
  const Scalar qu = uv.x() / (box.w / 4);
  const Scalar qv = uv.y() / (box.h / 4);
  return std::exp(Scalar(-0.5) * (qu * qu + qv * qv));
}

// FCOS-style centerness of p inside the box, zero outside: the geometric mean
// of the min/max side-distance ratios along each box axis.
template <typename Scalar>
Scalar centerness(const Vec2<Scalar>& p, const OrientedBox<Scalar>& box) {
  if (!contains(box, p)) return Scalar(0);
  const Vec2<Scalar> uv = box.to_box_frame(p);
  const Scalar l = std::max<Scalar>(Scalar(0), box.w / 2 + uv.x());
  const Scalar r = std::max<Scalar>(Scalar(0), box.w / 2 - uv.x());
  const Scalar t = std::max<Scalar>(Scalar(0), box.h / 2 - uv.y());
  const Scalar b = std::max<Scalar>(Scalar(0), box.h / 2 + uv.y());
  const Scalar rx = std::min(l, r) / std::max(l, r);
  const Scalar ry = std::min(t, b) / std::max(t, b);
  return std::sqrt(rx * ry);
}

enum class PositionEncoding { kGaussian, kCenterness };

template <typename Scalar>
Scalar position_score(const Vec2<Scalar>& p, const OrientedBox<Scalar>& box,
                      PositionEncoding enc) {
  return enc == PositionEncoding::kGaussian ? phi(p, box)
                                            : centerness(p, box);
}

namespace detail {

// Inclusive index bounds of the pixels whose centers can fall inside the
// box's axis-aligned hull; clamped to the grid. x1 < x0 means no overlap.
template <typename Scalar>
struct IndexBounds {
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

template <typename Scalar>
IndexBounds<Scalar> box_index_bounds(const OrientedBox<Scalar>& box,
                                     const Grid<Scalar>& grid) {
  Vec2<Scalar> lo = Vec2<Scalar>::Constant(std::numeric_limits<Scalar>::max());
  Vec2<Scalar> hi =
      Vec2<Scalar>::Constant(std::numeric_limits<Scalar>::lowest());
  for (const auto& c : corners(box)) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  const Scalar slack = static_cast<Scalar>(kContainsSlack);
  IndexBounds<Scalar> b;
  b.x0 = std::max(
      0, static_cast<int>(std::ceil((lo.x() - grid.origin.x()) / grid.stride -
                                    slack)));
  b.x1 = std::min(
      grid.width - 1,
      static_cast<int>(std::floor((hi.x() - grid.origin.x()) / grid.stride +
                                  slack)));
  b.y0 = std::max(
      0, static_cast<int>(std::ceil((lo.y() - grid.origin.y()) / grid.stride -
                                    slack)));
  b.y1 = std::min(
      grid.height - 1,
      static_cast<int>(std::floor((hi.y() - grid.origin.y()) / grid.stride +
                                  slack)));
  return b;
}

}  // namespace detail

// Global position label: the pointwise max of each box's positional encoding
// over the grid. At least one box is required.
template <typename Scalar>
Heatmap<Scalar> global_label(std::span<const OrientedBox<Scalar>> boxes,
                             const Grid<Scalar>& grid,
                             PositionEncoding enc = PositionEncoding::kGaussian) {
  if (boxes.empty())
    throw std::invalid_argument("global_label requires at least one box");
  Heatmap<Scalar> out(grid);
  for (const auto& box : boxes) {
    const auto b = detail::box_index_bounds(box, grid);
    for (int iy = b.y0; iy <= b.y1; ++iy)
      for (int ix = b.x0; ix <= b.x1; ++ix) {
        const Scalar v = position_score(grid.pixel_center(ix, iy), box, enc);
        if (v > out.values(iy, ix)) out.values(iy, ix) = v;
      }
  }
  return out;
}

// Per-box self-encoding restricted to a pixel set: F_i of the quality metric,
// zero off the set and outside the box.
template <typename Scalar>
Heatmap<Scalar> self_encoding(const OrientedBox<Scalar>& box,
                              const PixelSet& ps, const Grid<Scalar>& grid,
                              PositionEncoding enc = PositionEncoding::kGaussian) {
  Heatmap<Scalar> out(grid);
  for (const std::int64_t k : ps.indices) {
    const int iy = static_cast<int>(k / grid.width);
    const int ix = static_cast<int>(k % grid.width);
    out.values(iy, ix) = position_score(grid.pixel_center(ix, iy), box, enc);
  }
  return out;
}

// Restriction of a heatmap to a pixel set (H_i of the quality metric): values
// kept on the set, zero elsewhere.
template <typename Scalar>
Heatmap<Scalar> localized_heatmap(const Heatmap<Scalar>& h, const PixelSet& ps) {
  Heatmap<Scalar> out(h.grid);
  for (const std::int64_t k : ps.indices) {
    const int iy = static_cast<int>(k / h.grid.width);
    const int ix = static_cast<int>(k % h.grid.width);
    out.values(iy, ix) = h.values(iy, ix);
  }
  return out;
}

// Pixels whose centers lie inside the box (boundary-inclusive), in row-major
// order.
template <typename Scalar>
PixelSet pixels_in_box(const OrientedBox<Scalar>& box,
                       const Grid<Scalar>& grid) {
  PixelSet ps;
  const auto b = detail::box_index_bounds(box, grid);
  for (int iy = b.y0; iy <= b.y1; ++iy)
    for (int ix = b.x0; ix <= b.x1; ++ix)
      if (contains(box, grid.pixel_center(ix, iy)))
        ps.indices.push_back(static_cast<std::int64_t>(iy) * grid.width + ix);
  return ps;
}

// Smallest grid of the given stride that covers every box with one stride of
// padding, laid out symmetrically about `center` so that mirror-symmetric box
// configurations rasterize mirror-symmetrically.
template <typename Scalar>
Grid<Scalar> covering_grid(const Vec2<Scalar>& center,
                           std::span<const OrientedBox<Scalar>> boxes,
                           Scalar stride,
                           std::int64_t cell_cap = kDefaultGridCellCap) {
  if (boxes.empty())
    throw std::invalid_argument("covering_grid requires at least one box");
  if (!(stride > Scalar(0)))
    throw std::invalid_argument("covering_grid requires a positive stride");
  Vec2<Scalar> ext = Vec2<Scalar>::Zero();
  for (const auto& box : boxes)
    for (const auto& c : corners(box))
      ext = ext.cwiseMax((c - center).cwiseAbs());
  const int nx = static_cast<int>(std::ceil((ext.x() + stride) / stride));
  const int ny = static_cast<int>(std::ceil((ext.y() + stride) / stride));
  const Vec2<Scalar> origin = center - stride * Vec2<Scalar>(
                                             static_cast<Scalar>(nx),
                                             static_cast<Scalar>(ny));
  return Grid<Scalar>(2 * nx + 1, 2 * ny + 1, origin, stride, cell_cap);
}

// As above, centered on the midpoint of the boxes' joint bounding box.
template <typename Scalar>
Grid<Scalar> covering_grid(std::span<const OrientedBox<Scalar>> boxes,
                           Scalar stride,
                           std::int64_t cell_cap = kDefaultGridCellCap) {
  if (boxes.empty())
    throw std::invalid_argument("covering_grid requires at least one box");
  Vec2<Scalar> lo = Vec2<Scalar>::Constant(std::numeric_limits<Scalar>::max());
  Vec2<Scalar> hi =
      Vec2<Scalar>::Constant(std::numeric_limits<Scalar>::lowest());
  for (const auto& box : boxes)
    for (const auto& c : corners(box)) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  return covering_grid<Scalar>((lo + hi) / 2, boxes, stride, cell_cap);
}

// Bilinear sample of the heatmap at a world point. Points outside the grid's
// pixel-center hull (beyond a tiny slack) are an error; the result is clamped
// to [0,1].
template <typename Scalar>
Scalar sample(const Heatmap<Scalar>& h, const Vec2<Scalar>& p) {
  const Scalar fx = (p.x() - h.grid.origin.x()) / h.grid.stride;
  const Scalar fy = (p.y() - h.grid.origin.y()) / h.grid.stride;
  const Scalar slack = static_cast<Scalar>(kContainsSlack);
  if (fx < -slack || fx > Scalar(h.grid.width - 1) + slack || fy < -slack ||
      fy > Scalar(h.grid.height - 1) + slack || !std::isfinite(fx) ||
      !std::isfinite(fy))
    throw std::out_of_range("sample point lies outside the heatmap grid");
  const Scalar cx = std::clamp<Scalar>(fx, Scalar(0), Scalar(h.grid.width - 1));
  const Scalar cy =
      std::clamp<Scalar>(fy, Scalar(0), Scalar(h.grid.height - 1));
  const int x0 = std::min(static_cast<int>(cx), h.grid.width - 1);
  const int y0 = std::min(static_cast<int>(cy), h.grid.height - 1);
  const int x1 = std::min(x0 + 1, h.grid.width - 1);
  const int y1 = std::min(y0 + 1, h.grid.height - 1);
  const Scalar wx = cx - static_cast<Scalar>(x0);
  const Scalar wy = cy - static_cast<Scalar>(y0);
  const Scalar v0 =
      (1 - wx) * h.values(y0, x0) + wx * h.values(y0, x1);
  const Scalar v1 =
      (1 - wx) * h.values(y1, x0) + wx * h.values(y1, x1);
  return std::clamp<Scalar>((1 - wy) * v0 + wy * v1, Scalar(0), Scalar(1));
}

}  // namespace obq
