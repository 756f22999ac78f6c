#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "obq/rng.hpp"

namespace obq {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

// Extents below this are rejected at construction; downstream code may divide
// by w and h freely.
inline constexpr double kMinBoxExtent = 1e-6;

// Slack for boundary-inclusive point-in-box tests.
inline constexpr double kContainsSlack = 1e-9;

// Tolerance for collinearity / duplicate-vertex pruning in polygon clipping.
inline constexpr double kClipEps = 1e-9;

// Wraps an angle into [-pi/2, pi/2). A rectangle is invariant under a
// half-turn, so this canonical range preserves the meaning of w and h.
template <typename Scalar>
Scalar normalize_half_angle(Scalar theta) {
  const Scalar pi = static_cast<Scalar>(std::numbers::pi);
  Scalar t = std::fmod(theta + pi / 2, pi);
  if (t < 0) t += pi;
  return t - pi / 2;
}

// Oriented rectangle: center (cx, cy), full extents w x h, rotation theta
// (radians, counterclockwise, canonicalized to [-pi/2, pi/2)). An optional
// classification score in [0,1] may ride along.
template <typename Scalar>
struct OrientedBox {
  Scalar cx{}, cy{}, w{}, h{}, theta{};
  std::optional<Scalar> score{};

  OrientedBox(Scalar cx_, Scalar cy_, Scalar w_, Scalar h_, Scalar theta_,
              std::optional<Scalar> score_ = std::nullopt)
      : cx(cx_),
        cy(cy_),
        w(w_),
        h(h_),
        theta(normalize_half_angle(theta_)),
        score(score_) {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(theta_))
      throw std::invalid_argument("box parameters must be finite");
    if (!(w >= static_cast<Scalar>(kMinBoxExtent)) ||
        !(h >= static_cast<Scalar>(kMinBoxExtent)) || !std::isfinite(w) ||
        !std::isfinite(h))
      throw std::invalid_argument("box extents must be at least 1e-6");
    if (score && !(*score >= Scalar(0) && *score <= Scalar(1)))
      throw std::invalid_argument("box score must lie in [0,1]");
  }

  Vec2<Scalar> center() const { return {cx, cy}; }
  Scalar area() const { return w * h; }

  // Unit direction of the width edge in world coordinates.
  Vec2<Scalar> width_axis() const {
    return {std::cos(theta), std::sin(theta)};
  }
  // Unit direction of the height edge in world coordinates.
  Vec2<Scalar> height_axis() const {
    return {-std::sin(theta), std::cos(theta)};
  }

  // World point -> box frame (u along width, v along height, origin at
  // center).
  Vec2<Scalar> to_box_frame(const Vec2<Scalar>& p) const {
    const Vec2<Scalar> d = p - center();
    return {d.dot(width_axis()), d.dot(height_axis())};
  }

  Vec2<Scalar> from_box_frame(const Vec2<Scalar>& uv) const {
    return center() + uv.x() * width_axis() + uv.y() * height_axis();
  }
};

using OrientedBoxd = OrientedBox<double>;

// Boundary-inclusive containment with a small absolute slack, so points
// produced by clipping against the box's own edges still count as inside.
template <typename Scalar>
bool contains(const OrientedBox<Scalar>& box, const Vec2<Scalar>& p) {
  const Vec2<Scalar> uv = box.to_box_frame(p);
  const Scalar slack = static_cast<Scalar>(kContainsSlack);
  return std::abs(uv.x()) <= box.w / 2 + slack &&
         std::abs(uv.y()) <= box.h / 2 + slack;
}

// Convex polygon with counterclockwise vertices. Degenerate (< 3 vertices)
// polygons are legal and have zero area.
template <typename Scalar>
struct ConvexPolygon {
  std::vector<Vec2<Scalar>> vertices;

  // Shoelace formula; positive for counterclockwise order.
  Scalar area() const {
    const std::size_t n = vertices.size();
    if (n < 3) return Scalar(0);
    Scalar twice = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2<Scalar>& a = vertices[i];
      const Vec2<Scalar>& b = vertices[(i + 1) % n];
      twice += a.x() * b.y() - b.x() * a.y();
    }
    return twice / 2;
  }

  // Area-weighted centroid; falls back to the vertex mean when the polygon
  // has (numerically) no area.
  Vec2<Scalar> centroid() const {
    const std::size_t n = vertices.size();
    if (n == 0) throw std::invalid_argument("centroid of empty polygon");
    const Scalar a = area();
    if (std::abs(a) < static_cast<Scalar>(kClipEps)) {
      Vec2<Scalar> m = Vec2<Scalar>::Zero();
      for (const auto& v : vertices) m += v;
      return m / static_cast<Scalar>(n);
    }
    Vec2<Scalar> c = Vec2<Scalar>::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2<Scalar>& p = vertices[i];
      const Vec2<Scalar>& q = vertices[(i + 1) % n];
      const Scalar cross = p.x() * q.y() - q.x() * p.y();
      c += (p + q) * cross;
    }
    return c / (6 * a);
  }
};

// Corner order: (-w/2,-h/2), (w/2,-h/2), (w/2,h/2), (-w/2,h/2) in the box
// frame, i.e. counterclockwise in a y-up world frame.
template <typename Scalar>
std::array<Vec2<Scalar>, 4> corners(const OrientedBox<Scalar>& box) {
  const Scalar hw = box.w / 2, hh = box.h / 2;
  return {box.from_box_frame({-hw, -hh}), box.from_box_frame({hw, -hh}),
          box.from_box_frame({hw, hh}), box.from_box_frame({-hw, hh})};
}

template <typename Scalar>
ConvexPolygon<Scalar> to_polygon(const OrientedBox<Scalar>& box) {
  const auto c = corners(box);
  return {{c.begin(), c.end()}};
}

namespace detail {

// Removes consecutive duplicates and collinear middle vertices; tolerances
// scale with coordinate magnitude so large desk-scale coordinates behave.
template <typename Scalar>
void prune_degenerate_vertices(std::vector<Vec2<Scalar>>& v) {
  const Scalar eps = static_cast<Scalar>(kClipEps);
  // Duplicate removal first.
  std::vector<Vec2<Scalar>> out;
  out.reserve(v.size());
  for (const auto& p : v) {
    if (out.empty()) {
      out.push_back(p);
      continue;
    }
    const Scalar scale = std::max<Scalar>(
        Scalar(1), std::max(out.back().template lpNorm<Eigen::Infinity>(),
                            p.template lpNorm<Eigen::Infinity>()));
    if ((p - out.back()).template lpNorm<Eigen::Infinity>() > eps * scale)
      out.push_back(p);
  }
  while (out.size() > 1) {
    const Scalar scale = std::max<Scalar>(
        Scalar(1), std::max(out.front().template lpNorm<Eigen::Infinity>(),
                            out.back().template lpNorm<Eigen::Infinity>()));
    if ((out.front() - out.back()).template lpNorm<Eigen::Infinity>() >
        eps * scale)
      break;
    out.pop_back();
  }
  // Collinear middle vertices.
  if (out.size() > 2) {
    std::vector<Vec2<Scalar>> kept;
    kept.reserve(out.size());
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2<Scalar>& prev = out[(i + n - 1) % n];
      const Vec2<Scalar>& cur = out[i];
      const Vec2<Scalar>& next = out[(i + 1) % n];
      const Vec2<Scalar> e1 = cur - prev, e2 = next - cur;
      const Scalar cross = e1.x() * e2.y() - e1.y() * e2.x();
      const Scalar scale =
          std::max<Scalar>(Scalar(1), e1.norm() * e2.norm());
      if (std::abs(cross) > eps * scale) kept.push_back(cur);
    }
    if (kept.size() >= 3) out = std::move(kept);
  }
  v = std::move(out);
}

}  // namespace detail

// Sutherland-Hodgman clipping of convex `subject` against convex `clip`.
// Both inputs must be counterclockwise; the result is counterclockwise too.
template <typename Scalar>
ConvexPolygon<Scalar> intersect(const ConvexPolygon<Scalar>& subject,
                                const ConvexPolygon<Scalar>& clip) {
  if (subject.vertices.size() < 3 || clip.vertices.size() < 3) return {};
  std::vector<Vec2<Scalar>> poly = subject.vertices;
  const std::size_t m = clip.vertices.size();
  for (std::size_t e = 0; e < m && !poly.empty(); ++e) {
    const Vec2<Scalar>& a = clip.vertices[e];
    const Vec2<Scalar>& b = clip.vertices[(e + 1) % m];
    const Vec2<Scalar> ab = b - a;
    // Signed "inside" threshold proportional to edge length, i.e. a fixed
    // perpendicular-distance tolerance.
    const Scalar thr = -static_cast<Scalar>(kClipEps) *
                       std::max<Scalar>(Scalar(1), ab.norm());
    std::vector<Vec2<Scalar>> next;
    next.reserve(poly.size() + 4);
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2<Scalar>& cur = poly[i];
      const Vec2<Scalar>& nxt = poly[(i + 1) % n];
      const Scalar d_cur =
          ab.x() * (cur.y() - a.y()) - ab.y() * (cur.x() - a.x());
      const Scalar d_nxt =
          ab.x() * (nxt.y() - a.y()) - ab.y() * (nxt.x() - a.x());
      const bool in_cur = d_cur >= thr, in_nxt = d_nxt >= thr;
      if (in_cur) next.push_back(cur);
      if (in_cur != in_nxt) {
        Scalar t = d_cur / (d_cur - d_nxt);
        t = std::clamp<Scalar>(t, Scalar(0), Scalar(1));
        next.push_back(cur + t * (nxt - cur));
      }
    }
    poly = std::move(next);
  }
  detail::prune_degenerate_vertices(poly);
  if (poly.size() < 3) return {};
  return {std::move(poly)};
}

// Exact IoU of two oriented boxes via polygon clipping. Clamped to [0,1];
// exactly 0 for disjoint boxes.
template <typename Scalar>
Scalar exact_iou(const OrientedBox<Scalar>& a, const OrientedBox<Scalar>& b) {
  const Scalar inter = intersect(to_polygon(a), to_polygon(b)).area();
  if (!(inter > Scalar(0))) return Scalar(0);
  const Scalar uni = a.area() + b.area() - inter;
  return std::min<Scalar>(inter / uni, Scalar(1));
}

// Monte Carlo IoU estimate: uniform samples over the union's bounding box,
// counting in-both vs in-either hits. Used as an independent check on
// exact_iou, not as a production path.
template <typename Scalar>
Scalar mc_iou(const OrientedBox<Scalar>& a, const OrientedBox<Scalar>& b,
              std::uint64_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("mc_iou needs n_samples >= 1");
  Vec2<Scalar> lo = Vec2<Scalar>::Constant(std::numeric_limits<Scalar>::max());
  Vec2<Scalar> hi = Vec2<Scalar>::Constant(std::numeric_limits<Scalar>::lowest());
  for (const auto& box : {a, b})
    for (const auto& c : corners(box)) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  Rng rng(seed);
  std::uint64_t in_both = 0, in_either = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const Vec2<Scalar> p{
        static_cast<Scalar>(rng.uniform(lo.x(), hi.x())),
        static_cast<Scalar>(rng.uniform(lo.y(), hi.y()))};
    const bool ia = contains(a, p), ib = contains(b, p);
    in_both += ia && ib;
    in_either += ia || ib;
  }
  if (in_either == 0) return Scalar(0);
  return static_cast<Scalar>(in_both) / static_cast<Scalar>(in_either);
}

}  // namespace obq
