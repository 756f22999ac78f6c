#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "obq/heatmap.hpp"
#include "obq/rng.hpp"

using namespace obq;

TEST_CASE("grid validation and addressing") {
  CHECK_THROWS_AS(Gridd(0, 3, {0, 0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Gridd(3, 3, {0, 0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Gridd(3, 3, {0, 0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(Gridd(4097, 4097, {0, 0}, 1.0), GridCapError);
  CHECK_NOTHROW(Gridd(4097, 4097, {0, 0}, 1.0, std::int64_t{1} << 25));
  const Gridd g(5, 3, {-1.0, 2.0}, 0.5);
  CHECK(g.cells() == 15);
  CHECK(g.pixel_center(0, 0).x() == -1.0);
  CHECK(g.pixel_center(4, 2).x() == doctest::Approx(1.0));
  CHECK(g.pixel_center(4, 2).y() == doctest::Approx(3.0));
  CHECK(g == Gridd(5, 3, {-1.0, 2.0}, 0.5));
  CHECK_FALSE(g == Gridd(5, 3, {-1.0, 2.0}, 0.25));
}

TEST_CASE("gaussian parameters follow the box geometry") {
  const OrientedBoxd b(1, -2, 8, 2, 0.6);
  const GaussianParams<double> gp = gaussian_params(b);
  CHECK(gp.mu.x() == 1.0);
  CHECK(gp.mu.y() == -2.0);
  // Sigma^(1/2) is symmetric with eigenvalues w/4 and h/4.
  CHECK(gp.sigma_sqrt(0, 1) == doctest::Approx(gp.sigma_sqrt(1, 0)));
  CHECK(gp.sigma_sqrt.trace() == doctest::Approx(b.w / 4 + b.h / 4));
  CHECK(gp.sigma_sqrt.determinant() ==
        doctest::Approx((b.w / 4) * (b.h / 4)));
  const Mat2<double> ident = gp.sigma_inverse() * gp.sigma();
  CHECK(ident(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ident(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ident(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  // Axis-aligned box: Sigma^(1/2) is diagonal.
  const GaussianParams<double> flat = gaussian_params(OrientedBoxd(0, 0, 4, 2, 0));
  CHECK(flat.sigma_sqrt(0, 0) == doctest::Approx(1.0));
  CHECK(flat.sigma_sqrt(1, 1) == doctest::Approx(0.5));
  CHECK(flat.sigma_sqrt(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("phi has the closed-form profile inside and is zero outside") {
  const OrientedBoxd b(2, 3, 8, 4, 1.0);
  CHECK(phi(b.center(), b) == 1.0);
  // One quarter-extent along the width axis: exactly exp(-1/2).
  CHECK(phi(b.from_box_frame({b.w / 4, 0.0}), b) ==
        doctest::Approx(0.60653065971263342).epsilon(1e-12));
  // Edge midpoint: exp(-2).
  CHECK(phi(b.from_box_frame({b.w / 2, 0.0}), b) ==
        doctest::Approx(0.1353352832366127).epsilon(1e-12));
  CHECK(phi(b.from_box_frame({b.w / 2 + 1e-3, 0.0}), b) == 0.0);
  // Strictly below 1 anywhere off-center.
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec2<double> uv{rng.uniform(-b.w / 2, b.w / 2),
                          rng.uniform(-b.h / 2, b.h / 2)};
    const double v = phi(b.from_box_frame(uv), b);
    CHECK(v <= 1.0);
    CHECK(v >= 0.0);
    if (uv.norm() > 1e-9) CHECK(v < 1.0);
  }
}

TEST_CASE("phi agrees with the explicit quadratic form") {
  const OrientedBoxd b(-1, 4, 6, 3, -0.8);
  const GaussianParams<double> gp = gaussian_params(b);
  const Mat2<double> prec = gp.sigma_inverse();
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const Vec2<double> p{rng.uniform(-6, 4), rng.uniform(0, 8)};
    if (!contains(b, p)) {
      CHECK(phi(p, b) == 0.0);
      continue;
    }
    const Vec2<double> d = p - gp.mu;
    const double expected = std::exp(-0.5 * d.dot(prec * d));
    CHECK(phi(p, b) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("centerness profile") {
  const OrientedBoxd b(0, 0, 8, 4, 0.5);
  CHECK(centerness(b.center(), b) == doctest::Approx(1.0));
  // Quarter extent along width: ratio 1/3 in x, 1 in y.
  CHECK(centerness(b.from_box_frame({b.w / 4, 0.0}), b) ==
        doctest::Approx(0.57735026918962573).epsilon(1e-12));
  CHECK(centerness(b.from_box_frame({b.w / 2, 0.0}), b) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(centerness(b.from_box_frame({b.w, 0.0}), b) == 0.0);
}

TEST_CASE("global_label is the pointwise max over boxes") {
  const Gridd grid(41, 41, {-20, -20}, 1.0);
  const std::vector<OrientedBoxd> boxes{{-5, 0, 12, 6, 0.2},
                                        {4, 2, 10, 8, -0.7}};
  const Heatmapd h = global_label<double>(boxes, grid);
  for (int iy = 0; iy < grid.height; iy += 3)
    for (int ix = 0; ix < grid.width; ix += 3) {
      const Vec2<double> p = grid.pixel_center(ix, iy);
      const double expected = std::max(phi(p, boxes[0]), phi(p, boxes[1]));
      CHECK(h.at(ix, iy) == doctest::Approx(expected).epsilon(1e-12));
    }
  CHECK_THROWS_AS(
      global_label<double>(std::vector<OrientedBoxd>{}, grid),
      std::invalid_argument);
  // Centerness variant obeys the same composition.
  const Heatmapd hc =
      global_label<double>(boxes, grid, PositionEncoding::kCenterness);
  const Vec2<double> p = grid.pixel_center(18, 20);
  CHECK(hc.at(18, 20) ==
        doctest::Approx(std::max(centerness(p, boxes[0]),
                                 centerness(p, boxes[1]))));
}

TEST_CASE("pixels_in_box enumerates interior pixel centers in row-major order") {
  const Gridd grid(7, 7, {-3, -3}, 1.0);
  const OrientedBoxd b(0, 0, 4, 2, 0);
  const PixelSet ps = pixels_in_box(b, grid);
  // |x| <= 2 and |y| <= 1 on integer centers: 5 x 3 pixels.
  CHECK(ps.size() == 15);
  for (std::size_t i = 1; i < ps.indices.size(); ++i)
    CHECK(ps.indices[i] > ps.indices[i - 1]);
  // Rotating by 90 degrees swaps the roles of the extents.
  const PixelSet ps90 =
      pixels_in_box(OrientedBoxd(0, 0, 4, 2, std::numbers::pi / 2), grid);
  CHECK(ps90.size() == 15);
}

TEST_CASE("localized heatmap and self-encoding only touch the pixel set") {
  const Gridd grid(9, 9, {-4, -4}, 1.0);
  const OrientedBoxd b(0, 0, 5, 3, 0.3);
  std::vector<OrientedBoxd> boxes{b};
  const Heatmapd h = global_label<double>(boxes, grid);
  const PixelSet ps = pixels_in_box(b, grid);
  const Heatmapd h_i = localized_heatmap(h, ps);
  const Heatmapd f_i = self_encoding(b, ps, grid);
  std::int64_t on = 0;
  for (int iy = 0; iy < 9; ++iy)
    for (int ix = 0; ix < 9; ++ix) {
      const std::int64_t k = iy * 9 + ix;
      const bool in_set =
          std::find(ps.indices.begin(), ps.indices.end(), k) !=
          ps.indices.end();
      if (in_set) {
        ++on;
        CHECK(h_i.at(ix, iy) == h.at(ix, iy));
        CHECK(f_i.at(ix, iy) ==
              doctest::Approx(phi(grid.pixel_center(ix, iy), b)));
      } else {
        CHECK(h_i.at(ix, iy) == 0.0);
        CHECK(f_i.at(ix, iy) == 0.0);
      }
    }
  CHECK(on == static_cast<std::int64_t>(ps.size()));
}

TEST_CASE("covering_grid covers every corner with padding") {
  const std::vector<OrientedBoxd> boxes{{0, 0, 10, 4, 0.4}, {8, -3, 6, 6, -1.0}};
  const Gridd g = covering_grid<double>(boxes, 0.5);
  const double x_max = g.origin.x() + g.stride * (g.width - 1);
  const double y_max = g.origin.y() + g.stride * (g.height - 1);
  for (const auto& b : boxes)
    for (const auto& c : corners(b)) {
      CHECK(c.x() > g.origin.x());
      CHECK(c.x() < x_max);
      CHECK(c.y() > g.origin.y());
      CHECK(c.y() < y_max);
    }
  // Symmetric about the requested center.
  const Vec2<double> center{1.0, 2.0};
  const Gridd gs = covering_grid<double>(center, boxes, 0.5);
  CHECK(gs.origin.x() + gs.stride * (gs.width - 1) / 2.0 ==
        doctest::Approx(center.x()).epsilon(1e-12));
  CHECK(gs.origin.y() + gs.stride * (gs.height - 1) / 2.0 ==
        doctest::Approx(center.y()).epsilon(1e-12));
  CHECK_THROWS_AS(covering_grid<double>(std::vector<OrientedBoxd>{}, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(covering_grid<double>(boxes, 1e-4), GridCapError);
}

TEST_CASE("bilinear sampling reproduces bilinear fields exactly") {
  Gridd grid(6, 5, {-1, -2}, 0.5);
  Heatmapd h(grid);
  // v = (2 + 3 ix + 4 iy) / 60 is bilinear in the index coordinates.
  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix)
      h.at(ix, iy) = (2.0 + 3.0 * ix + 4.0 * iy) / 60.0;
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const double fx = rng.uniform(0.0, grid.width - 1.0);
    const double fy = rng.uniform(0.0, grid.height - 1.0);
    const Vec2<double> p = grid.origin + grid.stride * Vec2<double>(fx, fy);
    CHECK(sample(h, p) ==
          doctest::Approx((2.0 + 3.0 * fx + 4.0 * fy) / 60.0).epsilon(1e-12));
  }
  // Pixel centers sample to their stored values, including the far corner.
  CHECK(sample(h, grid.pixel_center(5, 4)) == doctest::Approx(h.at(5, 4)));
  CHECK(sample(h, grid.pixel_center(0, 0)) == doctest::Approx(h.at(0, 0)));
  CHECK_THROWS_AS(sample(h, Vec2<double>{-1.3, -2.0}), std::out_of_range);
  CHECK_THROWS_AS(sample(h, Vec2<double>{10.0, 0.0}), std::out_of_range);
}
