#include <cmath>
#include <random>

#include "afmm/project.hpp"
#include "doctest.h"

using namespace afmm;

namespace {

CubicPatch<2> plane_patch(double a, double b, double c) {
  // field a x + b y + c over the unit cell
  std::array<double, 4> f{}, fx{}, fy{}, fxy{};
  for (int k = 0; k < 4; ++k) {
    const double x = k & 1, y = (k >> 1) & 1;
    f[k] = a * x + b * y + c;
    fx[k] = a;
    fy[k] = b;
  }
  return fit_bicubic(f, fx, fy, fxy, {0.0, 0.0}, 1.0);
}

CubicPatch<2> circle_exp_patch(const Vec<2>& origin, double h) {
  std::array<double, 4> f{}, fx{}, fy{}, fxy{};
  for (int k = 0; k < 4; ++k) {
    const Vec<2> p{origin[0] + h * (k & 1), origin[1] + h * ((k >> 1) & 1)};
    const double e = std::exp(p[0] * p[0] + p[1] * p[1]);
    f[k] = e - std::exp(1.0);
    fx[k] = 2.0 * p[0] * e;
    fy[k] = 2.0 * p[1] * e;
    fxy[k] = 4.0 * p[0] * p[1] * e;
  }
  return fit_bicubic(f, fx, fy, fxy, origin, h);
}

// brute-force distance: root-project a dense lattice of cell points
double brute_force_distance(const CubicPatch<2>& patch, const Vec<2>& x0, int n) {
  double best = 1e300;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec<2> p{patch.origin[0] + patch.h * (i + 0.5) / n,
               patch.origin[1] + patch.h * (j + 0.5) / n};
      const Vec<2> z = detail::root_step<2>(patch, p, 20);
      if (std::abs(patch.value(z)) < 1e-10)
        best = std::min(best, norm<2>(vsub<2>(x0, z)));
    }
  return best;
}

}  // namespace

TEST_CASE("plane projections") {
  auto p1 = plane_patch(1.0, 0.0, -0.3);
  auto r1 = closest_point<2>(p1, {0.5, 0.5});
  CHECK(r1.point[0] == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(r1.point[1] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r1.distance == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(r1.side == 1.0);

  auto p2 = plane_patch(1.0, 1.0, -1.0);
  auto r2 = closest_point<2>(p2, {0.0, 0.0});
  CHECK(r2.point[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r2.point[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r2.distance == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
  CHECK(r2.side == -1.0);
}

TEST_CASE("projection onto the unit-circle patch matches dense sampling") {
  const Vec<2> origin{0.9, 0.3};
  const double h = 0.1;
  auto patch = circle_exp_patch(origin, h);
  const Vec<2> x0 = origin;  // corner node
  auto proj = closest_point<2>(patch, x0);
  const double ref = brute_force_distance(patch, x0, 1000);
  CHECK(std::abs(proj.distance - ref) < 1e-5);
  CHECK(std::abs(patch.value(proj.point)) < 1e-10 * 1.0);
}

TEST_CASE("projection of a point already on the zero set") {
  auto patch = circle_exp_patch({0.9, 0.3}, 0.1);
  // a point on the zero set of the patch
  Vec<2> on = detail::root_step<2>(patch, {0.95, 0.31}, 20);
  REQUIRE(std::abs(patch.value(on)) < 1e-12);
  auto proj = closest_point<2>(patch, on);
  CHECK(proj.distance <= 1e-10 * patch.h);
}

TEST_CASE("projected distance is no larger than brute force on random patches") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  int tested = 0;
  while (tested < 12) {
    // random affine with a mild cubic perturbation; must cross the cell
    const double a = ur(rng), b = ur(rng), c = 0.4 * ur(rng);
    std::array<double, 4> f{}, fx{}, fy{}, fxy{};
    bool pos = false, neg = false;
    for (int k = 0; k < 4; ++k) {
      const double x = k & 1, y = (k >> 1) & 1;
      f[k] = a * x + b * y + c + 0.15 * ur(rng);
      fx[k] = a + 0.2 * ur(rng);
      fy[k] = b + 0.2 * ur(rng);
      fxy[k] = 0.3 * ur(rng);
      (f[k] >= 0.0 ? pos : neg) = true;
    }
    if (!(pos && neg)) continue;
    ++tested;
    auto patch = fit_bicubic(f, fx, fy, fxy, {0.0, 0.0}, 1.0);
    const Vec<2> x0{ur(rng) * 0.5 + 0.5, ur(rng) * 0.5 + 0.5};
    auto proj = closest_point<2>(patch, x0);
    const double ref = brute_force_distance(patch, x0, 32);
    CHECK(proj.distance <= ref + 1e-6);
  }
}

TEST_CASE("sign of the query side is reported") {
  auto patch = plane_patch(1.0, 0.0, -0.3);
  CHECK(closest_point<2>(patch, {0.9, 0.5}).side == 1.0);
  CHECK(closest_point<2>(patch, {0.1, 0.5}).side == -1.0);
}

TEST_CASE("projection at a center of curvature of the contour") {
  // the quadratic field (x-1)^2 + (y-1)^2 - 1/4 is reproduced exactly, so the
  // patch zero set is the circle of radius 0.5 about (1,1); a query at the
  // center makes the stationarity system singular with every contour point
  // equidistant
  std::array<double, 4> f{}, fx{}, fy{}, fxy{};
  for (int k = 0; k < 4; ++k) {
    const Vec<2> p{1.0 * (k & 1), 1.0 * ((k >> 1) & 1)};
    const Vec<2> d{p[0] - 1.0, p[1] - 1.0};
    f[k] = dot<2>(d, d) - 0.25;
    fx[k] = 2.0 * d[0];
    fy[k] = 2.0 * d[1];
    fxy[k] = 0.0;
  }
  auto patch = fit_bicubic(f, fx, fy, fxy, {0.0, 0.0}, 1.0);
  auto proj = closest_point<2>(patch, {1.0, 1.0});
  CHECK(proj.distance == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::abs(patch.value(proj.point)) < 1e-9);

  // slightly off-center the nearest arc point is well defined again
  auto off = closest_point<2>(patch, {1.01, 1.0});
  CHECK(off.distance == doctest::Approx(0.49).epsilon(1e-9));
}
