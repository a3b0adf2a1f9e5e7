#include "bbmlab/geometry_smooth.hpp"

#include <cmath>

#include <catch2/catch_amalgamated.hpp>

using namespace bbmlab;

namespace {

// signed level function recovered from the public surface: +distance inside,
// -distance outside equals g - t exactly, because boundary_distance is |g - t|
double signed_level(const Domain<2>& d, const Vec<2>& x) {
  double b = d.boundary_distance(x);
  return d.inside(x) ? b : -b;
}

Vec<2> outward_normal(const Domain<2>& d, const Vec<2>& x, double h) {
  Vec<2> n{};
  for (int k = 0; k < 2; ++k) {
    Vec<2> a = x, b = x;
    a[k] += h;
    b[k] -= h;
    n[k] = -(signed_level(d, a) - signed_level(d, b)) / (2 * h);
  }
  double m = std::hypot(n[0], n[1]);
  REQUIRE(m > 0);
  return Vec<2>{n[0] / m, n[1] / m};
}

}  // namespace

TEST_CASE("the smooth inner set sandwiches between inner regions of a disk", "[geometry_smooth]") {
  auto d = make_ball<2>({0, 0}, 1.0);
  auto params = make_inner_params(0.2);
  auto star = smooth_inner_approximation(d, params);
  REQUIRE(star.warning.empty());

  auto inner = omega_lambda(d, params.lambda);
  auto outer = omega_lambda(d, params.lambda / 4);
  rng gen(0xabcdef0123456789ull);
  int in_inner = 0, in_star = 0;
  for (int i = 0; i < 10000; ++i) {
    Vec<2> x = gen.point_in<2>(d.box);
    bool s = star.inside(x);
    if (inner.inside(x)) {
      ++in_inner;
      REQUIRE(s);
    }
    if (s) {
      ++in_star;
      REQUIRE(outer.inside(x));
    }
  }
  // the sample cloud must genuinely exercise both inclusions
  REQUIRE(in_inner > 1000);
  REQUIRE(in_star > in_inner);
}

TEST_CASE("an infeasible lambda returns the flagged empty set", "[geometry_smooth]") {
  auto d = make_ball<2>({0, 0}, 1.0);
  auto star = smooth_inner_approximation(d, make_inner_params(2.0));
  REQUIRE_FALSE(star.warning.empty());
  REQUIRE_FALSE(star.inside(Vec<2>{0, 0}));
  REQUIRE(star.boundary_distance(Vec<2>{0, 0}) == 0.0);
}

TEST_CASE("box corners are rounded into a continuous normal field", "[geometry_smooth]") {
  auto d = make_box<2>({0, 0}, {1, 1});
  auto params = make_inner_params(0.2);
  auto star = smooth_inner_approximation(d, params);
  REQUIRE(star.warning.empty());

  // walk the boundary by bisection along rays from the center; the raw inner
  // square has 90-degree corners, so any surviving corner would flip the
  // normal by a right angle between adjacent rays
  const int rays = 2048;
  const Vec<2> c{0.5, 0.5};
  std::vector<Vec<2>> normals;
  normals.reserve(rays);
  for (int k = 0; k < rays; ++k) {
    double t = 2 * M_PI * (k + 0.5) / rays;
    Vec<2> dir{std::cos(t), std::sin(t)};
    double lo = 0, hi = 0.8;
    for (int it = 0; it < 30; ++it) {
      double mid = 0.5 * (lo + hi);
      Vec<2> x{c[0] + mid * dir[0], c[1] + mid * dir[1]};
      (star.inside(x) ? lo : hi) = mid;
    }
    double r = 0.5 * (lo + hi);
    Vec<2> b{c[0] + r * dir[0], c[1] + r * dir[1]};
    normals.push_back(outward_normal(star, b, params.mollification_width / 4));
  }
  double worst = 1;
  for (int k = 0; k < rays; ++k) {
    const Vec<2>& a = normals[k];
    const Vec<2>& b = normals[(k + 1) % rays];
    worst = std::min(worst, a[0] * b[0] + a[1] * b[1]);
  }
  REQUIRE(worst > std::cos(25.0 * M_PI / 180));

  // and the same sandwich certificate as for the disk
  auto inner = omega_lambda(d, params.lambda);
  auto outer = omega_lambda(d, params.lambda / 4);
  rng gen(0x5151f00dd00f1515ull);
  for (int i = 0; i < 10000; ++i) {
    Vec<2> x = gen.point_in<2>(d.box);
    if (inner.inside(x)) REQUIRE(star.inside(x));
    if (star.inside(x)) REQUIRE(outer.inside(x));
  }
}
