#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bbmlab/kernels.hpp"

using namespace bbmlab;

TEST_CASE("sphere areas match the classical table", "[kernels]") {
  CHECK(sphere_area(1) == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(sphere_area(2) == Catch::Approx(2 * M_PI).epsilon(1e-14));
  CHECK(sphere_area(3) == Catch::Approx(4 * M_PI).epsilon(1e-14));
  CHECK(sphere_area(4) == Catch::Approx(2 * M_PI * M_PI).epsilon(1e-14));
  CHECK(sphere_area(5) == Catch::Approx(8 * M_PI * M_PI / 3).epsilon(1e-13));
  CHECK_THROWS_AS(sphere_area(0), error);
}

TEST_CASE("kappa special values", "[kernels]") {
  // dimension one: the sphere is two points and the average is exactly 1
  for (double p : {1.0, 1.5, 2.0, 3.0}) CHECK(kappa(1, p) == 1.0);
  // p = 2: sum of coordinate second moments is 1, so each is 1/N
  for (int n = 1; n <= 5; ++n) CHECK(kappa(n, 2) == Catch::Approx(1.0 / n).epsilon(1e-10));
  // planar p = 1: (1/2pi) int |cos| = 2/pi
  CHECK(kappa(2, 1) == Catch::Approx(2 / M_PI).epsilon(1e-10));
  // three dimensions, p = 1: average of |omega_3| over S^2 is 1/2
  CHECK(kappa(3, 1) == Catch::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("kappa monotonicity on a grid", "[kernels]") {
  for (double p : {1.0, 1.5, 2.0, 3.0})
    for (int n = 1; n < 5; ++n) CHECK(kappa(n + 1, p) < kappa(n, p));
  for (int n = 2; n <= 5; ++n) {
    CHECK(kappa(n, 1.5) < kappa(n, 1.0));
    CHECK(kappa(n, 2.0) < kappa(n, 1.5));
    CHECK(kappa(n, 3.0) < kappa(n, 2.0));
  }
  for (int n = 1; n <= 5; ++n)
    for (double p : {1.0, 2.0, 3.0}) {
      CHECK(kappa(n, p) > 0.0);
      CHECK(kappa(n, p) <= 1.0);
    }
}

TEST_CASE("seminorm-limit constant", "[kernels]") {
  // one dimension: sigma_0 = 2, so the constant is 2/p
  CHECK(bbm_limit_constant(1, 1) == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(bbm_limit_constant(1, 2) == Catch::Approx(1.0).epsilon(1e-12));
  // planar values used by the shipped experiments
  CHECK(bbm_limit_constant(2, 2) == Catch::Approx(M_PI / 2).epsilon(1e-10));
  CHECK(bbm_limit_constant(2, 1) == Catch::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("kernel params validation", "[kernels]") {
  KernelParams ok{0.5, 2.0, 1};
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.exponent() == Catch::Approx(2.0));
  CHECK_THROWS_AS((KernelParams{0.0, 2.0, 1}.validate()), error);
  CHECK_THROWS_AS((KernelParams{1.0, 2.0, 1}.validate()), error);
  CHECK_THROWS_AS((KernelParams{0.5, 0.5, 1}.validate()), error);
  CHECK_THROWS_AS((KernelParams{0.5, 2.0, 0}.validate()), error);
}

TEST_CASE("gagliardo kernel values and symmetry", "[kernels]") {
  KernelParams k1{0.5, 2.0, 1};
  CHECK(gagliardo_kernel<1>({0.0}, {1.0}, k1) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(gagliardo_kernel<1>({0.0}, {0.25}, k1) == Catch::Approx(16.0).epsilon(1e-13));
  CHECK_THROWS_AS(gagliardo_kernel<1>({0.3}, {0.3}, k1), error);

  KernelParams k2{0.7, 1.5, 2};
  rng r(901);
  for (int i = 0; i < 200; ++i) {
    Vec<2> x{r.uniform(-2, 2), r.uniform(-2, 2)};
    Vec<2> y{r.uniform(-2, 2), r.uniform(-2, 2)};
    if (x == y) continue;
    REQUIRE(gagliardo_kernel<2>(x, y, k2) == gagliardo_kernel<2>(y, x, k2));  // exact
  }
}

TEST_CASE("mollifier params validation", "[kernels]") {
  CHECK_NOTHROW((MollifierParams{0.1, 2.0, 1.0, 1}.validate()));
  CHECK_THROWS_AS((MollifierParams{0.6, 2.0, 1.0, 1}.validate()), error);  // eps*p >= 1
  CHECK_THROWS_AS((MollifierParams{0.0, 1.0, 1.0, 1}.validate()), error);
  CHECK_THROWS_AS((MollifierParams{0.1, 1.0, 0.0, 1}.validate()), error);
}

TEST_CASE("rho_eps formula values", "[kernels]") {
  // N=1, p=2, eps=0.1, R=1 at |x| = 0.5: 0.1 * 0.5^{-0.8}
  MollifierParams m{0.1, 2.0, 1.0, 1};
  double want = 0.1 * std::pow(0.5, -0.8);
  CHECK(rho_eps<1>({0.5}, m) == Catch::Approx(want).epsilon(1e-14));
  CHECK(want == Catch::Approx(0.174110).margin(5e-7));  // frozen from the formula
  CHECK(rho_eps<1>({1.0}, m) == 0.0);
  CHECK(rho_eps<1>({1.5}, m) == 0.0);
  CHECK_THROWS_AS(rho_eps<1>({0.0}, m), error);
}

TEST_CASE("rho_eps is radial", "[kernels]") {
  MollifierParams m{0.2, 1.0, 1.5, 2};
  rng r(55);
  for (int i = 0; i < 100; ++i) {
    double rad = r.uniform(0.01, 1.4);
    double a1 = r.uniform(0, 2 * M_PI), a2 = r.uniform(0, 2 * M_PI);
    Vec<2> x{rad * std::cos(a1), rad * std::sin(a1)};
    Vec<2> y{rad * std::cos(a2), rad * std::sin(a2)};
    // same radius up to rounding in the trig construction
    CHECK(rho_eps<2>(x, m) == Catch::Approx(rho_eps<2>(y, m)).epsilon(1e-12));
  }
}

TEST_CASE("radial mass agrees with the pointwise profile", "[kernels]") {
  // rho_eps_radial_mass is the stable algebraic form of sigma r^{N-1} rho_eps
  MollifierParams m1{0.1, 2.0, 1.5, 1};
  MollifierParams m2{0.05, 1.0, 2.0, 2};
  rng r(77);
  for (int i = 0; i < 200; ++i) {
    double rad = r.uniform(1e-6, 1.4);
    CHECK(rho_eps_radial_mass(rad, m1) ==
          Catch::Approx(sphere_area(1) * rho_eps<1>(Vec<1>{rad}, m1)).epsilon(1e-13));
    CHECK(rho_eps_radial_mass(rad, m2) ==
          Catch::Approx(sphere_area(2) * rad * rho_eps<2>(Vec<2>{rad, 0.0}, m2)).epsilon(1e-13));
  }
}

TEST_CASE("rho_eps normalization by graded radial quadrature", "[kernels]") {
  // integral over B_R of the radial mass, dyadic panels toward the origin;
  // the grading handles the r^{eps p - 1} singularity to far below 1e-8
  static const gl_rule rule = gauss_legendre(32);
  for (int n : {1, 2})
    for (double p : {1.0, 2.0})
      for (double eps : {0.05, 0.1})
        for (double R : {1.0, 2.0}) {
          MollifierParams m{eps, p, R, n};
          pairwise_sum total;
          double hi = R;
          for (int panel = 0; panel < 640; ++panel) {
            double lo = hi * 0.5;
            total.add(gl_integrate(lo, hi, rule,
                                   [&](double r) { return rho_eps_radial_mass(r, m); }));
            hi = lo;
          }
          REQUIRE(total.total() == Catch::Approx(1.0).margin(1e-9));
        }
}
