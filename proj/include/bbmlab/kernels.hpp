#pragma once

// Scalar ingredients: sphere areas, the sphere-average constant kappa(N,p),
// the classical seminorm-limit constant, the singular pair kernel, and the
// normalized radial mollifier family rho_eps.

#include <cmath>

#include "bbmlab/core.hpp"

namespace bbmlab {

// sigma_{N-1} = surface measure of the unit sphere in R^N = 2 pi^{N/2} / Gamma(N/2).
inline double sphere_area(int n) {
  require(n >= 1, errc::invalid_parameter, "sphere_area: dimension must be >= 1");
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace detail {

// Independent oracle for the sphere average of |omega . e|^p in dimension N >= 2:
// reduce to the polar angle against e,
//   avg = int_0^pi |cos t|^p sin^{N-2} t dt / int_0^pi sin^{N-2} t dt,
// and integrate each half of [0, pi] separately because |cos| loses smoothness
// at pi/2. 64-point Gauss-Legendre per half is far below 1e-10 here.
inline double kappa_angular_quadrature(int n, double p) {
  static const gl_rule rule = gauss_legendre(64);
  auto num = [&](double t) { return std::pow(std::abs(std::cos(t)), p) * std::pow(std::sin(t), n - 2); };
  auto den = [&](double t) { return std::pow(std::sin(t), n - 2); };
  double a = gl_integrate(0, M_PI / 2, rule, num) + gl_integrate(M_PI / 2, M_PI, rule, num);
  double b = gl_integrate(0, M_PI / 2, rule, den) + gl_integrate(M_PI / 2, M_PI, rule, den);
  return a / b;
}

}  // namespace detail

// kappa(N, p): the average of |omega . e|^p over the unit sphere S^{N-1}, for any
// fixed unit vector e. Closed form Gamma((p+1)/2) Gamma(N/2) / (sqrt(pi) Gamma((N+p)/2)),
// cross-checked at every call against the angular-quadrature oracle; disagreement
// means a broken build, not a degraded answer.
inline double kappa(int n, double p) {
  require(n >= 1, errc::invalid_parameter, "kappa: dimension must be >= 1");
  require(p >= 1, errc::invalid_parameter, "kappa: p must be >= 1");
  if (n == 1) return 1.0;  // S^0 = {-1, +1}, |omega . e| = 1 identically
  double closed = std::exp(std::lgamma(0.5 * (p + 1)) + std::lgamma(0.5 * n) -
                           std::lgamma(0.5 * (n + p))) /
                  std::sqrt(M_PI);
  double quad = detail::kappa_angular_quadrature(n, p);
  require(std::abs(closed - quad) <= 1e-8, errc::internal_consistency,
          "kappa: closed form and angular quadrature disagree (" + format_g(closed, 17) +
              " vs " + format_g(quad, 17) + ")");
  return closed;
}

// Constant in the classical seminorm limit
//   lim_{s->1} (1-s) [f]_{W^{s,p}} = bbm_limit_constant(N, p) * int |grad f|^p,
// equal to sphere_area(N) * kappa(N, p) / p. Derivation: in polar form the
// near-diagonal mass of the double integral concentrates as
// (1-s) int_{S^{N-1}} |grad f . omega|^p domega * r^{(1-s)p} / ((1-s) p),
// and the sphere integral equals sigma_{N-1} kappa |grad f|^p. In one dimension
// with p = 2 this equals kappa itself (sigma_0 / p = 1), which is why 1-D checks
// alone cannot distinguish the two normalizations. The mollified functional,
// whose kernel is normalized to unit mass, has plain kappa as its limit instead.
inline double bbm_limit_constant(int n, double p) {
  return sphere_area(n) * kappa(n, p) / p;
}

// ------------------------------------------------------------- parameters

struct KernelParams {
  double s = 0.5;  // fractional order, in (0, 1)
  double p = 2.0;  // integrability exponent, >= 1
  int dim = 1;

  void validate() const {
    require(dim >= 1, errc::invalid_parameter, "KernelParams: dim must be >= 1");
    require(s > 0 && s < 1, errc::invalid_parameter, "KernelParams: s must lie in (0, 1)");
    require(p >= 1, errc::invalid_parameter, "KernelParams: p must be >= 1");
  }
  // r^{-exponent} is the pair weight of the Gagliardo integrand.
  double exponent() const { return dim + s * p; }
};

struct MollifierParams {
  double eps = 0.1;  // concentration parameter, in (0, 1/p)
  double p = 1.0;
  double R = 1.0;  // support radius of the kernel
  int dim = 1;

  void validate() const {
    require(dim >= 1, errc::invalid_parameter, "MollifierParams: dim must be >= 1");
    require(p >= 1, errc::invalid_parameter, "MollifierParams: p must be >= 1");
    require(eps > 0 && eps * p < 1, errc::invalid_parameter,
            "MollifierParams: need 0 < eps and eps*p < 1 (integrable singularity)");
    require(R > 0, errc::invalid_parameter, "MollifierParams: R must be positive");
  }
  double prefactor() const { return eps * p / (sphere_area(dim) * std::pow(R, eps * p)); }
};

// --------------------------------------------------------------- kernels

// Weight |x-y|^{-(N+sp)} of the Gagliardo integrand; the |f(x)-f(y)|^p factor
// is the caller's. The diagonal is a genuine singularity and is refused.
template <int N>
inline double gagliardo_kernel(const Vec<N>& x, const Vec<N>& y, const KernelParams& params) {
  params.validate();
  require(params.dim == N, errc::dimension_mismatch, "gagliardo_kernel: dim mismatch");
  double r2 = dist2(x, y);
  require(r2 > 0, errc::singularity, "gagliardo_kernel: x == y");
  return std::pow(r2, -0.5 * params.exponent());
}

// rho_eps(x) = eps p / (sigma_{N-1} R^{eps p}) * |x|^{-(N - eps p)} on 0 < |x| < R,
// zero outside; normalized so that its integral over R^N is exactly 1.
template <int N>
inline double rho_eps(const Vec<N>& x, const MollifierParams& params) {
  params.validate();
  require(params.dim == N, errc::dimension_mismatch, "rho_eps: dim mismatch");
  double r = robust_norm(x);
  require(r > 0, errc::singularity, "rho_eps: evaluation at the origin");
  if (r >= params.R) return 0.0;
  return params.prefactor() * std::pow(r, params.eps * params.p - N);
}

// Radial mass density of rho_eps: integrating this over r in (0, R) gives the
// full integral of rho_eps over R^N. Same function as sigma_{N-1} r^{N-1} rho_eps,
// but with the powers combined so it stays representable down to radii where the
// pointwise profile would overflow in dimension >= 2.
inline double rho_eps_radial_mass(double r, const MollifierParams& params) {
  params.validate();
  require(r > 0, errc::singularity, "rho_eps_radial_mass: r must be positive");
  if (r >= params.R) return 0.0;
  return sphere_area(params.dim) * params.prefactor() * std::pow(r, params.eps * params.p - 1);
}

}  // namespace bbmlab
