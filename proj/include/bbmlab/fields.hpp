#pragma once

// Analytic test functions with exact gradients and regularity metadata:
// affine fields, smooth compactly supported bumps, the planar field r*theta
// whose branch cut hides inside the removed cusp, and indicator fields of
// primitive sets (which carry their boundary measure as data, since their
// gradient is a surface measure rather than a function).

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "bbmlab/core.hpp"
#include "bbmlab/geometry.hpp"

namespace bbmlab {

enum class Regularity { smooth_compact, w1p, w11_only, indicator, cusp_special };

template <int N>
struct IndicatorInfo {
  Domain<N> set;
  std::optional<double> perimeter;  // boundary measure of the full set, when analytic
  std::function<std::vector<Vec<N>>(int)> boundary_samples;
  double jump = 1.0;  // field value inside the set (scaling multiplies it)
};

template <int N>
struct ScalarField {
  static constexpr int dim = N;

  std::function<double(const Vec<N>&)> eval;
  std::function<Vec<N>(const Vec<N>&)> grad;  // exact where defined; throws for indicators
  double support_radius = std::numeric_limits<double>::infinity();
  std::optional<double> lipschitz_bound;
  std::optional<double> sup_bound;  // |f| <= sup_bound everywhere, when known
  Regularity regularity = Regularity::w1p;
  std::shared_ptr<IndicatorInfo<N>> indicator;
  // incremented when the cusp field is evaluated exactly on its branch cut
  std::shared_ptr<std::atomic<std::uint64_t>> branch_cut_hits;
  std::string name = "field";

  bool compactly_supported() const { return std::isfinite(support_radius); }
};

// ----------------------------------------------------------------- affine

template <int N>
ScalarField<N> affine(const Vec<N>& a, double b) {
  ScalarField<N> f;
  f.eval = [a, b](const Vec<N>& x) { return dot(a, x) + b; };
  f.grad = [a](const Vec<N>&) { return a; };
  f.lipschitz_bound = norm(a);
  f.regularity = Regularity::w1p;
  f.name = "affine";
  return f;
}

// ------------------------------------------------------------------- bump

// f(x) = height * exp(1 - 1/(1 - |x-c|^2/r^2)) inside the ball, 0 outside.
// Smooth with compact support; the gradient is exact, the Lipschitz bound is
// a dense radial scan of |grad f| with a small safety factor.
template <int N>
ScalarField<N> bump(const Vec<N>& center, double radius, double height) {
  require(radius > 0, errc::invalid_parameter, "bump: radius must be positive");
  ScalarField<N> f;
  double r2 = radius * radius;
  f.eval = [center, r2, height](const Vec<N>& x) {
    double rho2 = dist2(x, center) / r2;
    if (rho2 >= 1) return 0.0;
    return height * std::exp(1 - 1 / (1 - rho2));
  };
  f.grad = [center, r2, height](const Vec<N>& x) {
    double rho2 = dist2(x, center) / r2;
    if (rho2 >= 1) return vfill<N>(0.0);
    double u = 1 - rho2;
    double val = height * std::exp(1 - 1 / u);
    return vmul(vsub(x, center), -2 * val / (r2 * u * u));
  };
  double max_slope = 0;
  for (int k = 1; k < 20000; ++k) {
    double rho = k / 20000.0;
    double u = 1 - rho * rho;
    max_slope = std::max(max_slope,
                         std::abs(height) * std::exp(1 - 1 / u) * 2 * rho / (radius * u * u));
  }
  f.lipschitz_bound = max_slope * 1.0001;
  f.sup_bound = std::abs(height);
  f.support_radius = norm(center) + radius;
  f.regularity = Regularity::smooth_compact;
  f.name = "bump";
  return f;
}

// ------------------------------------------------------------- cusp field

// f = r * theta with theta the angle branch in (-pi, pi], cut along the
// negative x1 axis. The cut lies inside the removed cusp of cusp_domain, so f
// is smooth on that open domain. Exactly on the cut the value is the limit
// from the x2 > 0 side (r * pi), and the hit is counted on the field's flag.
inline ScalarField<2> cusp_field() {
  ScalarField<2> f;
  auto hits = std::make_shared<std::atomic<std::uint64_t>>(0);
  f.branch_cut_hits = hits;
  f.eval = [hits](const Vec<2>& x) {
    if (x[1] == 0.0 && x[0] < 0.0) hits->fetch_add(1, std::memory_order_relaxed);
    return norm(x) * std::atan2(x[1], x[0]);  // atan2(0, neg) = +pi: the flagged limit
  };
  f.grad = [](const Vec<2>& x) {
    // d(r theta)/dr = theta along the radial direction, plus the unit angular part
    double th = std::atan2(x[1], x[0]);
    double c = std::cos(th), s = std::sin(th);
    return Vec<2>{th * c - s, th * s + c};
  };
  f.regularity = Regularity::cusp_special;
  f.name = "cusp_field";
  return f;
}

// -------------------------------------------------------------- indicator

template <int N>
ScalarField<N> indicator(const Domain<N>& d) {
  require(!d.unbounded, errc::invalid_parameter, "indicator: set must be bounded");
  ScalarField<N> f;
  auto din = d.inside;
  f.eval = [din](const Vec<N>& x) { return din(x) ? 1.0 : 0.0; };
  f.grad = [](const Vec<N>&) -> Vec<N> {
    fail(errc::unsupported_operation,
         "indicator: gradient is a surface measure, not a function");
  };
  f.regularity = Regularity::indicator;
  f.indicator = std::make_shared<IndicatorInfo<N>>();
  f.indicator->set = d;
  f.indicator->perimeter = d.analytic_perimeter;
  f.indicator->boundary_samples = d.boundary_samples;
  f.sup_bound = 1.0;
  double rad = 0;
  for (int i = 0; i < N; ++i)
    rad = std::max(rad, std::max(std::abs(d.box.lo[i]), std::abs(d.box.hi[i])));
  f.support_radius = rad * std::sqrt(static_cast<double>(N));
  f.name = "indicator(" + d.name + ")";
  return f;
}

// Boundary measure of the indicated set; composite sets do not carry one.
template <int N>
double indicator_perimeter(const ScalarField<N>& f) {
  require(f.regularity == Regularity::indicator && f.indicator != nullptr,
          errc::invalid_parameter, "indicator_perimeter: not an indicator field");
  require(f.indicator->perimeter.has_value(), errc::unsupported_operation,
          "indicator_perimeter: no analytic perimeter for this set");
  return *f.indicator->perimeter;
}

// ---------------------------------------------------------------- scaling

// c * f, propagating every bound. Indicators stay indicators with a scaled
// jump, which is how |c|^p homogeneity reaches the interface model.
template <int N>
ScalarField<N> scaled(const ScalarField<N>& f, double c) {
  ScalarField<N> g = f;
  auto ev = f.eval;
  auto gr = f.grad;
  g.eval = [ev, c](const Vec<N>& x) { return c * ev(x); };
  g.grad = [gr, c](const Vec<N>& x) { return vmul(gr(x), c); };
  if (f.lipschitz_bound) g.lipschitz_bound = *f.lipschitz_bound * std::abs(c);
  if (f.sup_bound) g.sup_bound = *f.sup_bound * std::abs(c);
  if (f.indicator) {
    g.indicator = std::make_shared<IndicatorInfo<N>>(*f.indicator);
    g.indicator->jump = f.indicator->jump * c;
  }
  g.name = "scaled(" + f.name + ")";
  return g;
}

}  // namespace bbmlab
