#pragma once

// Smooth inner approximation: replaces a rough domain by a level set of a
// mollified signed-distance proxy, sandwiched between two inner regions.
// The construction verifies its own sandwich by rejection sampling and
// refuses (construction_failed) rather than return a set it cannot certify.

#include <cmath>
#include <memory>
#include <vector>

#include "bbmlab/core.hpp"
#include "bbmlab/geometry.hpp"

namespace bbmlab {

namespace detail {

// Fixed unit-ball stencil with smooth radial bump weights; evaluation
// rescales the nodes by the mollification width, so one table per dimension
// serves every construction.
template <int N>
struct moll_stencil {
  std::vector<Vec<N>> nodes;
  std::vector<double> weights;  // normalized to sum 1
};

inline double bump_profile(double r) {
  double t = 1 - r * r;
  return t > 0 ? std::exp(-1 / t) : 0.0;
}

template <int N>
const moll_stencil<N>& unit_moll_stencil() {
  static const moll_stencil<N> table = [] {
    moll_stencil<N> st;
    if constexpr (N == 1) {
      const gl_rule rule = gauss_legendre(16);
      for (std::size_t i = 0; i < rule.x.size(); ++i) {
        st.nodes.push_back(Vec<1>{rule.x[i]});
        st.weights.push_back(rule.w[i] * bump_profile(std::abs(rule.x[i])));
      }
    } else if constexpr (N == 2) {
      const gl_rule rule = gauss_legendre(8);
      const int na = 16;
      for (std::size_t i = 0; i < rule.x.size(); ++i) {
        double r = 0.5 * (rule.x[i] + 1);
        for (int k = 0; k < na; ++k) {
          double t = 2 * M_PI * (k + 0.5) / na;
          st.nodes.push_back(Vec<2>{r * std::cos(t), r * std::sin(t)});
          st.weights.push_back(rule.w[i] * bump_profile(r) * r);
        }
      }
    } else {
      const gl_rule rule = gauss_legendre(6);
      const int nd = 32;  // Fibonacci sphere directions
      const double golden = M_PI * (3 - std::sqrt(5.0));
      for (std::size_t i = 0; i < rule.x.size(); ++i) {
        double r = 0.5 * (rule.x[i] + 1);
        for (int k = 0; k < nd; ++k) {
          double z = 1 - 2.0 * (k + 0.5) / nd;
          double rho = std::sqrt(std::max(0.0, 1 - z * z));
          double t = golden * k;
          st.nodes.push_back(Vec<3>{r * rho * std::cos(t), r * rho * std::sin(t), r * z});
          st.weights.push_back(rule.w[i] * bump_profile(r) * r * r);
        }
      }
    }
    double total = 0;
    for (double w : st.weights) total += w;
    for (double& w : st.weights) w /= total;
    return st;
  }();
  return table;
}

// Signed proxy for the distance to the boundary of the half-depth inner
// region: positive strictly inside it, negative outside, 1-Lipschitz because
// both branches are built from 1-Lipschitz distances.
template <int N>
struct signed_depth {
  std::function<bool(const Vec<N>&)> inside;
  std::function<double(const Vec<N>&)> bdist;
  double half_lambda;

  double operator()(const Vec<N>& x) const {
    double depth = (inside(x) ? bdist(x) : 0.0) - half_lambda;
    double clip = 1 / half_lambda - norm(x);
    return std::min(depth, clip);
  }
};

}  // namespace detail

// Level set {g > t} of the mollified signed depth g, with the level t chosen
// near the caller's level_value among candidates where the sampled gradient
// magnitude clears a floor (a numerical stand-in for picking a regular
// value). Certifies by rejection sampling that the result contains the
// lambda-inner region and stays inside the quarter-lambda one; an empty
// lambda-inner region yields the empty domain with a warning instead.
template <int N>
Domain<N> smooth_inner_approximation(const Domain<N>& d, const InnerRegionParams& params) {
  params.validate();
  require(d.box.valid(), errc::invalid_parameter,
          "smooth_inner_approximation: domain needs a bounding or truncation box");
  const double lambda = params.lambda;
  const double w = params.mollification_width;

  detail::signed_depth<N> raw{d.inside, d.boundary_distance, lambda / 2};
  const auto& st = detail::unit_moll_stencil<N>();
  auto g = [raw, w, &st](const Vec<N>& x) {
    pairwise_sum acc;
    for (std::size_t i = 0; i < st.nodes.size(); ++i) {
      Vec<N> y = x;
      for (int k = 0; k < N; ++k) y[k] += w * st.nodes[i][k];
      acc.add(st.weights[i] * raw(y));
    }
    return acc.total();
  };

  Domain<N> inner = omega_lambda(d, lambda);
  Domain<N> outer = omega_lambda(d, lambda / 4);

  // sample once, reuse for level selection and for the sandwich certificate
  const int samples = 10000;
  rng gen(0x9e3779b97f4a7c15ull);
  std::vector<Vec<N>> pts(samples);
  std::vector<double> gv(samples);
  int inner_hits = 0;
  for (int i = 0; i < samples; ++i) {
    pts[i] = gen.point_in<N>(d.box);
    gv[i] = g(pts[i]);
    if (inner.inside(pts[i])) ++inner_hits;
  }
  if (inner_hits == 0) {
    Domain<N> empty;
    empty.inside = [](const Vec<N>&) { return false; };
    empty.boundary_distance = [](const Vec<N>&) { return 0.0; };
    empty.box = outer.box;
    empty.extension = ExtensionFlag::extension;
    empty.name = "smooth_inner(" + d.name + ")";
    empty.warning = "inner region is empty at lambda = " + format_g(lambda, 6) +
                    "; returning the empty domain";
    return empty;
  }

  // level scan: nearest candidates to level_value first, within (-w, w);
  // gradient is probed by central differences at the mollification scale
  double t = params.level_value;
  {
    std::vector<double> cands{params.level_value};
    for (int k = 1; k <= 3; ++k) {
      cands.push_back(params.level_value + k * w / 4);
      cands.push_back(params.level_value - k * w / 4);
    }
    bool found = false;
    for (double cand : cands) {
      if (!(cand > -w && cand < w)) continue;
      double min_grad = std::numeric_limits<double>::infinity();
      int near_level = 0;
      for (int i = 0; i < samples && near_level < 64; ++i) {
        if (std::fabs(gv[i] - cand) >= w / 4) continue;
        ++near_level;
        double step = w / 4, grad2 = 0;
        for (int k = 0; k < N; ++k) {
          Vec<N> a = pts[i], b = pts[i];
          a[k] += step;
          b[k] -= step;
          double dk = (g(a) - g(b)) / (2 * step);
          grad2 += dk * dk;
        }
        min_grad = std::min(min_grad, std::sqrt(grad2));
      }
      if (near_level == 0 || min_grad > 1e-3) {
        t = cand;
        found = true;
        break;
      }
    }
    require(found, errc::construction_failed,
            "smooth_inner_approximation: no regular level found near level_value");
  }

  // sandwich certificate on the sample cloud
  for (int i = 0; i < samples; ++i) {
    bool in_star = gv[i] > t;
    if (inner.inside(pts[i]) && !in_star)
      fail(errc::construction_failed,
           "smooth_inner_approximation: sampled point of the inner region escapes the level set "
           "(retry with a smaller mollification_width)");
    if (in_star && !outer.inside(pts[i]))
      fail(errc::construction_failed,
           "smooth_inner_approximation: sampled level-set point leaves the quarter-lambda region "
           "(retry with a smaller mollification_width)");
  }

  Domain<N> r;
  r.inside = [g, t](const Vec<N>& x) { return g(x) > t; };
  // g is 1-Lipschitz (an average of 1-Lipschitz translates), so |g - t| is a
  // sound lower bound for the distance to the level set from either side
  r.boundary_distance = [g, t](const Vec<N>& x) { return std::fabs(g(x) - t); };
  r.box = outer.box;
  r.unbounded = false;
  r.extension = ExtensionFlag::extension;
  r.name = "smooth_inner(" + d.name + ")";
  return r;
}

}  // namespace bbmlab
