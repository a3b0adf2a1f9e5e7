#pragma once

// Open subsets of R^N: exact primitives, boolean composites with safe
// lower-bound boundary distances, lambda-inner regions, the planar cusp
// counterexample domain, and truncated full space.
//
// Conventions. Open-set semantics throughout: boundary points report outside.
// boundary_distance is exact for primitives and a lower bound for composites
// (min-combination); inner regions built from a lower bound are subsets of the
// true inner region, which keeps every inclusion-based argument one-sided.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/core.hpp"
#include "bbmlab/kernels.hpp"

namespace bbmlab {

enum class ExtensionFlag { extension, non_extension, unknown };

template <int N>
struct Domain {
  static constexpr int dim = N;

  std::function<bool(const Vec<N>&)> inside;
  std::function<double(const Vec<N>&)> boundary_distance;
  Box<N> box{};           // bounding box when bounded, truncation window when not
  bool unbounded = false;
  ExtensionFlag extension = ExtensionFlag::unknown;
  std::string name = "domain";
  std::string warning;    // set by constructions that degrade instead of throwing

  // Primitive-only extras consumed by indicator fields and the BV route:
  // an analytic boundary measure and an area-uniform boundary point sampler.
  std::optional<double> analytic_perimeter;
  std::function<std::vector<Vec<N>>(int)> boundary_samples;
};

// ------------------------------------------------------------- primitives

template <int N>
Domain<N> make_ball(const Vec<N>& center, double radius) {
  require(radius > 0, errc::invalid_parameter, "make_ball: radius must be positive");
  Domain<N> d;
  d.inside = [center, radius](const Vec<N>& x) { return dist2(x, center) < radius * radius; };
  d.boundary_distance = [center, radius](const Vec<N>& x) {
    return std::abs(dist(x, center) - radius);
  };
  for (int i = 0; i < N; ++i) {
    d.box.lo[i] = center[i] - radius;
    d.box.hi[i] = center[i] + radius;
  }
  d.extension = ExtensionFlag::extension;
  d.analytic_perimeter = sphere_area(N) * std::pow(radius, N - 1);
  if constexpr (N == 1) {
    d.boundary_samples = [center, radius](int n) {
      std::vector<Vec<1>> pts;
      for (int k = 0; k < n; ++k)
        pts.push_back(Vec<1>{k % 2 == 0 ? center[0] - radius : center[0] + radius});
      return pts;
    };
  } else if constexpr (N == 2) {
    d.boundary_samples = [center, radius](int n) {
      std::vector<Vec<2>> pts;
      pts.reserve(n);
      for (int k = 0; k < n; ++k) {
        double t = 2 * M_PI * (k + 0.5) / n;
        pts.push_back(Vec<2>{center[0] + radius * std::cos(t), center[1] + radius * std::sin(t)});
      }
      return pts;
    };
  }
  d.name = "ball";
  return d;
}

template <int N>
Domain<N> make_box(const Vec<N>& lo, const Vec<N>& hi) {
  for (int i = 0; i < N; ++i)
    require(lo[i] < hi[i], errc::invalid_parameter, "make_box: need lo < hi componentwise");
  Domain<N> d;
  Box<N> b{lo, hi};
  d.inside = [b](const Vec<N>& x) { return b.contains_strict(x); };
  d.boundary_distance = [b](const Vec<N>& x) {
    // exact: inside, the nearest face; outside, the distance to the closed box
    bool in = true;
    double inner = std::numeric_limits<double>::infinity();
    double out2 = 0;
    for (int i = 0; i < N; ++i) {
      inner = std::min({inner, x[i] - b.lo[i], b.hi[i] - x[i]});
      double g = std::max({0.0, b.lo[i] - x[i], x[i] - b.hi[i]});
      out2 += g * g;
      in = in && x[i] > b.lo[i] && x[i] < b.hi[i];
    }
    return in ? inner : std::sqrt(out2);
  };
  d.box = b;
  d.extension = ExtensionFlag::extension;
  double per = 0;
  for (int i = 0; i < N; ++i) {
    double face = 1;
    for (int j = 0; j < N; ++j)
      if (j != i) face *= hi[j] - lo[j];
    per += 2 * face;
  }
  d.analytic_perimeter = per;
  if constexpr (N == 1) {
    d.boundary_samples = [b](int n) {
      std::vector<Vec<1>> pts;
      for (int k = 0; k < n; ++k) pts.push_back(Vec<1>{k % 2 == 0 ? b.lo[0] : b.hi[0]});
      return pts;
    };
  } else if constexpr (N == 2) {
    d.boundary_samples = [b](int n) {
      // walk the four edges by arclength so samples are perimeter-uniform
      double w = b.hi[0] - b.lo[0], h = b.hi[1] - b.lo[1], per2 = 2 * (w + h);
      std::vector<Vec<2>> pts;
      pts.reserve(n);
      for (int k = 0; k < n; ++k) {
        double t = per2 * (k + 0.5) / n;
        Vec<2> q;
        if (t < w) q = {b.lo[0] + t, b.lo[1]};
        else if (t < w + h) q = {b.hi[0], b.lo[1] + (t - w)};
        else if (t < 2 * w + h) q = {b.hi[0] - (t - w - h), b.hi[1]};
        else q = {b.lo[0], b.hi[1] - (t - 2 * w - h)};
        pts.push_back(q);
      }
      return pts;
    };
  }
  d.name = "box";
  return d;
}

template <int N>
Domain<N> make_halfspace(const Vec<N>& normal, double offset,
                         std::optional<Box<N>> truncation = std::nullopt) {
  double nn = norm(normal);
  require(nn > 0, errc::invalid_parameter, "make_halfspace: zero normal");
  Vec<N> u = vmul(normal, 1.0 / nn);
  double b = offset / nn;
  Domain<N> d;
  d.inside = [u, b](const Vec<N>& x) { return dot(u, x) < b; };
  d.boundary_distance = [u, b](const Vec<N>& x) { return std::abs(dot(u, x) - b); };
  d.unbounded = true;
  if (truncation) {
    require(truncation->valid(), errc::invalid_parameter, "make_halfspace: empty truncation box");
    d.box = *truncation;
  } else {
    d.box.lo = vfill<N>(-8.0);
    d.box.hi = vfill<N>(8.0);
  }
  d.extension = ExtensionFlag::extension;
  d.name = "halfspace";
  return d;
}

// All of R^N, carried with an explicit truncation window. Quadrature against
// it is valid for compactly supported fields whose support sits strictly
// inside the window; the engine adds the analytic tail bound.
template <int N>
Domain<N> full_space(const Box<N>& truncation) {
  require(truncation.valid(), errc::invalid_parameter, "full_space: empty truncation box");
  Domain<N> d;
  d.inside = [](const Vec<N>&) { return true; };
  d.boundary_distance = [](const Vec<N>&) { return 1e300; };
  d.box = truncation;
  d.unbounded = true;
  d.extension = ExtensionFlag::extension;
  d.name = "full_space";
  return d;
}

// ------------------------------------------------------------------- csg

enum class CsgOp { union_of, difference, complement_of_closure, intersection };

template <int N>
Domain<N> csg_union(const Domain<N>& a, const Domain<N>& b) {
  Domain<N> d;
  auto ain = a.inside, bin = b.inside;
  auto abd = a.boundary_distance, bbd = b.boundary_distance;
  d.inside = [ain, bin](const Vec<N>& x) { return ain(x) || bin(x); };
  // boundary of the union is contained in the union of boundaries, so the min
  // of the operand distances is a valid lower bound everywhere
  d.boundary_distance = [abd, bbd](const Vec<N>& x) { return std::min(abd(x), bbd(x)); };
  d.box = Box<N>::hull(a.box, b.box);
  d.unbounded = a.unbounded || b.unbounded;
  d.name = "union(" + a.name + "," + b.name + ")";
  return d;
}

template <int N>
Domain<N> csg_intersection(const Domain<N>& a, const Domain<N>& b) {
  Domain<N> d;
  auto ain = a.inside, bin = b.inside;
  auto abd = a.boundary_distance, bbd = b.boundary_distance;
  d.inside = [ain, bin](const Vec<N>& x) { return ain(x) && bin(x); };
  d.boundary_distance = [abd, bbd](const Vec<N>& x) { return std::min(abd(x), bbd(x)); };
  // truncation windows of unbounded operands must not masquerade as bounds
  if (!a.unbounded && !b.unbounded) d.box = Box<N>::intersect(a.box, b.box);
  else if (!a.unbounded) d.box = a.box;
  else if (!b.unbounded) d.box = b.box;
  else {
    d.box = Box<N>::intersect(a.box, b.box);
    d.unbounded = true;
  }
  d.name = "inter(" + a.name + "," + b.name + ")";
  return d;
}

// a minus the CLOSURE of b: points at zero distance from b are outside.
template <int N>
Domain<N> csg_difference(const Domain<N>& a, const Domain<N>& b) {
  Domain<N> d;
  auto ain = a.inside, bin = b.inside;
  auto abd = a.boundary_distance, bbd = b.boundary_distance;
  d.inside = [ain, bin, bbd](const Vec<N>& x) { return ain(x) && !bin(x) && bbd(x) > 0; };
  d.boundary_distance = [abd, bbd](const Vec<N>& x) { return std::min(abd(x), bbd(x)); };
  d.box = a.box;
  d.unbounded = a.unbounded;
  d.name = "diff(" + a.name + "," + b.name + ")";
  return d;
}

template <int N>
Domain<N> csg_complement_of_closure(const Domain<N>& a,
                                    std::optional<Box<N>> truncation = std::nullopt) {
  Domain<N> d;
  auto ain = a.inside;
  auto abd = a.boundary_distance;
  d.inside = [ain, abd](const Vec<N>& x) { return !ain(x) && abd(x) > 0; };
  d.boundary_distance = abd;
  d.unbounded = true;
  if (truncation) {
    d.box = *truncation;
  } else {
    // default truncation window: the operand box stretched threefold about its center
    double side = 0;
    for (int i = 0; i < N; ++i) side = std::max(side, a.box.hi[i] - a.box.lo[i]);
    d.box = a.box.inflated(std::max(side, 1.0));
  }
  d.name = "complC(" + a.name + ")";
  return d;
}

template <int N>
Domain<N> csg(CsgOp op, const Domain<N>& a, const Domain<N>* b = nullptr) {
  switch (op) {
    case CsgOp::union_of:
      require(b != nullptr, errc::invalid_parameter, "csg: union needs two operands");
      return csg_union(a, *b);
    case CsgOp::intersection:
      require(b != nullptr, errc::invalid_parameter, "csg: intersection needs two operands");
      return csg_intersection(a, *b);
    case CsgOp::difference:
      require(b != nullptr, errc::invalid_parameter, "csg: difference needs two operands");
      return csg_difference(a, *b);
    case CsgOp::complement_of_closure:
      return csg_complement_of_closure(a);
  }
  fail(errc::invalid_parameter, "csg: unknown op");
}

// ------------------------------------------------------- planar point sets

namespace detail {

// Uniform-grid nearest-neighbor index over a fixed planar point cloud.
// Exact nearest distance via expanding cell rings.
class cloud_index2 {
 public:
  cloud_index2() = default;

  cloud_index2(std::vector<Vec<2>> pts, double cell) : pts_(std::move(pts)), cell_(cell) {
    require(!pts_.empty() && cell_ > 0, errc::invalid_parameter, "cloud_index2: bad input");
    double x0 = pts_[0][0], x1 = x0, y0 = pts_[0][1], y1 = y0;
    for (const auto& p : pts_) {
      x0 = std::min(x0, p[0]);
      x1 = std::max(x1, p[0]);
      y0 = std::min(y0, p[1]);
      y1 = std::max(y1, p[1]);
    }
    x0_ = x0 - cell_;
    y0_ = y0 - cell_;
    nx_ = static_cast<int>((x1 - x0_) / cell_) + 2;
    ny_ = static_cast<int>((y1 - y0_) / cell_) + 2;
    std::vector<int> count(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    auto cell_of = [&](const Vec<2>& p) {
      int cx = static_cast<int>((p[0] - x0_) / cell_);
      int cy = static_cast<int>((p[1] - y0_) / cell_);
      return cy * nx_ + cx;
    };
    for (const auto& p : pts_) ++count[cell_of(p) + 1];
    offsets_.assign(count.size(), 0);
    for (std::size_t i = 1; i < count.size(); ++i) offsets_[i] = offsets_[i - 1] + count[i];
    ids_.resize(pts_.size());
    std::vector<int> cursor(offsets_.begin(), offsets_.end() - 1);
    for (int i = 0; i < static_cast<int>(pts_.size()); ++i) ids_[cursor[cell_of(pts_[i])]++] = i;
  }

  double nearest_dist(const Vec<2>& q) const {
    int qx = static_cast<int>(std::floor((q[0] - x0_) / cell_));
    int qy = static_cast<int>(std::floor((q[1] - y0_) / cell_));
    double best2 = std::numeric_limits<double>::infinity();
    int max_ring = nx_ + ny_ + 2;
    for (int r = 0; r <= max_ring; ++r) {
      // any point in a cell at Chebyshev ring r is at least (r-1)*cell away
      if (r >= 1) {
        double lb = (r - 1) * cell_;
        if (lb * lb > best2) break;
      }
      for (int cy = qy - r; cy <= qy + r; ++cy) {
        if (cy < 0 || cy >= ny_) continue;
        bool edge_row = (cy == qy - r || cy == qy + r);
        int step = edge_row ? 1 : 2 * r;
        if (step == 0) step = 1;
        for (int cx = qx - r; cx <= qx + r; cx += step) {
          if (cx < 0 || cx >= nx_) continue;
          std::size_t c = static_cast<std::size_t>(cy) * nx_ + cx;
          for (int k = offsets_[c]; k < offsets_[c + 1]; ++k)
            best2 = std::min(best2, dist2(q, pts_[ids_[k]]));
        }
      }
    }
    return std::sqrt(best2);
  }

 private:
  std::vector<Vec<2>> pts_;
  double cell_ = 1, x0_ = 0, y0_ = 0;
  int nx_ = 0, ny_ = 0;
  std::vector<int> offsets_, ids_;
};

}  // namespace detail

// ------------------------------------------------------------ cusp domain

// The planar counterexample domain: the unit disk with the set
// { x1 <= 0, |x2| <= |x1|^7 } removed. The removed region pinches to a
// degree-7 cusp at the origin, which is what defeats the extension property.
inline Domain<2> cusp_domain() {
  auto in_removed_closed = [](const Vec<2>& x) {
    return x[0] <= 0 && std::abs(x[1]) <= std::pow(-x[0], 7);
  };
  // Shared boundary cloud: the visible part of the unit circle plus both cusp
  // branches, sampled densely enough that subtracting half the max arc gap
  // keeps the indexed distance a true lower bound of dist(x, boundary).
  struct cloud_holder {
    detail::cloud_index2 index;
    double slack;
  };
  static const cloud_holder holder = [] {
    const int M = 65536;
    std::vector<Vec<2>> pts;
    pts.reserve(3 * M + 2);
    for (int k = 0; k < M; ++k) {
      double t = 2 * M_PI * k / M;
      Vec<2> q{std::cos(t), std::sin(t)};
      bool strictly_in_removed = q[0] <= 0 && std::abs(q[1]) < std::pow(-q[0], 7);
      if (!strictly_in_removed) pts.push_back(q);
    }
    // t_max solves t^2 + t^14 = 1: where the branch x=(-t, t^7) meets the circle
    double lo = 0.9, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (std::pow(mid, 2) + std::pow(mid, 14) < 1 ? lo : hi) = mid;
    }
    double tmax = 0.5 * (lo + hi);
    for (int k = 0; k <= M; ++k) {
      double t = tmax * k / M;
      double b = std::pow(t, 7);
      pts.push_back(Vec<2>{-t, b});
      if (k > 0) pts.push_back(Vec<2>{-t, -b});
    }
    // max adjacent gap: circle arc 2*pi/M, branch chord <= dt*sqrt(1+49 t^12)
    double gap = std::max(2 * M_PI / M, tmax / M * std::sqrt(50.0));
    return cloud_holder{detail::cloud_index2(std::move(pts), 1.0 / 128), gap};
  }();

  Domain<2> d;
  d.inside = [in_removed_closed](const Vec<2>& x) {
    return norm2(x) < 1.0 && !in_removed_closed(x);
  };
  d.boundary_distance = [](const Vec<2>& x) {
    return std::max(0.0, holder.index.nearest_dist(x) - 0.5 * holder.slack);
  };
  d.box = Box<2>{{-1, -1}, {1, 1}};
  d.extension = ExtensionFlag::non_extension;
  d.name = "cusp";
  return d;
}

// ---------------------------------------------------------- inner regions

// Omega_lambda: points of d deeper than lambda from the boundary, clipped to
// the ball of radius 1/lambda. Built on the lower-bound boundary_distance, so
// it is a subset of the true inner region (the sound side for inclusions).
template <int N>
Domain<N> omega_lambda(const Domain<N>& d, double lambda) {
  require(lambda > 0, errc::invalid_parameter, "omega_lambda: lambda must be positive");
  Domain<N> r;
  auto din = d.inside;
  auto dbd = d.boundary_distance;
  r.inside = [din, dbd, lambda](const Vec<N>& x) {
    return din(x) && dbd(x) > lambda && norm(x) * lambda < 1;
  };
  r.boundary_distance = [din, dbd, lambda](const Vec<N>& x) {
    double cap = 1 / lambda - norm(x);
    double ero = dbd(x) - lambda;
    if (din(x) && ero > 0 && cap > 0) return std::min(ero, cap);
    return std::max({0.0, -ero, -cap});
  };
  Box<N> ball_box;
  ball_box.lo = vfill<N>(-1 / lambda);
  ball_box.hi = vfill<N>(1 / lambda);
  r.box = d.unbounded ? ball_box : Box<N>::intersect(d.box, ball_box);
  r.unbounded = false;
  r.name = "olambda(" + d.name + "," + format_g(lambda, 6) + ")";
  return r;
}

struct InnerRegionParams {
  double lambda = 0.1;
  double mollification_width = 0.0125;  // must stay below lambda/8
  double level_value = 0.0;

  void validate() const {
    require(lambda > 0, errc::invalid_parameter, "InnerRegionParams: lambda must be positive");
    require(mollification_width > 0 && mollification_width < lambda / 8,
            errc::invalid_parameter,
            "InnerRegionParams: mollification_width must lie in (0, lambda/8)");
  }
};

inline InnerRegionParams make_inner_params(double lambda) {
  return InnerRegionParams{lambda, lambda / 10, 0.0};
}

}  // namespace bbmlab
