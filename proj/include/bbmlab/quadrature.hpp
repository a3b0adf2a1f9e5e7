#pragma once

// Lattice midpoint quadrature for the singular pair integrals behind the
// fractional seminorms. Well-separated cell pairs use the symmetric midpoint
// rule (each unordered pair counted once and doubled, an exact identity);
// near-diagonal pairs are subdivided recursively; at the deepest level a
// self-cell is replaced by an analytic tent-overlap polar model for gradient
// fields, or by a flat-interface crossing model for indicator fields.
//
// All node geometry lives on one global integer lattice, so midpoint kernels
// are tabulated against integer squared separations, and all reductions run
// over fixed 64-cell blocks folded in a fixed pairwise tree: results are
// byte-identical regardless of thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "bbmlab/core.hpp"
#include "bbmlab/fields.hpp"
#include "bbmlab/geometry.hpp"
#include "bbmlab/kernels.hpp"

namespace bbmlab {

// ------------------------------------------------------------------- mesh

template <int N>
struct QuadratureMesh {
  static_assert(N >= 1 && N <= 3, "meshes are supported in dimensions 1..3");

  double pitch = 0;
  int refinement_depth = 4;
  // global lattice indices: cell k occupies [k*pitch, (k+1)*pitch)^N, center
  // at (k + 1/2)*pitch. A shared absolute lattice makes meshes of nested or
  // adjacent domains cell-compatible by construction.
  std::vector<std::array<std::int64_t, N>> cells;
  std::vector<double> bdist;  // domain boundary distance at cell centers
  Box<N> window;              // meshed region (bounding box, or truncation window)
  bool clipped = false;       // window is a truncation of an unbounded domain
  std::int64_t min_across = 0;
  std::size_t boundary_cell_count = 0;  // cells with bdist <= pitch

  double cell_weight() const {
    double w = 1;
    for (int i = 0; i < N; ++i) w *= pitch;
    return w;
  }
  double volume() const { return static_cast<double>(cells.size()) * cell_weight(); }
  Vec<N> center(std::size_t i) const {
    Vec<N> x;
    for (int d = 0; d < N; ++d) x[d] = (static_cast<double>(cells[i][d]) + 0.5) * pitch;
    return x;
  }
};

// Center-inside participation: a cell joins iff its center lies in the domain
// (and in the window, which matters only for clipped unbounded domains).
template <int N>
QuadratureMesh<N> build_mesh(const Domain<N>& d, double pitch, int refinement_depth = 4) {
  require(pitch > 0 && std::isfinite(pitch), errc::invalid_parameter,
          "build_mesh: pitch must be positive and finite");
  require(refinement_depth >= 0 && refinement_depth <= 10, errc::invalid_parameter,
          "build_mesh: refinement_depth out of range [0,10]");
  require(d.box.valid(), errc::invalid_parameter, "build_mesh: domain has an invalid box");

  QuadratureMesh<N> m;
  m.pitch = pitch;
  m.refinement_depth = refinement_depth;
  m.window = d.box;
  m.clipped = d.unbounded;

  std::array<std::int64_t, N> k0, k1, k;
  double scan = 1;
  for (int i = 0; i < N; ++i) {
    k0[i] = static_cast<std::int64_t>(std::floor(d.box.lo[i] / pitch)) - 1;
    k1[i] = static_cast<std::int64_t>(std::ceil(d.box.hi[i] / pitch)) + 1;
    scan *= static_cast<double>(k1[i] - k0[i] + 1);
  }
  require(scan <= 4e6, errc::invalid_parameter,
          "build_mesh: pitch too fine for the window (cell scan budget exceeded)");

  std::array<std::int64_t, N> mn{}, mx{};
  bool any = false;
  k = k0;
  for (;;) {
    Vec<N> c;
    for (int i = 0; i < N; ++i) c[i] = (static_cast<double>(k[i]) + 0.5) * pitch;
    if (m.window.contains(c) && d.inside(c)) {
      m.cells.push_back(k);
      m.bdist.push_back(d.boundary_distance(c));
      if (!any) {
        mn = mx = k;
        any = true;
      } else {
        for (int i = 0; i < N; ++i) {
          mn[i] = std::min(mn[i], k[i]);
          mx[i] = std::max(mx[i], k[i]);
        }
      }
    }
    int axis = 0;
    while (axis < N) {
      if (++k[axis] <= k1[axis]) break;
      k[axis] = k0[axis];
      ++axis;
    }
    if (axis == N) break;
  }
  if (any) {
    m.min_across = mx[0] - mn[0] + 1;
    for (int i = 1; i < N; ++i) m.min_across = std::min(m.min_across, mx[i] - mn[i] + 1);
  }
  for (double b : m.bdist)
    if (b <= pitch) ++m.boundary_cell_count;
  return m;
}

// --------------------------------------------------------------- estimate

struct SeminormEstimate {
  double value = 0;
  double error_estimate = 0;
  double mesh_pitch = 0;
  double s = 0;
  double p = 0;
  double diagonal_contribution = 0;
};

// ---------------------------------------------------------------- weights

namespace detail {

inline double power_abs(double d, double p) {
  if (p == 1.0) return std::fabs(d);
  if (p == 2.0) return d * d;
  return std::pow(std::fabs(d), p);
}

// w(r) = prefactor * r^-exponent for r < cutoff, else 0. beta = N + p - exponent
// is the radial margin making the diagonal integrable (beta > 0).
struct PairWeight {
  double exponent = 0;
  double prefactor = 1;
  double cutoff = std::numeric_limits<double>::infinity();
  double p = 2;
  double beta = 0;
};

// int_0^u r^{beta-1} prod_i (a - r*absw[i]) dr, valid while every factor stays
// nonnegative on [0,u] (u <= a / max absw). Expanding the product in elementary
// symmetric polynomials gives an exact closed form.
template <std::size_t M>
inline double tent_radial(const std::array<double, M>& absw, double a, double u, double beta) {
  std::array<double, M + 1> e{};
  e[0] = 1;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t kk = M; kk >= 1; --kk) e[kk] += e[kk - 1] * absw[i];
  double apow = 1;
  for (std::size_t i = 0; i < M; ++i) apow *= a;
  double total = 0, sign = 1, upow = std::pow(u, beta);
  for (std::size_t kk = 0; kk <= M; ++kk) {
    total += sign * e[kk] * apow * upow / (beta + static_cast<double>(kk));
    sign = -sign;
    apow /= a;
    upow *= u;
  }
  return total;
}

inline const gl_rule& gl16() {
  static const gl_rule r = gauss_legendre(16);
  return r;
}

// 2-D tent-overlap angular profile. For a square cell C of side a and a unit
// vector ghat at angle theta_g,
//   iint_{C x C} |ghat.(x-y)|^p |x-y|^{-e} dx dy = a^{2+beta} * T(theta_g)
// with beta = 2 + p - e, where T folds the angular integral of
// |cos(theta-theta_g)|^p against the tent density below. T is even,
// pi/2-periodic, and mirror-symmetric about pi/4, so it is tabulated on
// [0, pi/4] and queried by cubic Hermite interpolation.
class angular_table {
 public:
  angular_table(double beta, double p) : beta_(beta) {
    const double dx = (M_PI / 4) / (n_ - 1);
    for (int j = 0; j < n_; ++j) {
      double tg = j * dx;
      std::vector<double> bp;
      for (int a = 0; a <= 8; ++a) bp.push_back(a * (M_PI / 4));
      bp.push_back(tg + M_PI / 2);      // kink of |cos(theta-tg)|^p
      bp.push_back(tg + 3 * M_PI / 2);  // its antipode
      std::sort(bp.begin(), bp.end());
      pairwise_sum total;
      for (std::size_t a = 0; a + 1 < bp.size(); ++a) {
        if (bp[a + 1] - bp[a] < 1e-14) continue;
        total.add(gl_integrate(bp[a], bp[a + 1], gl16(), [&](double th) {
          return power_abs(std::cos(th - tg), p) * density(th, beta_);
        }));
      }
      val_[j] = total.total();
    }
    // T'(0) = T'(pi/4) = 0 by the even/mirror symmetries
    slp_[0] = slp_[n_ - 1] = 0;
    for (int j = 1; j < n_ - 1; ++j) slp_[j] = (val_[j + 1] - val_[j - 1]) / (2 * dx);
    tmax_ = *std::max_element(val_.begin(), val_.end());
    pairwise_sum dm;
    for (int a = 0; a < 8; ++a)
      dm.add(gl_integrate(a * (M_PI / 4), (a + 1) * (M_PI / 4), gl16(),
                          [&](double th) { return density(th, beta_); }));
    dmass_ = dm.total();
  }

  // sum_k (-1)^k e_k(|cos|,|sin|) / ((beta+k) m^{beta+k}), m = max(|cos|,|sin|):
  // the radial tent integral at unit cell side, upper limit 1/m
  static double density(double th, double beta) {
    double c = std::fabs(std::cos(th)), s = std::fabs(std::sin(th));
    double m = std::max(c, s);
    double mb = std::pow(m, beta);
    return 1 / (beta * mb) - (c + s) / ((beta + 1) * mb * m) + (c * s) / ((beta + 2) * mb * m * m);
  }

  double query(double g0, double g1) const {
    double th = std::atan2(std::fabs(g1), std::fabs(g0));
    if (th > M_PI / 4) th = M_PI / 2 - th;
    th = std::clamp(th, 0.0, M_PI / 4);
    const double dx = (M_PI / 4) / (n_ - 1);
    int j = std::min(static_cast<int>(th / dx), n_ - 2);
    double t = th / dx - j;
    double v0 = val_[j], v1 = val_[j + 1], m0 = slp_[j] * dx, m1 = slp_[j + 1] * dx;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * v1 +
           (t3 - t2) * m1;
  }

  double tmax() const { return tmax_; }
  double direction_free_mass() const { return dmass_; }  // int density (|ghat.w|^p bounded by 1)

 private:
  static constexpr int n_ = 257;
  double beta_;
  std::array<double, n_> val_{}, slp_{};
  double tmax_ = 0, dmass_ = 0;
};

// Direct angular integration fallbacks for cells whose radial cutoff bites
// (u = min(a/m, cutoff)) and for N == 3. ghat == nullptr bounds |ghat.w|^p by 1.
inline double tent_angular_2d(const Vec<2>* ghat, double a, double cutoff, double beta, double p) {
  double tg = ghat ? std::atan2((*ghat)[1], (*ghat)[0]) : 0.0;
  std::vector<double> bp;
  for (int k = 0; k <= 8; ++k) bp.push_back(k * (M_PI / 4));
  if (ghat) {
    bp.push_back(std::fmod(tg + M_PI / 2 + 2 * M_PI, 2 * M_PI));
    bp.push_back(std::fmod(tg + 3 * M_PI / 2 + 2 * M_PI, 2 * M_PI));
    std::sort(bp.begin(), bp.end());
  }
  pairwise_sum total;
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    if (bp[k + 1] - bp[k] < 1e-14) continue;
    total.add(gl_integrate(bp[k], bp[k + 1], gl16(), [&](double th) {
      double c = std::cos(th), s = std::sin(th);
      double m = std::max(std::fabs(c), std::fabs(s));
      double u = std::min(a / m, cutoff);
      double ang = ghat ? power_abs(c * std::cos(tg) + s * std::sin(tg), p) : 1.0;
      return ang * tent_radial<2>({std::fabs(c), std::fabs(s)}, a, u, beta);
    }));
  }
  return total.total();
}

inline double tent_angular_3d(const Vec<3>* ghat, double a, double cutoff, double beta, double p) {
  const auto& g = gl16();
  const int naz = 32;
  pairwise_sum total;
  for (std::size_t iq = 0; iq < g.x.size(); ++iq) {
    double cz = g.x[iq];  // polar cosine on [-1,1]
    double sz = std::sqrt(std::max(0.0, 1 - cz * cz));
    for (int ja = 0; ja < naz; ++ja) {
      double phi = (ja + 0.5) * (2 * M_PI / naz);
      Vec<3> w{sz * std::cos(phi), sz * std::sin(phi), cz};
      double m = std::max({std::fabs(w[0]), std::fabs(w[1]), std::fabs(w[2])});
      double u = std::min(a / m, cutoff);
      double ang = ghat ? power_abs(dot(*ghat, w), p) : 1.0;
      total.add(g.w[iq] * (2 * M_PI / naz) * ang *
                tent_radial<3>({std::fabs(w[0]), std::fabs(w[1]), std::fabs(w[2])}, a, u, beta));
    }
  }
  return total.total();
}

// ----------------------------------------------------- pair-cell averages

// A(delta; q) = int_{R^N} prod_d T(u_d - delta_d) |u|^q du for unit cells at
// integer separation delta (T the unit tent, the cell-difference density).
// Used to integrate the radial kernel exactly across a whole cell pair while
// the directional factor |f(x)-f(y)|^p / |x-y|^p is treated as slowly varying.

// 1-D: T-weighted power moments telescope through the second antiderivative.
inline double pair_overlap_1d(int delta, double q) {
  auto g2 = [&](double u) { return std::pow(u, q + 2) / ((q + 1) * (q + 2)); };
  double d = static_cast<double>(delta);
  return g2(d + 1) - 2 * g2(d) + g2(d - 1);
}

// 2-D: polar decomposition. Per direction the tent product is piecewise
// linear-in-rho per axis, so each radial piece is a polynomial against
// rho^{q+1} and integrates in closed form; the angular integral is smooth
// between the breakpoint directions through the tent corners.
inline double pair_overlap_2d(int d0i, int d1i, double q) {
  const double d0 = d0i, d1 = d1i;
  std::vector<double> th{-M_PI / 2, 0.0, M_PI / 2};
  for (int sa = -1; sa <= 1; ++sa)
    for (int sb = -1; sb <= 1; ++sb) {
      th.push_back(std::atan2(d1 + sb, d0 + sa));
      th.push_back(std::atan2(-(d1 + sb), d0 + sa));
    }
  std::sort(th.begin(), th.end());
  const auto& rule = gl16();
  pairwise_sum total;
  for (std::size_t a = 0; a + 1 < th.size(); ++a) {
    if (th[a + 1] - th[a] < 1e-12) continue;
    total.add(gl_integrate(th[a], th[a + 1], rule, [&](double theta) {
      const double w[2] = {std::cos(theta), std::sin(theta)};
      const double del[2] = {d0, d1};
      double lo = 0, hi = std::numeric_limits<double>::infinity();
      double kink[2];
      int nk = 0;
      for (int d = 0; d < 2; ++d) {
        if (del[d] == 0) {
          if (w[d] != 0) hi = std::min(hi, 1 / std::fabs(w[d]));
        } else {
          if (w[d] <= 0) return 0.0;
          lo = std::max(lo, (del[d] - 1) / w[d]);
          hi = std::min(hi, (del[d] + 1) / w[d]);
          kink[nk++] = del[d] / w[d];
        }
      }
      if (hi <= lo) return 0.0;
      double pts[4] = {lo, hi, hi, hi};
      int np = 2;
      for (int k = 0; k < nk; ++k)
        if (kink[k] > lo && kink[k] < hi) pts[np++] = kink[k];
      std::sort(pts, pts + np);
      double acc = 0;
      for (int piece = 0; piece + 1 < np; ++piece) {
        double r0 = pts[piece], r1 = pts[piece + 1];
        if (r1 - r0 < 1e-15) continue;
        double rm = 0.5 * (r0 + r1);
        // each tent factor is linear on the piece: A_d + B_d rho
        double c0 = 1, c1 = 0, c2 = 0;
        for (int d = 0; d < 2; ++d) {
          double sgn = rm * w[d] - del[d] >= 0 ? 1.0 : -1.0;
          double A = 1 + sgn * del[d], B = -sgn * w[d];
          double n0 = c0 * A, n1 = c1 * A + c0 * B, n2 = c2 * A + c1 * B;
          c0 = n0;
          c1 = n1;
          c2 = n2;
        }
        const double cs[3] = {c0, c1, c2};
        for (int k = 0; k < 3; ++k) {
          double ex = q + 2 + k;
          acc += cs[k] * (std::pow(r1, ex) - std::pow(r0, ex)) / ex;
        }
      }
      return acc;
    }));
  }
  return total.total();
}

// ----------------------------------------------------- near-pair recursion

// Context shared by the near-diagonal recursion. Subdivided cells stay on the
// global lattice (children of k are 2k and 2k+1 per axis), so a midpoint pair
// is described by its depth and the integer squared separation sep2, and the
// kernel becomes a per-depth table lookup:
//   ktab[t][m] = prefactor * (a_t^2 m)^(-exponent/2) * a_t^(2N).
// Children of near parents satisfy sep2 <= 50, so the deep tables are tiny.
template <int N>
struct near_ctx {
  const ScalarField<N>* f = nullptr;
  double p = 2;
  double curv = 0;   // midpoint curvature proxy coefficient e(e+1)N/12
  double curva = 0;  // residual proxy for the pair-averaged kernel path
  int depth = 4;
  std::array<double, 12> a{};       // cell side per depth
  std::array<double, 12> cutsep{};  // drop a pair iff sep2 >= cutsep[t]
  std::array<double, 12> asep{};    // averaged kernel valid iff sep2 <= asep[t]
  std::array<std::vector<double>, 12> ktab;
  std::array<std::vector<double>, 12> atab;  // by separation class, slope fields only
};

// Separation class of a near pair: the sorted absolute integer offset, packed
// into a small index. 0 means "outside the tabulated range".
template <int N>
inline std::size_t pair_class(const std::array<std::int64_t, N>& dv) {
  if constexpr (N == 1) {
    std::int64_t a0 = dv[0] < 0 ? -dv[0] : dv[0];
    return a0 <= 7 ? static_cast<std::size_t>(a0) : 0;
  } else if constexpr (N == 2) {
    std::int64_t a0 = dv[0] < 0 ? -dv[0] : dv[0];
    std::int64_t a1 = dv[1] < 0 ? -dv[1] : dv[1];
    if (a0 < a1) std::swap(a0, a1);
    return a0 * a0 + a1 * a1 <= 50 ? static_cast<std::size_t>(a0 * 8 + a1) : 0;
  } else {
    (void)dv;
    return 0;  // 3-D keeps the midpoint kernel
  }
}

// slope_model enables the pair-averaged kernel tables: exact radial kernel
// mass per cell pair with |f(x)-f(y)|^p / |x-y|^p as the smooth factor. That
// factorization is only sound for fields with a gradient; indicator jumps
// keep the plain midpoint kernel.
template <int N>
near_ctx<N> make_near_ctx(const ScalarField<N>& f, const PairWeight& w, double pitch, int depth,
                          std::int64_t top_max_sep2, bool slope_model) {
  near_ctx<N> c;
  c.f = &f;
  c.p = w.p;
  c.curv = w.exponent * (w.exponent + 1) * N / 12.0;
  c.curva = w.p * (w.p + 1 + 2 * w.exponent) * N / 24.0;
  c.depth = depth;
  const double cut2 =
      std::isfinite(w.cutoff) ? w.cutoff * w.cutoff : std::numeric_limits<double>::infinity();
  const double he = 0.5 * w.exponent;
  std::vector<double> abase;  // A(class) * m^{-p/2}, depth independent
  if (slope_model && N <= 2) {
    const double q = w.p - w.exponent;  // = beta - N, so q + N > 0
    if (N == 1) {
      abase.assign(8, 0.0);
      for (int d0 = 1; d0 <= 7; ++d0)
        abase[static_cast<std::size_t>(d0)] =
            pair_overlap_1d(d0, q) * std::pow(static_cast<double>(d0 * d0), -0.5 * w.p);
    } else {
      abase.assign(64, 0.0);
      for (int d0 = 1; d0 <= 7; ++d0)
        for (int d1 = 0; d1 <= d0; ++d1) {
          if (d0 * d0 + d1 * d1 > 50) continue;
          abase[static_cast<std::size_t>(d0 * 8 + d1)] =
              pair_overlap_2d(d0, d1, q) *
              std::pow(static_cast<double>(d0 * d0 + d1 * d1), -0.5 * w.p);
        }
    }
  }
  for (int t = 0; t <= depth; ++t) {
    double a = std::ldexp(pitch, -t);
    c.a[t] = a;
    c.cutsep[t] = cut2 / (a * a);
    if (std::isfinite(w.cutoff)) {
      double root = w.cutoff / a - std::sqrt(static_cast<double>(N));
      c.asep[t] = root > 0 ? root * root : 0.0;
    } else {
      c.asep[t] = std::numeric_limits<double>::infinity();
    }
    double vol = 1;
    for (int i = 0; i < N; ++i) vol *= a;
    std::int64_t lim = t == 0 ? std::max<std::int64_t>(top_max_sep2, 50) : 50;
    if (std::isfinite(c.cutsep[t]))
      lim = std::min(lim, static_cast<std::int64_t>(c.cutsep[t]) + 1);
    lim = std::max<std::int64_t>(lim, 1);
    auto& tab = c.ktab[t];
    tab.assign(static_cast<std::size_t>(lim) + 1, 0.0);
    for (std::int64_t m = 1; m <= lim; ++m)
      tab[static_cast<std::size_t>(m)] =
          w.prefactor * std::pow(a * a * static_cast<double>(m), -he) * vol * vol;
    if (!abase.empty()) {
      double scale = w.prefactor * std::pow(a, 2 * N - w.exponent);
      auto& at = c.atab[t];
      at.resize(abase.size());
      for (std::size_t k = 0; k < abase.size(); ++k) at[k] = scale * abase[k];
    }
  }
  return c;
}

// Field values at subcell centers, layered by depth; layer[t] holds the
// 2^(N t) child-center values per top cell, axis 0 fastest. Falls back to
// direct evaluation when the cache would not fit.
template <int N>
struct subcache {
  std::array<std::vector<double>, 12> layer;
  bool direct = false;

  double value(const near_ctx<N>& c, std::size_t i, const std::array<std::int64_t, N>& ktop,
               const std::array<int, N>& u, int t) const {
    if (direct || t == 0) {
      if (!direct) return layer[0][i];
      Vec<N> x;
      for (int d = 0; d < N; ++d)
        x[d] = (static_cast<double>(ktop[d] * (std::int64_t{1} << t) + u[d]) + 0.5) * c.a[t];
      return c.f->eval(x);
    }
    std::size_t off = 0;
    for (int d = N - 1; d >= 0; --d)
      off = (off << t) | static_cast<std::size_t>(u[d]);
    return layer[t][(i << (N * t)) + off];
  }
};

template <int N>
subcache<N> build_subcache(const near_ctx<N>& c, const QuadratureMesh<N>& mesh,
                           std::vector<double> top_values) {
  subcache<N> sc;
  sc.layer[0] = std::move(top_values);
  const std::size_t M = mesh.cells.size();
  double budget = 0;
  for (int t = 1; t <= c.depth; ++t) budget += static_cast<double>(M) * std::ldexp(1.0, N * t);
  if (budget > 3.2e7) {  // ~256 MB of doubles; fall back to direct evaluation
    sc.direct = true;
    return sc;
  }
  for (int t = 1; t <= c.depth; ++t) {
    auto& L = sc.layer[t];
    const std::size_t S = std::size_t{1} << (N * t);
    L.resize(M << (N * t));
    const std::size_t mask = (std::size_t{1} << t) - 1;
    run_blocks((M + 63) / 64, [&](std::size_t b) {
      std::size_t i0 = b * 64, i1 = std::min(M, i0 + 64);
      for (std::size_t i = i0; i < i1; ++i) {
        const auto& k = mesh.cells[i];
        for (std::size_t idx = 0; idx < S; ++idx) {
          Vec<N> x;
          for (int d = 0; d < N; ++d) {
            auto u = static_cast<std::int64_t>((idx >> (d * t)) & mask);
            x[d] = (static_cast<double>(k[d] * (std::int64_t{1} << t) + u) + 0.5) * c.a[t];
          }
          L[(i << (N * t)) + idx] = c.f->eval(x);
        }
      }
    });
  }
  return sc;
}

template <int N>
inline void near_emit(const near_ctx<N>& c, const subcache<N>& sa, std::size_t ia,
                      const std::array<std::int64_t, N>& katop, const std::array<int, N>& ua,
                      const subcache<N>& sb, std::size_t ib,
                      const std::array<std::int64_t, N>& kbtop, const std::array<int, N>& ub,
                      int t, std::int64_t sep2, double mult, pairwise_sum& val,
                      pairwise_sum& er) {
  if (static_cast<double>(sep2) >= c.cutsep[t]) return;
  double df = sa.value(c, ia, katop, ua, t) - sb.value(c, ib, kbtop, ub, t);
  if (df == 0) return;
  double w = mult * power_abs(df, c.p);
  std::size_t cls = 0;
  if (!c.atab[t].empty() && static_cast<double>(sep2) <= c.asep[t]) {
    std::array<std::int64_t, N> dv;
    for (int d = 0; d < N; ++d)
      dv[d] = (kbtop[d] - katop[d]) * (std::int64_t{1} << t) + (ub[d] - ua[d]);
    cls = pair_class<N>(dv);
  }
  if (cls != 0) {
    double term = w * c.atab[t][cls];
    val.add(term);
    er.add(term * c.curva / static_cast<double>(sep2));
  } else {
    double term = w * c.ktab[t][static_cast<std::size_t>(sep2)];
    val.add(term);
    er.add(term * c.curv / static_cast<double>(sep2));
  }
}

// mult carries the unordered-pair doubling (2 within one mesh, 1 across two
// domains); subdividing never changes it, since the ordered double sum over
// child pairs covers the parent product exactly once.
template <int N>
void near_rec(const near_ctx<N>& c, const subcache<N>& sa, std::size_t ia,
              const std::array<std::int64_t, N>& katop, const std::array<int, N>& ua,
              const subcache<N>& sb, std::size_t ib, const std::array<std::int64_t, N>& kbtop,
              const std::array<int, N>& ub, int t, std::int64_t sep2, double mult,
              pairwise_sum& val, pairwise_sum& er) {
  if (t == c.depth) {
    near_emit<N>(c, sa, ia, katop, ua, sb, ib, kbtop, ub, t, sep2, mult, val, er);
    return;
  }
  constexpr int C = 1 << N;
  std::array<std::int64_t, N> dt;
  for (int d = 0; d < N; ++d) dt[d] = kbtop[d] - katop[d];
  for (int ca = 0; ca < C; ++ca) {
    std::array<int, N> ua2;
    for (int d = 0; d < N; ++d) ua2[d] = 2 * ua[d] + ((ca >> d) & 1);
    for (int cb = 0; cb < C; ++cb) {
      std::array<int, N> ub2;
      std::int64_t s2 = 0;
      for (int d = 0; d < N; ++d) {
        ub2[d] = 2 * ub[d] + ((cb >> d) & 1);
        std::int64_t dd = dt[d] * (std::int64_t{1} << (t + 1)) + (ub2[d] - ua2[d]);
        s2 += dd * dd;
      }
      if (s2 > 4)
        near_emit<N>(c, sa, ia, katop, ua2, sb, ib, kbtop, ub2, t + 1, s2, mult, val, er);
      else
        near_rec<N>(c, sa, ia, katop, ua2, sb, ib, kbtop, ub2, t + 1, s2, mult, val, er);
    }
  }
}

// ------------------------------------------------------------ pair engine

template <int N>
class pair_engine {
 public:
  struct totals {
    double value = 0, diag = 0, err = 0;
  };

  pair_engine(const QuadratureMesh<N>& mesh, const ScalarField<N>& f, const PairWeight& w)
      : mesh_(mesh), f_(f), w_(w) {
    h_ = mesh.pitch;
    cut2_ = std::isfinite(w.cutoff) ? w.cutoff * w.cutoff
                                    : std::numeric_limits<double>::infinity();
    const std::size_t M = mesh.cells.size();
    centers_.resize(M);
    std::vector<double> fv(M);
    maxf_ = 0;
    for (std::size_t i = 0; i < M; ++i) {
      centers_[i] = mesh.center(i);
      fv[i] = f.eval(centers_[i]);
      maxf_ = std::max(maxf_, std::fabs(fv[i]));
    }
    std::int64_t tms = 0;
    if (M > 0) {
      std::array<std::int64_t, N> mn = mesh.cells[0], mx = mesh.cells[0];
      for (const auto& k : mesh.cells)
        for (int d = 0; d < N; ++d) {
          mn[d] = std::min(mn[d], k[d]);
          mx[d] = std::max(mx[d], k[d]);
        }
      for (int d = 0; d < N; ++d) tms += (mx[d] - mn[d]) * (mx[d] - mn[d]);
    }
    smooth_ = f.regularity != Regularity::indicator;
    ctx_ = make_near_ctx(f, w, mesh.pitch, mesh.refinement_depth, tms, smooth_);
    if (smooth_) {
      cache_ = build_subcache(ctx_, mesh, std::move(fv));
    } else {
      cache_.layer[0] = std::move(fv);
      info_ = f.indicator.get();
      require(info_ != nullptr, errc::invalid_parameter,
              "pair quadrature: indicator field carries no set data");
      double margin = N + 1 - w.exponent;  // interface pairs integrate iff exponent < N+1
      if (margin > 1e-9) {
        flat_ = true;
        double u = std::min(2 * h_, w.cutoff);
        double area_coeff = 1;
        for (int i = 0; i < N - 1; ++i) area_coeff *= h_;
        flat_coeff_ = w.prefactor * power_abs(info_->jump, w.p) * sphere_area(N) * kappa(N, 1) *
                      std::pow(u, margin) / margin * area_coeff;
      }
      // otherwise the interface is non-integrable: keep raw near midpoints so
      // refinement shows the divergence honestly
    }
    if (N == 2 && smooth_) {
      double ad = ctx_.a[ctx_.depth];
      if (cut2_ >= 2 * ad * ad) table_.emplace(w.beta, w.p);
    }
  }

  totals run() const {
    const std::size_t M = mesh_.cells.size();
    const std::size_t B = (M + 63) / 64;
    const auto& fv = cache_.layer[0];
    std::vector<double> vals(B, 0.0), dgs(B, 0.0), ers(B, 0.0);
    run_blocks(B, [&](std::size_t b) {
      pairwise_sum val, dg, er;
      std::size_t i0 = b * 64, i1 = std::min(M, i0 + 64);
      constexpr std::array<int, N> u0{};
      for (std::size_t i = i0; i < i1; ++i) {
        if (smooth_) {
          self_rec(i, mesh_.cells[i], u0, 0, val, dg, er);
        } else if (flat_) {
          double t = flat_cell_term(i);
          if (t > 0) {
            val.add(t);
            dg.add(t);
            er.add(0.3 * t);  // interface-model mismatch allowance
          }
        }
        for (std::size_t j = i + 1; j < M; ++j) {
          std::array<std::int64_t, N> dv;
          std::int64_t sep2 = 0;
          for (int d = 0; d < N; ++d) {
            dv[d] = mesh_.cells[j][d] - mesh_.cells[i][d];
            sep2 += dv[d] * dv[d];
          }
          if (sep2 > 4) {
            if (static_cast<double>(sep2) >= ctx_.cutsep[0]) continue;
            double df = fv[i] - fv[j];
            if (df == 0) continue;
            double w = 2 * power_abs(df, w_.p);
            std::size_t cls = 0;
            if (sep2 <= 50 && !ctx_.atab[0].empty() &&
                static_cast<double>(sep2) <= ctx_.asep[0])
              cls = pair_class<N>(dv);
            if (cls != 0) {
              double term = w * ctx_.atab[0][cls];
              val.add(term);
              er.add(term * ctx_.curva / static_cast<double>(sep2));
            } else {
              double term = w * ctx_.ktab[0][static_cast<std::size_t>(sep2)];
              val.add(term);
              er.add(term * ctx_.curv / static_cast<double>(sep2));
            }
          } else if (smooth_) {
            near_rec<N>(ctx_, cache_, i, mesh_.cells[i], u0, cache_, j, mesh_.cells[j], u0, 0, sep2,
                     2.0, val, er);
          } else if (!flat_) {
            double df = fv[i] - fv[j];
            if (df == 0) continue;
            double term =
                2 * power_abs(df, w_.p) * ctx_.ktab[0][static_cast<std::size_t>(sep2)];
            val.add(term);
            er.add(term);  // the whole model-free near zone is uncertain
          }
          // flat model active: near interface pairs are covered by the
          // crossing model, same-side near pairs vanish
        }
      }
      vals[b] = val.total();
      dgs[b] = dg.total();
      ers[b] = er.total();
    });
    totals t;
    t.value = fold_pairwise(vals);
    t.diag = fold_pairwise(dgs);
    t.err = fold_pairwise(ers);
    if (std::isfinite(w_.cutoff)) {
      double diag_w = dist(mesh_.window.lo, mesh_.window.hi);
      if (w_.cutoff < diag_w) {
        // midpoint misassignment across the cutoff sphere: one shell of cells
        double shell =
            sphere_area(N) * std::pow(w_.cutoff, N - 1) * h_ * std::sqrt(static_cast<double>(N));
        t.err += w_.prefactor * std::pow(w_.cutoff, -w_.exponent) * power_abs(2 * maxf_, w_.p) *
                 shell * mesh_.volume();
      }
    }
    return t;
  }

  // Staircase boundary-layer proxy: the full kernel rows of all boundary
  // cells, the mass a half-cell membership error can add or remove.
  double boundary_row_error() const {
    const std::size_t M = mesh_.cells.size();
    const auto& fv = cache_.layer[0];
    std::vector<std::size_t> bidx;
    for (std::size_t i = 0; i < M; ++i)
      if (mesh_.bdist[i] <= h_) bidx.push_back(i);
    if (bidx.empty()) return 0;
    const std::size_t B = (bidx.size() + 63) / 64;
    std::vector<double> ers(B, 0.0);
    run_blocks(B, [&](std::size_t b) {
      pairwise_sum er;
      std::size_t i0 = b * 64, i1 = std::min(bidx.size(), i0 + 64);
      for (std::size_t bi = i0; bi < i1; ++bi) {
        std::size_t i = bidx[bi];
        pairwise_sum row;
        for (std::size_t j = 0; j < M; ++j) {
          if (j == i) continue;
          std::int64_t sep2 = 0;
          for (int d = 0; d < N; ++d) {
            std::int64_t dd = mesh_.cells[j][d] - mesh_.cells[i][d];
            sep2 += dd * dd;
          }
          if (static_cast<double>(sep2) >= ctx_.cutsep[0]) continue;
          double df = fv[i] - fv[j];
          if (df == 0) continue;
          row.add(power_abs(df, w_.p) * ctx_.ktab[0][static_cast<std::size_t>(sep2)]);
        }
        if (smooth_) {
          Vec<N> g = f_.grad(centers_[i]);
          double gn = norm(g);
          if (gn > 0) row.add(power_abs(gn, w_.p) * geometry_factor(g, gn, h_));
        } else if (flat_) {
          row.add(flat_cell_term(i));
        }
        er.add(row.total());
      }
      ers[b] = er.total();
    });
    return fold_pairwise(ers);
  }

 private:
  void self_rec(std::size_t i, const std::array<std::int64_t, N>& ktop,
                const std::array<int, N>& u, int t, pairwise_sum& val, pairwise_sum& dg,
                pairwise_sum& er) const {
    if (t == ctx_.depth) {
      add_self_model(ktop, u, t, val, dg, er);
      return;
    }
    constexpr int C = 1 << N;
    std::array<std::array<int, N>, C> ch;
    for (int c = 0; c < C; ++c)
      for (int d = 0; d < N; ++d) ch[c][d] = 2 * u[d] + ((c >> d) & 1);
    for (int c = 0; c < C; ++c) self_rec(i, ktop, ch[c], t + 1, val, dg, er);
    for (int c1 = 0; c1 < C; ++c1)
      for (int c2 = c1 + 1; c2 < C; ++c2) {
        std::int64_t s2 = 0;
        for (int d = 0; d < N; ++d) {
          std::int64_t dd = ch[c2][d] - ch[c1][d];
          s2 += dd * dd;
        }
        near_rec<N>(ctx_, cache_, i, ktop, ch[c1], cache_, i, ktop, ch[c2], t + 1, s2, 2.0, val, er);
      }
  }

  void add_self_model(const std::array<std::int64_t, N>& ktop, const std::array<int, N>& u, int t,
                      pairwise_sum& val, pairwise_sum& dg, pairwise_sum& er) const {
    double a = ctx_.a[t];
    Vec<N> x;
    for (int d = 0; d < N; ++d)
      x[d] = (static_cast<double>(ktop[d] * (std::int64_t{1} << t) + u[d]) + 0.5) * a;
    Vec<N> g = f_.grad(x);
    double gn = norm(g);
    double G = geometry_factor(g, gn, a);
    if (gn > 0) {
      double base = power_abs(gn, w_.p) * G;
      val.add(base);
      dg.add(base);
    }
    // remainder bound from the gradient variation across the cell
    double v = 0;
    for (int c = 0; c < (1 << N); ++c) {
      Vec<N> y = x;
      for (int d = 0; d < N; ++d) y[d] += ((c >> d) & 1) ? 0.5 * a : -0.5 * a;
      v = std::max(v, dist(f_.grad(y), g));
    }
    if (v > 0) er.add((power_abs(gn + v, w_.p) - power_abs(gn, w_.p)) * G);
  }

  // G such that the cell self-integral is |grad f|^p * G for a locally affine
  // field; gn == 0 falls back to the direction-free upper bound.
  double geometry_factor(const Vec<N>& g, double gn, double a) const {
    if constexpr (N == 1) {
      double u = std::min(a, w_.cutoff);
      return w_.prefactor * 2 * tent_radial<1>({1.0}, a, u, w_.beta);
    } else if constexpr (N == 2) {
      if (table_ && w_.cutoff >= a * 1.4142135623730951) {
        double tv = gn > 0 ? table_->query(g[0], g[1]) : table_->direction_free_mass();
        return w_.prefactor * std::pow(a, 2 + w_.beta) * tv;
      }
      if (gn > 0) {
        Vec<2> ghat{g[0] / gn, g[1] / gn};
        return w_.prefactor * tent_angular_2d(&ghat, a, w_.cutoff, w_.beta, w_.p);
      }
      return w_.prefactor * tent_angular_2d(nullptr, a, w_.cutoff, w_.beta, w_.p);
    } else {
      if (gn > 0) {
        Vec<3> ghat{g[0] / gn, g[1] / gn, g[2] / gn};
        return w_.prefactor * tent_angular_3d(&ghat, a, w_.cutoff, w_.beta, w_.p);
      }
      return w_.prefactor * tent_angular_3d(nullptr, a, w_.cutoff, w_.beta, w_.p);
    }
  }

  // Flat-interface crossing model: a cell the interface crosses contributes
  // the half-space pair integral up to radius u, |jump|^p * sigma * kappa(N,1)
  // * u^{N+1-e}/(N+1-e), times its interface patch area h^{N-1}/|nu|_1.
  // Summed over crossed cells the patch areas reproduce the interface measure
  // exactly to first order (co-area of the lattice crossing count).
  double flat_cell_term(std::size_t i) const {
    const Vec<N>& x = centers_[i];
    double bd = info_->set.boundary_distance(x);
    if (bd > 0.5 * h_ * std::sqrt(static_cast<double>(N)) + 1e-12) return 0;
    double sd = info_->set.inside(x) ? -bd : bd;
    Vec<N> nu{};
    double step = 0.25 * h_;
    for (int d = 0; d < N; ++d) {
      Vec<N> xp = x, xm = x;
      xp[d] += step;
      xm[d] -= step;
      nu[d] = (signed_dist(xp) - signed_dist(xm)) / (2 * step);
    }
    double nn = norm(nu);
    double l1 = 1;
    if (nn >= 1e-9) {
      l1 = 0;
      for (int d = 0; d < N; ++d) l1 += std::fabs(nu[d]) / nn;
    }
    // half-open band: an interface sitting exactly on a cell face ties both
    // neighbors at |sd| = T, and counting both would double the crossing
    double T = 0.5 * h_ * l1;
    if (sd < -T || sd >= T) return 0;
    return flat_coeff_ / l1;
  }

  double signed_dist(const Vec<N>& y) const {
    double b = info_->set.boundary_distance(y);
    return info_->set.inside(y) ? -b : b;
  }

  const QuadratureMesh<N>& mesh_;
  const ScalarField<N>& f_;
  PairWeight w_;
  near_ctx<N> ctx_;
  subcache<N> cache_;
  double h_ = 0;
  double cut2_ = 0;
  double maxf_ = 0;
  std::vector<Vec<N>> centers_;
  bool smooth_ = true;
  bool flat_ = false;
  const IndicatorInfo<N>* info_ = nullptr;
  double flat_coeff_ = 0;
  std::optional<angular_table> table_;
};

// Truncation-tail bound for a clipped unbounded domain: pairs with one point
// beyond the window satisfy |f(x)-f(y)| = |f(x)| (the far point is outside the
// support), so both orders together are below 2 ||f||_inf^p vol(supp) tail(gap).
template <int N>
double clipped_tail_gap(const ScalarField<N>& f, const QuadratureMesh<N>& mesh) {
  require(std::isfinite(f.support_radius) && f.sup_bound.has_value(), errc::unbounded_domain,
          "clipped unbounded domain requires a compactly supported field with a sup bound");
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    gap = std::min(gap, mesh.window.hi[i] - f.support_radius);
    gap = std::min(gap, -mesh.window.lo[i] - f.support_radius);
  }
  require(gap > 0, errc::unbounded_domain,
          "truncation window must strictly contain the field support");
  return gap;
}

}  // namespace detail

// ------------------------------------------------------------- operations

// int_{|y-x| > d} |y-x|^{-(N+sp)} dy = sigma_{N-1} d^{-sp} / (sp); the point x
// only anchors the exclusion ball, the value is translation invariant.
template <std::size_t M>
double tail_correction(const Vec<M>& x, double d_exclusion, const KernelParams& params) {
  (void)x;
  params.validate();
  require(params.dim == static_cast<int>(M), errc::dimension_mismatch,
          "tail_correction: dimension mismatch");
  require(d_exclusion > 0, errc::invalid_parameter,
          "tail_correction: exclusion radius must be positive");
  double sp = params.s * params.p;
  return sphere_area(static_cast<int>(M)) * std::pow(d_exclusion, -sp) / sp;
}

template <int N>
SeminormEstimate local_seminorm_w1p(const ScalarField<N>& f, const Domain<N>& d, double p,
                                    const QuadratureMesh<N>& mesh) {
  (void)d;
  require(p >= 1, errc::invalid_parameter, "local_seminorm_w1p: p must be >= 1");
  require(f.regularity != Regularity::indicator, errc::unsupported_operation,
          "local_seminorm_w1p: indicator fields have no pointwise gradient (use bv_seminorm)");
  const std::size_t M = mesh.cells.size();
  const std::size_t B = (M + 63) / 64;
  std::vector<double> vals(B, 0.0), ers(B, 0.0);
  double wc = mesh.cell_weight();
  run_blocks(B, [&](std::size_t b) {
    pairwise_sum val, er;
    std::size_t i0 = b * 64, i1 = std::min(M, i0 + 64);
    for (std::size_t i = i0; i < i1; ++i) {
      Vec<N> c = mesh.center(i);
      double t = detail::power_abs(norm(f.grad(c)), p) * wc;
      if (t != 0) val.add(t);
      if (mesh.bdist[i] <= mesh.pitch && t != 0) er.add(t);
    }
    vals[b] = val.total();
    ers[b] = er.total();
  });
  SeminormEstimate e;
  e.value = fold_pairwise(vals);
  e.error_estimate = fold_pairwise(ers);
  e.mesh_pitch = mesh.pitch;
  e.s = 1;
  e.p = p;
  e.diagonal_contribution = 0;
  return e;
}

template <int N>
SeminormEstimate gagliardo_seminorm(const ScalarField<N>& f, const Domain<N>& d,
                                    const KernelParams& params, const QuadratureMesh<N>& mesh) {
  params.validate();
  require(params.dim == N, errc::dimension_mismatch, "gagliardo_seminorm: dimension mismatch");
  require(params.s <= 0.999, errc::ill_conditioned,
          "gagliardo_seminorm: s beyond 0.999 is refused");
  require((1 - params.s) * params.p >= 1e-6, errc::ill_conditioned,
          "gagliardo_seminorm: (1-s)p below 1e-6 is refused");
  require(!mesh.cells.empty() && mesh.min_across >= 4, errc::mesh_too_coarse,
          "gagliardo_seminorm: fewer than 4 cells across the meshed window");
  detail::PairWeight w;
  w.exponent = params.exponent();
  w.prefactor = 1;
  w.p = params.p;
  w.beta = (1 - params.s) * params.p;
  double tail = 0;
  if (d.unbounded) {
    double gap = detail::clipped_tail_gap(f, mesh);
    double volsupp = std::min(mesh.volume(), std::pow(2 * f.support_radius, N));
    tail = 2 * detail::power_abs(*f.sup_bound, params.p) * volsupp *
           tail_correction(Vec<N>{}, gap, params);
  }
  detail::pair_engine<N> eng(mesh, f, w);
  auto t = eng.run();
  SeminormEstimate e;
  e.value = t.value;
  e.error_estimate = t.err + eng.boundary_row_error() + tail;
  e.mesh_pitch = mesh.pitch;
  e.s = params.s;
  e.p = params.p;
  e.diagonal_contribution = t.diag;
  return e;
}

template <int N>
SeminormEstimate cross_term(const ScalarField<N>& f, const Domain<N>& d1, const Domain<N>& d2,
                            const KernelParams& params, const QuadratureMesh<N>& m1,
                            const QuadratureMesh<N>& m2) {
  params.validate();
  require(params.dim == N, errc::dimension_mismatch, "cross_term: dimension mismatch");
  require(params.s <= 0.999 && (1 - params.s) * params.p >= 1e-6, errc::ill_conditioned,
          "cross_term: s too close to 1");
  require(!m1.cells.empty() && !m2.cells.empty(), errc::mesh_too_coarse,
          "cross_term: empty mesh");
  rng r(0x517cc1b727220a95ull);
  for (int k = 0; k < 4096; ++k) {
    auto x = r.point_in(d1.box);
    if (d1.inside(x) && d2.inside(x))
      fail(errc::domains_not_disjoint, "cross_term: sampled overlap between the domains");
    auto y = r.point_in(d2.box);
    if (d1.inside(y) && d2.inside(y))
      fail(errc::domains_not_disjoint, "cross_term: sampled overlap between the domains");
  }
  detail::PairWeight w;
  w.exponent = params.exponent();
  w.prefactor = 1;
  w.p = params.p;
  w.beta = (1 - params.s) * params.p;
  const bool same_pitch = m1.pitch == m2.pitch;
  const std::size_t M1 = m1.cells.size(), M2 = m2.cells.size();
  std::vector<Vec<N>> c1(M1), c2(M2);
  std::vector<double> f1(M1), f2(M2);
  for (std::size_t i = 0; i < M1; ++i) {
    c1[i] = m1.center(i);
    f1[i] = f.eval(c1[i]);
  }
  for (std::size_t j = 0; j < M2; ++j) {
    c2[j] = m2.center(j);
    f2[j] = f.eval(c2[j]);
  }
  std::int64_t tms = 0;
  {
    std::array<std::int64_t, N> mn = m1.cells[0], mx = m1.cells[0];
    for (const auto* mp : {&m1, &m2})
      for (const auto& k : mp->cells)
        for (int d = 0; d < N; ++d) {
          mn[d] = std::min(mn[d], k[d]);
          mx[d] = std::max(mx[d], k[d]);
        }
    for (int d = 0; d < N; ++d) tms += (mx[d] - mn[d]) * (mx[d] - mn[d]);
  }
  auto ctx = detail::make_near_ctx(f, w, m1.pitch, m1.refinement_depth, tms,
                                   f.regularity != Regularity::indicator);
  detail::subcache<N> direct;  // small cross meshes: evaluate subcells directly
  direct.direct = true;
  const double he = 0.5 * w.exponent;
  const double cut2 = std::isfinite(w.cutoff) ? w.cutoff * w.cutoff
                                              : std::numeric_limits<double>::infinity();
  double w1 = m1.cell_weight(), w2 = m2.cell_weight();
  double near2 = 4.001 * std::max(m1.pitch, m2.pitch) * std::max(m1.pitch, m2.pitch);
  const std::size_t B = (M1 + 63) / 64;
  std::vector<double> vals(B, 0.0), ers(B, 0.0);
  run_blocks(B, [&](std::size_t b) {
    pairwise_sum val, er;
    constexpr std::array<int, N> u0{};
    std::size_t i0 = b * 64, i1 = std::min(M1, i0 + 64);
    for (std::size_t i = i0; i < i1; ++i) {
      for (std::size_t j = 0; j < M2; ++j) {
        if (same_pitch) {
          std::array<std::int64_t, N> dv;
          std::int64_t sep2 = 0;
          for (int d = 0; d < N; ++d) {
            dv[d] = m2.cells[j][d] - m1.cells[i][d];
            sep2 += dv[d] * dv[d];
          }
          require(sep2 != 0, errc::domains_not_disjoint, "cross_term: the meshes share a cell");
          if (sep2 > 4) {
            if (static_cast<double>(sep2) >= ctx.cutsep[0]) continue;
            double df = f1[i] - f2[j];
            if (df == 0) continue;
            double pw = detail::power_abs(df, w.p);
            std::size_t cls = 0;
            if (sep2 <= 50 && !ctx.atab[0].empty() &&
                static_cast<double>(sep2) <= ctx.asep[0])
              cls = detail::pair_class<N>(dv);
            if (cls != 0) {
              double term = pw * ctx.atab[0][cls];
              val.add(term);
              er.add(term * ctx.curva / static_cast<double>(sep2));
            } else {
              double term = pw * ctx.ktab[0][static_cast<std::size_t>(sep2)];
              val.add(term);
              er.add(term * ctx.curv / static_cast<double>(sep2));
            }
          } else {
            detail::near_rec<N>(ctx, direct, i, m1.cells[i], u0, direct, j, m2.cells[j], u0, 0, sep2,
                             1.0, val, er);
          }
        } else {
          double r2 = dist2(c1[i], c2[j]);
          require(r2 > near2, errc::invalid_parameter,
                  "cross_term: touching domains require equal mesh pitches");
          if (r2 >= cut2) continue;
          double df = f1[i] - f2[j];
          if (df == 0) continue;
          double term = w.prefactor * detail::power_abs(df, w.p) * std::pow(r2, -he) * w1 * w2;
          val.add(term);
          er.add(term * ctx.curv * (m1.pitch * m1.pitch) / r2);
        }
      }
    }
    vals[b] = val.total();
    ers[b] = er.total();
  });
  SeminormEstimate e;
  e.value = fold_pairwise(vals);
  e.error_estimate = fold_pairwise(ers);
  e.mesh_pitch = std::max(m1.pitch, m2.pitch);
  e.s = params.s;
  e.p = params.p;
  e.diagonal_contribution = 0;
  return e;
}

template <int N>
SeminormEstimate mollified_functional(const ScalarField<N>& f, const Domain<N>& d,
                                      const MollifierParams& moll, double p,
                                      const QuadratureMesh<N>& mesh) {
  moll.validate();
  require(moll.dim == N, errc::dimension_mismatch, "mollified_functional: dimension mismatch");
  require(moll.p == p, errc::invalid_parameter,
          "mollified_functional: p must match the mollifier's p");
  require(moll.eps * p >= 1e-6, errc::ill_conditioned,
          "mollified_functional: eps*p below 1e-6 is refused");
  require(!mesh.cells.empty() && mesh.min_across >= 4, errc::mesh_too_coarse,
          "mollified_functional: fewer than 4 cells across the meshed window");
  if (d.unbounded) {
    // the kernel vanishes beyond R, so clipping is exact once the window
    // clears the support by the mollifier range
    double gap = detail::clipped_tail_gap(f, mesh);
    require(gap >= moll.R, errc::unbounded_domain,
            "mollified_functional: truncation window must clear the support by R");
  }
  detail::PairWeight w;
  w.exponent = N + (1 - moll.eps) * p;
  w.prefactor = moll.prefactor();
  w.cutoff = moll.R;
  w.p = p;
  w.beta = moll.eps * p;
  detail::pair_engine<N> eng(mesh, f, w);
  auto t = eng.run();
  SeminormEstimate e;
  e.value = t.value;
  e.error_estimate = t.err + eng.boundary_row_error();
  e.mesh_pitch = mesh.pitch;
  e.s = 1 - moll.eps;
  e.p = p;
  e.diagonal_contribution = t.diag;
  return e;
}

// Total-variation seminorm via the equivalences: int |grad f| for fields with
// an integrable gradient, boundary measure of the indicated set (clipped to
// the ambient domain) for indicators. The dual sup-over-test-fields
// characterization is metadata only and is never maximized.
template <int N>
SeminormEstimate bv_seminorm(const ScalarField<N>& f, const Domain<N>& d,
                             const QuadratureMesh<N>& mesh) {
  switch (f.regularity) {
    case Regularity::smooth_compact:
    case Regularity::w1p:
    case Regularity::w11_only:
      return local_seminorm_w1p(f, d, 1.0, mesh);
    case Regularity::indicator: {
      require(f.indicator != nullptr, errc::invalid_parameter,
              "bv_seminorm: indicator field carries no set data");
      require(f.indicator->perimeter.has_value(), errc::unsupported_operation,
              "bv_seminorm: indicated set has no analytic perimeter");
      require(static_cast<bool>(f.indicator->boundary_samples), errc::unsupported_operation,
              "bv_seminorm: indicated set has no boundary sampler");
      const int n = 4096;
      auto pts = f.indicator->boundary_samples(n);
      int in = 0;
      for (const auto& q : pts)
        if (d.inside(q) && d.boundary_distance(q) > 0) ++in;
      double frac = static_cast<double>(in) / static_cast<double>(pts.size());
      double jump = std::fabs(f.indicator->jump);
      SeminormEstimate e;
      e.value = jump * (*f.indicator->perimeter) * frac;
      e.error_estimate = (in == static_cast<int>(pts.size()))
                             ? 0.0
                             : jump * (*f.indicator->perimeter) * (2.0 / 64.0);
      e.mesh_pitch = mesh.pitch;
      e.s = 1;
      e.p = 1;
      e.diagonal_contribution = 0;
      return e;
    }
    default:
      fail(errc::unsupported_operation, "bv_seminorm: no route for this field's regularity class");
  }
}

}  // namespace bbmlab
