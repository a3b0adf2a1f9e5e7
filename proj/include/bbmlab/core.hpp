#pragma once

// Small shared vocabulary: fixed-dimension points and boxes, typed errors,
// a deterministic pairwise accumulator, a canonical-block parallel runner,
// Gauss-Legendre rules, and a splitmix64 RNG for sampling-based checks.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bbmlab {

// ---------------------------------------------------------------- errors

enum class errc {
  invalid_parameter,
  dimension_mismatch,
  singularity,
  internal_consistency,
  unsupported_operation,
  mesh_too_coarse,
  ill_conditioned,
  insufficient_data,
  domains_not_disjoint,
  construction_failed,
  unbounded_domain,
  config_unknown_key,
  config_bad_expression,
  config_out_of_range,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_parameter: return "invalid_parameter";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::singularity: return "singularity";
    case errc::internal_consistency: return "internal_consistency";
    case errc::unsupported_operation: return "unsupported_operation";
    case errc::mesh_too_coarse: return "mesh_too_coarse";
    case errc::ill_conditioned: return "ill_conditioned";
    case errc::insufficient_data: return "insufficient_data";
    case errc::domains_not_disjoint: return "domains_not_disjoint";
    case errc::construction_failed: return "construction_failed";
    case errc::unbounded_domain: return "unbounded_domain";
    case errc::config_unknown_key: return "config_unknown_key";
    case errc::config_bad_expression: return "config_bad_expression";
    case errc::config_out_of_range: return "config_out_of_range";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

// ------------------------------------------------------------- geometry

template <int N>
using Vec = std::array<double, N>;

template <int N>
inline Vec<N> vfill(double c) {
  Vec<N> v;
  v.fill(c);
  return v;
}

// The helpers deduce against std::array directly (alias templates with an int
// parameter do not deduce), so they work on Vec<N> arguments unannotated.
template <std::size_t M>
inline std::array<double, M> vadd(const std::array<double, M>& a, const std::array<double, M>& b) {
  std::array<double, M> r;
  for (std::size_t i = 0; i < M; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t M>
inline std::array<double, M> vsub(const std::array<double, M>& a, const std::array<double, M>& b) {
  std::array<double, M> r;
  for (std::size_t i = 0; i < M; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t M>
inline std::array<double, M> vmul(const std::array<double, M>& a, double c) {
  std::array<double, M> r;
  for (std::size_t i = 0; i < M; ++i) r[i] = a[i] * c;
  return r;
}

template <std::size_t M>
inline double dot(const std::array<double, M>& a, const std::array<double, M>& b) {
  double s = 0;
  for (std::size_t i = 0; i < M; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t M>
inline double norm2(const std::array<double, M>& a) {
  return dot(a, a);
}

template <std::size_t M>
inline double norm(const std::array<double, M>& a) {
  return std::sqrt(norm2(a));
}

template <std::size_t M>
inline double dist2(const std::array<double, M>& a, const std::array<double, M>& b) {
  double s = 0;
  for (std::size_t i = 0; i < M; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

template <std::size_t M>
inline double dist(const std::array<double, M>& a, const std::array<double, M>& b) {
  return std::sqrt(dist2(a, b));
}

// Underflow-safe magnitude: norm2 of a vector with entries near 1e-200 rounds
// to zero, which would misreport a nonzero point as the origin.
template <std::size_t M>
inline double robust_norm(const std::array<double, M>& a) {
  double m = 0;
  for (std::size_t i = 0; i < M; ++i) m = std::max(m, std::abs(a[i]));
  if (m == 0) return 0;
  double s = 0;
  for (std::size_t i = 0; i < M; ++i) {
    double q = a[i] / m;
    s += q * q;
  }
  return m * std::sqrt(s);
}

// Axis-aligned box, closed coordinates; emptiness means any lo >= hi.
template <int N>
struct Box {
  Vec<N> lo{}, hi{};

  bool valid() const {
    for (int i = 0; i < N; ++i)
      if (!(lo[i] < hi[i])) return false;
    return true;
  }
  double volume() const {
    double v = 1;
    for (int i = 0; i < N; ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
  }
  bool contains(const Vec<N>& x) const {
    for (int i = 0; i < N; ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  bool contains_strict(const Vec<N>& x) const {
    for (int i = 0; i < N; ++i)
      if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
    return true;
  }
  Box inflated(double m) const {
    Box b = *this;
    for (int i = 0; i < N; ++i) {
      b.lo[i] -= m;
      b.hi[i] += m;
    }
    return b;
  }
  static Box intersect(const Box& a, const Box& b) {
    Box r;
    for (int i = 0; i < N; ++i) {
      r.lo[i] = std::max(a.lo[i], b.lo[i]);
      r.hi[i] = std::min(a.hi[i], b.hi[i]);
    }
    return r;
  }
  static Box hull(const Box& a, const Box& b) {
    Box r;
    for (int i = 0; i < N; ++i) {
      r.lo[i] = std::min(a.lo[i], b.lo[i]);
      r.hi[i] = std::max(a.hi[i], b.hi[i]);
    }
    return r;
  }
};

// ------------------------------------------------- deterministic sums

// Binary-counter pairwise summation. The reduction tree is a function of the
// add sequence alone, so identical input order gives bit-identical totals no
// matter how the surrounding loop was scheduled.
class pairwise_sum {
 public:
  void add(double x) {
    int k = 0;
    while ((count_ >> k) & 1ull) {
      x = level_[k] + x;
      ++k;
    }
    level_[k] = x;
    ++count_;
  }
  double total() const {
    double t = 0;
    for (int k = 0; k < 64; ++k)
      if ((count_ >> k) & 1ull) t += level_[k];
    return t;
  }
  std::uint64_t count() const { return count_; }

 private:
  std::array<double, 64> level_{};
  std::uint64_t count_ = 0;
};

// Pairwise fold of an ordered list of partials: adjacent pairs are combined
// repeatedly, odd tails carried. Depends only on the input order.
inline double fold_pairwise(std::vector<double> v) {
  if (v.empty()) return 0;
  while (v.size() > 1) {
    std::size_t m = 0;
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) v[m++] = v[i] + v[i + 1];
    if (v.size() & 1) v[m++] = v.back();
    v.resize(m);
  }
  return v[0];
}

// Worker cap for the pair-summation loops. Results never depend on it: the
// block partition is canonical and partials are folded in block order.
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{1};
  return cap;
}
inline void set_max_threads(int k) { thread_cap().store(k < 1 ? 1 : k); }
inline int max_threads() { return thread_cap().load(); }

// Runs fn(b) for b in [0, blocks); each call must write only to its own slot.
inline void run_blocks(std::size_t blocks, const std::function<void(std::size_t)>& fn) {
  int t = max_threads();
  if (t <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(t), blocks);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= blocks) return;
        fn(b);
      }
    });
  for (auto& th : pool) th.join();
}

// ------------------------------------------------------------ quadrature

struct gl_rule {
  std::vector<double> x, w;  // nodes and weights on [-1, 1]
};

// Newton iteration on Legendre polynomials; standard and fully deterministic.
inline gl_rule gauss_legendre(int n) {
  require(n >= 1, errc::invalid_parameter, "gauss_legendre order must be >= 1");
  gl_rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1);
    r.x[n - 1 - i] = x;
    r.w[n - 1 - i] = 2 / ((1 - x * x) * dp * dp);
  }
  return r;
}

// Integrates fn over [a, b] with an n-point Gauss-Legendre rule.
inline double gl_integrate(double a, double b, const gl_rule& r,
                           const std::function<double(double)>& fn) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  pairwise_sum s;
  for (std::size_t i = 0; i < r.x.size(); ++i) s.add(r.w[i] * fn(c + h * r.x[i]));
  return h * s.total();
}

// ------------------------------------------------------------------ rng

// splitmix64: tiny, seedable, reproducible across platforms.
struct rng {
  std::uint64_t state;

  explicit rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  template <int N>
  Vec<N> point_in(const Box<N>& box) {
    Vec<N> p;
    for (int i = 0; i < N; ++i) p[i] = uniform(box.lo[i], box.hi[i]);
    return p;
  }
};

// --------------------------------------------------------------- format

inline std::string format_g(double v, int significant = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, v);
  return buf;
}

}  // namespace bbmlab
