#pragma once

// Declarative experiment configs: a flat `key = value` file format with `#`
// comments, a tiny whitespace-separated prefix grammar for domains and
// fields, a serializer whose output parses back to an equal config, and
// diagnostics that name the offending key and position.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bbmlab/fields.hpp"
#include "bbmlab/geometry.hpp"

namespace bbmlab {

enum class Mode { sweep, probe, kappa_table, mollifier, cross_term };
enum class Expectation { pass, divergent, convergent, decay };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::sweep: return "sweep";
    case Mode::probe: return "probe";
    case Mode::kappa_table: return "kappa_table";
    case Mode::mollifier: return "mollifier";
    case Mode::cross_term: return "cross_term";
  }
  return "sweep";
}

inline const char* to_string(Expectation e) {
  switch (e) {
    case Expectation::pass: return "pass";
    case Expectation::divergent: return "divergent";
    case Expectation::convergent: return "convergent";
    case Expectation::decay: return "decay";
  }
  return "pass";
}

struct ExperimentConfig {
  std::string name = "experiment";
  int dim = 1;
  Mode mode = Mode::sweep;
  std::string domain_expr;
  std::string domain2_expr;  // cross_term: the second factor of the pair
  std::string field_expr;
  double p = 2;
  double s = 0.5;  // probe mode: the fixed kernel order
  std::vector<double> s_grid{0.80, 0.85, 0.90, 0.95, 0.975, 0.99};
  double pitch = 1.0 / 16;      // base pitch for the default mesh schedule
  std::vector<double> pitches;  // probe schedule, or explicit sweep pitches
  std::vector<double> eps_list;
  double R = 1;  // mollifier range
  std::vector<double> p_grid{1.0, 1.5, 2.0, 3.0};  // kappa_table columns
  double tolerance = 0.05;
  Expectation expect = Expectation::pass;
  std::string output_dir = ".";

  bool operator==(const ExperimentConfig&) const = default;
};

// ------------------------------------------------------ expression grammar
//
// Domains (arity follows dim N):
//   ball c1..cN r
//   box lo1..loN hi1..hiN
//   full lo1..loN hi1..hiN          truncated full space
//   cusp                            (dim 2)
//   diff A B | union A B | inter A B
//   complC A                        complement of the closure
//   olambda A lambda                inner offset by lambda * pitch scale
// Fields:
//   affine a1..aN b
//   bump c1..cN r h
//   cuspfield                       (dim 2)
//   indicator <domain-expr>
//   scaled c <field-expr>

namespace detail {

struct token_stream {
  std::vector<std::string> toks;
  std::size_t pos = 0;
  const char* what;  // "domain" or "field", for diagnostics

  explicit token_stream(const std::string& text, const char* label) : what(label) {
    std::istringstream in(text);
    std::string t;
    while (in >> t) toks.push_back(t);
  }

  bool done() const { return pos >= toks.size(); }

  std::string next(const char* need) {
    if (done())
      fail(errc::config_bad_expression, std::string(what) + ": expected " + need +
                                            " at position " + std::to_string(pos + 1) +
                                            " but the expression ended");
    return toks[pos++];
  }

  double number(const char* need) {
    std::string t = next(need);
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || t.empty())
      fail(errc::config_bad_expression, std::string(what) + ": expected " + need +
                                            " at position " + std::to_string(pos) + ", got '" +
                                            t + "'");
    return v;
  }
};

template <int N>
Vec<N> parse_vec(token_stream& ts, const char* need) {
  Vec<N> v;
  for (int d = 0; d < N; ++d) v[d] = ts.number(need);
  return v;
}

template <int N>
Domain<N> parse_domain_rec(token_stream& ts) {
  std::string op = ts.next("a domain operator");
  if (op == "ball") {
    auto c = parse_vec<N>(ts, "a ball center coordinate");
    double r = ts.number("the ball radius");
    return make_ball<N>(c, r);
  }
  if (op == "box" || op == "full") {
    auto lo = parse_vec<N>(ts, "a box corner coordinate");
    auto hi = parse_vec<N>(ts, "a box corner coordinate");
    if (op == "box") return make_box<N>(lo, hi);
    return full_space<N>(Box<N>{lo, hi});
  }
  if (op == "cusp") {
    if constexpr (N == 2)
      return cusp_domain();
    else
      fail(errc::config_bad_expression,
           std::string(ts.what) + ": 'cusp' is only available in dimension 2");
  }
  if (op == "diff" || op == "union" || op == "inter") {
    auto a = parse_domain_rec<N>(ts);
    auto b = parse_domain_rec<N>(ts);
    if (op == "diff") return csg_difference(a, b);
    if (op == "union") return csg_union(a, b);
    return csg_intersection(a, b);
  }
  if (op == "complC") {
    auto a = parse_domain_rec<N>(ts);
    return csg_complement_of_closure(a);
  }
  if (op == "olambda") {
    auto a = parse_domain_rec<N>(ts);
    double lam = ts.number("the olambda offset");
    return omega_lambda(a, lam);
  }
  fail(errc::config_bad_expression, std::string(ts.what) + ": unknown operator '" + op +
                                        "' at position " + std::to_string(ts.pos));
}

template <int N>
ScalarField<N> parse_field_rec(token_stream& ts) {
  std::string op = ts.next("a field constructor");
  if (op == "affine") {
    auto g = parse_vec<N>(ts, "an affine slope component");
    double b = ts.number("the affine offset");
    return affine<N>(g, b);
  }
  if (op == "bump") {
    auto c = parse_vec<N>(ts, "a bump center coordinate");
    double r = ts.number("the bump radius");
    double h = ts.number("the bump height");
    return bump<N>(c, r, h);
  }
  if (op == "cuspfield") {
    if constexpr (N == 2)
      return cusp_field();
    else
      fail(errc::config_bad_expression,
           std::string(ts.what) + ": 'cuspfield' is only available in dimension 2");
  }
  if (op == "indicator") {
    auto d = parse_domain_rec<N>(ts);
    return indicator<N>(d);
  }
  if (op == "scaled") {
    double c = ts.number("the scaling factor");
    auto f = parse_field_rec<N>(ts);
    return scaled<N>(f, c);
  }
  fail(errc::config_bad_expression, std::string(ts.what) + ": unknown constructor '" + op +
                                        "' at position " + std::to_string(ts.pos));
}

inline void expect_exhausted(token_stream& ts) {
  if (!ts.done())
    fail(errc::config_bad_expression, std::string(ts.what) + ": trailing token '" +
                                          ts.toks[ts.pos] + "' at position " +
                                          std::to_string(ts.pos + 1));
}

}  // namespace detail

template <int N>
Domain<N> parse_domain(const std::string& expr) {
  detail::token_stream ts(expr, "domain");
  auto d = detail::parse_domain_rec<N>(ts);
  detail::expect_exhausted(ts);
  return d;
}

template <int N>
ScalarField<N> parse_field(const std::string& expr) {
  detail::token_stream ts(expr, "field");
  auto f = detail::parse_field_rec<N>(ts);
  detail::expect_exhausted(ts);
  return f;
}

// ------------------------------------------------------------ file parsing

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_number(const std::string& key, int line, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    fail(errc::config_bad_expression,
         "line " + std::to_string(line) + ": key '" + key + "' needs a number, got '" + v + "'");
  return x;
}

inline std::vector<double> parse_list(const std::string& key, int line, const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string t;
  while (in >> t) out.push_back(parse_number(key, line, t));
  return out;
}

[[noreturn]] inline void range_error(const std::string& key, int line, const std::string& why) {
  std::string where = line > 0 ? "line " + std::to_string(line) : std::string("config");
  fail(errc::config_out_of_range, where + ": key '" + key + "' " + why);
}

// expressions are validated eagerly so config errors surface at parse time,
// with the dimension the config declares
inline void validate_domain_expr(const std::string& expr, int dim) {
  switch (dim) {
    case 1: parse_domain<1>(expr); break;
    case 2: parse_domain<2>(expr); break;
    default: parse_domain<3>(expr); break;
  }
}

inline void validate_field_expr(const std::string& expr, int dim) {
  switch (dim) {
    case 1: parse_field<1>(expr); break;
    case 2: parse_field<2>(expr); break;
    default: parse_field<3>(expr); break;
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  struct entry {
    std::string value;
    int line;
  };
  std::vector<std::pair<std::string, entry>> kvs;
  {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      std::string s = detail::trim(raw);
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        fail(errc::config_bad_expression,
             "line " + std::to_string(line) + ": expected 'key = value', got '" + s + "'");
      std::string key = detail::trim(s.substr(0, eq));
      std::string value = detail::trim(s.substr(eq + 1));
      if (key.empty())
        fail(errc::config_bad_expression,
             "line " + std::to_string(line) + ": missing key before '='");
      for (const auto& [k, e] : kvs)
        if (k == key)
          fail(errc::config_bad_expression, "line " + std::to_string(line) +
                                                ": duplicate key '" + key +
                                                "' (first set on line " +
                                                std::to_string(e.line) + ")");
      kvs.push_back({key, {value, line}});
    }
  }
  bool saw_expect = false;
  for (const auto& [key, e] : kvs) {
    const std::string& v = e.value;
    int ln = e.line;
    if (key == "name") {
      if (v.empty()) detail::range_error(key, ln, "must not be empty");
      for (char c : v)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
          detail::range_error(key, ln, "must use only letters, digits, '_', '-'");
      cfg.name = v;
    } else if (key == "dim") {
      double d = detail::parse_number(key, ln, v);
      if (d != 1 && d != 2 && d != 3) detail::range_error(key, ln, "must be 1, 2, or 3");
      cfg.dim = static_cast<int>(d);
    } else if (key == "mode") {
      if (v == "sweep") cfg.mode = Mode::sweep;
      else if (v == "probe") cfg.mode = Mode::probe;
      else if (v == "kappa_table") cfg.mode = Mode::kappa_table;
      else if (v == "mollifier") cfg.mode = Mode::mollifier;
      else if (v == "cross_term") cfg.mode = Mode::cross_term;
      else detail::range_error(key, ln,
                               "must be sweep, probe, kappa_table, mollifier, or cross_term");
    } else if (key == "domain") {
      cfg.domain_expr = v;
    } else if (key == "domain2") {
      cfg.domain2_expr = v;
    } else if (key == "field") {
      cfg.field_expr = v;
    } else if (key == "p") {
      cfg.p = detail::parse_number(key, ln, v);
      if (!(cfg.p >= 1)) detail::range_error(key, ln, "must be at least 1");
    } else if (key == "s") {
      cfg.s = detail::parse_number(key, ln, v);
      if (!(cfg.s > 0 && cfg.s <= 0.999))
        detail::range_error(key, ln, "must lie in (0, 0.999]");
    } else if (key == "s_grid") {
      cfg.s_grid = detail::parse_list(key, ln, v);
      if (cfg.s_grid.empty()) detail::range_error(key, ln, "must hold at least one value");
      for (double si : cfg.s_grid)
        if (!(si > 0 && si <= 0.999))
          detail::range_error(key, ln, "values must lie in (0, 0.999]");
      for (std::size_t i = 0; i + 1 < cfg.s_grid.size(); ++i)
        if (!(cfg.s_grid[i] < cfg.s_grid[i + 1]))
          detail::range_error(key, ln, "values must strictly increase");
    } else if (key == "pitch") {
      cfg.pitch = detail::parse_number(key, ln, v);
      if (!(cfg.pitch > 0 && std::isfinite(cfg.pitch)))
        detail::range_error(key, ln, "must be a positive pitch");
    } else if (key == "pitches") {
      cfg.pitches = detail::parse_list(key, ln, v);
      for (double h : cfg.pitches)
        if (!(h > 0 && std::isfinite(h)))
          detail::range_error(key, ln, "entries must be positive pitches");
    } else if (key == "eps_list") {
      cfg.eps_list = detail::parse_list(key, ln, v);
      for (double ep : cfg.eps_list)
        if (!(ep > 0 && ep < 1)) detail::range_error(key, ln, "entries must lie in (0, 1)");
    } else if (key == "R") {
      cfg.R = detail::parse_number(key, ln, v);
      if (!(cfg.R > 0 && std::isfinite(cfg.R)))
        detail::range_error(key, ln, "must be a positive range");
    } else if (key == "p_grid") {
      cfg.p_grid = detail::parse_list(key, ln, v);
      if (cfg.p_grid.empty()) detail::range_error(key, ln, "must hold at least one value");
      for (double pi : cfg.p_grid)
        if (!(pi >= 1)) detail::range_error(key, ln, "entries must be at least 1");
    } else if (key == "tolerance") {
      cfg.tolerance = detail::parse_number(key, ln, v);
      if (!(cfg.tolerance > 0 && cfg.tolerance < 0.5))
        detail::range_error(key, ln, "must lie in (0, 0.5)");
    } else if (key == "expect") {
      saw_expect = true;
      if (v == "pass") cfg.expect = Expectation::pass;
      else if (v == "divergent") cfg.expect = Expectation::divergent;
      else if (v == "convergent") cfg.expect = Expectation::convergent;
      else if (v == "decay") cfg.expect = Expectation::decay;
      else detail::range_error(key, ln, "must be pass, divergent, convergent, or decay");
    } else if (key == "out") {
      cfg.output_dir = v.empty() ? "." : v;
    } else {
      fail(errc::config_unknown_key,
           "line " + std::to_string(ln) + ": unknown key '" + key + "'");
    }
  }
  // mode-level defaults and cross-key validation
  if (!saw_expect) {
    if (cfg.mode == Mode::probe) cfg.expect = Expectation::convergent;
    else if (cfg.mode == Mode::cross_term) cfg.expect = Expectation::decay;
  }
  auto need = [&](bool ok, const std::string& key, const std::string& why) {
    if (!ok) detail::range_error(key, 0, why);
  };
  if (cfg.mode == Mode::kappa_table) {
    need(cfg.domain_expr.empty() && cfg.field_expr.empty(), "domain",
         "does not apply to kappa_table mode");
  } else {
    need(!cfg.domain_expr.empty(), "domain", "is required for this mode");
    need(!cfg.field_expr.empty(), "field", "is required for this mode");
    detail::validate_domain_expr(cfg.domain_expr, cfg.dim);
    detail::validate_field_expr(cfg.field_expr, cfg.dim);
  }
  if (cfg.mode == Mode::cross_term) {
    need(!cfg.domain2_expr.empty(), "domain2", "is required for cross_term mode");
    detail::validate_domain_expr(cfg.domain2_expr, cfg.dim);
    need(cfg.expect == Expectation::decay, "expect", "must be decay for cross_term mode");
    need(cfg.s_grid.size() >= 2, "s_grid", "needs at least two values for cross_term mode");
  } else {
    need(cfg.domain2_expr.empty(), "domain2", "only applies to cross_term mode");
  }
  if (cfg.mode == Mode::probe) {
    need(cfg.pitches.size() >= 4, "pitches", "needs at least four halving pitches for probe mode");
    for (std::size_t i = 0; i + 1 < cfg.pitches.size(); ++i)
      need(std::fabs(cfg.pitches[i + 1] - cfg.pitches[i] / 2) <= 1e-12 * cfg.pitches[i],
           "pitches", "must halve between probe refinements");
    need(cfg.expect == Expectation::divergent || cfg.expect == Expectation::convergent,
         "expect", "must be divergent or convergent for probe mode");
  }
  if (cfg.mode == Mode::mollifier) {
    need(!cfg.eps_list.empty(), "eps_list", "is required for mollifier mode");
    for (double ep : cfg.eps_list)
      need(ep * cfg.p < 1, "eps_list", "entries must satisfy eps * p < 1");
    need(cfg.expect == Expectation::pass, "expect", "must be pass for mollifier mode");
  }
  if (cfg.mode == Mode::sweep)
    need(cfg.expect == Expectation::pass, "expect", "must be pass for sweep mode");
  return cfg;
}

// Append-only writer whose output parse_config maps back to an equal config.
inline std::string serialize(const ExperimentConfig& cfg) {
  std::string out;
  auto put = [&](const char* key, const std::string& v) {
    out += key;
    out += " = ";
    out += v;
    out += "\n";
  };
  auto num = [&](double x) { return format_g(x, 17); };
  auto list = [&](const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += " ";
      s += num(xs[i]);
    }
    return s;
  };
  put("name", cfg.name);
  put("dim", std::to_string(cfg.dim));
  put("mode", to_string(cfg.mode));
  if (!cfg.domain_expr.empty()) put("domain", cfg.domain_expr);
  if (!cfg.domain2_expr.empty()) put("domain2", cfg.domain2_expr);
  if (!cfg.field_expr.empty()) put("field", cfg.field_expr);
  put("p", num(cfg.p));
  put("s", num(cfg.s));
  put("s_grid", list(cfg.s_grid));
  put("pitch", num(cfg.pitch));
  if (!cfg.pitches.empty()) put("pitches", list(cfg.pitches));
  if (!cfg.eps_list.empty()) put("eps_list", list(cfg.eps_list));
  put("R", num(cfg.R));
  put("p_grid", list(cfg.p_grid));
  put("tolerance", num(cfg.tolerance));
  put("expect", to_string(cfg.expect));
  put("out", cfg.output_dir);
  return out;
}

}  // namespace bbmlab
