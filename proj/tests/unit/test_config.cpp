#include "bbmlab/config.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace bbmlab;

namespace {

template <typename Fn>
error capture(Fn&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e;
  }
  FAIL("expected a bbmlab::error");
  return error(errc::invalid_parameter, "unreachable");
}

bool mentions(const error& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("configs round-trip through serialize and parse", "[config]") {
  SECTION("a sweep config with explicit pitches") {
    ExperimentConfig cfg;
    cfg.name = "round-trip_1";
    cfg.dim = 2;
    cfg.mode = Mode::sweep;
    cfg.domain_expr = "diff box -1 -1 1 1 ball 0 0 0.25";
    cfg.field_expr = "bump 0 0 0.8 1.5";
    cfg.p = 1.5;
    cfg.s_grid = {0.85, 0.9, 0.95, 0.99};
    cfg.pitch = 0.125;
    cfg.pitches = {0.125, 0.125, 0.0625, 0.0625};
    cfg.tolerance = 0.03;
    cfg.output_dir = "out/sub";
    REQUIRE(parse_config(serialize(cfg)) == cfg);
  }
  SECTION("a probe config keeps its expectation") {
    ExperimentConfig cfg;
    cfg.name = "probe_rt";
    cfg.dim = 2;
    cfg.mode = Mode::probe;
    cfg.domain_expr = "cusp";
    cfg.field_expr = "cuspfield";
    cfg.s = 0.9;
    cfg.p = 2;
    cfg.pitches = {0.125, 0.0625, 0.03125, 0.015625};
    cfg.expect = Expectation::divergent;
    REQUIRE(parse_config(serialize(cfg)) == cfg);
  }
  SECTION("a cross-term config keeps both domains") {
    ExperimentConfig cfg;
    cfg.name = "cross_rt";
    cfg.dim = 1;
    cfg.mode = Mode::cross_term;
    cfg.domain_expr = "box 0 0.4";
    cfg.domain2_expr = "box 0.6 1";
    cfg.field_expr = "bump 0.2 0.15 1";
    cfg.s_grid = {0.9, 0.99};
    cfg.expect = Expectation::decay;
    REQUIRE(parse_config(serialize(cfg)) == cfg);
  }
  SECTION("a mollifier config keeps its eps schedule") {
    ExperimentConfig cfg;
    cfg.name = "moll_rt";
    cfg.mode = Mode::mollifier;
    cfg.domain_expr = "box 0 1";
    cfg.field_expr = "affine 1 0";
    cfg.p = 1;
    cfg.eps_list = {0.5, 0.2, 0.1, 0.05};
    cfg.R = 2;
    cfg.tolerance = 0.1;
    REQUIRE(parse_config(serialize(cfg)) == cfg);
  }
}

TEST_CASE("unknown keys are named with their line", "[config]") {
  auto e = capture([] {
    parse_config(
        "name = x\n"
        "dim = 1\n"
        "pitchh = 0.1\n");
  });
  REQUIRE(e.code() == errc::config_unknown_key);
  REQUIRE(mentions(e, "line 3"));
  REQUIRE(mentions(e, "pitchh"));
}

TEST_CASE("out-of-range values name the offending key", "[config]") {
  auto base = [](const std::string& extra) {
    return "name = x\ndomain = box 0 1\nfield = affine 1 0\n" + extra;
  };
  SECTION("s = 1 inside the sweep grid") {
    auto e = capture([&] { parse_config(base("s_grid = 0.8 0.9 1.0\n")); });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "s_grid"));
    REQUIRE(mentions(e, "line 4"));
  }
  SECTION("tolerance outside (0, 0.5)") {
    auto e = capture([&] { parse_config(base("tolerance = 0.6\n")); });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "tolerance"));
  }
  SECTION("dimension outside 1..3") {
    auto e = capture([&] { parse_config("dim = 4\n"); });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "dim"));
  }
  SECTION("non-increasing sweep grid") {
    auto e = capture([&] { parse_config(base("s_grid = 0.9 0.8\n")); });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "increase"));
  }
  SECTION("file names stay path-safe") {
    auto e = capture([&] { parse_config("name = ../escape\n"); });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "name"));
  }
}

TEST_CASE("expression errors carry token positions", "[config]") {
  SECTION("truncated primitive") {
    auto e = capture([] {
      parse_config("name = x\ndim = 2\ndomain = ball 0 0\nfield = affine 1 1 0\n");
    });
    REQUIRE(e.code() == errc::config_bad_expression);
    REQUIRE(mentions(e, "domain"));
    REQUIRE(mentions(e, "radius"));
  }
  SECTION("unknown operator with its position") {
    auto e = capture([] { parse_config("name = x\ndomain = blob 1 2\nfield = affine 1 0\n"); });
    REQUIRE(e.code() == errc::config_bad_expression);
    REQUIRE(mentions(e, "blob"));
    REQUIRE(mentions(e, "position 1"));
  }
  SECTION("trailing tokens after a complete expression") {
    auto e = capture([] { parse_config("name = x\ndomain = box 0 1 extra\nfield = affine 1 0\n"); });
    REQUIRE(e.code() == errc::config_bad_expression);
    REQUIRE(mentions(e, "extra"));
    REQUIRE(mentions(e, "position 4"));
  }
  SECTION("nested expression failing inside an operator") {
    auto e = capture([] {
      parse_config("name = x\ndim = 2\ndomain = diff box -1 -1 1 1 ball 0 0\nfield = cuspfield\n");
    });
    REQUIRE(e.code() == errc::config_bad_expression);
    REQUIRE(mentions(e, "radius"));
  }
  SECTION("a field constructor in the wrong dimension") {
    auto e = capture([] { parse_config("name = x\ndim = 1\ndomain = box 0 1\nfield = cuspfield\n"); });
    REQUIRE(e.code() == errc::config_bad_expression);
    REQUIRE(mentions(e, "dimension 2"));
  }
}

TEST_CASE("duplicate keys are rejected with both lines", "[config]") {
  auto e = capture([] { parse_config("p = 1\nname = x\np = 2\n"); });
  REQUIRE(e.code() == errc::config_bad_expression);
  REQUIRE(mentions(e, "duplicate key 'p'"));
  REQUIRE(mentions(e, "line 3"));
  REQUIRE(mentions(e, "line 1"));
}

TEST_CASE("mode requirements are enforced across keys", "[config]") {
  SECTION("probe needs at least four halving pitches") {
    auto e = capture([] {
      parse_config(
          "name = x\nmode = probe\ndomain = box 0 1\nfield = affine 1 0\n"
          "pitches = 0.25 0.125\nexpect = divergent\n");
    });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "pitches"));
  }
  SECTION("probe pitches must halve") {
    auto e = capture([] {
      parse_config(
          "name = x\nmode = probe\ndomain = box 0 1\nfield = affine 1 0\n"
          "pitches = 0.4 0.2 0.1 0.04\nexpect = divergent\n");
    });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "halve"));
  }
  SECTION("mollifier mode needs an eps schedule") {
    auto e = capture([] {
      parse_config("name = x\nmode = mollifier\ndomain = box 0 1\nfield = affine 1 0\n");
    });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "eps_list"));
  }
  SECTION("eps entries must keep the kernel integrable") {
    auto e = capture([] {
      parse_config(
          "name = x\nmode = mollifier\ndomain = box 0 1\nfield = affine 1 0\n"
          "p = 2\neps_list = 0.6\n");
    });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "eps * p"));
  }
  SECTION("cross_term needs the second domain") {
    auto e = capture([] {
      parse_config("name = x\nmode = cross_term\ndomain = box 0 1\nfield = affine 1 0\n");
    });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "domain2"));
  }
  SECTION("domain2 is rejected outside cross_term") {
    auto e = capture([] {
      parse_config(
          "name = x\ndomain = box 0 1\ndomain2 = box 2 3\nfield = affine 1 0\n");
    });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "domain2"));
  }
  SECTION("kappa_table takes no geometry") {
    auto e = capture([] { parse_config("name = x\nmode = kappa_table\ndomain = box 0 1\n"); });
    REQUIRE(e.code() == errc::config_out_of_range);
  }
  SECTION("sweeps reject growth expectations") {
    auto e = capture([] {
      parse_config("name = x\ndomain = box 0 1\nfield = affine 1 0\nexpect = divergent\n");
    });
    REQUIRE(e.code() == errc::config_out_of_range);
    REQUIRE(mentions(e, "expect"));
  }
}

TEST_CASE("the expression grammar builds the documented shapes", "[config]") {
  SECTION("difference removes the closure of the hole") {
    auto d = parse_domain<2>("diff box -1 -1 1 1 ball 0 0 0.5");
    REQUIRE(d.inside(Vec<2>{0.75, 0}));
    REQUIRE_FALSE(d.inside(Vec<2>{0.25, 0}));
    REQUIRE_FALSE(d.inside(Vec<2>{0.5, 0}));
  }
  SECTION("complement of closure flips membership far away") {
    auto d = parse_domain<2>("complC ball 0 0 1");
    REQUIRE(d.inside(Vec<2>{2, 0}));
    REQUIRE_FALSE(d.inside(Vec<2>{1, 0}));
    REQUIRE_FALSE(d.inside(Vec<2>{0.5, 0}));
  }
  SECTION("olambda erodes and union restores") {
    auto d = parse_domain<1>("olambda box 0 1 0.25");
    REQUIRE(d.inside(Vec<1>{0.5}));
    REQUIRE_FALSE(d.inside(Vec<1>{0.1}));
    auto u = parse_domain<1>("union box 0 0.3 box 0.7 1");
    REQUIRE(u.inside(Vec<1>{0.1}));
    REQUIRE_FALSE(u.inside(Vec<1>{0.5}));
  }
  SECTION("indicator and scaled fields compose") {
    auto f = parse_field<2>("indicator ball 0 0 0.5");
    REQUIRE(f.regularity == Regularity::indicator);
    REQUIRE(f.eval(Vec<2>{0, 0}) == 1.0);
    REQUIRE(f.eval(Vec<2>{0.9, 0}) == 0.0);
    auto g = parse_field<2>("scaled 2 bump 0 0 0.5 1");
    auto h = parse_field<2>("bump 0 0 0.5 1");
    REQUIRE(g.eval(Vec<2>{0.1, 0.2}) == Catch::Approx(2 * h.eval(Vec<2>{0.1, 0.2})));
  }
}
