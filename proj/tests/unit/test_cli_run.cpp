#include "bbmlab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

using namespace bbmlab;

TEST_CASE("every preset parses, serializes, and parses again", "[cli]") {
  REQUIRE(!presets().empty());
  for (const auto& [name, text] : presets()) {
    INFO("preset " << name);
    ExperimentConfig cfg = parse_config(text);
    REQUIRE(cfg.name == name);
    REQUIRE(parse_config(serialize(cfg)) == cfg);
  }
  REQUIRE(find_preset("affine_1d") != nullptr);
  REQUIRE(find_preset("no_such_preset") == nullptr);
}

TEST_CASE("the affine sweep preset passes its tolerance", "[cli]") {
  auto art = run_experiment(parse_config(*find_preset("affine_1d")));
  REQUIRE(art.exit_code == 0);
  REQUIRE(art.report["verdict"] == "pass");
  REQUIRE(art.report["fit"]["limit"].get<double>() == Catch::Approx(1.0).epsilon(0.02));
  REQUIRE(art.report["target"].get<double>() == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(art.report["deviation"].get<double>() < 0.02);
}

TEST_CASE("a strict tolerance on a coarse mesh fails with exit 2", "[cli]") {
  auto art = run_experiment(parse_config(*find_preset("affine_1d_coarse_strict")));
  REQUIRE(art.exit_code == 2);
  REQUIRE(art.report["verdict"] == "tolerance_exceeded");
  // still a decent answer, just not a one-in-a-million one
  REQUIRE(art.report["fit"]["limit"].get<double>() == Catch::Approx(1.0).epsilon(0.05));
}

TEST_CASE("disjoint supports lose their cross term as s approaches 1", "[cli]") {
  auto art = run_experiment(parse_config(*find_preset("cross_decay")));
  REQUIRE(art.exit_code == 0);
  REQUIRE(art.report["verdict"] == "decay");
  auto rows = art.report["rows"];
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[1]["scaled"].get<double>() < 0.5 * rows[0]["scaled"].get<double>());
}

TEST_CASE("the kappa table covers dimensions 1 through 3", "[cli]") {
  auto art = run_experiment(parse_config(*find_preset("kappa_demo")));
  REQUIRE(art.exit_code == 0);
  auto rows = art.report["rows"];
  REQUIRE(rows.size() == 12);
  // dimension rides in the pitch column, p in the s column
  REQUIRE(rows[0]["pitch"].get<double>() == 1.0);
  REQUIRE(rows[0]["s"].get<double>() == 1.0);
  REQUIRE(rows[0]["seminorm"].get<double>() == 1.0);
  bool saw_half = false;
  for (const auto& row : rows)
    if (row["pitch"].get<double>() == 2.0 && row["s"].get<double>() == 2.0)
      saw_half = row["seminorm"].get<double>() == Catch::Approx(0.5).margin(1e-12);
  REQUIRE(saw_half);
}

TEST_CASE("probe runs map verdicts onto the exit-code contract", "[cli]") {
  auto base = [](const char* expect) {
    std::ostringstream ss;
    ss << "name = probe_t\nmode = probe\ndomain = box 0 1\nfield = affine 1 0\n"
       << "s = 0.5\np = 2\npitches = 0.25 0.125 0.0625 0.03125\nexpect = " << expect << "\n";
    return parse_config(ss.str());
  };
  SECTION("convergence found where expected exits 0") {
    auto art = run_experiment(base("convergent"));
    REQUIRE(art.exit_code == 0);
    REQUIRE(art.report["verdict"] == "convergent");
  }
  SECTION("convergence found where divergence was expected exits 2") {
    auto art = run_experiment(base("divergent"));
    REQUIRE(art.exit_code == 2);
  }
  SECTION("divergence found where convergence was expected exits 3") {
    ExperimentConfig cfg = parse_config(
        "name = probe_t3\nmode = probe\ndomain = box 0 1\n"
        "field = indicator box 0.25 0.75\n"
        "s = 0.7\np = 2\npitches = 0.125 0.0625 0.03125 0.015625\nexpect = convergent\n");
    auto art = run_experiment(cfg);
    REQUIRE(art.exit_code == 3);
    REQUIRE(art.report["verdict"] == "divergent");
  }
}

TEST_CASE("identical configs produce byte-identical artifacts", "[cli]") {
  ExperimentConfig cfg = parse_config(*find_preset("affine_1d_coarse_strict"));
  auto a = run_experiment(cfg);
  auto b = run_experiment(cfg);
  REQUIRE(a.csv == b.csv);
  REQUIRE(a.csv.rfind("s,seminorm,scaled,error,pitch\r\n", 0) == 0);
  REQUIRE(a.csv.find("\r\n") != std::string::npos);
  auto ja = a.report;
  auto jb = b.report;
  REQUIRE(ja.contains("wall_seconds"));
  ja.erase("wall_seconds");
  jb.erase("wall_seconds");
  REQUIRE(ja.dump() == jb.dump());
  REQUIRE(ja["schema"] == 1);
}

TEST_CASE("artifacts land on disk under the requested directory", "[cli]") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "bbmlab_cli_test_out";
  fs::remove_all(dir);
  ExperimentConfig cfg = parse_config(*find_preset("affine_1d_coarse_strict"));
  auto art = run_experiment(cfg);
  write_artifacts(art, dir.string());
  fs::path csv = dir / "affine_1d_coarse_strict.csv";
  fs::path rep = dir / "affine_1d_coarse_strict.report.json";
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(rep));
  {
    std::ifstream in(rep);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
    REQUIRE(j["schema"] == 1);
    REQUIRE(j["name"] == "affine_1d_coarse_strict");
    // the config echo inside the report parses back to the config that ran
    REQUIRE(parse_config(j["config"].get<std::string>()) == cfg);
  }
  {
    std::ifstream in(csv, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    REQUIRE(ss.str() == art.csv);
  }
  fs::remove_all(dir);
}
