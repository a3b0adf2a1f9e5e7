// Command-line front end: runs experiments described by config files (or
// bundled presets), prints kappa values, and maps outcomes to exit codes
// (0 pass, 2 tolerance/expectation failure, 3 divergence where convergence
// was expected, 1 engine error).

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "bbmlab/bbmlab.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  bbmlab::require(in.good(), bbmlab::errc::construction_failed, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_config_text(const std::string& text, int threads, const std::string& out_dir) {
  bbmlab::ExperimentConfig cfg = bbmlab::parse_config(text);
  if (threads > 0) bbmlab::set_max_threads(threads);
  bbmlab::RunArtifacts art = bbmlab::run_experiment(cfg);
  bbmlab::write_artifacts(art, out_dir);
  std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
  std::cout << art.message << "\n";
  std::cout << "wrote " << dir << "/" << cfg.name << ".csv and " << dir << "/" << cfg.name
            << ".report.json\n";
  return art.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for fractional seminorm limits"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset_name;
  int threads = 0;

  auto* cmd_run = app.add_subcommand("run", "run an experiment from a config file");
  cmd_run->add_option("config", config_path, "path to a 'key = value' config file")
      ->required();
  cmd_run->add_option("--threads", threads, "cap on worker threads (0 = hardware)");
  cmd_run->add_option("--out", out_dir, "override the config's output directory");

  int kdim = 1;
  double kp = 2;
  auto* cmd_kappa = app.add_subcommand("kappa", "print the angular-average constant");
  cmd_kappa->add_option("dim", kdim, "space dimension")->required();
  cmd_kappa->add_option("p", kp, "integrability exponent")->required();

  auto* cmd_presets = app.add_subcommand("presets", "bundled demonstration experiments");
  cmd_presets->require_subcommand(1);
  auto* cmd_list = cmd_presets->add_subcommand("list", "list the preset names");
  auto* cmd_prun = cmd_presets->add_subcommand("run", "run a preset by name");
  cmd_prun->add_option("name", preset_name, "preset name (see 'presets list')")->required();
  cmd_prun->add_option("--threads", threads, "cap on worker threads (0 = hardware)");
  cmd_prun->add_option("--out", out_dir, "override the preset's output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) return run_config_text(slurp(config_path), threads, out_dir);
    if (cmd_kappa->parsed()) {
      std::cout << bbmlab::format_g(bbmlab::kappa(kdim, kp), 12) << "\n";
      return 0;
    }
    if (cmd_list->parsed()) {
      for (const auto& [name, text] : bbmlab::presets()) std::cout << name << "\n";
      return 0;
    }
    if (cmd_prun->parsed()) {
      const std::string* text = bbmlab::find_preset(preset_name);
      if (text == nullptr) {
        std::cerr << "unknown preset '" << preset_name << "'; available:\n";
        for (const auto& [name, t] : bbmlab::presets()) std::cerr << "  " << name << "\n";
        return 1;
      }
      return run_config_text(*text, threads, out_dir);
    }
  } catch (const bbmlab::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
