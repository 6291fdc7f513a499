// nlif_cli: run one experiment from a preset and/or a config file.
//
//   nlif_cli --preset single-pulse-b1 --out runs/pulse
//   nlif_cli --config my.cfg --seed 7 --threads 4
//   nlif_cli --preset single-pulse-b1 --out runs/pulse --verify
#include <omp.h>

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "nlif/config.hpp"
#include "nlif/run.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kMismatch = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale solver for noisy leaky integrate-and-fire networks"};
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  int threads = 0;
  bool full = false;
  bool verify = false;
  bool list = false;
  bool print = false;
  app.add_option("--config", config_path, "key = value config file (overrides the preset)");
  app.add_option("--preset", preset_name, "built-in experiment preset");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "cap on worker threads (0 = OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--full-fidelity", full, "full-scale replica counts and network sizes");
  app.add_flag("--verify", verify, "check the fingerprints of the CSVs in --out instead of running");
  app.add_flag("--list-presets", list, "print preset names and exit");
  app.add_flag("--print-config", print, "print the normalised configuration and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& name : nlif::preset_names()) std::cout << name << '\n';
    return 0;
  }
  if (threads > 0) omp_set_num_threads(threads);

  nlif::RunConfig cfg;
  try {
    nlif::Settings settings;
    if (!preset_name.empty()) settings = nlif::preset(preset_name);
    if (!config_path.empty()) settings = nlif::merge(settings, nlif::load_settings(config_path));
    if (seed) settings["seed"] = std::to_string(*seed);
    cfg = nlif::build_config(settings, full);
  } catch (const nlif::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  if (print) {
    std::cout << nlif::canonical_text(cfg.settings) << "# fingerprint=" << cfg.fingerprint << '\n';
    return 0;
  }

  if (verify) {
    try {
      const auto report = nlif::verify_artifacts(out, cfg.fingerprint);
      for (const auto& m : report.mismatches) std::cerr << "mismatch: " << m << '\n';
      std::cout << report.checked << " files checked, " << report.mismatches.size()
                << " mismatches (expected " << cfg.fingerprint << ")\n";
      return report.mismatches.empty() ? 0 : kMismatch;
    } catch (const nlif::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    }
  }

  try {
    std::cerr << to_string(cfg.experiment) << " fingerprint " << cfg.fingerprint << '\n';
    nlif::run_experiment(cfg, out, &std::cerr);
  } catch (const nlif::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlif::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
