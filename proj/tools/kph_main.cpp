#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kph/harness.hpp"

// Exit codes: 0 all checks passed, 1 a check failed or the scenario aborted,
// 2 usage, config, or I/O problems.
int main(int argc, char** argv) {
  CLI::App app{"Structured lifted-space surrogates for port-Hamiltonian systems"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-scenarios", "Print the scenario names");

  std::string scenario, config_path, out_dir;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run one scenario and print its report");
  run->add_option("scenario", scenario, "Scenario name")->required();
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "Override the output directory");
  auto* seed_opt =
      run->add_option("--seed", seed, "Override every seed in the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list->parsed()) {
    for (const auto& name : kph::harness::scenario_names()) std::cout << name << "\n";
    return 0;
  }

  try {
    kph::harness::RunConfig cfg =
        kph::harness::RunConfig::from_file(config_path, scenario);
    if (!out_dir.empty()) cfg.doc["output_dir"] = out_dir;
    if (seed_opt->count() > 0) cfg.set_seed(seed);

    const kph::harness::Report rep = kph::harness::run_scenario(scenario, cfg);
    const std::string report_path =
        (std::filesystem::path(cfg.doc.at("output_dir").get<std::string>()) /
         "report.json")
            .string();
    std::ofstream out(report_path, std::ios::binary);
    if (!out) {
      std::cerr << "io error: cannot write '" << report_path << "'\n";
      return 2;
    }
    out << rep.to_json().dump(2) << "\n";
    std::cout << rep.to_json().dump(2) << std::endl;
    return rep.passed ? 0 : 1;
  } catch (const kph::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kph::IOError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
