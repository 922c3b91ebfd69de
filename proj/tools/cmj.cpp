// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0

// cmj <experiment> --config <file> [--seed S] [--out DIR]
//
// Thread count comes from CMJ_THREADS only; it never changes the results.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cmj/harness.hpp"
#include "cmj/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo and numerical experiments for Crump-Mode-Jagers branching processes"};
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  std::vector<std::string> names(cmj::kExperimentNames.begin(), cmj::kExperimentNames.end());
  app.add_option("experiment", experiment, "experiment to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cmj::exit_code::kConfig;
  }

  cmj::ExperimentConfig cfg;
  try {
    cfg = cmj::load_config(config_path, seed);
    if (cmj::to_string(cfg.experiment) != experiment) {
      throw cmj::ConfigError("config file is for experiment '" + cmj::to_string(cfg.experiment) +
                             "', not '" + experiment + "'");
    }
    if (out_dir) cfg.output_dir = *out_dir;
  } catch (const cmj::Error& e) {
    std::cerr << "cmj: " << e.what() << "\n";
    return cmj::exit_code::kConfig;
  }

  const auto res = cmj::run(cfg, cmj::default_threads());
  std::size_t failed = 0;
  for (const auto& c : res.checks) {
    if (!c.pass) {
      ++failed;
      std::cerr << "FAIL " << c.name << ": value " << c.value << ", threshold " << c.threshold << "\n";
    }
  }
  std::cout << to_string(cfg.experiment) << ": " << res.status << " (" << res.checks.size() - failed << "/"
            << res.checks.size() << " checks pass)";
  if (!res.message.empty()) std::cout << ": " << res.message;
  std::cout << "\n";
  if (!res.csv.empty()) std::cout << "wrote " << res.csv_path.string() << "\n";
  std::cout << "wrote " << res.json_path.string() << "\n";
  return res.exit_code;
}
