/*
 * Copyright 2026 The murm Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// murm: command-line entry point. One subcommand per run; settings come from
// an optional key=value file (--config) and flags, flags taking precedence.

#include "murm/error.hpp"
#include "murm/orchestrator.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Frobenius trace murmurations and BSD invariants"};
  app.set_help_flag("-h,--help", "Show usage");

  std::string sub;
  std::string config_path;
  app.add_option("subcommand", sub, "ingest | traces | windows | stratify | confound | diagnose | zeros | report")
      ->required()
      ->check(CLI::IsMember(murm::subcommands()));
  app.add_option("--config", config_path, "key=value settings file")->check(CLI::ExistingFile);

  // Each flag is kept as text and validated by resolve_config, exactly like
  // the same key read from a file.
  struct Flag {
    const char *name;
    const char *key;
    const char *help;
    bool list;
  };
  const Flag flags[] = {
      {"--curves", "curves", "curves CSV", false},
      {"--cache", "cache", "binary trace cache", false},
      {"--zeros", "zeros", "precomputed zeros CSV", false},
      {"--primes", "primes", "number of primes (default 500)", false},
      {"--window", "window", "sliding window width W", false},
      {"--step", "step", "sliding window step S", false},
      {"--range", "range", "conductor range LO:HI (repeatable)", true},
      {"--rule", "rule", "stratification rule (repeatable)", true},
      {"--band", "band", "L-value band LO:HI (repeatable)", true},
      {"--shuffles", "shuffles", "permutation shuffles", false},
      {"--seed", "seed", "random seed", false},
      {"--threads", "threads", "worker threads (0 = all cores)", false},
      {"--out", "out", "output directory", false},
      {"--zero-sample", "zero_sample", "curves per Sha group for zero statistics", false},
      {"--t-max", "t_max", "zero search ceiling", false},
  };
  std::map<std::string, std::vector<std::string>> given;
  for (const auto &f : flags) {
    auto *opt = app.add_option(f.name, given[f.key], f.help);
    if (!f.list)
      opt->expected(1);
    else
      opt->allow_extra_args(false);
  }
  bool svg = false;
  app.add_flag("--svg", svg, "also write SVG plots");

  CLI11_PARSE(app, argc, argv);

  try {
    murm::ConfigMap file;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      file = murm::parse_config(in);
    }
    murm::ConfigMap cli;
    for (auto &[key, values] : given)
      if (!values.empty())
        cli[key] = values;
    if (svg)
      cli["svg"] = {"true"};
    const auto cfg = murm::resolve_config(file, cli);
    return murm::run(sub, cfg, std::cerr);
  } catch (const murm::Error &e) {
    std::cerr << "murm: " << e.what() << '\n';
    return 2;
  }
}
