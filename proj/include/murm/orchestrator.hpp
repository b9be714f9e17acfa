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

#pragma once

#include "murm/confounders.hpp"
#include "murm/stratification.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace murm {

/// Settings shared by every subcommand. Keys in config files and flags use
/// the same names: curves, cache, zeros, primes, window, step, range, rule,
/// band, shuffles, seed, threads, out, svg, zero_sample, t_max.
struct RunConfig {
  std::string curves;
  std::optional<std::string> cache;
  std::optional<std::string> zeros;
  std::size_t primes = 500;
  double window = 5000.0;
  double step = 500.0;
  std::vector<ConductorRange> ranges = {{10000, 50000}};
  std::vector<std::string> rules = {"tamagawa", "sha", "period", "torsion", "root_number"};
  /// The first band drives the confounder battery and zero sampling, the
  /// last one the diagnostics.
  std::vector<Band> bands = {{1.53, 2.84}, {1.10, 3.28}};
  std::size_t shuffles = 10000;
  std::uint64_t seed = 20240611;
  unsigned threads = 0;
  std::string out = "murm-out";
  bool svg = false;
  /// Curves drawn per Sha group for the zero statistics.
  std::size_t zero_sample = 1000;
  double t_max = 10.0;
};

/// Raw key -> values; a key given several times keeps every value in order.
using ConfigMap = std::map<std::string, std::vector<std::string>>;

/// Parses key=value lines; '#' starts a comment, blank lines are skipped.
/// Throws ParseError for a line without '='.
ConfigMap parse_config(std::istream &in);

/// Applies `file` then `flags` (a key present in `flags` replaces the file's
/// values) over the defaults. Lists accept repeated keys or commas. Throws
/// ArgumentError for an unknown key or a malformed value.
RunConfig resolve_config(const ConfigMap &file, const ConfigMap &flags);

/// Canonical key=value dump of the settings that affect results (threads,
/// out and svg are excluded).
std::string canonical_config(const RunConfig &cfg);

/// SHA-256 of canonical_config, lowercase hex.
std::string config_hash(const RunConfig &cfg);

std::string sha256_hex(std::string_view bytes);

/// Throws Error when the file cannot be read.
std::string file_sha256(const std::string &path);

/// SHA-256 of the canonical CSV rendering of the table. Trace caches record
/// it in a sidecar file so a cache is never reused for other curves.
std::string table_digest(const CurveTable &table);

inline const std::vector<std::string> &subcommands() {
  static const std::vector<std::string> names = {"ingest",   "traces",   "windows", "stratify",
                                                 "confound", "diagnose", "zeros",   "report"};
  return names;
}

/// Runs one subcommand and writes <out>/<subcommand>.json plus CSV series.
/// Returns 0 on success. On failure writes <out>/error.json with the error
/// type and message, prints the message to `log`, and returns 1.
int run(const std::string &subcommand, const RunConfig &cfg, std::ostream &log);

} // namespace murm
