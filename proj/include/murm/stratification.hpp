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

#include "murm/curve_table.hpp"
#include "murm/invariants.hpp"
#include "murm/murmuration.hpp"
#include "murm/trace_engine.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace murm {

/// Closed value range [lo, hi] of an invariant defining one group.
struct GroupDef {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

/// How curves are split by one invariant.
struct StratRule {
  enum class Kind { thresholds, quartiles };

  std::string id;
  Invariant invariant = Invariant::tamagawa;
  Kind kind = Kind::thresholds;
  /// Used by Kind::thresholds; ranges must not overlap.
  std::vector<GroupDef> groups;

  /// Built-in rules: "tamagawa" (prod c_p = 1 vs >= 5), "sha" (1 vs >= 4),
  /// "period" (quartiles), "torsion" (1 vs >= 2), "root_number" (+1 vs -1).
  /// Throws ArgumentError for other ids.
  static StratRule named(std::string_view id);
};

/// Table indices per group. Curves matching no group are listed as unassigned.
struct Partition {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> unassigned;

  std::vector<std::size_t> sizes() const;
};

/// Throws DataError naming the first empty group.
Partition partition(const CurveTable &table, const StratRule &rule);

/// Two profiles: sqrt(mean_p (A_p - B_p)^2). More than two: the same mean
/// taken over every unordered pair of profiles as well, then the root.
/// Throws ArgumentError for fewer than two profiles or mismatched primes.
double profile_rms(std::span<const MurmurationProfile> profiles);

struct PermutationParams {
  std::size_t n_shuffles = 10000;
  std::uint64_t seed = 0;
  /// 0 uses every hardware thread.
  unsigned threads = 0;
};

struct StratReport {
  std::string rule;
  std::vector<std::string> group_names;
  std::vector<std::size_t> group_sizes;
  double observed_rms = 0.0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  double null_median = 0.0;
  std::size_t null_exceed = 0;
  /// (1 + #{null >= observed}) / (1 + n_shuffles).
  double p_value = 1.0;
  std::size_t n_shuffles = 0;
  std::uint64_t seed = 0;
  /// Set when n_shuffles < 100: the p-value resolution is too coarse.
  bool low_shuffle_warning = false;
};

/// Observed profile RMS between `groups` (matrix rows) and its null
/// distribution under random relabelling with group sizes fixed. Shuffle i
/// draws from its own generator seeded by (seed, i), so the result does not
/// depend on the thread count. Throws ArgumentError for fewer than two groups
/// or an empty group.
StratReport permutation_test(const std::vector<std::vector<std::size_t>> &groups,
                             const TraceMatrix &matrix, const PermutationParams &params);

/// partition + permutation_test on the rows `matrix` holds for `table`.
StratReport stratify(const CurveTable &table, const TraceMatrix &matrix, const StratRule &rule,
                     const PermutationParams &params);

/// Per-group profiles for a table partition.
std::vector<MurmurationProfile> group_profiles(const CurveTable &table, const TraceMatrix &matrix,
                                               const Partition &part);

struct Bonferroni {
  double threshold = 0.0;
  std::vector<bool> significant;
};

/// threshold = alpha / m; test i is significant when p_i <= threshold.
Bonferroni bonferroni(std::span<const double> p_values, double alpha = 0.001);

/// RMS(N) = C N^-alpha fitted by least squares on logs.
struct PowerLawFit {
  double alpha = 0.0;
  double alpha_stderr = 0.0;
  double r_squared = 0.0;
};

PowerLawFit fit_power_law(std::span<const double> n, std::span<const double> rms);

using ConductorRange = std::pair<std::uint32_t, std::uint32_t>;

/// The four conductor windows used for the default scale scan.
std::vector<ConductorRange> default_scale_windows();

struct ScaleScan {
  std::vector<ConductorRange> windows;
  /// Geometric window centres sqrt(lo * hi).
  std::vector<double> centers;
  std::vector<double> rms;
  std::vector<std::vector<std::size_t>> group_sizes;
  PowerLawFit fit;
};

/// Profile RMS of `rule` inside each window and the power-law fit across
/// windows. Needs at least three windows; an empty group in any window is a
/// DataError.
ScaleScan scale_scan(const CurveTable &table, const TraceMatrix &matrix, const StratRule &rule,
                     const std::vector<ConductorRange> &windows);

} // namespace murm
