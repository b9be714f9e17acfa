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
#include "murm/stratification.hpp"
#include "murm/trace_engine.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace murm {

/// Number of distinct prime factors; omega(1) = 0.
unsigned omega(std::uint64_t n);

/// `rule` restricted to curves with omega(N) = k. Throws DataError when a
/// restricted group is empty.
StratReport control_omega(const CurveTable &table, const TraceMatrix &matrix, const StratRule &rule,
                          unsigned k, const PermutationParams &params);

enum class MatchKey { conductor, l_value };

struct MatchedPair {
  std::size_t a = 0; ///< Index into group A.
  std::size_t b = 0; ///< Index into group B.
  std::string label_a;
  std::string label_b;
  double distance = 0.0;
};

struct MatchedPairs {
  MatchKey key = MatchKey::conductor;
  double max_distance = 0.0;
  std::vector<MatchedPair> pairs;
  double mean_distance = 0.0;
};

/// Greedy nearest-neighbour matching without replacement. A-curves are taken
/// in ascending key order (ties by label); each takes the closest unused
/// B-curve (ties by label) and pairs farther apart than `max_distance` are
/// dropped. Throws ArgumentError for an empty group.
MatchedPairs match_nn(std::span<const CurveRecord> group_a, std::span<const CurveRecord> group_b,
                      MatchKey key, double max_distance);

enum class PairedRmsMode {
  /// profile_rms of the matched A and matched B sub-profiles.
  group,
  /// sqrt of the mean over pairs and primes of (a_p(A) - a_p(B))^2.
  per_pair,
};

/// Separation of the matched sets. Labels must be present in `matrix`.
double matched_rms(const MatchedPairs &pairs, const TraceMatrix &matrix,
                   PairedRmsMode mode = PairedRmsMode::group);

/// Permutation test of the matched A curves against the matched B curves.
StratReport matched_permutation_test(const MatchedPairs &pairs, const TraceMatrix &matrix,
                                     const PermutationParams &params);

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

/// Rank-0 curves with lo <= L(E,1) <= hi. Throws ArgumentError unless lo < hi.
/// The result may be empty; callers report that.
CurveTable lvalue_band(const CurveTable &table, Band band);

struct TripleHalf {
  std::optional<StratReport> report;
  /// Why `report` is absent (for example an empty Sha group).
  std::string error;
  std::size_t n_curves = 0;
};

struct TripleControl {
  double median_period = 0.0;
  std::size_t n_curves = 0;
  TripleHalf small_period; ///< Omega <= median
  TripleHalf large_period; ///< Omega > median
};

/// Sha-rule permutation tests on rank-0 curves inside `band` and the conductor
/// range, split at the median real period. Throws DataError when the
/// restriction is empty.
TripleControl triple_control(const CurveTable &table, const TraceMatrix &matrix, Band band,
                             ConductorRange range, const PermutationParams &params);

struct GroupRatio {
  std::string name;
  std::size_t n = 0;
  double mean_bsd_ratio = 0.0; ///< mean of Omega * prod c_p / T^2
  double mean_l_value = 0.0;
  double ratio = 0.0;          ///< mean_bsd_ratio / mean_l_value
  double mean_period = 0.0;
  double mean_log_l = 0.0;
};

/// Per-group BSD decomposition; every member must have rank 0. Throws
/// ArgumentError for a positive-rank member and DataError for a zero mean L.
std::vector<GroupRatio> bsd_group_ratios(const CurveTable &table, const Partition &part);

struct EulerCumsum {
  PrimeList primes;
  std::vector<double> sum_a; ///< running sum of mean_a(q) / q
  std::vector<double> sum_b;
  std::vector<double> delta; ///< sum_a - sum_b
  std::size_t argmax = 0;    ///< index of the largest delta
  double peak_delta = 0.0;
  double terminal_delta = 0.0;
};

/// Throws ArgumentError for mismatched prime lists.
EulerCumsum euler_cumsum(const MurmurationProfile &a, const MurmurationProfile &b);

/// Pearson r between two per-curve invariants. Throws DataError for fewer
/// than three curves or a constant invariant.
double invariant_correlation(const CurveTable &table, Invariant x, Invariant y);

} // namespace murm
