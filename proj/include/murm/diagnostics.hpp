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
#include "murm/trace_engine.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace murm {

/// Sample moments of a_p across a group, one entry per prime column.
struct MomentProfile {
  PrimeList primes;
  std::size_t n = 0;
  std::vector<double> mean;
  std::vector<double> variance;        ///< n - 1 denominator
  std::vector<double> variance_over_p;
  /// Bias-corrected skewness G1; absent when n < 3 or the variance is 0.
  std::vector<std::optional<double>> skewness;
  /// Bias-corrected excess kurtosis G2; absent when n < 4 or the variance is 0.
  std::vector<std::optional<double>> kurtosis;

  /// Unweighted means over primes (shape moments over the defined entries).
  double summary_mean() const;
  double summary_variance_over_p() const;
  std::optional<double> summary_skewness() const;
  std::optional<double> summary_kurtosis() const;
};

/// Throws ArgumentError for fewer than four rows.
MomentProfile moment_profile(std::span<const std::size_t> rows, const TraceMatrix &matrix);

struct RatioSummary {
  std::vector<double> ratio; ///< per prime var_A / var_B
  double mean = 0.0;
  double sd = 0.0;
};

/// Per-prime variance ratio. Throws DataError where var_B is zero.
RatioSummary variance_ratio(const MomentProfile &a, const MomentProfile &b);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Two-sample KS statistic with the asymptotic p-value at effective size
/// n_a n_b / (n_a + n_b). Throws ArgumentError for an empty sample.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Sato-Tate CDF (theta - sin(theta) cos(theta)) / pi on [0, pi].
double sato_tate_cdf(double theta);

/// One-sample KS of angles against the Sato-Tate distribution.
KsResult ks_sato_tate(std::vector<double> theta);

/// theta_p = arccos(a_p / 2 sqrt(p)) over good (row, prime) pairs with p > p_min.
std::vector<double> sato_tate_angles(std::span<const std::size_t> rows, const TraceMatrix &matrix,
                                     std::uint32_t p_min = 1000);

/// KS between the pooled angles of two groups. Throws DataError for an empty pool.
KsResult satotate_ks(std::span<const std::size_t> a, std::span<const std::size_t> b,
                     const TraceMatrix &matrix, std::uint32_t p_min = 1000);

struct Crossing {
  std::size_t index = 0;
  std::uint32_t prime = 0;
  /// Sign taken after the crossing: -1 for positive to negative.
  int direction = 0;
};

struct CrossoverReport {
  PrimeList primes;
  std::vector<double> smoothed;
  std::optional<Crossing> crossing;
  std::vector<std::uint32_t> landmark_primes;
  std::vector<double> landmark_values;
};

/// Centred moving average of `width` points (shortened at the ends). The
/// crossing is the first index whose smoothed sign differs from the initial
/// sign and keeps the new sign for `width` consecutive points or to the end.
/// Landmarks report the raw difference; primes missing from the list are
/// skipped.
CrossoverReport crossover_scan(const PrimeList &primes, std::span<const double> diff,
                               std::span<const std::uint32_t> landmarks = {}, std::size_t width = 11);

enum class ReductionType { additive, split_multiplicative, nonsplit_multiplicative };

std::string_view reduction_name(ReductionType t);

struct ReductionEntry {
  std::string label;
  std::uint32_t prime = 0;
  ReductionType type = ReductionType::additive;
};

struct ReductionSummary {
  std::vector<ReductionEntry> entries;
  std::size_t curves = 0;
  std::size_t agree = 0;
  /// Fraction of curves for which "no multiplicative prime in the list" matches
  /// prod c_p = 1.
  double agreement() const { return curves ? static_cast<double>(agree) / static_cast<double>(curves) : 0.0; }
};

/// a_p = 0 additive, +1 split, -1 non-split at each bad column. Throws
/// DataError for another bad-prime value.
ReductionSummary classify_reduction(const TraceMatrix &matrix, const CurveTable &table);

struct BadPrimeShare {
  double full_rms = 0.0;
  double masked_rms = 0.0;
  /// 100 (1 - masked^2 / full^2).
  double percent = 0.0;
};

/// Share of the two-group profile separation carried by bad-prime entries:
/// the masked profiles count bad entries as 0. Throws DataError when the
/// full RMS is zero.
BadPrimeShare bad_prime_share(std::span<const std::size_t> a, std::span<const std::size_t> b,
                              const TraceMatrix &matrix);

} // namespace murm
