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

#include "murm/diagnostics.hpp"
#include "murm/lfunction.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace murm {

struct HotellingResult {
  double t2 = 0.0;
  double f = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::size_t k = 0;
};

/// F = (n_a + n_b - k - 1) / (k (n_a + n_b - 2)) T^2 on (k, n_a + n_b - k - 1)
/// degrees of freedom.
HotellingResult hotelling_from_t2(double t2, std::size_t k, std::size_t n_a, std::size_t n_b);

/// Two-sample T^2 with pooled covariance. Rows are observations of equal
/// length k; each group needs more than k + 1 rows. Throws ArgumentError on
/// shape problems and NumericalError for a singular pooled covariance.
HotellingResult hotelling_t2(const std::vector<std::vector<double>> &a,
                             const std::vector<std::vector<double>> &b);

/// Same test on zero ordinates; every set must be complete with the same k.
HotellingResult hotelling_t2(std::span<const ZeroSet> a, std::span<const ZeroSet> b);

/// Mean of each ordinate over complete sets of equal k.
std::vector<double> mean_gammas(std::span<const ZeroSet> sets);

/// SO(even) one-level density 1 + sin(2 pi x) / (2 pi x), equal to 2 at 0.
double so_even_density(double x);

struct OneLevelDensity {
  static constexpr double bin_width = 0.1;
  static constexpr double x_max = 4.0;

  std::vector<double> bin_centers;
  /// Zeros per curve per unit x; a single zero in one set gives mass 1.
  std::vector<double> density;
  /// Trapezoid integral over bin centres of (density - W)^2.
  double deviation = 0.0;
  /// x = gamma log N / 2 pi for every zero, and for first zeros only.
  std::vector<double> scaled_all;
  std::vector<double> scaled_first;
  std::size_t n_sets = 0;
};

/// Throws ArgumentError for no sets or a conductor count that differs from the set count.
OneLevelDensity one_level_density(std::span<const ZeroSet> sets,
                                  std::span<const std::uint32_t> conductors);

struct DensityComparison {
  KsResult all;
  KsResult first;
};

/// Two-sample KS between groups on all scaled zeros and on first zeros.
DensityComparison compare_densities(const OneLevelDensity &a, const OneLevelDensity &b);

struct ExplicitPrediction {
  std::vector<std::uint32_t> primes;
  std::vector<double> c_a;
  std::vector<double> c_b;
  /// c_a - c_b.
  std::vector<double> predicted;
  double rms_predicted = 0.0;
  std::optional<double> rms_observed;
  std::optional<double> correlation;
};

/// c_p = -(2 sqrt(p) / log p) sum_j cos(gamma_j log p) per group. When
/// `observed` is given (one value per prime) the Pearson correlation and RMS
/// of both profiles are reported. Throws ArgumentError for no primes, unequal
/// zero counts, or a mismatched observed profile.
ExplicitPrediction explicit_predict(std::span<const double> gammas_a,
                                    std::span<const double> gammas_b,
                                    std::span<const std::uint32_t> primes,
                                    std::optional<std::span<const double>> observed = std::nullopt);

} // namespace murm
