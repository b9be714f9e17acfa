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
#include "murm/trace_engine.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace murm {

struct WindowParams {
  double width = 5000.0;
  double step = 500.0;
  /// Defaults to min conductor + width/2 of the rank-r curves.
  std::optional<double> first_center;
  /// Defaults to max conductor - width/2 of the rank-r curves.
  std::optional<double> last_center;
};

/// Sliding conductor-window means of one invariant over rank-r curves.
struct WindowSeries {
  std::vector<double> centers;
  /// Empty where the window holds no curves.
  std::vector<std::optional<double>> values;
  std::vector<std::size_t> counts;
  WindowParams params;
  int rank = 0;
  Invariant invariant = Invariant::period;
};

/// Mean of `inv` over rank-`rank` curves with conductor in the closed window
/// [c - W/2, c + W/2] for each center c. Throws ArgumentError for W <= 0 or S <= 0.
WindowSeries sliding_window_series(const CurveTable &table, Invariant inv, int rank,
                                   const WindowParams &params);

/// A series restricted to positions with a value.
struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

/// Smoothing weights of a centered Savitzky-Golay filter (least-squares
/// polynomial of `degree` over `window` points, evaluated at the center).
std::vector<double> savgol_coefficients(std::size_t window, int degree);

/// value - Savitzky-Golay fit, emitted only where the filter window lies
/// entirely inside the series (no edge padding). The series must be gap-free
/// and at least `window` long; `window` odd and > degree.
Series savgol_detrend(const WindowSeries &series, std::size_t window = 101, int degree = 3);
Series savgol_detrend(const Series &series, std::size_t window = 101, int degree = 3);

/// Pearson correlation over the x-values both series share.
double residual_correlation(const Series &a, const Series &b);

/// Per-prime mean a_p over a set of matrix rows.
struct MurmurationProfile {
  PrimeList primes;
  std::vector<double> mean_ap;
  std::size_t n_curves = 0;
};

/// Mean trace per prime over `rows`. With `good_only`, bad-prime entries are
/// left out of each column's mean (a column with no good entries gets 0).
MurmurationProfile murmuration_profile(std::span<const std::size_t> rows,
                                       const TraceMatrix &matrix, bool good_only = false);
MurmurationProfile murmuration_profile(std::span<const std::string> labels,
                                       const TraceMatrix &matrix, bool good_only = false);

struct WelchParams {
  std::size_t segment = 256;
  /// Fraction of a segment shared with the next one.
  double overlap = 0.5;
  bool remove_mean = true;
};

struct Spectrum {
  /// Cycles per sample, 0 .. 1/2.
  std::vector<double> frequency;
  /// One-sided power spectral density.
  std::vector<double> power;
  std::size_t segments = 0;
};

/// Averaged periodogram over Hann-windowed overlapping segments.
Spectrum welch_psd(std::span<const double> x, const WelchParams &params = {});

struct LagCorrelation {
  std::vector<int> lags;
  std::vector<double> values;
  int peak_lag = 0;
  double peak_value = 0.0;
};

/// Normalized cross-correlation r(k) = sum_i a'_i b'_{i+k} / (n sd_a sd_b)
/// for k in [-max_lag, max_lag], over the x-values both series share.
LagCorrelation cross_correlation(const Series &a, const Series &b, int max_lag);
LagCorrelation cross_correlation(std::span<const double> a, std::span<const double> b,
                                 int max_lag);

} // namespace murm
