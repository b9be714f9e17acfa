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

#include "murm/murmuration.hpp"

#include "murm/descriptive.hpp"
#include "murm/error.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace murm {

WindowSeries sliding_window_series(const CurveTable &table, Invariant inv, int rank,
                                   const WindowParams &params) {
  if (!(params.width > 0.0) || !(params.step > 0.0))
    throw ArgumentError("window width and step must be positive");
  WindowSeries out;
  out.params = params;
  out.rank = rank;
  out.invariant = inv;

  std::vector<double> conductors;
  std::vector<double> prefix{0.0};
  for (const auto &r : table.records()) {
    if (r.rank != rank)
      continue;
    conductors.push_back(r.conductor);
    prefix.push_back(prefix.back() + invariant_value(r, inv));
  }
  if (conductors.empty() && !(params.first_center && params.last_center))
    return out;

  const double half = params.width / 2.0;
  const double first = params.first_center.value_or(conductors.front() + half);
  const double last = params.last_center.value_or(conductors.back() - half);
  for (std::size_t k = 0;; ++k) {
    const double c = first + static_cast<double>(k) * params.step;
    if (c > last + 1e-9 * params.step)
      break;
    const auto lo = std::lower_bound(conductors.begin(), conductors.end(), c - half);
    const auto hi = std::upper_bound(conductors.begin(), conductors.end(), c + half);
    const auto i0 = static_cast<std::size_t>(lo - conductors.begin());
    const auto i1 = static_cast<std::size_t>(hi - conductors.begin());
    out.centers.push_back(c);
    out.counts.push_back(i1 - i0);
    if (i1 > i0)
      out.values.emplace_back((prefix[i1] - prefix[i0]) / static_cast<double>(i1 - i0));
    else
      out.values.emplace_back(std::nullopt);
  }
  return out;
}

std::vector<double> savgol_coefficients(std::size_t window, int degree) {
  if (window % 2 == 0 || degree < 0 || static_cast<std::size_t>(degree) >= window)
    throw ArgumentError("Savitzky-Golay window must be odd and exceed the degree");
  const auto half = static_cast<double>(window / 2);
  const int terms = degree + 1;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(window), terms);
  for (std::size_t i = 0; i < window; ++i) {
    // Scaled abscissae keep the normal equations well conditioned.
    const double u = half > 0 ? (static_cast<double>(i) - half) / half : 0.0;
    double power = 1.0;
    for (int k = 0; k < terms; ++k) {
      design(static_cast<Eigen::Index>(i), k) = power;
      power *= u;
    }
  }
  // Fitted value at the center is e0' (J'J)^{-1} J' y.
  const Eigen::MatrixXd normal = design.transpose() * design;
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(terms);
  e0(0) = 1.0;
  const Eigen::VectorXd z = normal.ldlt().solve(e0);
  const Eigen::VectorXd weights = design * z;
  return {weights.data(), weights.data() + weights.size()};
}

Series savgol_detrend(const Series &series, std::size_t window, int degree) {
  const auto weights = savgol_coefficients(window, degree);
  const std::size_t n = series.y.size();
  if (n < window)
    throw ArgumentError("series of length " + std::to_string(n) +
                        " is shorter than the filter window " + std::to_string(window));
  const std::size_t half = window / 2;
  Series out;
  for (std::size_t i = half; i + half < n; ++i) {
    double fit = 0.0;
    for (std::size_t k = 0; k < window; ++k)
      fit += weights[k] * series.y[i - half + k];
    out.x.push_back(series.x[i]);
    out.y.push_back(series.y[i] - fit);
  }
  return out;
}

Series savgol_detrend(const WindowSeries &series, std::size_t window, int degree) {
  Series s;
  for (std::size_t i = 0; i < series.centers.size(); ++i) {
    if (!series.values[i])
      throw ArgumentError("cannot detrend a series with empty windows (center " +
                          std::to_string(series.centers[i]) + ")");
    s.x.push_back(series.centers[i]);
    s.y.push_back(*series.values[i]);
  }
  return savgol_detrend(s, window, degree);
}

namespace {

/// Pairs of values at x-positions present in both series, in x order.
std::pair<std::vector<double>, std::vector<double>> align(const Series &a, const Series &b) {
  std::map<double, double> lookup;
  for (std::size_t i = 0; i < b.x.size(); ++i)
    lookup.emplace(b.x[i], b.y[i]);
  std::vector<std::pair<double, double>> both;
  std::vector<double> xs;
  for (std::size_t i = 0; i < a.x.size(); ++i)
    if (auto it = lookup.find(a.x[i]); it != lookup.end()) {
      both.emplace_back(a.y[i], it->second);
      xs.push_back(a.x[i]);
    }
  std::vector<std::size_t> order(both.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto l, auto r) { return xs[l] < xs[r]; });
  std::pair<std::vector<double>, std::vector<double>> out;
  for (auto i : order) {
    out.first.push_back(both[i].first);
    out.second.push_back(both[i].second);
  }
  return out;
}

} // namespace

double residual_correlation(const Series &a, const Series &b) {
  const auto [ya, yb] = align(a, b);
  if (ya.size() < 3)
    throw ArgumentError("residual series share fewer than three points");
  return pearson(ya, yb);
}

MurmurationProfile murmuration_profile(std::span<const std::size_t> rows,
                                       const TraceMatrix &matrix, bool good_only) {
  if (rows.empty())
    throw ArgumentError("murmuration profile of an empty curve set");
  const std::size_t k = matrix.cols();
  std::vector<std::int64_t> sums(k, 0);
  std::vector<std::size_t> counts(k, 0);
  for (auto r : rows) {
    if (r >= matrix.rows())
      throw ArgumentError("row index outside the trace matrix");
    const auto row = matrix.row(r);
    if (!good_only) {
      for (std::size_t j = 0; j < k; ++j)
        sums[j] += row[j];
    } else {
      for (std::size_t j = 0; j < k; ++j)
        if (!matrix.is_bad(r, j)) {
          sums[j] += row[j];
          ++counts[j];
        }
    }
  }
  MurmurationProfile out;
  out.primes = matrix.primes();
  out.n_curves = rows.size();
  out.mean_ap.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t n = good_only ? counts[j] : rows.size();
    out.mean_ap[j] = n == 0 ? 0.0 : static_cast<double>(sums[j]) / static_cast<double>(n);
  }
  return out;
}

MurmurationProfile murmuration_profile(std::span<const std::string> labels,
                                       const TraceMatrix &matrix, bool good_only) {
  std::vector<std::size_t> rows;
  rows.reserve(labels.size());
  for (const auto &l : labels) {
    const auto r = matrix.row_of(l);
    if (r < 0)
      throw ArgumentError("label " + l + " is not in the trace matrix");
    rows.push_back(static_cast<std::size_t>(r));
  }
  return murmuration_profile(rows, matrix, good_only);
}

Spectrum welch_psd(std::span<const double> x, const WelchParams &params) {
  const std::size_t len = params.segment;
  if (len < 4)
    throw ArgumentError("Welch segment must hold at least 4 samples");
  if (x.size() < len)
    throw ArgumentError("input of length " + std::to_string(x.size()) +
                        " is shorter than one Welch segment (" + std::to_string(len) + ")");
  if (!(params.overlap >= 0.0 && params.overlap < 1.0))
    throw ArgumentError("Welch overlap must lie in [0, 1)");
  const auto hop = std::max<std::size_t>(
      1, len - static_cast<std::size_t>(std::lround(params.overlap * static_cast<double>(len))));

  std::vector<double> window(len);
  double window_power = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    // Periodic Hann.
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(len));
    window_power += window[i] * window[i];
  }

  const std::size_t bins = len / 2 + 1;
  Spectrum out;
  out.frequency.resize(bins);
  out.power.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b)
    out.frequency[b] = static_cast<double>(b) / static_cast<double>(len);

  double *in = fftw_alloc_real(len);
  fftw_complex *spec = fftw_alloc_complex(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, spec, FFTW_ESTIMATE);

  for (std::size_t start = 0; start + len <= x.size(); start += hop) {
    double m = 0.0;
    if (params.remove_mean) {
      for (std::size_t i = 0; i < len; ++i)
        m += x[start + i];
      m /= static_cast<double>(len);
    }
    for (std::size_t i = 0; i < len; ++i)
      in[i] = (x[start + i] - m) * window[i];
    fftw_execute(plan);
    for (std::size_t b = 0; b < bins; ++b) {
      double p = (spec[b][0] * spec[b][0] + spec[b][1] * spec[b][1]) / window_power;
      if (b != 0 && !(len % 2 == 0 && b == bins - 1))
        p *= 2.0;
      out.power[b] += p;
    }
    ++out.segments;
  }
  fftw_destroy_plan(plan);
  fftw_free(spec);
  fftw_free(in);
  for (auto &p : out.power)
    p /= static_cast<double>(out.segments);
  return out;
}

LagCorrelation cross_correlation(std::span<const double> a, std::span<const double> b,
                                 int max_lag) {
  if (a.size() != b.size())
    throw ArgumentError("cross-correlation inputs differ in length");
  if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= a.size())
    throw ArgumentError("max_lag must lie in [0, n)");
  const double ma = mean(a), mb = mean(b);
  double va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(va > 0.0) || !(vb > 0.0))
    throw DataError("cross-correlation undefined for zero-variance input");
  const double norm = std::sqrt(va * vb);
  LagCorrelation out;
  out.peak_value = -2.0;
  for (int k = -max_lag; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto j = static_cast<std::ptrdiff_t>(i) + k;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(b.size()))
        continue;
      s += (a[i] - ma) * (b[static_cast<std::size_t>(j)] - mb);
    }
    const double r = s / norm;
    out.lags.push_back(k);
    out.values.push_back(r);
    if (r > out.peak_value) {
      out.peak_value = r;
      out.peak_lag = k;
    }
  }
  return out;
}

LagCorrelation cross_correlation(const Series &a, const Series &b, int max_lag) {
  const auto [ya, yb] = align(a, b);
  return cross_correlation(ya, yb, max_lag);
}

} // namespace murm
