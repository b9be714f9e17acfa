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

#include "murm/diagnostics.hpp"

#include "murm/descriptive.hpp"
#include "murm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace murm {

namespace {

double mean_of(const std::vector<double> &v) {
  return v.empty() ? 0.0 : mean(v);
}

std::optional<double> mean_defined(const std::vector<std::optional<double>> &v) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto &x : v)
    if (x) {
      s += *x;
      ++n;
    }
  if (n == 0)
    return std::nullopt;
  return s / static_cast<double>(n);
}

KsResult finish(double d, std::size_t na, std::size_t nb) {
  KsResult r;
  r.d = d;
  r.n_a = na;
  r.n_b = nb;
  const double ne = nb == 0 ? static_cast<double>(na)
                            : static_cast<double>(na) * static_cast<double>(nb) /
                                  static_cast<double>(na + nb);
  const double sq = std::sqrt(ne);
  r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

} // namespace

double MomentProfile::summary_mean() const { return mean_of(mean); }
double MomentProfile::summary_variance_over_p() const { return mean_of(variance_over_p); }
std::optional<double> MomentProfile::summary_skewness() const { return mean_defined(skewness); }
std::optional<double> MomentProfile::summary_kurtosis() const { return mean_defined(kurtosis); }

MomentProfile moment_profile(std::span<const std::size_t> rows, const TraceMatrix &matrix) {
  if (rows.size() < 4)
    throw ArgumentError("moment profile needs at least four curves");
  for (auto r : rows)
    if (r >= matrix.rows())
      throw ArgumentError("row index outside the trace matrix");
  MomentProfile out;
  out.primes = matrix.primes();
  out.n = rows.size();
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    double s = 0.0;
    for (auto r : rows)
      s += matrix.at(r, j);
    const double m = s / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (auto r : rows) {
      const double d = matrix.at(r, j) - m;
      const double d2 = d * d;
      m2 += d2;
      m3 += d2 * d;
      m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double var = m2 * n / (n - 1.0);
    out.mean.push_back(m);
    out.variance.push_back(var);
    out.variance_over_p.push_back(var / matrix.primes()[j]);
    if (m2 > 0.0) {
      const double g1 = m3 / std::pow(m2, 1.5);
      const double g2 = m4 / (m2 * m2) - 3.0;
      out.skewness.push_back(std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1);
      out.kurtosis.push_back((n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0));
    } else {
      out.skewness.push_back(std::nullopt);
      out.kurtosis.push_back(std::nullopt);
    }
  }
  return out;
}

RatioSummary variance_ratio(const MomentProfile &a, const MomentProfile &b) {
  if (!(a.primes == b.primes))
    throw ArgumentError("moment profiles do not share a prime list");
  RatioSummary out;
  for (std::size_t j = 0; j < a.variance.size(); ++j) {
    if (!(b.variance[j] > 0.0))
      throw DataError("zero variance at p = " + std::to_string(b.primes[j]));
    out.ratio.push_back(a.variance[j] / b.variance[j]);
  }
  out.mean = mean_of(out.ratio);
  out.sd = out.ratio.size() > 1 ? std::sqrt(variance(out.ratio)) : 0.0;
  return out;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3)
    return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum))
      break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw ArgumentError("KS test of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x)
      ++i;
    while (j < b.size() && b[j] == x)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return finish(d, a.size(), b.size());
}

double sato_tate_cdf(double theta) {
  theta = std::clamp(theta, 0.0, std::numbers::pi);
  return (theta - std::sin(theta) * std::cos(theta)) / std::numbers::pi;
}

KsResult ks_sato_tate(std::vector<double> theta) {
  if (theta.empty())
    throw ArgumentError("KS test of an empty sample");
  std::sort(theta.begin(), theta.end());
  const double n = static_cast<double>(theta.size());
  double d = 0.0;
  for (std::size_t i = 0; i < theta.size();) {
    std::size_t k = i;
    while (k < theta.size() && theta[k] == theta[i])
      ++k;
    const double f = sato_tate_cdf(theta[i]);
    d = std::max({d, std::abs(static_cast<double>(k) / n - f), std::abs(f - static_cast<double>(i) / n)});
    i = k;
  }
  return finish(d, theta.size(), 0);
}

std::vector<double> sato_tate_angles(std::span<const std::size_t> rows, const TraceMatrix &matrix,
                                     std::uint32_t p_min) {
  std::vector<double> out;
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    const std::uint32_t p = matrix.primes()[j];
    if (p <= p_min)
      continue;
    const double scale = 2.0 * std::sqrt(static_cast<double>(p));
    for (auto r : rows)
      if (!matrix.is_bad(r, j))
        out.push_back(std::acos(std::clamp(matrix.at(r, j) / scale, -1.0, 1.0)));
  }
  return out;
}

KsResult satotate_ks(std::span<const std::size_t> a, std::span<const std::size_t> b,
                     const TraceMatrix &matrix, std::uint32_t p_min) {
  auto ta = sato_tate_angles(a, matrix, p_min), tb = sato_tate_angles(b, matrix, p_min);
  if (ta.empty() || tb.empty())
    throw DataError("no good primes above " + std::to_string(p_min) + " in one of the pools");
  return ks_two_sample(std::move(ta), std::move(tb));
}

CrossoverReport crossover_scan(const PrimeList &primes, std::span<const double> diff,
                               std::span<const std::uint32_t> landmarks, std::size_t width) {
  if (diff.size() != primes.size())
    throw ArgumentError("difference profile and prime list differ in length");
  if (diff.empty())
    throw ArgumentError("empty difference profile");
  if (width == 0 || width % 2 == 0)
    throw ArgumentError("smoothing width must be odd");
  CrossoverReport out;
  out.primes = primes;
  const std::size_t n = diff.size(), half = width / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0, hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k)
      s += diff[k];
    out.smoothed.push_back(s / static_cast<double>(hi - lo + 1));
  }
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
  int initial = 0;
  std::size_t i = 0;
  for (; i < n && initial == 0; ++i)
    initial = sign(out.smoothed[i]);
  for (; initial != 0 && i < n; ++i) {
    const int s = sign(out.smoothed[i]);
    if (s == 0 || s == initial)
      continue;
    bool holds = true;
    for (std::size_t k = i; k < std::min(n, i + width) && holds; ++k)
      holds = sign(out.smoothed[k]) == s;
    if (holds) {
      out.crossing = Crossing{i, primes[i], s};
      break;
    }
  }
  for (const auto p : landmarks) {
    const auto j = primes.index_of(p);
    if (j < 0)
      continue;
    out.landmark_primes.push_back(p);
    out.landmark_values.push_back(diff[static_cast<std::size_t>(j)]);
  }
  return out;
}

std::string_view reduction_name(ReductionType t) {
  switch (t) {
  case ReductionType::additive:
    return "additive";
  case ReductionType::split_multiplicative:
    return "split_mult";
  case ReductionType::nonsplit_multiplicative:
    return "nonsplit_mult";
  }
  return "?";
}

ReductionSummary classify_reduction(const TraceMatrix &matrix, const CurveTable &table) {
  const auto rows = rows_for(matrix, table);
  ReductionSummary out;
  out.curves = table.size();
  for (std::size_t i = 0; i < table.size(); ++i) {
    bool multiplicative = false;
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      if (!matrix.is_bad(rows[i], j))
        continue;
      const int a = matrix.at(rows[i], j);
      ReductionType t;
      if (a == 0)
        t = ReductionType::additive;
      else if (a == 1)
        t = ReductionType::split_multiplicative;
      else if (a == -1)
        t = ReductionType::nonsplit_multiplicative;
      else
        throw DataError(table[i].label + ": bad-prime trace " + std::to_string(a) + " at p = " +
                        std::to_string(matrix.primes()[j]));
      multiplicative = multiplicative || t != ReductionType::additive;
      out.entries.push_back({table[i].label, matrix.primes()[j], t});
    }
    if (!multiplicative == (table[i].tamagawa_product == 1))
      ++out.agree;
  }
  return out;
}

BadPrimeShare bad_prime_share(std::span<const std::size_t> a, std::span<const std::size_t> b,
                              const TraceMatrix &matrix) {
  if (a.empty() || b.empty())
    throw ArgumentError("bad-prime share needs two nonempty groups");
  const std::size_t cols = matrix.cols();
  std::vector<double> fa(cols, 0.0), fb(cols, 0.0), ma(cols, 0.0), mb(cols, 0.0);
  auto accumulate = [&](std::span<const std::size_t> rows, std::vector<double> &full, std::vector<double> &masked) {
    for (auto r : rows)
      for (std::size_t j = 0; j < cols; ++j) {
        full[j] += matrix.at(r, j);
        if (!matrix.is_bad(r, j))
          masked[j] += matrix.at(r, j);
      }
    for (std::size_t j = 0; j < cols; ++j) {
      full[j] /= static_cast<double>(rows.size());
      masked[j] /= static_cast<double>(rows.size());
    }
  };
  accumulate(a, fa, ma);
  accumulate(b, fb, mb);
  double full = 0.0, masked = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    full += (fa[j] - fb[j]) * (fa[j] - fb[j]);
    masked += (ma[j] - mb[j]) * (ma[j] - mb[j]);
  }
  if (!(full > 0.0))
    throw DataError("groups have identical profiles; bad-prime share undefined");
  BadPrimeShare out;
  out.full_rms = std::sqrt(full / static_cast<double>(cols));
  out.masked_rms = std::sqrt(masked / static_cast<double>(cols));
  out.percent = 100.0 * (1.0 - masked / full);
  return out;
}

} // namespace murm
