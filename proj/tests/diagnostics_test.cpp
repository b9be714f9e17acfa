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
#include "murm/error.hpp"
#include "murm/murmuration.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

using namespace murm;

namespace {

const TraceMatrix &small_matrix() {
  static const TraceMatrix m = build_trace_matrix(fixtures::small_cremona(), PrimeList::first(500), 0);
  return m;
}

std::vector<std::size_t> every(std::size_t n, std::size_t stride, std::size_t offset = 0) {
  std::vector<std::size_t> v;
  for (std::size_t i = offset; i < n; i += stride)
    v.push_back(i);
  return v;
}

// Curves whose traces vanish at a quarter or more of good primes have CM.
bool looks_cm(const TraceMatrix &m, std::size_t row) {
  std::size_t zeros = 0;
  for (std::size_t j = 0; j < m.cols(); ++j)
    zeros += m.at(row, j) == 0 && !m.is_bad(row, j);
  return zeros * 4 >= m.cols();
}

} // namespace

TEST(Moments, MatchProfileMeanAndTextbookEstimators) {
  const auto &m = small_matrix();
  const auto rows = every(m.rows(), 3);
  const auto mp = moment_profile(rows, m);
  const auto prof = murmuration_profile(rows, m);
  for (std::size_t j = 0; j < m.cols(); ++j)
    EXPECT_NEAR(mp.mean[j], prof.mean_ap[j], 1e-12);

  // Two-pass oracle at one column with the standard bias-corrected formulas.
  const std::size_t col = 40;
  std::vector<double> x;
  for (auto r : rows)
    x.push_back(m.at(r, col));
  const double n = static_cast<double>(x.size());
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double s2 = 0, s3 = 0, s4 = 0;
  for (double v : x) {
    s2 += std::pow(v - mu, 2);
    s3 += std::pow(v - mu, 3);
    s4 += std::pow(v - mu, 4);
  }
  const double var = s2 / (n - 1);
  const double k2 = s2 / n;
  const double g1 = (s3 / n) / std::pow(k2, 1.5);
  const double g2 = (s4 / n) / (k2 * k2) - 3;
  EXPECT_NEAR(mp.variance[col], var, 1e-9);
  EXPECT_NEAR(mp.variance_over_p[col], var / m.primes()[col], 1e-12);
  EXPECT_NEAR(*mp.skewness[col], g1 * std::sqrt(n * (n - 1)) / (n - 2), 1e-9);
  EXPECT_NEAR(*mp.kurtosis[col], ((n + 1) * g2 + 6) * (n - 1) / ((n - 2) * (n - 3)), 1e-9);
  // Sato-Tate limits: Var(a_p)/p -> 1 and excess kurtosis -> -1.
  EXPECT_NEAR(mp.summary_variance_over_p(), 1.0, 0.1);
  EXPECT_NEAR(*mp.summary_kurtosis(), -1.0, 0.15);
}

TEST(Moments, IdenticalRowsFlagShapeMoments) {
  const auto &m = small_matrix();
  const auto r = static_cast<std::size_t>(m.row_of("11a1"));
  const std::vector<std::size_t> rows = {r, r, r, r, r};
  const auto mp = moment_profile(rows, m);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    EXPECT_EQ(mp.variance[j], 0.0);
    EXPECT_FALSE(mp.skewness[j].has_value());
    EXPECT_FALSE(mp.kurtosis[j].has_value());
  }
  EXPECT_FALSE(mp.summary_skewness().has_value());
  EXPECT_THROW(moment_profile(std::vector<std::size_t>{r, r, r}, m), ArgumentError);
}

TEST(Moments, VarianceRatioOfSplitHalvesIsNearOne) {
  const auto &m = small_matrix();
  const auto a = moment_profile(every(m.rows(), 2, 0), m);
  const auto b = moment_profile(every(m.rows(), 2, 1), m);
  const auto vr = variance_ratio(a, b);
  EXPECT_NEAR(vr.mean, 1.0, 0.02);
  EXPECT_EQ(vr.ratio.size(), m.cols());
}

TEST(KolmogorovSmirnov, DistributionAndEdgeCases) {
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 2e-4);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  const std::vector<double> x = {0.1, 0.4, 0.7};
  EXPECT_EQ(ks_two_sample(x, x).d, 0.0);
  EXPECT_EQ(ks_two_sample(x, x).p_value, 1.0);
  EXPECT_EQ(ks_two_sample(x, {1.5, 2.0}).d, 1.0);
  EXPECT_THROW(ks_two_sample({}, x), ArgumentError);
  // Hand-computed: ECDF gap 2/3 - 0 after {0.1, 0.4} vs {0.5, 0.9}.
  EXPECT_NEAR(ks_two_sample(x, {0.5, 0.9}).d, 2.0 / 3.0, 1e-15);
}

TEST(SatoTate, AnglesInRangeAndDistributed) {
  const auto &m = small_matrix();
  // One curve per isogeny class: isogenous curves repeat the same traces.
  const auto reps = dedupe_isogeny(fixtures::small_cremona()).table;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < reps.size() && rows.size() < 80; i += 7) {
    const auto r = static_cast<std::size_t>(m.row_of(reps[i].label));
    if (!looks_cm(m, r))
      rows.push_back(r);
  }
  const auto theta = sato_tate_angles(rows, m, 1000);
  ASSERT_GT(theta.size(), 20000u);
  for (double t : theta) {
    ASSERT_GE(t, 0.0);
    ASSERT_LE(t, std::numbers::pi);
  }
  EXPECT_GT(ks_sato_tate(theta).p_value, 0.01);
  EXPECT_NEAR(sato_tate_cdf(std::numbers::pi / 2), 0.5, 1e-15);
}

TEST(SatoTate, TwoGroupTest) {
  const auto &m = small_matrix();
  const auto a = every(m.rows(), 2, 0);
  EXPECT_EQ(satotate_ks(a, a, m).d, 0.0);
  const auto r = satotate_ks(a, every(m.rows(), 2, 1), m);
  EXPECT_LT(r.d, 0.02);
  EXPECT_THROW(satotate_ks(a, a, m, 5000), DataError);
}

TEST(Crossover, SignChangeAndAntisymmetry) {
  const auto primes = PrimeList::first(200);
  std::vector<double> diff(200);
  for (std::size_t j = 0; j < 200; ++j)
    diff[j] = j < 46 ? 0.2 : -0.15; // p_46 = 199
  diff[10] = -1.0;                  // isolated dip must not count
  const std::vector<std::uint32_t> landmarks = {5, 37, 251, 1009, 4};
  const auto rep = crossover_scan(primes, diff, landmarks);
  ASSERT_TRUE(rep.crossing.has_value());
  EXPECT_NEAR(static_cast<double>(rep.crossing->index), 46.0, 6.0);
  EXPECT_EQ(rep.crossing->direction, -1);
  EXPECT_EQ(rep.landmark_primes, (std::vector<std::uint32_t>{5, 37, 251, 1009}));
  EXPECT_DOUBLE_EQ(rep.landmark_values[0], 0.2);
  EXPECT_DOUBLE_EQ(rep.landmark_values[2], -0.15);

  auto flipped = diff;
  for (auto &v : flipped)
    v = -v;
  const auto mirrored = crossover_scan(primes, flipped, landmarks);
  ASSERT_TRUE(mirrored.crossing.has_value());
  EXPECT_EQ(mirrored.crossing->index, rep.crossing->index);
  EXPECT_EQ(mirrored.crossing->direction, 1);
  for (std::size_t j = 0; j < 200; ++j)
    EXPECT_EQ(mirrored.smoothed[j], -rep.smoothed[j]);

  const std::vector<double> positive(200, 0.3);
  EXPECT_FALSE(crossover_scan(primes, positive).crossing.has_value());
}

TEST(Reduction, ClassifiesBadColumns) {
  const auto &m = small_matrix();
  const auto &t = fixtures::small_cremona();
  const auto sub = t.filter([](const CurveRecord &r) { return r.label == "11a1" || r.label == "14a1" || r.label == "27a1"; });
  const auto s = classify_reduction(m, sub);
  ASSERT_EQ(s.entries.size(), 4u); // 11, 2, 7, 3
  for (const auto &e : s.entries) {
    if (e.label == "11a1") {
      EXPECT_EQ(e.prime, 11u);
      EXPECT_EQ(e.type, ReductionType::split_multiplicative);
    }
    if (e.label == "27a1")
      EXPECT_EQ(e.type, ReductionType::additive);
  }
  const auto full = classify_reduction(m, t);
  EXPECT_GT(full.agreement(), 0.7);
  EXPECT_LE(full.agree, full.curves);
}

TEST(Reduction, CurveWithoutListedBadPrimes) {
  // 11a1 against primes that skip 11.
  const auto &t = fixtures::small_cremona();
  const auto one = t.filter([](const CurveRecord &r) { return r.label == "11a1"; });
  const auto m = build_trace_matrix(one, PrimeList({2, 3, 5, 7, 13}), 1);
  EXPECT_TRUE(classify_reduction(m, one).entries.empty());
}

TEST(BadPrimeShare, Constructions) {
  const auto &m = small_matrix();
  const auto a = every(m.rows(), 2, 0), b = every(m.rows(), 2, 1);
  const auto s = bad_prime_share(a, b, m);
  EXPECT_GT(s.full_rms, 0.0);
  EXPECT_LT(s.percent, 100.0);

  // Groups that differ only at bad entries.
  std::vector<std::string> labels = {"x1", "x2", "y1", "y2"};
  TraceMatrix syn(labels, PrimeList::first(3));
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      syn.set(r, c, 1, false);
  syn.set(0, 1, 1, true);
  syn.set(1, 1, 1, true);
  syn.set(2, 1, -1, true);
  syn.set(3, 1, 0, true);
  const std::vector<std::size_t> x = {0, 1}, y = {2, 3};
  EXPECT_NEAR(bad_prime_share(x, y, syn).percent, 100.0, 1e-12);

  // No bad entries at all.
  TraceMatrix clean(labels, PrimeList::first(3));
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      clean.set(r, c, static_cast<std::int16_t>(r < 2 ? 1 : -1), false);
  EXPECT_NEAR(bad_prime_share(x, y, clean).percent, 0.0, 1e-12);
  EXPECT_THROW(bad_prime_share(x, x, clean), DataError);
}
