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

#include "murm/zero_stats.hpp"

#include "murm/descriptive.hpp"
#include "murm/error.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include <cmath>
#include <numbers>

namespace murm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<std::vector<double>> ordinates(std::span<const ZeroSet> sets, std::size_t k) {
  std::vector<std::vector<double>> rows;
  rows.reserve(sets.size());
  for (const auto &z : sets) {
    if (!z.complete() || z.gammas.size() != k)
      throw ArgumentError("zero set " + z.label + " is partial or has a different k");
    rows.push_back(z.gammas);
  }
  return rows;
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x)
    s += v * v;
  return std::sqrt(s / double(x.size()));
}

} // namespace

HotellingResult hotelling_from_t2(double t2, std::size_t k, std::size_t n_a, std::size_t n_b) {
  if (k == 0 || n_a + n_b < k + 2)
    throw ArgumentError("too few observations for Hotelling F");
  HotellingResult r;
  r.t2 = t2;
  r.k = k;
  r.n_a = n_a;
  r.n_b = n_b;
  const double n = double(n_a + n_b);
  r.df1 = double(k);
  r.df2 = n - double(k) - 1.0;
  r.f = r.df2 / (double(k) * (n - 2.0)) * t2;
  const boost::math::fisher_f dist(r.df1, r.df2);
  r.p_value = t2 <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, r.f));
  return r;
}

HotellingResult hotelling_t2(const std::vector<std::vector<double>> &a,
                             const std::vector<std::vector<double>> &b) {
  if (a.empty() || b.empty())
    throw ArgumentError("Hotelling test needs two nonempty groups");
  const std::size_t k = a.front().size();
  if (k == 0)
    throw ArgumentError("Hotelling test needs at least one variable");
  if (a.size() <= k + 1 || b.size() <= k + 1)
    throw ArgumentError("each group needs more than k + 1 = " + std::to_string(k + 1) +
                        " observations");
  auto load = [k](const std::vector<std::vector<double>> &rows) {
    Eigen::MatrixXd m(rows.size(), k);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != k)
        throw ArgumentError("observations differ in length");
      for (std::size_t j = 0; j < k; ++j)
        m(i, j) = rows[i][j];
    }
    return m;
  };
  const Eigen::MatrixXd A = load(a), B = load(b);
  const Eigen::VectorXd mean_a = A.colwise().mean(), mean_b = B.colwise().mean();
  const Eigen::MatrixXd ca = A.rowwise() - mean_a.transpose();
  const Eigen::MatrixXd cb = B.rowwise() - mean_b.transpose();
  const double na = double(a.size()), nb = double(b.size());
  const Eigen::MatrixXd pooled = (ca.transpose() * ca + cb.transpose() * cb) / (na + nb - 2.0);

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(pooled);
  const auto d = ldlt.vectorD();
  const double scale = std::max(pooled.diagonal().maxCoeff(), 0.0);
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) || d.minCoeff() <= 1e-12 * scale)
    throw NumericalError("pooled covariance is singular");
  const Eigen::VectorXd diff = mean_a - mean_b;
  const double t2 = na * nb / (na + nb) * diff.dot(ldlt.solve(diff));
  return hotelling_from_t2(t2, k, a.size(), b.size());
}

HotellingResult hotelling_t2(std::span<const ZeroSet> a, std::span<const ZeroSet> b) {
  if (a.empty() || b.empty())
    throw ArgumentError("Hotelling test needs two nonempty groups");
  const std::size_t k = a.front().k;
  return hotelling_t2(ordinates(a, k), ordinates(b, k));
}

std::vector<double> mean_gammas(std::span<const ZeroSet> sets) {
  if (sets.empty())
    throw ArgumentError("no zero sets");
  const auto rows = ordinates(sets, sets.front().k);
  std::vector<double> m(sets.front().k, 0.0);
  for (const auto &r : rows)
    for (std::size_t j = 0; j < m.size(); ++j)
      m[j] += r[j];
  for (double &v : m)
    v /= double(rows.size());
  return m;
}

double so_even_density(double x) {
  const double u = kTwoPi * x;
  return std::abs(u) < 1e-8 ? 2.0 - u * u / 6.0 : 1.0 + std::sin(u) / u;
}

OneLevelDensity one_level_density(std::span<const ZeroSet> sets,
                                  std::span<const std::uint32_t> conductors) {
  if (sets.empty())
    throw ArgumentError("one-level density needs at least one zero set");
  if (sets.size() != conductors.size())
    throw ArgumentError("one conductor per zero set required");
  OneLevelDensity out;
  const auto bins = static_cast<std::size_t>(std::lround(out.x_max / out.bin_width));
  out.n_sets = sets.size();
  out.density.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b)
    out.bin_centers.push_back((double(b) + 0.5) * out.bin_width);

  for (std::size_t i = 0; i < sets.size(); ++i) {
    const double scale = std::log(double(conductors[i])) / kTwoPi;
    for (std::size_t j = 0; j < sets[i].gammas.size(); ++j) {
      const double x = sets[i].gammas[j] * scale;
      out.scaled_all.push_back(x);
      if (j == 0)
        out.scaled_first.push_back(x);
      if (x >= 0.0 && x < out.x_max)
        out.density[std::min(bins - 1, static_cast<std::size_t>(x / out.bin_width))] += 1.0;
    }
  }
  for (double &d : out.density)
    d /= double(sets.size()) * out.bin_width;

  for (std::size_t b = 0; b + 1 < bins; ++b) {
    const double f0 = out.density[b] - so_even_density(out.bin_centers[b]);
    const double f1 = out.density[b + 1] - so_even_density(out.bin_centers[b + 1]);
    out.deviation += 0.5 * out.bin_width * (f0 * f0 + f1 * f1);
  }
  return out;
}

DensityComparison compare_densities(const OneLevelDensity &a, const OneLevelDensity &b) {
  return {ks_two_sample(a.scaled_all, b.scaled_all), ks_two_sample(a.scaled_first, b.scaled_first)};
}

ExplicitPrediction explicit_predict(std::span<const double> gammas_a,
                                    std::span<const double> gammas_b,
                                    std::span<const std::uint32_t> primes,
                                    std::optional<std::span<const double>> observed) {
  if (primes.empty())
    throw ArgumentError("explicit_predict needs at least one prime");
  if (gammas_a.size() != gammas_b.size() || gammas_a.empty())
    throw ArgumentError("both groups need the same nonzero number of mean ordinates");
  if (observed && observed->size() != primes.size())
    throw ArgumentError("observed profile must have one value per prime");

  auto contribution = [](std::span<const double> gammas, double p) {
    const double lp = std::log(p);
    double s = 0.0;
    for (double g : gammas)
      s += std::cos(g * lp);
    return -(2.0 * std::sqrt(p) / lp) * s;
  };
  ExplicitPrediction out;
  out.primes.assign(primes.begin(), primes.end());
  for (auto p : primes) {
    if (p < 2)
      throw ArgumentError("explicit_predict needs primes");
    out.c_a.push_back(contribution(gammas_a, double(p)));
    out.c_b.push_back(contribution(gammas_b, double(p)));
    out.predicted.push_back(out.c_a.back() - out.c_b.back());
  }
  out.rms_predicted = rms(out.predicted);
  if (observed) {
    out.rms_observed = rms(*observed);
    // A flat prediction (identical groups) has no defined correlation.
    if (out.rms_predicted > 0.0)
      out.correlation = pearson(out.predicted, *observed);
  }
  return out;
}

} // namespace murm
