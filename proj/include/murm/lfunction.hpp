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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace murm {

/// Dirichlet coefficients of L(E, s) in the arithmetic normalization.
struct LSeries {
  std::string label;
  std::uint32_t conductor = 0;
  int root_number = 1;
  /// a[0] is unused, a[1] = 1.
  std::vector<double> a;

  std::size_t n_max() const { return a.empty() ? 0 : a.size() - 1; }
};

/// Counts a_p for every prime up to n_max and extends multiplicatively.
LSeries make_lseries(const CurveRecord &rec, std::size_t n_max);

/// Terms needed by l_value_series: ceil(sqrt(N) * 30 / 2pi).
std::size_t central_terms(std::uint32_t conductor);

/// Terms needed by lambda_critical at height t: ceil(sqrt(N) * (|t| + 8)).
std::size_t critical_terms(std::uint32_t conductor, double t);

/// L(E, 1) = 2 sum (a_n / n) exp(-2 pi n / sqrt(N)), cut where the tail is below 1e-10.
/// Throws ArgumentError for w = -1 or too few coefficients.
double l_value_series(const LSeries &series);

/// Gamma(z) for complex z with Re z > 0 (Lanczos, about 15 digits).
std::complex<double> complex_gamma(std::complex<double> z);

/// Upper incomplete gamma Gamma(s, x) for Re s > 0 and x > 0. Series below
/// |s| + 1, Lentz continued fraction above.
std::complex<double> upper_gamma(std::complex<double> s, double x);

struct CriticalValue {
  double value = 0.0;
  /// Imaginary part dropped from Lambda; zero in exact arithmetic.
  double imag_residual = 0.0;
};

/// Lambda(s) = N^(s/2) (2 pi)^-s Gamma(s) L(E, s) at s = 1 + it, from the
/// smoothed approximate functional equation. Throws ArgumentError for w = -1,
/// a coefficient shortfall, or |t| beyond max_height.
CriticalValue lambda_critical(const LSeries &series, double t);

/// Highest |t| lambda_critical accepts.
inline constexpr double max_height = 60.0;

/// One-eighth of the mean zero gap near the real axis: 2 pi / (log N + 6) / 8.
double default_grid_step(std::uint32_t conductor);

/// Low-lying zero ordinates of one curve.
struct ZeroSet {
  std::string label;
  std::vector<double> gammas;
  std::size_t k = 5;
  double t_max = 10.0;
  /// Set when fewer than k zeros were found below t_max.
  bool partial = false;

  bool complete() const { return !partial && gammas.size() == k; }
};

/// First k sign changes of Lambda(1 + it) on (0, t_max], each bisected to
/// 1e-6. `step` = 0 selects default_grid_step. Throws NumericalError if the
/// realness residual reaches 1e-8 anywhere on the grid.
ZeroSet locate_zeros(const LSeries &series, std::size_t k = 5, double t_max = 10.0,
                     double step = 0.0);

/// Builds the series with the coefficient budget for t_max and runs locate_zeros.
ZeroSet curve_zeros(const CurveRecord &rec, std::size_t k = 5, double t_max = 10.0);

/// CSV with header label,gamma1..gammaK,flags; flags is "ok" or "partial".
void write_zero_csv(std::ostream &out, const std::vector<ZeroSet> &sets);

/// Reads the same CSV, including files computed elsewhere. A row with fewer
/// gammas than columns must be flagged partial.
std::vector<ZeroSet> read_zero_csv(std::istream &in);

} // namespace murm
