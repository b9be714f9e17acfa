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

#include "murm/lfunction.hpp"

#include "murm/error.hpp"
#include "murm/trace_engine.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace murm {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// exp(-x) below this is invisible next to the leading terms.
constexpr double kNegligibleX = 50.0;
// Split point of the theta integral used by lambda_critical.
constexpr double kSplit = 1.2;

void require_even(const LSeries &s, const char *op) {
  if (s.root_number != 1)
    throw ArgumentError(std::string(op) + " needs root number +1; " + s.label +
                        " has w = -1 and vanishes at the centre");
  if (s.conductor == 0 || s.n_max() < 1)
    throw ArgumentError(std::string(op) + ": empty series for " + s.label);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

} // namespace

LSeries make_lseries(const CurveRecord &rec, std::size_t n_max) {
  LSeries s{rec.label, rec.conductor, rec.root_number, {}};
  const auto an = dirichlet_coefficients(rec.model, rec.conductor, n_max);
  s.a.assign(an.begin(), an.end());
  return s;
}

std::size_t central_terms(std::uint32_t conductor) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(double(conductor)) * 30.0 / kTwoPi));
}

std::size_t critical_terms(std::uint32_t conductor, double t) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(double(conductor)) * (std::abs(t) + 8.0)));
}

double l_value_series(const LSeries &series) {
  require_even(series, "l_value_series");
  const auto need = central_terms(series.conductor);
  if (series.n_max() < need)
    throw ArgumentError("l_value_series needs n_max >= " + std::to_string(need) + " for " +
                        series.label + ", have " + std::to_string(series.n_max()));
  const double c = kTwoPi / std::sqrt(double(series.conductor));
  // |a_n| <= d(n) sqrt(n) <= 2n, so the tail past M is at most
  // 4 exp(-c (M + 1)) / (1 - exp(-c)).
  const double tail_scale = 4.0 / (-std::expm1(-c));
  double sum = 0.0;
  for (std::size_t n = 1; n <= series.n_max(); ++n) {
    sum += series.a[n] / double(n) * std::exp(-c * double(n));
    if (tail_scale * std::exp(-c * double(n + 1)) < 1e-10)
      break;
  }
  return 2.0 * sum;
}

cplx complex_gamma(cplx z) {
  if (z.real() < 0.5) {
    // Reflection Gamma(z) Gamma(1 - z) = pi / sin(pi z).
    return std::numbers::pi / (std::sin(std::numbers::pi * z) * complex_gamma(1.0 - z));
  }
  static constexpr double g = 7.0;
  static constexpr double coef[] = {0.99999999999980993,  676.5203681218851,
                                    -1259.1392167224028,  771.32342877765313,
                                    -176.61502916214059,  12.507343278686905,
                                    -0.13857109526572012, 9.9843695780195716e-6,
                                    1.5056327351493116e-7};
  z -= 1.0;
  cplx x = coef[0];
  for (int i = 1; i < 9; ++i)
    x += coef[i] / (z + double(i));
  const cplx t = z + g + 0.5;
  // Assemble in log space so large |Im z| does not overflow intermediate powers.
  return std::exp(0.5 * std::log(kTwoPi) + (z + 0.5) * std::log(t) - t + std::log(x));
}

cplx upper_gamma(cplx s, double x) {
  if (!(x > 0.0) || !(s.real() > 0.0))
    throw ArgumentError("upper_gamma needs x > 0 and Re s > 0");
  constexpr double eps = 1e-15;
  constexpr int max_iter = 100000;
  const cplx prefactor = std::exp(s * std::log(x) - x);
  if (x < std::abs(s) + 1.0) {
    // gamma(s, x) = x^s e^-x sum x^k / (s (s+1) ... (s+k)).
    cplx term = 1.0 / s;
    cplx sum = term;
    for (int k = 1; k < max_iter; ++k) {
      term *= x / (s + double(k));
      sum += term;
      if (std::abs(term) < eps * std::abs(sum))
        return complex_gamma(s) - prefactor * sum;
    }
  } else {
    // Modified Lentz on e^-x x^s / (x + 1 - s - 1 (1 - s) / (x + 3 - s - ...)).
    constexpr double tiny = 1e-300;
    cplx b = x + 1.0 - s;
    cplx c = 1.0 / tiny;
    cplx d = 1.0 / b;
    cplx h = d;
    for (int i = 1; i < max_iter; ++i) {
      const cplx an = -double(i) * (double(i) - s);
      b += 2.0;
      d = an * d + b;
      if (std::abs(d) < tiny)
        d = tiny;
      c = b + an / c;
      if (std::abs(c) < tiny)
        c = tiny;
      d = 1.0 / d;
      const cplx delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < eps)
        return prefactor * h;
    }
  }
  throw NumericalError("upper_gamma did not converge");
}

CriticalValue lambda_critical(const LSeries &series, double t) {
  require_even(series, "lambda_critical");
  if (!std::isfinite(t) || std::abs(t) > max_height)
    throw ArgumentError("height " + std::to_string(t) + " beyond supported |t| <= " +
                        std::to_string(max_height));
  const auto need = critical_terms(series.conductor, t);
  if (series.n_max() < need)
    throw ArgumentError("lambda_critical at t = " + std::to_string(t) + " needs n_max >= " +
                        std::to_string(need) + " for " + series.label + ", have " +
                        std::to_string(series.n_max()));

  // Lambda(s) = sum a_n [ (A/n)^s Gamma(s, y x_n) + w (A/n)^(2-s) Gamma(2-s, x_n / y) ]
  // with A = sqrt(N) / 2 pi, x_n = n / A and any split y > 0. At y = 1 the
  // two halves are exact conjugates and the imaginary part vanishes by
  // construction; splitting at kSplit instead makes it a real check.
  const double A = std::sqrt(double(series.conductor)) / kTwoPi;
  const cplx s(1.0, t);
  const cplx s2 = 2.0 - s;
  const auto last = std::min<std::size_t>(need, static_cast<std::size_t>(kNegligibleX * kSplit * A) + 1);
  cplx sum = 0.0;
  for (std::size_t n = 1; n <= std::min(last, series.n_max()); ++n) {
    const double an = series.a[n];
    if (an == 0.0)
      continue;
    const double x = double(n) / A;
    const double log_ratio = std::log(A / double(n));
    sum += an * (std::exp(s * log_ratio) * upper_gamma(s, x * kSplit) +
                 double(series.root_number) * std::exp(s2 * log_ratio) * upper_gamma(s2, x / kSplit));
  }
  return {sum.real(), std::abs(sum.imag())};
}

double default_grid_step(std::uint32_t conductor) {
  return kTwoPi / (std::log(double(conductor)) + 6.0) / 8.0;
}

ZeroSet locate_zeros(const LSeries &series, std::size_t k, double t_max, double step) {
  require_even(series, "locate_zeros");
  if (k == 0 || !(t_max > 0.0))
    throw ArgumentError("locate_zeros needs k >= 1 and t_max > 0");
  if (step == 0.0)
    step = default_grid_step(series.conductor);
  if (!(step > 0.0))
    throw ArgumentError("grid step must be positive");

  auto eval = [&](double t) {
    const auto v = lambda_critical(series, t);
    if (!(v.imag_residual < 1e-8))
      throw NumericalError("Lambda of " + series.label + " has imaginary residual " +
                           std::to_string(v.imag_residual) + " at t = " + std::to_string(t));
    return v.value;
  };

  ZeroSet out{series.label, {}, k, t_max, false};
  double t_prev = 0.0;
  double v_prev = eval(0.0);
  const auto points = static_cast<std::size_t>(std::ceil(t_max / step));
  for (std::size_t i = 1; i <= points && out.gammas.size() < k; ++i) {
    const double t = std::min(t_max, double(i) * step);
    const double v = eval(t);
    if (v == 0.0) {
      out.gammas.push_back(t);
    } else if (v_prev != 0.0 && (v < 0.0) != (v_prev < 0.0)) {
      double lo = t_prev, hi = t, f_lo = v_prev;
      while (hi - lo >= 1e-6) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = eval(mid);
        if (f_mid == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
          lo = mid;
          f_lo = f_mid;
        } else {
          hi = mid;
        }
      }
      out.gammas.push_back(0.5 * (lo + hi));
    }
    t_prev = t;
    v_prev = v;
  }
  out.partial = out.gammas.size() < k;
  return out;
}

ZeroSet curve_zeros(const CurveRecord &rec, std::size_t k, double t_max) {
  return locate_zeros(make_lseries(rec, critical_terms(rec.conductor, t_max)), k, t_max);
}

void write_zero_csv(std::ostream &out, const std::vector<ZeroSet> &sets) {
  std::size_t width = 0;
  for (const auto &z : sets)
    width = std::max({width, z.k, z.gammas.size()});
  if (width == 0)
    width = 5;
  out << "label";
  for (std::size_t j = 1; j <= width; ++j)
    out << ",gamma" << j;
  out << ",flags\n";
  char buf[32];
  for (const auto &z : sets) {
    out << z.label;
    for (std::size_t j = 0; j < width; ++j) {
      out << ',';
      if (j < z.gammas.size()) {
        std::snprintf(buf, sizeof buf, "%.10f", z.gammas[j]);
        out << buf;
      }
    }
    out << ',' << (z.complete() ? "ok" : "partial") << '\n';
  }
}

std::vector<ZeroSet> read_zero_csv(std::istream &in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line))
    throw ParseError(1, "missing zero CSV header");
  const auto header = split(line);
  if (header.size() < 3 || header.front() != "label" || header.back() != "flags")
    throw ParseError(1, "zero CSV header must be label,gamma1..gammaK,flags");
  const std::size_t width = header.size() - 2;
  for (std::size_t j = 0; j < width; ++j)
    if (header[j + 1] != "gamma" + std::to_string(j + 1))
      throw ParseError(1, "unexpected column " + header[j + 1]);

  std::vector<ZeroSet> sets;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields");
    ZeroSet z{cells.front(), {}, width, 0.0, false};
    if (z.label.empty())
      throw ParseError(line_no, "empty label");
    bool gap = false;
    for (std::size_t j = 0; j < width; ++j) {
      const auto &cell = cells[j + 1];
      if (cell.empty()) {
        gap = true;
        continue;
      }
      if (gap)
        throw ParseError(line_no, "gamma after an empty column");
      char *end = nullptr;
      const double g = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || !std::isfinite(g) || g <= 0.0)
        throw ParseError(line_no, "bad ordinate '" + cell + "'");
      if (!z.gammas.empty() && g <= z.gammas.back())
        throw ParseError(line_no, "ordinates must increase");
      z.gammas.push_back(g);
    }
    const auto &flag = cells.back();
    if (flag == "ok") {
      if (gap)
        throw ParseError(line_no, "row flagged ok has missing ordinates");
    } else if (flag == "partial") {
      z.partial = true;
    } else {
      throw ParseError(line_no, "unknown flag '" + flag + "'");
    }
    z.t_max = z.gammas.empty() ? 0.0 : z.gammas.back();
    sets.push_back(std::move(z));
  }
  return sets;
}

} // namespace murm
