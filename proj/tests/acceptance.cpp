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

// Acceptance run: one PASS/FAIL/SKIP line per criterion. Criteria that need
// the full curve table read $MURM_DATA_DIR/curves.csv and SKIP without it.
// Exit status is nonzero when any criterion fails.

#include "murm/confounders.hpp"
#include "murm/curve_table.hpp"
#include "murm/descriptive.hpp"
#include "murm/diagnostics.hpp"
#include "murm/lfunction.hpp"
#include "murm/murmuration.hpp"
#include "murm/primes.hpp"
#include "murm/stratification.hpp"
#include "murm/trace_engine.hpp"
#include "murm/zero_stats.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

using namespace murm;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }
Outcome skipped(std::string why) { return {Verdict::skip, std::move(why)}; }

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Oracles

long long mod(long long a, long long p) {
  const long long r = a % p;
  return r < 0 ? r + p : r;
}

// Point count by enumerating every (x, y) on the long Weierstrass equation.
// Singular points are dropped, so bad primes count the smooth locus.
int naive_trace(const WeierstrassModel &m, long long p) {
  long long c[5];
  for (int i = 0; i < 5; ++i)
    c[i] = static_cast<long long>(m[static_cast<std::size_t>(i)] % p);
  const long long a1 = mod(c[0], p), a2 = mod(c[1], p), a3 = mod(c[2], p), a4 = mod(c[3], p), a6 = mod(c[4], p);
  long long smooth = 1, singular = 0;
  for (long long x = 0; x < p; ++x)
    for (long long y = 0; y < p; ++y) {
      if (mod(y * y + a1 * x * y + a3 * y - x * x * x - a2 * x * x - a4 * x - a6, p) != 0)
        continue;
      const long long fx = mod(a1 * y - 3 * x * x - 2 * a2 * x - a4, p);
      const long long fy = mod(2 * y + a1 * x + a3, p);
      (fx == 0 && fy == 0 ? singular : smooth) += 1;
    }
  return static_cast<int>(p - smooth + (singular ? 0 : 1));
}

Coefficient discriminant(const WeierstrassModel &m) {
  const auto [a1, a2, a3, a4, a6] = m;
  const Coefficient b2 = a1 * a1 + 4 * a2, b4 = 2 * a4 + a1 * a3, b6 = a3 * a3 + 4 * a6;
  const Coefficient b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
  return -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6;
}

// ---------------------------------------------------------------------------
// Shared full-scale state

struct FullData {
  CurveTable table;
  TraceMatrix matrix;
  double build_seconds = 0.0;
};

std::optional<FullData> load_full() {
  const char *dir = std::getenv("MURM_DATA_DIR");
  if (!dir || !*dir)
    return std::nullopt;
  const auto path = std::filesystem::path(dir) / "curves.csv";
  if (!std::filesystem::exists(path))
    return std::nullopt;
  FullData d;
  d.table = load_curve_table(path.string()).table;
  const auto t0 = std::chrono::steady_clock::now();
  d.matrix = build_trace_matrix(d.table, PrimeList::first(500), 0);
  d.build_seconds = seconds_since(t0);
  return d;
}

CurveTable slice(const CurveTable &t, std::uint32_t lo, std::uint32_t hi, std::initializer_list<int> ranks) {
  return t.filter([&](const CurveRecord &r) {
    return r.conductor >= lo && r.conductor <= hi && std::find(ranks.begin(), ranks.end(), r.rank) != ranks.end();
  });
}

std::vector<std::size_t> group(const CurveTable &t, const Partition &part, const TraceMatrix &m,
                               std::string_view name) {
  const auto rows = rows_for(m, t);
  for (std::size_t g = 0; g < part.names.size(); ++g)
    if (part.names[g] == name) {
      std::vector<std::size_t> out;
      for (auto i : part.members[g])
        out.push_back(rows[i]);
      return out;
    }
  return {};
}

std::vector<double> difference(const MurmurationProfile &a, const MurmurationProfile &b) {
  std::vector<double> d(a.mean_ap.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = a.mean_ap[i] - b.mean_ap[i];
  return d;
}

constexpr std::uint64_t kSeed = 20240611;
constexpr std::size_t kShuffles = 10000;

// Group-mean low-lying zero ordinates of Sha >= 4 and Sha = 1 rank-0 curves.
const std::vector<double> kGammaShaHigh = {0.627, 1.446, 2.253, 3.026, 3.722};
const std::vector<double> kGammaShaOne = {0.606, 1.483, 2.306, 3.050, 3.732};

// ---------------------------------------------------------------------------
// Criteria

Outcome trace_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<long long> coef(-5000, 5000);
  const auto primes = primes_up_to(200);
  std::size_t models = 0, checked = 0, mismatches = 0;
  while (models < 100) {
    WeierstrassModel m;
    for (auto &a : m)
      a = coef(rng);
    if (discriminant(m) == 0)
      continue;
    ++models;
    for (auto p : primes) {
      ++checked;
      mismatches += local_trace(m, p).ap != naive_trace(m, p);
    }
  }
  const double secs = seconds_since(t0);
  return pass_if(mismatches == 0 && secs < 30.0,
                 fmt("%zu models, %zu (model, p) pairs, %zu mismatches, %.1f s (limit 30 s)", models, checked,
                     mismatches, secs));
}

Outcome hasse(const std::optional<FullData> &full) {
  const auto &t = full ? full->table : fixtures::small_cremona();
  const auto m = full ? TraceMatrix{} : build_trace_matrix(t, PrimeList::first(500), 0);
  const auto &mat = full ? full->matrix : m;
  std::size_t good = 0, violations = 0;
  for (std::size_t r = 0; r < mat.rows(); ++r)
    for (std::size_t c = 0; c < mat.cols(); ++c) {
      if (mat.is_bad(r, c))
        continue;
      ++good;
      const double a = mat.at(r, c);
      violations += a * a > 4.0 * mat.primes()[c];
    }
  return pass_if(violations == 0, fmt("%zu curves, %zu good entries, %zu violations (%s)", mat.rows(), good,
                                      violations, full ? "full table" : "bundled fixture"));
}

Outcome known_curve() {
  const WeierstrassModel e{0, -1, 1, -10, -20};
  const std::map<std::uint32_t, int> expected = {{2, -2}, {3, -1}, {5, 1}, {7, -2}, {11, 1}, {13, 4}};
  bool traces_ok = true;
  for (const auto &[p, ap] : expected)
    traces_ok = traces_ok && naive_trace(e, p) == ap && ap_at_prime(e, 11, p) == ap;
  const auto &t = fixtures::small_cremona();
  const auto &rec = t[static_cast<std::size_t>(t.find("11a1"))];
  const double l = l_value_series(make_lseries(rec, central_terms(rec.conductor)));
  const double rel = std::abs(l - rec.l_value) / rec.l_value;
  return pass_if(traces_ok && rel < 1e-5,
                 fmt("traces %s; L(1) series %.12f vs ingested %.12f, relative %.1e (limit 1e-5)",
                     traces_ok ? "match" : "MISMATCH", l, rec.l_value, rel));
}

Outcome anti_phase(const std::optional<FullData> &full) {
  if (!full)
    return skipped("needs the full curve table");
  auto correlation = [&](std::uint32_t lo, std::uint32_t hi) {
    const auto t0 = slice(full->table, lo, hi, {0}), t1 = slice(full->table, lo, hi, {1});
    const auto p0 = murmuration_profile(rows_for(full->matrix, t0), full->matrix);
    const auto p1 = murmuration_profile(rows_for(full->matrix, t1), full->matrix);
    return std::tuple{pearson(p0.mean_ap, p1.mean_ap), t0.size(), t1.size()};
  };
  const auto [r, n0, n1] = correlation(1, 50000);
  // Not part of the verdict: the same profiles on the usual analysis window.
  const auto [r_window, w0, w1] = correlation(10000, 50000);
  return pass_if(r <= -0.45, fmt("N <= 50000: %zu rank-0, %zu rank-1 curves, r = %.3f (need <= -0.45); "
                                 "for reference r = %.3f on [10K, 50K]; trace build %.0f s for the whole table",
                                 n0, n1, r, r_window, full->build_seconds));
}

Outcome stratification(const std::optional<FullData> &full) {
  if (!full)
    return skipped("needs the [10K, 50K] rank-0 slice");
  const auto t = slice(full->table, 10000, 50000, {0});
  const auto both = slice(full->table, 10000, 50000, {0, 1});
  const std::vector<std::pair<std::string, double>> targets = {
      {"tamagawa", 0.872}, {"sha", 0.630}, {"period", 0.597}, {"torsion", 0.456}, {"root_number", 1.759}};
  bool ok = true;
  std::string detail = fmt("%zu rank-0 curves;", t.size());
  for (const auto &[id, want] : targets) {
    const auto rep = stratify(id == "root_number" ? both : t, full->matrix, StratRule::named(id),
                              {kShuffles, kSeed, 0});
    const double rel = rep.observed_rms / want - 1.0;
    const bool good = std::abs(rel) <= 0.20 && rep.p_value < 1e-3;
    ok = ok && good;
    detail += fmt(" %s %.3f (target %.3f, %+.1f%%, p=%.1e)%s", id.c_str(), rep.observed_rms, want, 100 * rel,
                  rep.p_value, good ? "" : " <-");
  }
  return pass_if(ok, detail);
}

Outcome scale_invariance(const std::optional<FullData> &full) {
  // Synthetic: RMS = 3 N^-0.25 over nine geometric window centres.
  std::vector<double> n, rms;
  for (int i = 0; i < 9; ++i) {
    n.push_back(5000.0 * std::pow(1.5, i));
    rms.push_back(3.0 * std::pow(n.back(), -0.25));
  }
  const auto syn = fit_power_law(n, rms);
  const bool syn_ok = std::abs(syn.alpha - 0.25) <= 0.01 && syn.r_squared > 0.99;
  std::string detail = fmt("synthetic alpha %.4f r2 %.4f", syn.alpha, syn.r_squared);
  if (!full)
    return {syn_ok ? Verdict::skip : Verdict::fail, detail + "; full-scale Sha fit needs the full table"};
  const auto t = full->table.filter([](const CurveRecord &r) { return r.rank == 0; });
  const auto scan = scale_scan(t, full->matrix, StratRule::named("sha"), default_scale_windows());
  const bool full_ok = std::abs(scan.fit.alpha - 0.24) <= 0.06;
  detail += fmt("; Sha alpha %.3f +- %.3f over %zu windows (need 0.24 +- 0.06)", scan.fit.alpha,
                scan.fit.alpha_stderr, scan.windows.size());
  return pass_if(syn_ok && full_ok, detail);
}

TraceMatrix exchangeable_matrix(std::size_t n, std::size_t primes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(-8, 8);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i)
    labels.push_back("s" + std::to_string(i));
  TraceMatrix m(labels, PrimeList::first(primes));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < primes; ++c)
      m.set(r, c, static_cast<std::int16_t>(u(rng)), false);
  return m;
}

Outcome permutation_calibration() {
  std::vector<std::size_t> a(40), b(80);
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = i;
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = a.size() + i;
  std::vector<double> p;
  for (std::uint64_t run = 0; run < 200; ++run) {
    const auto m = exchangeable_matrix(120, 30, kSeed + run);
    p.push_back(permutation_test({a, b}, m, {999, run, 0}).p_value);
  }
  const double ks = fixtures::ks_uniform_pvalue(p);
  return pass_if(ks > 0.01, fmt("200 runs x 999 shuffles, KS p = %.3f against uniform (need > 0.01)", ks));
}

Outcome savgol_exactness() {
  double worst = 0.0;
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> c(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double c0 = c(rng), c1 = c(rng), c2 = c(rng), c3 = c(rng);
    Series s;
    double scale = 0.0;
    for (int i = 0; i < 400; ++i) {
      const double x = i * 0.05 - 10.0;
      s.x.push_back(x);
      s.y.push_back(c0 + x * (c1 + x * (c2 + x * c3)));
      scale = std::max(scale, std::abs(s.y.back()));
    }
    for (double r : savgol_detrend(s, 101, 3).y)
      worst = std::max(worst, std::abs(r) / scale);
  }
  return pass_if(worst <= 1e-10, fmt("20 random cubics, worst relative residual %.1e (limit 1e-10)", worst));
}

Outcome welch_sanity() {
  bool peaks_ok = true;
  for (int bin : {3, 17, 64, 101}) {
    std::vector<double> x(4096);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = std::sin(2.0 * std::numbers::pi * bin * static_cast<double>(i) / 256.0 + 0.7);
    const auto s = welch_psd(x);
    peaks_ok = peaks_ok && std::max_element(s.power.begin(), s.power.end()) - s.power.begin() == bin;
  }
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> g;
  std::vector<double> avg(129, 0.0);
  for (int d = 0; d < 100; ++d) {
    std::vector<double> x(4096);
    for (auto &v : x)
      v = g(rng);
    const auto s = welch_psd(x);
    for (std::size_t k = 0; k < avg.size(); ++k)
      avg[k] += s.power[k] / 100.0;
  }
  // DC is removed with the segment mean, and the Hann window leaks it into
  // bin 1; Nyquist is a single real bin. Both edges are left out.
  const std::span<const double> interior(avg.data() + 2, avg.size() - 4);
  const double level = mean(interior);
  double worst = 0.0;
  for (double v : interior)
    worst = std::max(worst, std::abs(10.0 * std::log10(v / level)));
  return pass_if(peaks_ok && worst < 3.0, fmt("sinusoid bins %s; white-noise spread %.2f dB (limit 3 dB)",
                                              peaks_ok ? "recovered" : "MISSED", worst));
}

Outcome hotelling_calibration() {
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> g;
  auto draw = [&](std::size_t n) {
    std::vector<std::vector<double>> out(n, std::vector<double>(5));
    for (auto &row : out)
      for (auto &v : row)
        v = g(rng);
    return out;
  };
  int rejected = 0;
  constexpr int sims = 10000;
  for (int s = 0; s < sims; ++s)
    rejected += hotelling_t2(draw(20), draw(25)).p_value < 0.05;
  const double rate = rejected / double(sims);
  const auto conv = hotelling_from_t2(47.8, 5, 1000, 1000);
  // Three significant figures of F against the target 9.53.
  const double f3 = std::round(conv.f * 100.0) / 100.0;
  const bool rate_ok = std::abs(rate - 0.05) <= 0.01, conv_ok = std::abs(f3 - 9.53) < 1e-9;
  return pass_if(rate_ok && conv_ok,
                 fmt("null rejection %.4f (need 0.05 +- 0.01)%s; T2=47.8 k=5 n=2000 -> F=%.4f, rounds to %.2f vs "
                     "9.53%s",
                     rate, rate_ok ? "" : " <-", conv.f, f3, conv_ok ? "" : " <-"));
}

Outcome zero_finder() {
  const auto &t = fixtures::small_cremona();
  const auto &e = t[static_cast<std::size_t>(t.find("11a1"))];
  const auto z = curve_zeros(e, 1, 10.0);
  const double g1 = z.gammas.empty() ? NAN : z.gammas[0];
  const bool g1_ok = std::abs(g1 - 6.362613894713) < 1e-3;

  // Realness residual over the default scan grid of every fixture curve
  // with w = +1 and N <= 1000, plus the large-conductor set.
  auto large = load_curve_table(fixtures::data_path("rank0_n49k.csv")).table;
  double worst_imag = 0.0;
  std::size_t grid_points = 0;
  auto scan = [&](const CurveRecord &rec) {
    const auto s = make_lseries(rec, critical_terms(rec.conductor, 10.0));
    const double h = default_grid_step(rec.conductor);
    for (double u = h; u <= 10.0; u += h, ++grid_points)
      worst_imag = std::max(worst_imag, lambda_critical(s, u).imag_residual);
  };
  for (std::size_t i = 0; i < t.size(); i += 25)
    if (t[i].root_number == 1)
      scan(t[i]);
  for (std::size_t i = 0; i < large.size(); ++i)
    scan(large[i]);

  double slowest = 0.0;
  std::size_t complete = 0;
  for (std::size_t i = 0; i < large.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    complete += curve_zeros(large[i], 5, max_height).complete();
    slowest = std::max(slowest, seconds_since(t0));
  }
  const bool ok = g1_ok && worst_imag < 1e-8 && slowest < 5.0 && complete == large.size();
  return pass_if(ok, fmt("11a1 gamma1 %.6f (|err| %.1e, limit 1e-3); max imaginary residual %.1e over %zu grid "
                         "points (limit 1e-8); slowest 5-zero search %.2f s on %zu curves near N = 49000 "
                         "(limit 5 s)",
                         g1, std::abs(g1 - 6.362613894713), worst_imag, grid_points, slowest, large.size()));
}

Outcome explicit_shape(const std::optional<FullData> &full) {
  const auto primes = PrimeList::first(500);
  const auto e = explicit_predict(kGammaShaHigh, kGammaShaOne, primes.values());
  // Sign pattern over every prime in the two landmark ranges.
  bool low = true, high = true;
  std::vector<std::uint32_t> outside;
  for (std::size_t i = 0; i < primes.size(); ++i) {
    const auto p = primes[i];
    const double d = e.predicted[i];
    if (p >= 5 && p <= 37)
      low = low && d > 0;
    else if (p >= 251 && p <= 1009)
      high = high && d < 0;
    else if ((p < 5 && d <= 0) || (p > 1009 && d >= 0))
      outside.push_back(p);
  }
  std::string detail = fmt("predicted %s on 5..37, %s on 251..1009 (%zu primes outside these ranges break the "
                           "pattern, first %u)",
                           low ? "positive" : "NOT positive", high ? "negative" : "NOT negative", outside.size(),
                           outside.empty() ? 0u : outside.front());
  if (!full)
    return {low && high ? Verdict::skip : Verdict::fail, detail + "; observed-profile correlation needs the full table"};
  const auto t = slice(full->table, 10000, 50000, {0});
  const auto part = partition(t, StratRule::named("sha"));
  const auto diff = difference(murmuration_profile(group(t, part, full->matrix, "sha>=4"), full->matrix),
                               murmuration_profile(group(t, part, full->matrix, "sha=1"), full->matrix));
  const auto withobs = explicit_predict(kGammaShaHigh, kGammaShaOne, full->matrix.primes().values(),
                                        std::span<const double>(diff));
  const double r = withobs.correlation.value_or(NAN);
  // Not part of the verdict: the same correlation on the primes up to the
  // last landmark, where five zeros still describe the prediction.
  const auto upto = static_cast<std::size_t>(full->matrix.primes().index_of(1009)) + 1;
  const double r_low = pearson(std::span<const double>(withobs.predicted).first(upto),
                               std::span<const double>(diff).first(upto));
  return pass_if(low && high && r >= 0.2,
                 detail + fmt("; correlation with observed Sha>=4 minus Sha=1 profile over %zu primes %.3f (need "
                              ">= 0.2); for reference %.3f over p <= 1009",
                              diff.size(), r, r_low));
}

Outcome moments(const std::optional<FullData> &full) {
  if (!full)
    return skipped("needs the [10K, 50K] rank-0 slice");
  const auto t = slice(full->table, 10000, 50000, {0});
  const auto banded = lvalue_band(t, {1.10, 3.28});
  const auto part = partition(banded, StratRule::named("sha"));
  const auto hi = group(banded, part, full->matrix, "sha>=4"), one = group(banded, part, full->matrix, "sha=1");
  const auto ratio = variance_ratio(moment_profile(hi, full->matrix), moment_profile(one, full->matrix));
  const auto rep = permutation_test({hi, one}, full->matrix, {kShuffles, kSeed, 0});
  return pass_if(std::abs(ratio.mean - 1.0) <= 0.05 && rep.p_value < 1e-3,
                 fmt("L-value band [1.10, 3.28]: %zu vs %zu curves, variance ratio %.4f (need 1.00 +- 0.05), "
                     "mean-gap RMS %.3f p=%.1e at %zu shuffles (need < 1e-3)",
                     hi.size(), one.size(), ratio.mean, rep.observed_rms, rep.p_value, rep.n_shuffles));
}

Outcome residual_signs(const std::optional<FullData> &full) {
  if (!full)
    return skipped("needs the full curve table");
  const std::vector<Invariant> invs = {Invariant::l_value,    Invariant::sha,        Invariant::tamagawa,
                                       Invariant::bsd_ratio,  Invariant::torsion,    Invariant::log_period,
                                       Invariant::period};
  std::size_t positive = 0;
  std::string detail;
  // Shared window grid for both ranks.
  double lo = 1e18, hi = 0.0;
  for (const auto &r : full->table.records())
    if (r.rank <= 1) {
      lo = std::min(lo, double(r.conductor));
      hi = std::max(hi, double(r.conductor));
    }
  for (auto inv : invs) {
    WindowParams w{5000.0, 500.0};
    w.first_center = lo + w.width / 2.0;
    w.last_center = hi - w.width / 2.0;
    const auto a = savgol_detrend(sliding_window_series(full->table, inv, 0, w));
    const auto b = savgol_detrend(sliding_window_series(full->table, inv, 1, w));
    const double r = residual_correlation(a, b);
    positive += r > 0;
    detail += fmt(" %s %.2f", std::string(invariant_name(inv)).c_str(), r);
  }
  return pass_if(positive == invs.size(), "rank-0 x rank-1 detrended window correlations:" + detail);
}

} // namespace

// Arguments, if any, select criteria by their leading number ("4", "12", "--").
int main(int argc, char **argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  std::printf("loading full curve table from $MURM_DATA_DIR ...\n");
  std::fflush(stdout);
  const auto full = load_full();
  if (full)
    std::printf("  %zu curves, trace matrix built in %.1f s\n", full->table.size(), full->build_seconds);
  else
    std::printf("  not available: full-scale criteria will SKIP\n");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1  trace oracle equivalence", trace_oracle},
      {"2  Hasse bound", [&] { return hasse(full); }},
      {"3  known-curve validation", known_curve},
      {"4  anti-phase murmuration", [&] { return anti_phase(full); }},
      {"5  stratification reproduction", [&] { return stratification(full); }},
      {"6  scale-invariance", [&] { return scale_invariance(full); }},
      {"7  permutation calibration", permutation_calibration},
      {"8  Savitzky-Golay exactness", savgol_exactness},
      {"9  Welch sanity", welch_sanity},
      {"10 Hotelling calibration", hotelling_calibration},
      {"11 zero finder", zero_finder},
      {"12 explicit-formula shape", [&] { return explicit_shape(full); }},
      {"13 moment diagnostics", [&] { return moments(full); }},
      {"-- residual correlation signs", [&] { return residual_signs(full); }},
  };
  int failed = 0;
  for (const auto &[name, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name.substr(0, name.find(' '))) == only.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception &e) {
      o = {Verdict::fail, std::string("threw: ") + e.what()};
    }
    const char *tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    failed += o.verdict == Verdict::fail;
    std::printf("%s  %-32s %s [%.1f s]\n", tag, name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
