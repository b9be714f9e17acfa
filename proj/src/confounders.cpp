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

#include "murm/confounders.hpp"

#include "murm/descriptive.hpp"
#include "murm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace murm {

unsigned omega(std::uint64_t n) {
  unsigned count = 0;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) {
      ++count;
      while (n % d == 0)
        n /= d;
    }
  return count + (n > 1 ? 1 : 0);
}

StratReport control_omega(const CurveTable &table, const TraceMatrix &matrix, const StratRule &rule,
                          unsigned k, const PermutationParams &params) {
  const auto sub = table.filter([&](const CurveRecord &r) { return omega(r.conductor) == k; });
  try {
    return stratify(sub, matrix, rule, params);
  } catch (const DataError &e) {
    throw DataError("omega(N) = " + std::to_string(k) + ": " + e.what());
  }
}

namespace {

double key_of(const CurveRecord &r, MatchKey key) {
  return key == MatchKey::conductor ? static_cast<double>(r.conductor) : r.l_value;
}

std::vector<std::size_t> rows_of_labels(const TraceMatrix &matrix, const std::vector<std::string> &labels) {
  std::vector<std::size_t> rows;
  for (const auto &l : labels) {
    const auto r = matrix.row_of(l);
    if (r < 0)
      throw DataError("label " + l + " is not in the trace matrix");
    rows.push_back(static_cast<std::size_t>(r));
  }
  return rows;
}

} // namespace

MatchedPairs match_nn(std::span<const CurveRecord> group_a, std::span<const CurveRecord> group_b,
                      MatchKey key, double max_distance) {
  if (group_a.empty() || group_b.empty())
    throw ArgumentError("nearest-neighbour matching needs two nonempty groups");
  MatchedPairs out;
  out.key = key;
  out.max_distance = max_distance;

  // Unused B-curves ordered by (key, label).
  using Entry = std::tuple<double, std::string_view, std::size_t>;
  std::set<Entry> pool;
  for (std::size_t i = 0; i < group_b.size(); ++i)
    pool.emplace(key_of(group_b[i], key), group_b[i].label, i);

  std::vector<std::size_t> order(group_a.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double kx = key_of(group_a[x], key), ky = key_of(group_a[y], key);
    return kx != ky ? kx < ky : group_a[x].label < group_a[y].label;
  });

  double total = 0.0;
  for (const auto ia : order) {
    if (pool.empty())
      break;
    const double k = key_of(group_a[ia], key);
    auto hi = pool.lower_bound(Entry{k, std::string_view{}, 0});
    // Candidates: the nearest entries just below and at or above k. Equal
    // keys on either side resolve by label through the set order.
    std::set<Entry>::iterator best = pool.end();
    double best_d = 0.0;
    auto consider = [&](std::set<Entry>::iterator it) {
      const double d = std::abs(std::get<0>(*it) - k);
      if (best == pool.end() || d < best_d ||
          (d == best_d && std::get<1>(*it) < std::get<1>(*best))) {
        best = it;
        best_d = d;
      }
    };
    if (hi != pool.end()) {
      consider(hi);
      // Other B-curves sharing the key just found tie on distance; the set
      // order already yields the smallest label first.
    }
    if (hi != pool.begin()) {
      auto lo = std::prev(hi);
      // Walk to the first entry with this key so ties pick the smallest label.
      const double lk = std::get<0>(*lo);
      auto first = pool.lower_bound(Entry{lk, std::string_view{}, 0});
      consider(first);
    }
    if (best == pool.end() || best_d > max_distance)
      continue;
    const auto ib = std::get<2>(*best);
    out.pairs.push_back({ia, ib, group_a[ia].label, group_b[ib].label, best_d});
    total += best_d;
    pool.erase(best);
  }
  out.mean_distance = out.pairs.empty() ? 0.0 : total / static_cast<double>(out.pairs.size());
  return out;
}

double matched_rms(const MatchedPairs &pairs, const TraceMatrix &matrix, PairedRmsMode mode) {
  if (pairs.pairs.empty())
    throw DataError("no matched pairs");
  std::vector<std::string> la, lb;
  for (const auto &p : pairs.pairs) {
    la.push_back(p.label_a);
    lb.push_back(p.label_b);
  }
  const auto ra = rows_of_labels(matrix, la), rb = rows_of_labels(matrix, lb);
  if (mode == PairedRmsMode::group) {
    const std::vector<MurmurationProfile> prof = {murmuration_profile(ra, matrix),
                                                  murmuration_profile(rb, matrix)};
    return profile_rms(prof);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const auto a = matrix.row(ra[i]), b = matrix.row(rb[i]);
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double d = a[j] - b[j];
      total += d * d;
    }
  }
  return std::sqrt(total / static_cast<double>(ra.size() * matrix.cols()));
}

StratReport matched_permutation_test(const MatchedPairs &pairs, const TraceMatrix &matrix,
                                     const PermutationParams &params) {
  std::vector<std::string> la, lb;
  for (const auto &p : pairs.pairs) {
    la.push_back(p.label_a);
    lb.push_back(p.label_b);
  }
  return permutation_test({rows_of_labels(matrix, la), rows_of_labels(matrix, lb)}, matrix, params);
}

CurveTable lvalue_band(const CurveTable &table, Band band) {
  if (!(band.lo < band.hi))
    throw ArgumentError("L-value band needs lo < hi");
  return table.filter([&](const CurveRecord &r) {
    return r.rank == 0 && r.l_value >= band.lo && r.l_value <= band.hi;
  });
}

TripleControl triple_control(const CurveTable &table, const TraceMatrix &matrix, Band band,
                             ConductorRange range, const PermutationParams &params) {
  const auto sub = lvalue_band(table, band).filter([&](const CurveRecord &r) {
    return r.conductor >= range.first && r.conductor <= range.second;
  });
  if (sub.empty())
    throw DataError("no rank-0 curves in the L-value band and conductor range");
  TripleControl out;
  out.n_curves = sub.size();
  std::vector<double> periods;
  for (const auto &r : sub.records())
    periods.push_back(r.real_period);
  out.median_period = median(periods);
  const auto rule = StratRule::named("sha");
  auto run = [&](bool large) {
    TripleHalf half;
    const auto part = sub.filter([&](const CurveRecord &r) {
      return large ? r.real_period > out.median_period : r.real_period <= out.median_period;
    });
    half.n_curves = part.size();
    try {
      half.report = stratify(part, matrix, rule, params);
    } catch (const DataError &e) {
      half.error = e.what();
    }
    return half;
  };
  out.small_period = run(false);
  out.large_period = run(true);
  return out;
}

std::vector<GroupRatio> bsd_group_ratios(const CurveTable &table, const Partition &part) {
  std::vector<GroupRatio> out;
  for (std::size_t g = 0; g < part.members.size(); ++g) {
    GroupRatio gr;
    gr.name = part.names[g];
    gr.n = part.members[g].size();
    if (gr.n == 0)
      throw DataError("group '" + gr.name + "' is empty");
    double bsd = 0.0, l = 0.0, omega_sum = 0.0, log_l = 0.0;
    for (const auto i : part.members[g]) {
      const auto &r = table[i];
      if (r.rank != 0)
        throw ArgumentError("BSD group ratio needs rank-0 curves; " + r.label + " has rank " +
                            std::to_string(r.rank));
      bsd += r.bsd_ratio();
      l += r.l_value;
      omega_sum += r.real_period;
      log_l += std::log(r.l_value);
    }
    const double n = static_cast<double>(gr.n);
    if (!(l > 0.0))
      throw DataError("group '" + gr.name + "' has zero mean L-value");
    gr.mean_bsd_ratio = bsd / n;
    gr.mean_l_value = l / n;
    gr.ratio = gr.mean_bsd_ratio / gr.mean_l_value;
    gr.mean_period = omega_sum / n;
    gr.mean_log_l = log_l / n;
    out.push_back(gr);
  }
  return out;
}

EulerCumsum euler_cumsum(const MurmurationProfile &a, const MurmurationProfile &b) {
  if (!(a.primes == b.primes) || a.mean_ap.size() != a.primes.size() ||
      b.mean_ap.size() != b.primes.size())
    throw ArgumentError("profiles do not share a prime list");
  if (a.primes.empty())
    throw ArgumentError("empty prime list");
  EulerCumsum out;
  out.primes = a.primes;
  double sa = 0.0, sb = 0.0;
  for (std::size_t j = 0; j < a.primes.size(); ++j) {
    const double q = a.primes[j];
    sa += a.mean_ap[j] / q;
    sb += b.mean_ap[j] / q;
    out.sum_a.push_back(sa);
    out.sum_b.push_back(sb);
    out.delta.push_back(sa - sb);
  }
  out.argmax = static_cast<std::size_t>(std::max_element(out.delta.begin(), out.delta.end()) -
                                        out.delta.begin());
  out.peak_delta = out.delta[out.argmax];
  out.terminal_delta = out.delta.back();
  return out;
}

double invariant_correlation(const CurveTable &table, Invariant x, Invariant y) {
  std::vector<double> vx, vy;
  for (const auto &r : table.records()) {
    vx.push_back(invariant_value(r, x));
    vy.push_back(invariant_value(r, y));
  }
  return pearson(vx, vy);
}

} // namespace murm
