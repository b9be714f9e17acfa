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

#include "murm/stratification.hpp"

#include "murm/descriptive.hpp"
#include "murm/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace murm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mean over unordered pairs and primes of squared mean differences, then the
// root. `means[g][j]` is group g's mean trace at column j.
double pairwise_rms(const std::vector<std::vector<double>> &means) {
  const std::size_t k = means.size();
  const std::size_t cols = means.front().size();
  double total = 0.0;
  std::size_t terms = 0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double d = means[a][j] - means[b][j];
        total += d * d;
      }
      terms += cols;
    }
  return terms == 0 ? 0.0 : std::sqrt(total / static_cast<double>(terms));
}

std::vector<std::vector<double>> means_from_sums(const std::vector<std::vector<std::int64_t>> &sums,
                                                 const std::vector<std::size_t> &sizes) {
  std::vector<std::vector<double>> means(sums.size());
  for (std::size_t g = 0; g < sums.size(); ++g) {
    means[g].resize(sums[g].size());
    for (std::size_t j = 0; j < sums[g].size(); ++j)
      means[g][j] = static_cast<double>(sums[g][j]) / static_cast<double>(sizes[g]);
  }
  return means;
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

} // namespace

StratRule StratRule::named(std::string_view id) {
  StratRule r;
  r.id = std::string(id);
  if (id == "tamagawa") {
    r.invariant = Invariant::tamagawa;
    r.groups = {{"prod_cp=1", 1, 1}, {"prod_cp>=5", 5, kInf}};
  } else if (id == "sha") {
    r.invariant = Invariant::sha;
    r.groups = {{"sha=1", 1, 1}, {"sha>=4", 4, kInf}};
  } else if (id == "torsion") {
    r.invariant = Invariant::torsion;
    r.groups = {{"torsion=1", 1, 1}, {"torsion>=2", 2, kInf}};
  } else if (id == "root_number") {
    r.invariant = Invariant::root_number;
    r.groups = {{"w=+1", 1, 1}, {"w=-1", -1, -1}};
  } else if (id == "period") {
    r.invariant = Invariant::period;
    r.kind = Kind::quartiles;
  } else {
    throw ArgumentError("unknown stratification rule '" + std::string(id) + "'");
  }
  return r;
}

std::vector<std::size_t> Partition::sizes() const {
  std::vector<std::size_t> out;
  for (const auto &m : members)
    out.push_back(m.size());
  return out;
}

Partition partition(const CurveTable &table, const StratRule &rule) {
  Partition part;
  if (rule.kind == StratRule::Kind::quartiles) {
    std::vector<std::size_t> order(table.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> value(table.size());
    for (std::size_t i = 0; i < table.size(); ++i)
      value[i] = invariant_value(table[i], rule.invariant);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t n = order.size();
    for (std::size_t q = 0; q < 4; ++q) {
      part.names.push_back("Q" + std::to_string(q + 1));
      part.members.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(q * n / 4),
                                order.begin() + static_cast<std::ptrdiff_t>((q + 1) * n / 4));
      std::sort(part.members.back().begin(), part.members.back().end());
    }
  } else {
    if (rule.groups.size() < 2)
      throw ArgumentError("rule '" + rule.id + "' defines fewer than two groups");
    for (std::size_t a = 0; a < rule.groups.size(); ++a)
      for (std::size_t b = a + 1; b < rule.groups.size(); ++b)
        if (rule.groups[a].lo <= rule.groups[b].hi && rule.groups[b].lo <= rule.groups[a].hi)
          throw ArgumentError("rule '" + rule.id + "' has overlapping groups");
    for (const auto &g : rule.groups)
      part.names.push_back(g.name);
    part.members.resize(rule.groups.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double v = invariant_value(table[i], rule.invariant);
      bool placed = false;
      for (std::size_t g = 0; g < rule.groups.size() && !placed; ++g)
        if (v >= rule.groups[g].lo && v <= rule.groups[g].hi) {
          part.members[g].push_back(i);
          placed = true;
        }
      if (!placed)
        part.unassigned.push_back(i);
    }
  }
  for (std::size_t g = 0; g < part.members.size(); ++g)
    if (part.members[g].empty())
      throw DataError("group '" + part.names[g] + "' of rule '" + rule.id + "' is empty");
  return part;
}

double profile_rms(std::span<const MurmurationProfile> profiles) {
  if (profiles.size() < 2)
    throw ArgumentError("profile RMS needs at least two profiles");
  std::vector<std::vector<double>> means;
  for (const auto &p : profiles) {
    if (!(p.primes == profiles.front().primes) || p.mean_ap.size() != p.primes.size())
      throw ArgumentError("profiles do not share a prime list");
    means.push_back(p.mean_ap);
  }
  return pairwise_rms(means);
}

StratReport permutation_test(const std::vector<std::vector<std::size_t>> &groups,
                             const TraceMatrix &matrix, const PermutationParams &params) {
  const std::size_t k = groups.size();
  if (k < 2)
    throw ArgumentError("permutation test needs at least two groups");
  const std::size_t cols = matrix.cols();

  // Copy the participating rows into one contiguous int8 pool; every trace
  // fits because |a_p| <= 2 sqrt(p) < 128 for the primes a matrix can hold.
  std::vector<std::size_t> sizes;
  std::size_t n = 0;
  for (const auto &g : groups) {
    if (g.empty())
      throw ArgumentError("permutation test given an empty group");
    sizes.push_back(g.size());
    n += g.size();
  }
  std::vector<std::int8_t> pool(n * cols);
  {
    std::size_t r = 0;
    for (const auto &g : groups)
      for (const auto row : g) {
        if (row >= matrix.rows())
          throw ArgumentError("row index outside the trace matrix");
        const auto src = matrix.row(row);
        for (std::size_t j = 0; j < cols; ++j) {
          if (src[j] < -128 || src[j] > 127)
            throw DataError("trace outside the 8-bit range used by the permutation pool");
          pool[r * cols + j] = static_cast<std::int8_t>(src[j]);
        }
        ++r;
      }
  }

  std::vector<std::int64_t> total(cols, 0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < cols; ++j)
      total[j] += pool[r * cols + j];

  // Sum every group but the largest and obtain the largest as the remainder.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sizes[a] < sizes[b]; });
  const std::size_t largest = order.back();
  std::size_t drawn = 0;
  for (std::size_t i = 0; i + 1 < k; ++i)
    drawn += sizes[order[i]];

  auto rms_for = [&](auto &&row_of_slot, std::vector<std::int32_t> &acc,
                     std::vector<std::vector<std::int64_t>> &sums) {
    std::size_t slot = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const std::size_t g = order[i];
      std::fill(acc.begin(), acc.end(), 0);
      for (std::size_t m = 0; m < sizes[g]; ++m, ++slot) {
        const std::int8_t *src = pool.data() + row_of_slot(slot) * cols;
        std::int32_t *dst = acc.data();
        for (std::size_t j = 0; j < cols; ++j)
          dst[j] += src[j];
      }
      sums[g].assign(acc.begin(), acc.end());
    }
    for (std::size_t j = 0; j < cols; ++j) {
      std::int64_t rest = total[j];
      for (std::size_t i = 0; i + 1 < k; ++i)
        rest -= sums[order[i]][j];
      sums[largest][j] = rest;
    }
    return pairwise_rms(means_from_sums(sums, sizes));
  };

  // Observed statistic: pool slots in group order.
  std::vector<std::size_t> start(k, 0);
  for (std::size_t g = 1; g < k; ++g)
    start[g] = start[g - 1] + sizes[g - 1];
  std::vector<std::size_t> identity;
  identity.reserve(drawn);
  for (std::size_t i = 0; i + 1 < k; ++i)
    for (std::size_t m = 0; m < sizes[order[i]]; ++m)
      identity.push_back(start[order[i]] + m);

  StratReport rep;
  rep.group_sizes = sizes;
  rep.n_shuffles = params.n_shuffles;
  rep.seed = params.seed;
  rep.low_shuffle_warning = params.n_shuffles < 100;
  {
    std::vector<std::int32_t> acc(cols);
    std::vector<std::vector<std::int64_t>> sums(k, std::vector<std::int64_t>(cols));
    rep.observed_rms = rms_for([&](std::size_t s) { return identity[s]; }, acc, sums);
  }

  std::vector<double> null(params.n_shuffles);
  unsigned threads = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, params.n_shuffles)));
  std::atomic<std::size_t> next{0};
  constexpr std::size_t kBlock = 8;
  auto worker = [&] {
    std::vector<std::size_t> perm(n);
    std::vector<std::int32_t> acc(cols);
    std::vector<std::vector<std::int64_t>> sums(k, std::vector<std::int64_t>(cols));
    for (;;) {
      const std::size_t begin = next.fetch_add(kBlock);
      if (begin >= params.n_shuffles)
        return;
      const std::size_t end = std::min(begin + kBlock, params.n_shuffles);
      for (std::size_t s = begin; s < end; ++s) {
        auto rng = substream(params.seed, s);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = 0; i < drawn; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, n - 1);
          std::swap(perm[i], perm[pick(rng)]);
        }
        null[s] = rms_for([&](std::size_t slot) { return perm[slot]; }, acc, sums);
      }
    }
  };
  {
    std::vector<std::jthread> pool_threads;
    for (unsigned t = 1; t < threads; ++t)
      pool_threads.emplace_back(worker);
    worker();
  }

  for (double v : null)
    if (v >= rep.observed_rms)
      ++rep.null_exceed;
  rep.p_value = (1.0 + static_cast<double>(rep.null_exceed)) /
                (1.0 + static_cast<double>(params.n_shuffles));
  if (!null.empty()) {
    rep.null_mean = mean(null);
    rep.null_sd = null.size() > 1 ? std::sqrt(variance(null)) : 0.0;
    rep.null_median = median(null);
  }
  return rep;
}

StratReport stratify(const CurveTable &table, const TraceMatrix &matrix, const StratRule &rule,
                     const PermutationParams &params) {
  const auto part = partition(table, rule);
  const auto rows = rows_for(matrix, table);
  std::vector<std::vector<std::size_t>> groups;
  for (const auto &m : part.members) {
    groups.emplace_back();
    for (const auto i : m)
      groups.back().push_back(rows[i]);
  }
  auto rep = permutation_test(groups, matrix, params);
  rep.rule = rule.id;
  rep.group_names = part.names;
  return rep;
}

std::vector<MurmurationProfile> group_profiles(const CurveTable &table, const TraceMatrix &matrix,
                                               const Partition &part) {
  const auto rows = rows_for(matrix, table);
  std::vector<MurmurationProfile> out;
  for (const auto &m : part.members) {
    std::vector<std::size_t> r;
    for (const auto i : m)
      r.push_back(rows[i]);
    out.push_back(murmuration_profile(r, matrix));
  }
  return out;
}

Bonferroni bonferroni(std::span<const double> p_values, double alpha) {
  if (p_values.empty())
    throw ArgumentError("Bonferroni correction of an empty p-value list");
  Bonferroni out;
  out.threshold = alpha / static_cast<double>(p_values.size());
  for (double p : p_values)
    out.significant.push_back(p <= out.threshold);
  return out;
}

PowerLawFit fit_power_law(std::span<const double> n, std::span<const double> rms) {
  if (n.size() != rms.size() || n.size() < 3)
    throw ArgumentError("power-law fit needs at least three (N, RMS) points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(rms[i] > 0.0))
      throw DataError("power-law fit needs positive N and RMS");
    lx.push_back(std::log(n[i]));
    ly.push_back(std::log(rms[i]));
  }
  const auto line = fit_line(lx, ly);
  return {-line.slope, line.slope_stderr, line.r_squared};
}

std::vector<ConductorRange> default_scale_windows() {
  return {{5000, 20000}, {10000, 50000}, {20000, 70000}, {50000, 100000}};
}

ScaleScan scale_scan(const CurveTable &table, const TraceMatrix &matrix, const StratRule &rule,
                     const std::vector<ConductorRange> &windows) {
  if (windows.size() < 3)
    throw ArgumentError("scale scan needs at least three windows");
  ScaleScan out;
  out.windows = windows;
  for (const auto &[lo, hi] : windows) {
    const auto sub = table.filter([&](const CurveRecord &r) { return r.conductor >= lo && r.conductor <= hi; });
    Partition part;
    try {
      part = partition(sub, rule);
    } catch (const DataError &e) {
      throw DataError("window [" + std::to_string(lo) + ", " + std::to_string(hi) + "]: " + e.what());
    }
    const auto profiles = group_profiles(sub, matrix, part);
    out.centers.push_back(std::sqrt(static_cast<double>(lo) * static_cast<double>(hi)));
    out.rms.push_back(profile_rms(profiles));
    out.group_sizes.push_back(part.sizes());
  }
  out.fit = fit_power_law(out.centers, out.rms);
  return out;
}

} // namespace murm
