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

#include "murm/trace_engine.hpp"

#include "murm/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

namespace murm {

namespace {

std::uint64_t reduce(Coefficient c, std::uint32_t p) {
  std::int64_t r;
  if (c >= INT64_MIN && c <= INT64_MAX)
    r = static_cast<std::int64_t>(c) % static_cast<std::int64_t>(p);
  else
    r = static_cast<std::int64_t>(c % static_cast<Coefficient>(p));
  return static_cast<std::uint64_t>(r < 0 ? r + p : r);
}

struct Mod {
  std::uint64_t p;
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    const auto s = a + b;
    return s >= p ? s - p : s;
  }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + p - b; }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return (a * b) % p; }
  std::uint64_t of(std::int64_t v) const {
    const auto r = v % static_cast<std::int64_t>(p);
    return static_cast<std::uint64_t>(r < 0 ? r + static_cast<std::int64_t>(p) : r);
  }
};

/// Short form y^2 = x^3 + A x + B, isomorphic to the model over F_p for p >= 5.
struct ShortForm {
  std::uint64_t A, B;
};

ShortForm short_form(const WeierstrassModel &m, const Mod &f) {
  const auto a1 = reduce(m[0], static_cast<std::uint32_t>(f.p));
  const auto a2 = reduce(m[1], static_cast<std::uint32_t>(f.p));
  const auto a3 = reduce(m[2], static_cast<std::uint32_t>(f.p));
  const auto a4 = reduce(m[3], static_cast<std::uint32_t>(f.p));
  const auto a6 = reduce(m[4], static_cast<std::uint32_t>(f.p));
  const auto b2 = f.add(f.mul(a1, a1), f.mul(f.of(4), a2));
  const auto b4 = f.add(f.mul(f.of(2), a4), f.mul(a1, a3));
  const auto b6 = f.add(f.mul(a3, a3), f.mul(f.of(4), a6));
  const auto c4 = f.sub(f.mul(b2, b2), f.mul(f.of(24), b4));
  const auto c6 = f.sub(f.sub(f.mul(f.of(36), f.mul(b2, b4)), f.mul(b2, f.mul(b2, b2))),
                        f.mul(f.of(216), b6));
  return {f.mul(f.of(-27), c4), f.mul(f.of(-54), c6)};
}

LocalTrace trace_by_enumeration(const WeierstrassModel &m, std::uint32_t p) {
  const Mod f{p};
  std::uint64_t a[5];
  for (int k = 0; k < 5; ++k)
    a[k] = reduce(m[k], p);
  const auto &[a1, a2, a3, a4, a6] = a;
  std::uint64_t smooth = 1; // point at infinity
  bool singular = false;
  for (std::uint64_t x = 0; x < p; ++x) {
    const auto x2 = f.mul(x, x);
    const auto rhs = f.add(f.add(f.mul(x2, x), f.mul(a2, x2)), f.add(f.mul(a4, x), a6));
    for (std::uint64_t y = 0; y < p; ++y) {
      const auto lhs = f.add(f.add(f.mul(y, y), f.mul(a1, f.mul(x, y))), f.mul(a3, y));
      if (lhs != rhs)
        continue;
      const auto fx = f.sub(f.mul(a1, y), f.add(f.add(f.mul(3, x2), f.mul(f.mul(2, a2), x)), a4));
      const auto fy = f.add(f.add(f.mul(2, y), f.mul(a1, x)), a3);
      if (fx == 0 && fy == 0) {
        singular = true;
        continue;
      }
      ++smooth;
    }
  }
  const auto pp = static_cast<std::int64_t>(p);
  const auto n = static_cast<std::int64_t>(smooth);
  return singular ? LocalTrace{static_cast<int>(pp - n), true}
                  : LocalTrace{static_cast<int>(pp + 1 - n), false};
}

// sum over x of chi(x^3 + A x + B), with the cubic stepped by forward
// differences so the loop has no multiplications.
std::int64_t character_sum(std::uint64_t A, std::uint64_t B, const Mod &f, const std::int8_t *chi) {
  std::int64_t sum = 0;
  std::uint64_t value = B;
  std::uint64_t d1 = f.add(1, A);
  std::uint64_t d2 = f.of(6);
  const std::uint64_t six = f.of(6);
  for (std::uint64_t x = 0; x < f.p; ++x) {
    sum += chi[value];
    value = f.add(value, d1);
    d1 = f.add(d1, d2);
    d2 = f.add(d2, six);
  }
  return sum;
}

LocalTrace singular_trace(std::uint64_t A, std::uint64_t B, const Mod &f, std::int64_t sum) {
  // Drop the singular affine points (x0, 0) from the count.
  std::int64_t singular = 0;
  for (std::uint64_t x = 0; x < f.p; ++x) {
    const auto x2 = f.mul(x, x);
    const auto fx = f.add(f.add(f.mul(x2, x), f.mul(A, x)), B);
    const auto dfx = f.add(f.mul(3, x2), A);
    if (fx == 0 && dfx == 0)
      ++singular;
  }
  // #E_ns = p + sum + 1 - singular, a_p = p - #E_ns.
  return {static_cast<int>(singular - 1 - sum), true};
}

std::uint64_t discriminant(std::uint64_t A, std::uint64_t B, const Mod &f) {
  return f.add(f.mul(4, f.mul(A, f.mul(A, A))), f.mul(27, f.mul(B, B)));
}

LocalTrace trace_by_character_sum(const WeierstrassModel &m, const ResidueTable &table) {
  const Mod f{table.prime()};
  const auto [A, B] = short_form(m, f);
  const auto sum = character_sum(A, B, f, table.data());
  if (discriminant(A, B, f) != 0)
    return {static_cast<int>(-sum), false};
  return singular_trace(A, B, f, sum);
}

// Traces of many curves at one prime p >= 5. Over F_p the trace of a smooth
// y^2 = x^3 + A x + B depends only on the curve up to isomorphism and flips
// sign under quadratic twist. For A B != 0 the curves sharing r = A^3 / B^2
// are twists of each other and chi(A) chi(B) a_p is constant on them, so one
// character sum per value of r serves every curve. A = 0 and B = 0 are keyed
// by the remaining coefficient.
class PrimeTraces {
public:
  explicit PrimeTraces(const ResidueTable &table)
      : table_(table), f_{table.prime()}, inverse_(table.prime(), 0),
        by_ratio_(table.prime(), kUnknown), by_b_(table.prime(), kUnknown),
        by_a_(table.prime(), kUnknown) {
    const std::uint64_t p = f_.p;
    inverse_[1] = 1;
    for (std::uint64_t i = 2; i < p; ++i)
      inverse_[i] = static_cast<std::uint32_t>(p - (p / i) * inverse_[p % i] % p);
  }

  LocalTrace trace(const WeierstrassModel &m) {
    const auto [A, B] = short_form(m, f_);
    if (discriminant(A, B, f_) == 0)
      return singular_trace(A, B, f_, character_sum(A, B, f_, table_.data()));
    if (A == 0)
      return {lookup(by_b_[B], A, B, 1), false};
    if (B == 0)
      return {lookup(by_a_[A], A, B, 1), false};
    const auto inv_b = inverse_[B];
    const auto r = f_.mul(f_.mul(A, f_.mul(A, A)), f_.mul(inv_b, inv_b));
    const int sign = table_.chi(static_cast<std::uint32_t>(A)) * table_.chi(static_cast<std::uint32_t>(B));
    return {sign * lookup(by_ratio_[r], A, B, sign), false};
  }

private:
  static constexpr std::int16_t kUnknown = INT16_MIN;

  int lookup(std::int16_t &slot, std::uint64_t A, std::uint64_t B, int sign) {
    if (slot == kUnknown)
      slot = static_cast<std::int16_t>(-sign * character_sum(A, B, f_, table_.data()));
    return slot;
  }

  const ResidueTable &table_;
  Mod f_;
  std::vector<std::uint32_t> inverse_;
  std::vector<std::int16_t> by_ratio_, by_b_, by_a_;
};

} // namespace

ResidueTable::ResidueTable(std::uint32_t p) : p_(p) {
  if (!is_prime(p))
    throw ArgumentError(std::to_string(p) + " is not prime");
  chi_.assign(p, -1);
  chi_[0] = 0;
  if (p == 2) {
    chi_[1] = 1;
    return;
  }
  for (std::uint64_t x = 1; x <= (p - 1) / 2; ++x)
    chi_[(x * x) % p] = 1;
}

LocalTrace local_trace(const WeierstrassModel &model, const ResidueTable &table) {
  if (table.prime() < 5)
    return trace_by_enumeration(model, table.prime());
  return trace_by_character_sum(model, table);
}

LocalTrace local_trace(const WeierstrassModel &model, std::uint32_t p) {
  if (!is_prime(p))
    throw ArgumentError(std::to_string(p) + " is not prime");
  if (p < 5)
    return trace_by_enumeration(model, p);
  return trace_by_character_sum(model, ResidueTable(p));
}

namespace {

int checked_trace(const LocalTrace &t, std::uint32_t conductor, std::uint32_t p) {
  const bool divides = conductor % p == 0;
  if (t.bad != divides)
    throw DataError("reduction at p=" + std::to_string(p) + " is " +
                    (t.bad ? "singular" : "smooth") + " but p " +
                    (divides ? "divides" : "does not divide") + " the conductor " +
                    std::to_string(conductor));
  if (t.bad) {
    if (t.ap < -1 || t.ap > 1)
      throw DataError("bad-prime trace " + std::to_string(t.ap) + " at p=" + std::to_string(p));
  } else if (static_cast<double>(t.ap) * t.ap > 4.0 * p) {
    throw DataError("Hasse bound violated: a_" + std::to_string(p) + " = " + std::to_string(t.ap));
  }
  return t.ap;
}

} // namespace

int ap_at_prime(const WeierstrassModel &model, std::uint32_t conductor, std::uint32_t p) {
  return checked_trace(local_trace(model, p), conductor, p);
}

TraceMatrix::TraceMatrix(std::vector<std::string> labels, PrimeList primes)
    : labels_(std::move(labels)), primes_(std::move(primes)) {
  traces_.assign(labels_.size() * primes_.size(), 0);
  bad_.assign((traces_.size() + 7) / 8, 0);
  index_.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (!index_.emplace(labels_[i], i).second)
      throw DataError("duplicate label " + labels_[i] + " in trace matrix");
}

void TraceMatrix::set(std::size_t row, std::size_t col, std::int16_t ap, bool bad) {
  const std::size_t bit = row * cols() + col;
  traces_[bit] = ap;
  const auto mask = static_cast<std::uint8_t>(1u << (bit & 7));
  if (bad)
    bad_[bit >> 3] |= mask;
  else
    bad_[bit >> 3] &= static_cast<std::uint8_t>(~mask);
}

std::ptrdiff_t TraceMatrix::row_of(std::string_view label) const {
  auto it = index_.find(std::string(label));
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

TraceMatrix build_trace_matrix(const CurveTable &table, const PrimeList &primes,
                               unsigned threads) {
  std::vector<std::string> labels;
  labels.reserve(table.size());
  for (const auto &r : table.records())
    labels.push_back(r.label);
  TraceMatrix out(std::move(labels), primes);
  if (table.empty() || primes.empty())
    return out;

  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());

  // One task per prime; every curve at that prime shares its residue table
  // and trace cache. Bad-flag bits of neighbouring columns share bytes, so
  // flags are collected per entry and packed after the join.
  std::vector<std::uint8_t> bad(table.size() * primes.size(), 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failure_row = SIZE_MAX;
  std::mutex failure_mutex;
  auto data = out.mutable_trace_data();
  const std::size_t K = primes.size();

  auto worker = [&] {
    for (;;) {
      // Largest primes first: they cost the most.
      const std::size_t task = next.fetch_add(1);
      if (task >= K)
        return;
      const std::size_t j = K - 1 - task;
      const std::uint32_t p = primes[j];
      const ResidueTable chi(p);
      std::optional<PrimeTraces> cache;
      if (p >= 5)
        cache.emplace(chi);
      for (std::size_t i = 0; i < table.size(); ++i) {
        const auto &rec = table[i];
        try {
          const auto t = cache ? cache->trace(rec.model) : local_trace(rec.model, chi);
          data[i * K + j] = static_cast<std::int16_t>(checked_trace(t, rec.conductor, p));
          bad[i * K + j] = rec.conductor % p == 0;
        } catch (const std::exception &e) {
          // Report the first failing curve in table order.
          std::lock_guard lock(failure_mutex);
          if (i < failure_row) {
            failure_row = i;
            failure = std::make_exception_ptr(DataError(rec.label + ": " + e.what()));
          }
          break;
        }
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(worker);
  }
  if (failure)
    std::rethrow_exception(failure);

  auto bits = out.mutable_bad_bits();
  for (std::size_t k = 0; k < bad.size(); ++k)
    if (bad[k])
      bits[k >> 3] |= static_cast<std::uint8_t>(1u << (k & 7));
  return out;
}

std::vector<std::size_t> rows_for(const TraceMatrix &matrix, const CurveTable &table) {
  std::vector<std::size_t> rows;
  rows.reserve(table.size());
  for (const auto &r : table.records()) {
    const auto row = matrix.row_of(r.label);
    if (row < 0)
      throw DataError("trace matrix has no row for " + r.label);
    rows.push_back(static_cast<std::size_t>(row));
  }
  return rows;
}

std::vector<std::int64_t> extend_an(std::span<const std::uint32_t> primes,
                                    std::span<const int> ap, std::uint32_t conductor,
                                    std::size_t n_max) {
  if (primes.size() != ap.size())
    throw ArgumentError("prime and trace lists differ in length");
  std::vector<std::int64_t> a(n_max + 1, 0);
  if (n_max == 0)
    return a;
  a[1] = 1;

  std::vector<std::uint32_t> spf(n_max + 1, 0);
  for (std::size_t i = 2; i <= n_max; ++i)
    if (spf[i] == 0)
      for (std::size_t j = i; j <= n_max; j += i)
        if (spf[j] == 0)
          spf[j] = static_cast<std::uint32_t>(i);

  std::vector<int> trace_of(n_max + 1, 0);
  std::vector<bool> known(n_max + 1, false);
  for (std::size_t k = 0; k < primes.size(); ++k)
    if (primes[k] <= n_max) {
      trace_of[primes[k]] = ap[k];
      known[primes[k]] = true;
    }

  for (std::size_t n = 2; n <= n_max; ++n) {
    const std::uint32_t p = spf[n];
    std::size_t m = n;
    while (m % p == 0)
      m /= p;
    if (m > 1) {
      a[n] = a[n / m] * a[m];
      continue;
    }
    if (!known[p])
      throw ArgumentError("missing trace for prime " + std::to_string(p));
    if (n == p) {
      a[n] = trace_of[p];
    } else if (conductor % p == 0) {
      a[n] = trace_of[p] * a[n / p];
    } else {
      a[n] = trace_of[p] * a[n / p] - static_cast<std::int64_t>(p) * a[n / p / p];
    }
  }
  return a;
}

std::vector<std::int64_t> dirichlet_coefficients(const WeierstrassModel &model,
                                                 std::uint32_t conductor, std::size_t n_max) {
  const auto primes = primes_up_to(static_cast<std::uint32_t>(n_max));
  std::vector<int> ap;
  ap.reserve(primes.size());
  for (auto p : primes)
    ap.push_back(ap_at_prime(model, conductor, p));
  return extend_an(primes, ap, conductor, n_max);
}

} // namespace murm
