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
#include "murm/primes.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace murm {

/// Quadratic character table for F_p: chi[v] in {-1, 0, +1}.
class ResidueTable {
public:
  explicit ResidueTable(std::uint32_t p);

  std::uint32_t prime() const { return p_; }
  int chi(std::uint32_t v) const { return chi_[v]; }
  const std::int8_t *data() const { return chi_.data(); }

private:
  std::uint32_t p_;
  std::vector<std::int8_t> chi_;
};

/// Result of counting a model over F_p.
struct LocalTrace {
  int ap = 0;
  /// True when the reduction mod p is singular.
  bool bad = false;
};

/// a_p of the reduction of `model` mod p, using the smooth locus when the
/// reduction is singular: good p gives p + 1 - #E(F_p), bad p gives
/// p - #E_ns(F_p) (0 additive, +1 split, -1 non-split multiplicative).
/// p >= 5 uses the character sum over the short Weierstrass form; 2 and 3
/// enumerate the full equation.
LocalTrace local_trace(const WeierstrassModel &model, std::uint32_t p);
LocalTrace local_trace(const WeierstrassModel &model, const ResidueTable &table);

/// a_p(E) for a minimal model of conductor N. Throws ArgumentError for
/// non-prime p and DataError when the model's reduction type disagrees with
/// whether p divides N.
int ap_at_prime(const WeierstrassModel &model, std::uint32_t conductor, std::uint32_t p);

/// Dense curve x prime table of Frobenius traces.
class TraceMatrix {
public:
  TraceMatrix() = default;
  TraceMatrix(std::vector<std::string> labels, PrimeList primes);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return primes_.size(); }
  const PrimeList &primes() const { return primes_; }
  const std::vector<std::string> &labels() const { return labels_; }

  std::int16_t at(std::size_t row, std::size_t col) const { return traces_[row * cols() + col]; }
  std::span<const std::int16_t> row(std::size_t r) const {
    return {traces_.data() + r * cols(), cols()};
  }
  bool is_bad(std::size_t row, std::size_t col) const {
    const std::size_t bit = row * cols() + col;
    return (bad_[bit >> 3] >> (bit & 7)) & 1u;
  }

  void set(std::size_t row, std::size_t col, std::int16_t ap, bool bad);

  /// Row of `label`, or -1.
  std::ptrdiff_t row_of(std::string_view label) const;

  std::span<const std::int16_t> trace_data() const { return traces_; }
  std::span<const std::uint8_t> bad_bits() const { return bad_; }
  std::span<std::int16_t> mutable_trace_data() { return traces_; }
  std::span<std::uint8_t> mutable_bad_bits() { return bad_; }

  friend bool operator==(const TraceMatrix &a, const TraceMatrix &b) {
    return a.labels_ == b.labels_ && a.primes_ == b.primes_ &&
           a.traces_ == b.traces_ && a.bad_ == b.bad_;
  }

private:
  std::vector<std::string> labels_;
  PrimeList primes_;
  std::vector<std::int16_t> traces_;
  std::vector<std::uint8_t> bad_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Computes a_p for every (curve, prime). Work is split by prime, with one
/// character sum shared by all curves in a twist class; `threads == 0` uses
/// all hardware threads. The result does not
/// depend on the thread count. Throws DataError naming the curve on any
/// failure, including a Hasse-bound violation.
TraceMatrix build_trace_matrix(const CurveTable &table, const PrimeList &primes,
                               unsigned threads = 0);

/// Matrix rows for each record of `table`; throws DataError for a label the
/// matrix lacks.
std::vector<std::size_t> rows_for(const TraceMatrix &matrix, const CurveTable &table);

/// Dirichlet coefficients a_0..a_nmax (a_0 = 0, a_1 = 1) from prime traces,
/// using a_{p^{k+1}} = a_p a_{p^k} - p a_{p^{k-1}} at good p, a_{p^k} = a_p^k
/// at p | N, and multiplicativity. `primes`/`ap` must cover every prime
/// <= n_max; otherwise ArgumentError names the first missing prime.
std::vector<std::int64_t> extend_an(std::span<const std::uint32_t> primes,
                                    std::span<const int> ap, std::uint32_t conductor,
                                    std::size_t n_max);

/// a_0..a_nmax computed straight from the model.
std::vector<std::int64_t> dirichlet_coefficients(const WeierstrassModel &model,
                                                 std::uint32_t conductor, std::size_t n_max);

} // namespace murm
