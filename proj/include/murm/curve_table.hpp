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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace murm {

/// Weierstrass coefficients can exceed 64 bits for large conductors.
using Coefficient = __int128;

std::string to_string(Coefficient v);
Coefficient parse_coefficient(std::string_view text);

/// Coefficients [a1, a2, a3, a4, a6] of y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6.
using WeierstrassModel = std::array<Coefficient, 5>;

/// One curve and the invariants entering the BSD formula.
struct CurveRecord {
  std::string label;
  std::string isogeny_class;
  WeierstrassModel model{};
  std::uint32_t conductor = 0;
  int rank = 0;
  int root_number = 1;
  double real_period = 0.0;
  double regulator = 1.0;
  std::uint32_t tamagawa_product = 1;
  std::uint32_t torsion_order = 1;
  double sha_an = 1.0;
  /// Leading coefficient L^(r)(E,1)/r!.
  double l_value = 0.0;

  /// |Sha| snapped to the nearest integer.
  long sha() const;
  /// Omega * prod c_p / T^2, equal to L(E,1)/|Sha| at rank 0 under BSD.
  double bsd_ratio() const;
};

/// Strips the trailing curve index: "11a1" -> "11a".
std::string isogeny_class_of(std::string_view label);

/// Returns the nearest integer to `sha` if it is a positive perfect square
/// within relative tolerance `rel_tol`, otherwise 0.
long snap_sha(double sha, double rel_tol = 1e-3);

/// Checks the record-level invariants; returns an empty string when valid.
std::string validate_record(const CurveRecord &rec);

/// Relative residual |L - Sha*Omega*prod c_p/T^2| / L of the rank-0 BSD identity.
double validate_bsd_residual(const CurveRecord &rec);

/// Immutable, sorted and indexed collection of curves.
class CurveTable {
public:
  CurveTable() = default;
  /// Sorts by (conductor, label); throws DataError on a duplicate label.
  explicit CurveTable(std::vector<CurveRecord> records);

  std::span<const CurveRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const CurveRecord &operator[](std::size_t i) const { return records_[i]; }

  /// Index of `label`, or -1.
  std::ptrdiff_t find(std::string_view label) const;

  /// Records with lo <= conductor <= hi, contiguous thanks to the sort order.
  std::span<const CurveRecord> conductor_range(std::uint32_t lo,
                                               std::uint32_t hi) const;

  /// Record indices grouped by isogeny class, classes in table order.
  const std::vector<std::vector<std::size_t>> &classes() const {
    return classes_;
  }

  /// New table holding the records that satisfy `pred`.
  template <class Pred> CurveTable filter(Pred &&pred) const {
    std::vector<CurveRecord> out;
    for (const auto &r : records_)
      if (pred(r))
        out.push_back(r);
    return CurveTable(std::move(out));
  }

private:
  std::vector<CurveRecord> records_;
  std::unordered_map<std::string, std::size_t> by_label_;
  std::vector<std::vector<std::size_t>> classes_;
};

/// A data row rejected during ingest.
struct IngestIssue {
  std::size_t line = 0;
  std::string label;
  std::string message;
};

struct IngestResult {
  CurveTable table;
  std::vector<IngestIssue> issues;
  std::size_t rows_read = 0;
};

inline constexpr std::string_view kCanonicalHeader =
    "label,conductor,rank,a1,a2,a3,a4,a6,root_number,sha_an,real_period,"
    "regulator,tamagawa_product,torsion_order,l_value";

/// Parses the canonical curves CSV. Columns are located by header name.
/// Malformed or invalid rows are reported in `issues`; a duplicate label
/// throws DataError.
IngestResult parse_curve_table(std::istream &in);
IngestResult load_curve_table(const std::string &path);

/// Writes the canonical CSV (header + one row per record).
void write_curve_table(std::ostream &out, const CurveTable &table);

struct DedupeResult {
  CurveTable table;
  std::size_t total = 0;
  std::size_t retained = 0;
  double retained_ratio() const {
    return total == 0 ? 1.0 : static_cast<double>(retained) / static_cast<double>(total);
  }
};

/// Keeps one record per isogeny class: the lexicographically smallest label.
DedupeResult dedupe_isogeny(const CurveTable &table);

} // namespace murm
