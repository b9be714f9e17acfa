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

#include "murm/curve_table.hpp"

#include "murm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace murm {

std::string to_string(Coefficient v) {
  if (v == 0)
    return "0";
  const bool neg = v < 0;
  // Work with the negative value so that the minimum __int128 is representable.
  std::string digits;
  Coefficient x = neg ? v : -v;
  while (x != 0) {
    digits.push_back(static_cast<char>('0' - static_cast<int>(x % 10)));
    x /= 10;
  }
  if (neg)
    digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

Coefficient parse_coefficient(std::string_view text) {
  if (text.empty())
    throw ArgumentError("empty integer field");
  std::size_t i = 0;
  bool neg = false;
  if (text[0] == '-' || text[0] == '+') {
    neg = text[0] == '-';
    i = 1;
  }
  if (i == text.size())
    throw ArgumentError("non-numeric integer field '" + std::string(text) + "'");
  constexpr Coefficient kMin = static_cast<Coefficient>(
      static_cast<unsigned __int128>(1) << 127);
  Coefficient acc = 0; // accumulated as a non-positive number
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c < '0' || c > '9')
      throw ArgumentError("non-numeric integer field '" + std::string(text) + "'");
    const int d = c - '0';
    if (acc < (kMin + d) / 10)
      throw ArgumentError("integer field out of range '" + std::string(text) + "'");
    acc = acc * 10 - d;
  }
  if (!neg) {
    if (acc == kMin)
      throw ArgumentError("integer field out of range '" + std::string(text) + "'");
    acc = -acc;
  }
  return acc;
}

long CurveRecord::sha() const { return std::lround(sha_an); }

double CurveRecord::bsd_ratio() const {
  const double t = static_cast<double>(torsion_order);
  return real_period * static_cast<double>(tamagawa_product) / (t * t);
}

std::string isogeny_class_of(std::string_view label) {
  std::size_t end = label.size();
  while (end > 0 && label[end - 1] >= '0' && label[end - 1] <= '9')
    --end;
  return std::string(label.substr(0, end));
}

long snap_sha(double sha, double rel_tol) {
  if (!(sha > 0.0))
    return 0;
  const long n = std::lround(sha);
  if (n < 1 || std::abs(sha - static_cast<double>(n)) > rel_tol * static_cast<double>(n))
    return 0;
  const long root = std::lround(std::sqrt(static_cast<double>(n)));
  return root * root == n ? n : 0;
}

std::string validate_record(const CurveRecord &rec) {
  if (rec.label.empty())
    return "empty label";
  if (rec.conductor < 11)
    return "conductor below 11";
  if (rec.rank < 0 || rec.rank > 4)
    return "rank " + std::to_string(rec.rank) + " outside {0..4}";
  if (rec.root_number != 1 && rec.root_number != -1)
    return "root number must be +1 or -1";
  if ((rec.root_number == 1) != (rec.rank % 2 == 0))
    return "root number does not match rank parity";
  if (!(rec.real_period > 0.0) || !std::isfinite(rec.real_period))
    return "real period must be positive";
  if (!(rec.regulator > 0.0) || !std::isfinite(rec.regulator))
    return "regulator must be positive";
  if (rec.tamagawa_product < 1)
    return "tamagawa product must be positive";
  if (rec.torsion_order < 1)
    return "torsion order must be positive";
  if (!(rec.l_value >= 0.0) || !std::isfinite(rec.l_value))
    return "l_value must be nonnegative";
  if (snap_sha(rec.sha_an) == 0)
    return "sha_an is not a positive perfect square";
  if (rec.rank == 0) {
    if (std::abs(rec.regulator - 1.0) > 1e-9)
      return "rank 0 requires regulator 1";
    if (!(rec.l_value > 0.0))
      return "rank 0 requires positive l_value";
  }
  return {};
}

double validate_bsd_residual(const CurveRecord &rec) {
  if (rec.rank != 0)
    throw ArgumentError("BSD residual is defined for rank 0 only (" + rec.label + ")");
  if (!(rec.l_value > 0.0))
    throw DataError("rank-0 curve " + rec.label + " has L(E,1) = 0");
  const double rhs = rec.sha_an * rec.bsd_ratio();
  return std::abs(rec.l_value - rhs) / rec.l_value;
}

CurveTable::CurveTable(std::vector<CurveRecord> records)
    : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const CurveRecord &a, const CurveRecord &b) {
              if (a.conductor != b.conductor)
                return a.conductor < b.conductor;
              return a.label < b.label;
            });
  by_label_.reserve(records_.size());
  std::map<std::string, std::size_t> class_slot;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto &r = records_[i];
    if (r.isogeny_class.empty())
      r.isogeny_class = isogeny_class_of(r.label);
    if (!by_label_.emplace(r.label, i).second)
      throw DataError("duplicate label " + r.label);
    auto [it, fresh] = class_slot.emplace(r.isogeny_class, classes_.size());
    if (fresh)
      classes_.emplace_back();
    classes_[it->second].push_back(i);
  }
}

std::ptrdiff_t CurveTable::find(std::string_view label) const {
  auto it = by_label_.find(std::string(label));
  return it == by_label_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::span<const CurveRecord> CurveTable::conductor_range(std::uint32_t lo,
                                                         std::uint32_t hi) const {
  auto first = std::lower_bound(
      records_.begin(), records_.end(), lo,
      [](const CurveRecord &r, std::uint32_t v) { return r.conductor < v; });
  auto last = std::upper_bound(
      first, records_.end(), hi,
      [](std::uint32_t v, const CurveRecord &r) { return v < r.conductor; });
  return {first, last};
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  return s;
}

template <class Int> Int parse_int(std::string_view s, const char *field) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ArgumentError(std::string("non-numeric field ") + field + " '" +
                        std::string(s) + "'");
  return v;
}

double parse_real(std::string_view s, const char *field) {
  double v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ArgumentError(std::string("non-numeric field ") + field + " '" +
                        std::string(s) + "'");
  return v;
}

enum Column {
  kLabel, kConductor, kRank, kA1, kA2, kA3, kA4, kA6, kRootNumber, kSha,
  kPeriod, kRegulator, kTamagawa, kTorsion, kLValue, kColumnCount
};

constexpr std::array<std::string_view, kColumnCount> kColumnNames = {
    "label", "conductor", "rank", "a1", "a2", "a3", "a4", "a6", "root_number",
    "sha_an", "real_period", "regulator", "tamagawa_product", "torsion_order",
    "l_value"};

} // namespace

IngestResult parse_curve_table(std::istream &in) {
  IngestResult result;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line))
    throw ParseError(1, "missing header row");
  ++lineno;
  const auto header = split_commas(trim(line));
  std::array<std::size_t, kColumnCount> pos;
  pos.fill(static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = trim(header[i]);
    for (std::size_t c = 0; c < kColumnCount; ++c)
      if (name == kColumnNames[c]) {
        if (pos[c] != static_cast<std::size_t>(-1))
          throw ParseError(1, "repeated column " + std::string(name));
        pos[c] = i;
      }
  }
  for (std::size_t c = 0; c < kColumnCount; ++c)
    if (pos[c] == static_cast<std::size_t>(-1))
      throw ParseError(1, "header lacks column " + std::string(kColumnNames[c]));

  std::vector<CurveRecord> records;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty())
      continue;
    ++result.rows_read;
    const auto f = split_commas(text);
    CurveRecord rec;
    rec.label = f.empty() ? std::string{} : std::string(trim(f[pos[kLabel]]));
    if (f.size() != header.size()) {
      result.issues.push_back({lineno, f.size() > pos[kLabel] ? std::string(f[pos[kLabel]]) : "",
                               "expected " + std::to_string(header.size()) +
                                   " columns, found " + std::to_string(f.size())});
      continue;
    }
    try {
      auto at = [&](Column c) { return trim(f[pos[c]]); };
      rec.conductor = parse_int<std::uint32_t>(at(kConductor), "conductor");
      rec.rank = parse_int<int>(at(kRank), "rank");
      const Column coeff[5] = {kA1, kA2, kA3, kA4, kA6};
      for (int k = 0; k < 5; ++k)
        rec.model[k] = parse_coefficient(at(coeff[k]));
      rec.root_number = parse_int<int>(at(kRootNumber), "root_number");
      rec.sha_an = parse_real(at(kSha), "sha_an");
      rec.real_period = parse_real(at(kPeriod), "real_period");
      rec.regulator = parse_real(at(kRegulator), "regulator");
      rec.tamagawa_product = parse_int<std::uint32_t>(at(kTamagawa), "tamagawa_product");
      rec.torsion_order = parse_int<std::uint32_t>(at(kTorsion), "torsion_order");
      rec.l_value = parse_real(at(kLValue), "l_value");
    } catch (const ArgumentError &e) {
      result.issues.push_back({lineno, rec.label, e.what()});
      continue;
    }
    rec.isogeny_class = isogeny_class_of(rec.label);
    if (auto msg = validate_record(rec); !msg.empty()) {
      result.issues.push_back({lineno, rec.label, msg});
      continue;
    }
    if (auto [it, fresh] = seen.emplace(rec.label, lineno); !fresh)
      throw DataError("duplicate label " + rec.label + " on lines " +
                      std::to_string(it->second) + " and " + std::to_string(lineno));
    records.push_back(std::move(rec));
  }
  result.table = CurveTable(std::move(records));
  return result;
}

IngestResult load_curve_table(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ArgumentError("cannot open curves file " + path);
  return parse_curve_table(in);
}

void write_curve_table(std::ostream &out, const CurveTable &table) {
  out << kCanonicalHeader << '\n';
  // Shortest representation that parses back to the same double.
  auto real = [](double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
  };
  for (const auto &r : table.records()) {
    out << r.label << ',' << r.conductor << ',' << r.rank;
    for (const auto &a : r.model)
      out << ',' << to_string(a);
    out << ',' << r.root_number << ',' << real(r.sha_an) << ','
        << real(r.real_period) << ',' << real(r.regulator) << ','
        << r.tamagawa_product << ',' << r.torsion_order << ','
        << real(r.l_value) << '\n';
  }
}

DedupeResult dedupe_isogeny(const CurveTable &table) {
  std::vector<CurveRecord> keep;
  keep.reserve(table.classes().size());
  for (const auto &members : table.classes()) {
    std::size_t best = members.front();
    for (auto i : members)
      if (table[i].label < table[best].label)
        best = i;
    keep.push_back(table[best]);
  }
  DedupeResult out;
  out.total = table.size();
  out.retained = keep.size();
  out.table = CurveTable(std::move(keep));
  return out;
}

} // namespace murm
