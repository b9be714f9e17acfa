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

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

using namespace murm;

namespace {

const std::string kHeader(kCanonicalHeader);
const std::string k11a1 = "11a1,11,0,0,-1,1,-10,-20,1,1,1.26920930428,1,5,5,0.253841860856";

IngestResult parse(const std::string &text) {
  std::istringstream in(text);
  return parse_curve_table(in);
}

} // namespace

TEST(CurveIngest, ParsesCanonicalRow) {
  const auto res = parse(kHeader + "\n" + k11a1 + "\n");
  ASSERT_TRUE(res.issues.empty());
  ASSERT_EQ(res.table.size(), 1u);
  const auto &r = res.table[0];
  EXPECT_EQ(r.label, "11a1");
  EXPECT_EQ(r.isogeny_class, "11a");
  EXPECT_EQ(r.conductor, 11u);
  EXPECT_EQ(r.rank, 0);
  EXPECT_EQ(r.torsion_order, 5u);
  EXPECT_EQ(r.tamagawa_product, 5u);
  EXPECT_EQ(r.model, (WeierstrassModel{0, -1, 1, -10, -20}));
  EXPECT_NEAR(r.real_period, 1.26920930428, 1e-12);
  EXPECT_NEAR(r.l_value, 0.253841860856, 1e-12);
}

TEST(CurveIngest, ColumnsAreFoundByName) {
  // Same record with the invariants listed in a different order.
  const std::string text =
      "label,conductor,a1,a2,a3,a4,a6,rank,root_number,real_period,regulator,"
      "tamagawa_product,torsion_order,sha_an,l_value\n"
      "11a1,11,0,-1,1,-10,-20,0,1,1.269209304,1.0,5,5,1.0,0.2538418608\n";
  const auto res = parse(text);
  ASSERT_TRUE(res.issues.empty());
  ASSERT_EQ(res.table.size(), 1u);
  EXPECT_EQ(res.table[0].torsion_order, 5u);
  EXPECT_EQ(res.table[0].model[4], -20);
}

TEST(CurveIngest, HeaderOnlyGivesEmptyTable) {
  const auto res = parse(kHeader + "\n");
  EXPECT_TRUE(res.table.empty());
  EXPECT_TRUE(res.issues.empty());
  EXPECT_EQ(res.rows_read, 0u);
}

TEST(CurveIngest, MissingHeaderColumnIsFatal) {
  EXPECT_THROW(parse("label,conductor\n11a1,11\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(CurveIngest, RowErrorsAreCollectedWithLineNumbers) {
  const std::string text = kHeader + "\n" + k11a1 + "\n" +
                           "11a2,11,5,0,-1,1,-7820,-263580,-1,1,0.25,1,1,1,0.25\n" // rank 5
                           "11a3,11,0,0,-1,1,0\n"                                  // short row
                           "14a1,14,0,1,0,1,4,x,1,1,1.9,1,6,6,0.33\n";             // non-numeric
  const auto res = parse(text);
  EXPECT_EQ(res.table.size(), 1u);
  ASSERT_EQ(res.issues.size(), 3u);
  EXPECT_EQ(res.issues[0].line, 3u);
  EXPECT_NE(res.issues[0].message.find("rank"), std::string::npos);
  EXPECT_EQ(res.issues[1].line, 4u);
  EXPECT_EQ(res.issues[2].line, 5u);
  EXPECT_EQ(res.issues[2].label, "14a1");
}

TEST(CurveIngest, InvariantViolationsAreRejected) {
  auto ok = fixtures::make_record("11a1", 11);
  EXPECT_EQ(validate_record(ok), "");

  auto r = ok;
  r.conductor = 10;
  EXPECT_NE(validate_record(r), "");
  r = ok;
  r.root_number = -1; // odd sign with even rank
  EXPECT_NE(validate_record(r), "");
  r = ok;
  r.sha_an = 2.0;
  EXPECT_NE(validate_record(r), "");
  r = ok;
  r.sha_an = 4.002; // within 1e-3 relative of 4
  EXPECT_EQ(validate_record(r), "");
  r = ok;
  r.regulator = 0.5;
  EXPECT_NE(validate_record(r), "");
  r = ok;
  r.l_value = 0.0;
  EXPECT_NE(validate_record(r), "");
}

TEST(CurveIngest, DuplicateLabelIsFatal) {
  EXPECT_THROW(parse(kHeader + "\n" + k11a1 + "\n" + k11a1 + "\n"), DataError);
}

TEST(CurveIngest, SnapsShaToPerfectSquares) {
  EXPECT_EQ(snap_sha(1.0), 1);
  EXPECT_EQ(snap_sha(8.9995), 9);
  EXPECT_EQ(snap_sha(16.1), 0);
  EXPECT_EQ(snap_sha(3.0), 0);
  EXPECT_EQ(snap_sha(0.0), 0);
}

TEST(CurveIngest, CoefficientsBeyond64Bits) {
  const Coefficient big = parse_coefficient("-123456789012345678901234567890");
  EXPECT_EQ(to_string(big), "-123456789012345678901234567890");
  EXPECT_THROW(parse_coefficient("1e5"), ArgumentError);
  EXPECT_THROW(parse_coefficient("999999999999999999999999999999999999999999"), ArgumentError);
}

TEST(CurveTable, SortedAndIndexed) {
  const auto &t = fixtures::small_cremona();
  ASSERT_GT(t.size(), 5000u);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto &a = t[i - 1];
    const auto &b = t[i];
    EXPECT_TRUE(a.conductor < b.conductor || (a.conductor == b.conductor && a.label < b.label));
  }
  const auto i = t.find("37a1");
  ASSERT_GE(i, 0);
  EXPECT_EQ(t[static_cast<std::size_t>(i)].rank, 1);
  const auto range = t.conductor_range(11, 11);
  EXPECT_EQ(range.size(), 3u);
  EXPECT_TRUE(t.conductor_range(12, 13).empty());
}

TEST(CurveTable, KnownCurvesMatchPublishedInvariants) {
  const auto &t = fixtures::small_cremona();
  auto get = [&](const char *label) { return t[static_cast<std::size_t>(t.find(label))]; };
  const auto e37 = get("37a1");
  EXPECT_NEAR(e37.real_period, 5.98691729246, 1e-9);
  EXPECT_NEAR(e37.regulator, 0.0511114082, 1e-9);
  EXPECT_NEAR(e37.l_value, 0.305999773834, 1e-9);
  const auto e389 = get("389a1");
  EXPECT_EQ(e389.rank, 2);
  EXPECT_NEAR(e389.l_value, 0.759316500288, 1e-8);
}

TEST(BsdResidual, RankZeroCurvesAreConsistent) {
  const auto &t = fixtures::small_cremona();
  const auto e = t[static_cast<std::size_t>(t.find("11a1"))];
  EXPECT_LT(validate_bsd_residual(e), 1e-3);
  for (const auto &r : t.records())
    if (r.rank == 0)
      EXPECT_LT(validate_bsd_residual(r), 1e-3) << r.label;
}

TEST(BsdResidual, DoubledShaGivesUnitResidual) {
  const auto &t = fixtures::small_cremona();
  auto e = t[static_cast<std::size_t>(t.find("11a1"))];
  e.sha_an *= 2.0;
  EXPECT_NEAR(validate_bsd_residual(e), 1.0, 1e-9);
}

TEST(BsdResidual, Preconditions) {
  auto r = fixtures::make_record("37a1", 37, 1);
  EXPECT_THROW(validate_bsd_residual(r), ArgumentError);
  r = fixtures::make_record("11a1", 11, 0);
  r.l_value = 0.0;
  EXPECT_THROW(validate_bsd_residual(r), DataError);
}

TEST(Dedupe, SingleClassKeepsFirstLabel) {
  std::vector<CurveRecord> recs = {fixtures::make_record("11a3", 11), fixtures::make_record("11a1", 11),
                                   fixtures::make_record("11a2", 11)};
  const auto out = dedupe_isogeny(CurveTable(recs));
  ASSERT_EQ(out.table.size(), 1u);
  EXPECT_EQ(out.table[0].label, "11a1");
  EXPECT_EQ(out.total, 3u);
  EXPECT_EQ(out.retained, 1u);
}

TEST(Dedupe, OnePerClassIsIdentity) {
  std::vector<CurveRecord> recs = {fixtures::make_record("11a1", 11), fixtures::make_record("14a1", 14),
                                   fixtures::make_record("14b1", 14)};
  const CurveTable t(recs);
  const auto out = dedupe_isogeny(t);
  ASSERT_EQ(out.table.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(out.table[i].label, t[i].label);
  EXPECT_DOUBLE_EQ(out.retained_ratio(), 1.0);
}

TEST(Dedupe, EveryClassOccursOnce) {
  const auto out = dedupe_isogeny(fixtures::small_cremona());
  std::set<std::string> classes;
  for (const auto &r : out.table.records())
    EXPECT_TRUE(classes.insert(r.isogeny_class).second) << r.isogeny_class;
  EXPECT_EQ(classes.size(), fixtures::small_cremona().classes().size());
  // Cremona's tables carry about 1.5-2 curves per class at small conductor.
  EXPECT_GT(1.0 / out.retained_ratio(), 1.3);
}

TEST(CurveIngest, WriteThenParseIsIdentity) {
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> real(0.01, 50.0);
  std::uniform_int_distribution<int> small(-1000, 1000);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CurveRecord> recs;
    const int n = 1 + trial * 7;
    for (int i = 0; i < n; ++i) {
      auto r = fixtures::make_record(std::to_string(11 + i) + "a" + std::to_string(1 + i % 3),
                                    static_cast<std::uint32_t>(11 + i), i % 4);
      for (auto &a : r.model)
        a = small(rng);
      r.model[4] = static_cast<Coefficient>(small(rng)) * 1000000000000LL * 1000000000LL;
      r.real_period = real(rng);
      r.regulator = r.rank == 0 ? 1.0 : real(rng);
      r.sha_an = std::vector<double>{1.0, 4.0, 9.0000001, 16.0}[static_cast<std::size_t>(i % 4)];
      r.l_value = real(rng);
      r.tamagawa_product = static_cast<std::uint32_t>(1 + i % 7);
      r.torsion_order = static_cast<std::uint32_t>(1 + i % 5);
      recs.push_back(r);
    }
    const CurveTable t(recs);
    std::ostringstream out;
    write_curve_table(out, t);
    const auto back = parse(out.str());
    ASSERT_TRUE(back.issues.empty()) << back.issues.front().message;
    ASSERT_EQ(back.table.size(), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto &a = t[i];
      const auto &b = back.table[i];
      EXPECT_EQ(a.label, b.label);
      EXPECT_EQ(a.model, b.model);
      EXPECT_EQ(a.rank, b.rank);
      EXPECT_EQ(a.real_period, b.real_period);
      EXPECT_EQ(a.regulator, b.regulator);
      EXPECT_EQ(a.sha_an, b.sha_an);
      EXPECT_EQ(a.l_value, b.l_value);
      EXPECT_EQ(a.tamagawa_product, b.tamagawa_product);
      EXPECT_EQ(a.torsion_order, b.torsion_order);
    }
  }
}
