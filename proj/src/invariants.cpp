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

#include "murm/invariants.hpp"

#include "murm/error.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

namespace murm {

namespace {

constexpr std::array<std::pair<std::string_view, Invariant>, 11> kNames = {{
    {"period", Invariant::period},
    {"log_period", Invariant::log_period},
    {"tamagawa", Invariant::tamagawa},
    {"torsion", Invariant::torsion},
    {"sha", Invariant::sha},
    {"regulator", Invariant::regulator},
    {"l_value", Invariant::l_value},
    {"bsd_ratio", Invariant::bsd_ratio},
    {"root_number", Invariant::root_number},
    {"conductor", Invariant::conductor},
    {"log_conductor", Invariant::log_conductor},
}};

} // namespace

Invariant parse_invariant(std::string_view id) {
  for (const auto &[name, inv] : kNames)
    if (name == id)
      return inv;
  throw ArgumentError("unknown invariant id '" + std::string(id) + "'");
}

std::string_view invariant_name(Invariant inv) {
  for (const auto &[name, v] : kNames)
    if (v == inv)
      return name;
  return "?";
}

double invariant_value(const CurveRecord &rec, Invariant inv) {
  switch (inv) {
  case Invariant::period:
    return rec.real_period;
  case Invariant::log_period:
    return std::log(rec.real_period);
  case Invariant::tamagawa:
    return rec.tamagawa_product;
  case Invariant::torsion:
    return rec.torsion_order;
  case Invariant::sha:
    return static_cast<double>(rec.sha());
  case Invariant::regulator:
    return rec.regulator;
  case Invariant::l_value:
    return rec.l_value;
  case Invariant::bsd_ratio:
    return rec.bsd_ratio();
  case Invariant::root_number:
    return rec.root_number;
  case Invariant::conductor:
    return rec.conductor;
  case Invariant::log_conductor:
    return std::log(static_cast<double>(rec.conductor));
  }
  throw ArgumentError("unknown invariant");
}

} // namespace murm
