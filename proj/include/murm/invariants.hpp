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

#include <string_view>

namespace murm {

/// Per-curve scalar quantities that analyses average, stratify or correlate.
enum class Invariant {
  period,
  log_period,
  tamagawa,
  torsion,
  sha,
  regulator,
  l_value,
  bsd_ratio,
  root_number,
  conductor,
  log_conductor,
};

/// Throws ArgumentError for an unknown id.
Invariant parse_invariant(std::string_view id);
std::string_view invariant_name(Invariant inv);
double invariant_value(const CurveRecord &rec, Invariant inv);

} // namespace murm
