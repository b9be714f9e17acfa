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

#include "murm/trace_engine.hpp"

#include <cstdint>
#include <string>

namespace murm {

/// On-disk layout, all integers little-endian:
///   "MURM" | u32 version | u64 curves | u32 primes | u32 prime[primes]
///   | labels (u32 byte length + UTF-8 bytes each)
///   | i16 trace[curves * primes] row-major
///   | bad-flag bitset, bit (row * primes + col) at byte bit/8, LSB first.
inline constexpr std::uint32_t kTraceCacheVersion = 1;

/// Throws Error if the file cannot be written.
void persist_trace_matrix(const TraceMatrix &matrix, const std::string &path);

/// Throws FormatError on a bad magic or version and CorruptionError on a
/// truncated or inconsistent file.
TraceMatrix load_trace_matrix(const std::string &path);

} // namespace murm
