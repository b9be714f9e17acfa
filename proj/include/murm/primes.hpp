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

#include <cstdint>
#include <span>
#include <vector>

namespace murm {

bool is_prime(std::uint64_t n);

/// All primes <= limit, ascending.
std::vector<std::uint32_t> primes_up_to(std::uint32_t limit);

/// Strictly increasing list of primes shared by every row of a trace matrix.
class PrimeList {
public:
  PrimeList() = default;
  /// Throws ArgumentError unless `primes` is a strictly increasing list of primes.
  explicit PrimeList(std::vector<std::uint32_t> primes);

  /// The first `count` primes; the default 500 ends at 3571.
  static PrimeList first(std::size_t count = 500);

  std::span<const std::uint32_t> values() const { return primes_; }
  std::size_t size() const { return primes_.size(); }
  bool empty() const { return primes_.empty(); }
  std::uint32_t operator[](std::size_t i) const { return primes_[i]; }
  /// Column of `p`, or -1.
  std::ptrdiff_t index_of(std::uint32_t p) const;

  friend bool operator==(const PrimeList &, const PrimeList &) = default;

private:
  std::vector<std::uint32_t> primes_;
};

} // namespace murm
