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

#include "murm/primes.hpp"

#include "murm/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace murm {

bool is_prime(std::uint64_t n) {
  if (n < 2)
    return false;
  if (n % 2 == 0)
    return n == 2;
  if (n % 3 == 0)
    return n == 3;
  for (std::uint64_t d = 5; d * d <= n; d += 6)
    if (n % d == 0 || n % (d + 2) == 0)
      return false;
  return true;
}

std::vector<std::uint32_t> primes_up_to(std::uint32_t limit) {
  std::vector<std::uint32_t> out;
  if (limit < 2)
    return out;
  std::vector<bool> composite(static_cast<std::size_t>(limit) + 1, false);
  for (std::uint64_t i = 2; i <= limit; ++i) {
    if (composite[i])
      continue;
    out.push_back(static_cast<std::uint32_t>(i));
    for (std::uint64_t j = i * i; j <= limit; j += i)
      composite[j] = true;
  }
  return out;
}

PrimeList::PrimeList(std::vector<std::uint32_t> primes) : primes_(std::move(primes)) {
  for (std::size_t i = 0; i < primes_.size(); ++i) {
    if (!is_prime(primes_[i]))
      throw ArgumentError(std::to_string(primes_[i]) + " is not prime");
    if (i > 0 && primes_[i] <= primes_[i - 1])
      throw ArgumentError("prime list is not strictly increasing");
  }
}

PrimeList PrimeList::first(std::size_t count) {
  if (count == 0)
    return {};
  // p_n < n (ln n + ln ln n) for n >= 6
  const double n = static_cast<double>(std::max<std::size_t>(count, 6));
  const auto bound = static_cast<std::uint32_t>(n * (std::log(n) + std::log(std::log(n)))) + 1;
  auto all = primes_up_to(bound);
  all.resize(count);
  return PrimeList(std::move(all));
}

std::ptrdiff_t PrimeList::index_of(std::uint32_t p) const {
  auto it = std::lower_bound(primes_.begin(), primes_.end(), p);
  if (it == primes_.end() || *it != p)
    return -1;
  return it - primes_.begin();
}

} // namespace murm
