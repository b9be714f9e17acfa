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

#include "murm/trace_cache.hpp"

#include "murm/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace murm {

namespace {

constexpr char kMagic[4] = {'M', 'U', 'R', 'M'};

template <class T> void put(std::ofstream &out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(v) >> (8 * i));
  out.write(reinterpret_cast<const char *>(buf), sizeof buf);
}

class Reader {
public:
  explicit Reader(const std::string &path) : in_(path, std::ios::binary) {
    if (!in_)
      throw Error("cannot open trace cache " + path);
  }

  void bytes(void *dst, std::size_t n) {
    in_.read(static_cast<char *>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw CorruptionError("trace cache is truncated");
  }

  template <class T> T get() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof buf);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
  }

  bool at_end() { return in_.peek() == std::ifstream::traits_type::eof(); }

private:
  std::ifstream in_;
};

} // namespace

void persist_trace_matrix(const TraceMatrix &matrix, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write trace cache " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kTraceCacheVersion);
  put<std::uint64_t>(out, matrix.rows());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.cols()));
  for (auto p : matrix.primes().values())
    put<std::uint32_t>(out, p);
  for (const auto &label : matrix.labels()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(label.size()));
    out.write(label.data(), static_cast<std::streamsize>(label.size()));
  }
  const auto traces = matrix.trace_data();
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char *>(traces.data()),
              static_cast<std::streamsize>(traces.size_bytes()));
  } else {
    for (auto v : traces)
      put<std::uint16_t>(out, static_cast<std::uint16_t>(v));
  }
  const auto bits = matrix.bad_bits();
  out.write(reinterpret_cast<const char *>(bits.data()),
            static_cast<std::streamsize>(bits.size()));
  if (!out.flush())
    throw Error("write failed for trace cache " + path);
}

TraceMatrix load_trace_matrix(const std::string &path) {
  Reader in(path);
  char magic[4];
  try {
    in.bytes(magic, 4);
  } catch (const CorruptionError &) {
    throw FormatError("not a trace cache (too short for magic): " + path);
  }
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a trace cache (bad magic): " + path);
  const auto version = in.get<std::uint32_t>();
  if (version != kTraceCacheVersion)
    throw FormatError("unsupported trace cache version " + std::to_string(version));
  const auto n = in.get<std::uint64_t>();
  const auto k = in.get<std::uint32_t>();
  std::vector<std::uint32_t> primes(k);
  for (auto &p : primes)
    p = in.get<std::uint32_t>();
  std::vector<std::string> labels;
  // A corrupt count must not trigger a huge allocation before the data runs out.
  labels.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20)));
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = in.get<std::uint32_t>();
    if (len > 4096)
      throw CorruptionError("implausible label length in trace cache");
    std::string label(len, '\0');
    in.bytes(label.data(), len);
    labels.push_back(std::move(label));
  }
  PrimeList plist;
  try {
    plist = PrimeList(std::move(primes));
  } catch (const ArgumentError &e) {
    throw CorruptionError(std::string("trace cache prime list: ") + e.what());
  }
  TraceMatrix out;
  try {
    out = TraceMatrix(std::move(labels), std::move(plist));
  } catch (const DataError &e) {
    throw CorruptionError(std::string("trace cache labels: ") + e.what());
  }
  auto traces = out.mutable_trace_data();
  in.bytes(traces.data(), traces.size_bytes());
  if constexpr (std::endian::native != std::endian::little) {
    for (auto &v : traces) {
      const auto u = static_cast<std::uint16_t>(v);
      v = static_cast<std::int16_t>((u >> 8) | (u << 8));
    }
  }
  auto bits = out.mutable_bad_bits();
  in.bytes(bits.data(), bits.size());
  const std::size_t used = traces.size() & 7;
  if (used != 0 && !bits.empty() && (bits.back() >> used) != 0)
    throw CorruptionError("trace cache has stray bits past the last flag");
  if (!in.at_end())
    throw CorruptionError("trailing bytes after trace cache payload");
  return out;
}

} // namespace murm
