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

#include "murm/orchestrator.hpp"

#include "murm/descriptive.hpp"
#include "murm/diagnostics.hpp"
#include "murm/error.hpp"
#include "murm/lfunction.hpp"
#include "murm/murmuration.hpp"
#include "murm/trace_cache.hpp"
#include "murm/zero_stats.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace murm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- config

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::vector<std::string> &values) {
  std::vector<std::string> out;
  for (const auto &v : values) {
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
      if (auto t = trim(item); !t.empty())
        out.push_back(std::move(t));
  }
  return out;
}

const std::string &single(const std::string &key, const std::vector<std::string> &values) {
  if (values.size() != 1)
    throw ArgumentError("'" + key + "' takes one value");
  return values.front();
}

double to_double(const std::string &key, const std::string &text) {
  char *end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
    throw ArgumentError("'" + key + "' expects a number, got '" + text + "'");
  return v;
}

std::uint64_t to_uint(const std::string &key, const std::string &text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw ArgumentError("'" + key + "' expects a nonnegative integer, got '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::exception &) {
    throw ArgumentError("'" + key + "' is out of range: " + text);
  }
}

std::pair<std::string, std::string> split_pair(const std::string &key, const std::string &text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ArgumentError("'" + key + "' expects LO:HI, got '" + text + "'");
  return {trim(text.substr(0, colon)), trim(text.substr(colon + 1))};
}

bool to_bool(const std::string &key, const std::string &text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on")
    return true;
  if (text == "0" || text == "false" || text == "no" || text == "off")
    return false;
  throw ArgumentError("'" + key + "' expects true or false, got '" + text + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

ConfigMap parse_config(std::istream &in) {
  ConfigMap out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const auto t = trim(line);
    if (t.empty())
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(n, "expected key=value");
    const auto key = trim(t.substr(0, eq));
    if (key.empty())
      throw ParseError(n, "empty key");
    out[key].push_back(trim(t.substr(eq + 1)));
  }
  return out;
}

RunConfig resolve_config(const ConfigMap &file, const ConfigMap &flags) {
  ConfigMap merged = file;
  for (const auto &[k, v] : flags)
    merged[k] = v;

  RunConfig c;
  for (const auto &[key, values] : merged) {
    if (values.empty())
      continue;
    if (key == "curves") {
      c.curves = single(key, values);
    } else if (key == "cache") {
      c.cache = single(key, values);
    } else if (key == "zeros") {
      c.zeros = single(key, values);
    } else if (key == "primes") {
      c.primes = to_uint(key, single(key, values));
      if (c.primes == 0)
        throw ArgumentError("'primes' must be positive");
    } else if (key == "window") {
      c.window = to_double(key, single(key, values));
    } else if (key == "step") {
      c.step = to_double(key, single(key, values));
    } else if (key == "range") {
      c.ranges.clear();
      for (const auto &item : split_list(values)) {
        const auto [lo, hi] = split_pair(key, item);
        const auto a = to_uint(key, lo), b = to_uint(key, hi);
        if (a > b || b > UINT32_MAX)
          throw ArgumentError("bad conductor range " + item);
        c.ranges.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
      }
    } else if (key == "rule") {
      c.rules = split_list(values);
      for (const auto &r : c.rules)
        StratRule::named(r); // validates
    } else if (key == "band") {
      c.bands.clear();
      for (const auto &item : split_list(values)) {
        const auto [lo, hi] = split_pair(key, item);
        const Band b{to_double(key, lo), to_double(key, hi)};
        if (!(b.lo < b.hi))
          throw ArgumentError("band " + item + " needs LO < HI");
        c.bands.push_back(b);
      }
    } else if (key == "shuffles") {
      c.shuffles = to_uint(key, single(key, values));
    } else if (key == "seed") {
      c.seed = to_uint(key, single(key, values));
    } else if (key == "threads") {
      c.threads = static_cast<unsigned>(to_uint(key, single(key, values)));
    } else if (key == "out") {
      c.out = single(key, values);
    } else if (key == "svg") {
      c.svg = to_bool(key, single(key, values));
    } else if (key == "zero_sample") {
      c.zero_sample = to_uint(key, single(key, values));
    } else if (key == "t_max") {
      c.t_max = to_double(key, single(key, values));
    } else {
      throw ArgumentError("unknown setting '" + key + "'");
    }
  }
  if (!(c.window > 0.0) || !(c.step > 0.0))
    throw ArgumentError("window and step must be positive");
  if (c.ranges.empty() || c.rules.empty() || c.bands.empty())
    throw ArgumentError("range, rule and band lists must not be empty");
  if (!(c.t_max > 0.0) || c.t_max > max_height)
    throw ArgumentError("t_max must lie in (0, " + fmt(max_height) + "]");
  return c;
}

std::string canonical_config(const RunConfig &c) {
  std::ostringstream s;
  auto list = [&](auto &&items, auto &&render) {
    std::string out;
    for (const auto &x : items)
      out += (out.empty() ? "" : ",") + render(x);
    return out;
  };
  s << "band=" << list(c.bands, [](const Band &b) { return fmt(b.lo) + ":" + fmt(b.hi); }) << '\n';
  s << "cache=" << c.cache.value_or("") << '\n';
  s << "curves=" << c.curves << '\n';
  s << "primes=" << c.primes << '\n';
  s << "range="
    << list(c.ranges, [](const ConductorRange &r) {
         return std::to_string(r.first) + ":" + std::to_string(r.second);
       })
    << '\n';
  s << "rule=" << list(c.rules, [](const std::string &r) { return r; }) << '\n';
  s << "seed=" << c.seed << '\n';
  s << "shuffles=" << c.shuffles << '\n';
  s << "step=" << fmt(c.step) << '\n';
  s << "t_max=" << fmt(c.t_max) << '\n';
  s << "window=" << fmt(c.window) << '\n';
  s << "zero_sample=" << c.zero_sample << '\n';
  s << "zeros=" << c.zeros.value_or("") << '\n';
  return s.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string config_hash(const RunConfig &cfg) { return sha256_hex(canonical_config(cfg)); }

std::string file_sha256(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0)
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string table_digest(const CurveTable &table) {
  std::ostringstream s;
  write_curve_table(s, table);
  return sha256_hex(s.str());
}

// ---------------------------------------------------------------- outputs

namespace {

json opt(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

json to_json(const StratReport &r) {
  return {{"rule", r.rule},
          {"groups", r.group_names},
          {"group_sizes", r.group_sizes},
          {"observed_rms", r.observed_rms},
          {"null_mean", r.null_mean},
          {"null_sd", r.null_sd},
          {"null_median", r.null_median},
          {"null_exceed", r.null_exceed},
          {"p_value", r.p_value},
          {"n_shuffles", r.n_shuffles},
          {"seed", r.seed},
          {"low_shuffle_warning", r.low_shuffle_warning}};
}

json to_json(const KsResult &k) {
  return {{"d", k.d}, {"p_value", k.p_value}, {"n_a", k.n_a}, {"n_b", k.n_b}};
}

json error_json(const std::exception &e) {
  std::string type = "Error";
  if (dynamic_cast<const ArgumentError *>(&e))
    type = "ArgumentError";
  else if (dynamic_cast<const ParseError *>(&e))
    type = "ParseError";
  else if (dynamic_cast<const DataError *>(&e))
    type = "DataError";
  else if (dynamic_cast<const FormatError *>(&e))
    type = "FormatError";
  else if (dynamic_cast<const CorruptionError *>(&e))
    type = "CorruptionError";
  else if (dynamic_cast<const NumericalError *>(&e))
    type = "NumericalError";
  else if (!dynamic_cast<const Error *>(&e))
    type = "InternalError";
  return {{"type", type}, {"message", e.what()}};
}

// Runs `f`, returning its JSON or {"error": ...} so one failed analysis does
// not hide the others.
template <class F> json attempt(F &&f) {
  try {
    return f();
  } catch (const Error &e) {
    return {{"error", error_json(e)}};
  }
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw Error("cannot write " + path.string());
}

std::string csv_cell(double v) {
  if (!std::isfinite(v))
    return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Numeric CSV; columns must share a length.
void write_columns(const fs::path &path, const std::vector<std::string> &names,
                   const std::vector<std::vector<double>> &cols) {
  std::ostringstream s;
  for (std::size_t j = 0; j < names.size(); ++j)
    s << (j ? "," : "") << names[j];
  s << '\n';
  const std::size_t n = cols.empty() ? 0 : cols.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j)
      s << (j ? "," : "") << csv_cell(cols[j][i]);
    s << '\n';
  }
  write_text(path, s.str());
}

/// Line plot of a numeric CSV: first column on x, the others as series.
void plot_csv(const fs::path &csv, const fs::path &svg) {
  std::ifstream in(csv);
  std::string line;
  if (!std::getline(in, line))
    return;
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      names.push_back(cell);
  }
  if (names.size() < 2)
    return;
  std::vector<std::vector<double>> cols(names.size());
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (!std::getline(ss, cell, ','))
        cell.clear();
      cols[j].push_back(cell.empty() ? NAN : std::strtod(cell.c_str(), nullptr));
    }
  }
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (std::size_t i = 0; i < cols[0].size(); ++i)
    for (std::size_t j = 1; j < cols.size(); ++j)
      if (std::isfinite(cols[0][i]) && std::isfinite(cols[j][i])) {
        x0 = std::min(x0, cols[0][i]);
        x1 = std::max(x1, cols[0][i]);
        y0 = std::min(y0, cols[j][i]);
        y1 = std::max(y1, cols[j][i]);
      }
  if (!(x1 > x0))
    x1 = x0 + 1;
  if (!(y1 > y0))
    y1 = y0 + 1;
  constexpr double W = 800, H = 480, L = 70, R = 20, T = 30, B = 50;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << csv.stem().string() << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  if (y0 < 0 && y1 > 0)
    s << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << W - R << "\" y2=\"" << py(0)
      << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  s << "<text x=\"" << L << "\" y=\"" << H - 30 << "\" font-size=\"11\">" << csv_cell(x0)
    << "</text><text x=\"" << W - R - 60 << "\" y=\"" << H - 30 << "\" font-size=\"11\">"
    << csv_cell(x1) << "</text>\n";
  s << "<text x=\"4\" y=\"" << T + 10 << "\" font-size=\"11\">" << csv_cell(y1)
    << "</text><text x=\"4\" y=\"" << H - B << "\" font-size=\"11\">" << csv_cell(y0) << "</text>\n";
  s << "<text x=\"" << L << "\" y=\"" << H - 10 << "\" font-size=\"12\">" << names[0] << "</text>\n";
  for (std::size_t j = 1; j < cols.size(); ++j) {
    const char *color = colors[(j - 1) % 6];
    s << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < cols[0].size(); ++i)
      if (std::isfinite(cols[0][i]) && std::isfinite(cols[j][i]))
        s << px(cols[0][i]) << ',' << py(cols[j][i]) << ' ';
    s << "\"/>\n";
    s << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 14 * j << "\" font-size=\"11\" fill=\""
      << color << "\">" << names[j] << "</text>\n";
  }
  s << "</svg>\n";
  write_text(svg, s.str());
}

std::string range_tag(const ConductorRange &r) {
  return std::to_string(r.first) + "_" + std::to_string(r.second);
}

// ---------------------------------------------------------------- run state

class Run {
public:
  Run(std::string sub, const RunConfig &cfg, std::ostream &log)
      : sub_(std::move(sub)), cfg_(cfg), log_(log), out_(cfg.out) {}

  const RunConfig &cfg() const { return cfg_; }
  std::ostream &log() { return log_; }

  PermutationParams perm() const { return {cfg_.shuffles, cfg_.seed, cfg_.threads}; }

  void check_inputs(bool cache_may_be_missing) {
    if (cfg_.curves.empty())
      throw ArgumentError("no curves file given (--curves)");
    if (!fs::exists(cfg_.curves))
      throw ArgumentError("curves file " + cfg_.curves + " does not exist");
    if (cfg_.cache && !cache_may_be_missing && !fs::exists(*cfg_.cache))
      throw ArgumentError("trace cache " + *cfg_.cache + " does not exist");
    if (cfg_.zeros && !fs::exists(*cfg_.zeros))
      throw ArgumentError("zeros file " + *cfg_.zeros + " does not exist");
    fs::create_directories(out_);
  }

  const IngestResult &ingest() {
    if (!ingest_) {
      inputs_["curves"] = {{"path", cfg_.curves}, {"sha256", file_sha256(cfg_.curves)}};
      if (fs::file_size(cfg_.curves) == 0)
        ingest_ = IngestResult{};
      else
        ingest_ = load_curve_table(cfg_.curves);
      log_ << "ingested " << ingest_->table.size() << " curves from " << cfg_.curves << '\n';
    }
    return *ingest_;
  }

  const CurveTable &table() { return ingest().table; }

  /// Curves of the given ranks with conductor in `r`.
  CurveTable slice(const ConductorRange &r, std::initializer_list<int> ranks) {
    std::set<int> keep(ranks);
    return table().filter([&](const CurveRecord &c) {
      return c.conductor >= r.first && c.conductor <= r.second && keep.count(c.rank) > 0;
    });
  }

  PrimeList primes() const { return PrimeList::first(cfg_.primes); }

  /// Trace matrix covering `needed`: the cache when one is configured (after
  /// the coherence check), otherwise built on the spot.
  const TraceMatrix &matrix(const CurveTable &needed) {
    if (matrix_)
      return *matrix_;
    if (cfg_.cache) {
      matrix_ = load_coherent_cache();
    } else {
      log_ << "building traces for " << needed.size() << " curves x " << cfg_.primes
           << " primes\n";
      matrix_ = build_trace_matrix(needed, primes(), cfg_.threads);
    }
    return *matrix_;
  }

  TraceMatrix load_coherent_cache() {
    const auto &path = *cfg_.cache;
    const auto digest = table_digest(table());
    const auto recorded = read_sidecar(path);
    if (recorded != digest)
      throw DataError("trace cache " + path + " was built from different curves (cache digest " +
                      (recorded.empty() ? "missing" : recorded) + ", curves digest " + digest +
                      "); rebuild it with 'traces'");
    auto m = load_trace_matrix(path);
    if (m.primes() != primes())
      throw DataError("trace cache " + path + " holds " + std::to_string(m.primes().size()) +
                      " primes, the run asks for " + std::to_string(cfg_.primes));
    inputs_["cache"] = {{"path", path}, {"sha256", file_sha256(path)}, {"curve_digest", digest}};
    log_ << "loaded trace cache " << path << '\n';
    return m;
  }

  static std::string sidecar(const std::string &cache) { return cache + ".digest"; }

  static std::string read_sidecar(const std::string &cache) {
    std::ifstream in(sidecar(cache));
    std::string d;
    in >> d;
    return d;
  }

  void note_input(const std::string &key, const std::string &path) {
    inputs_[key] = {{"path", path}, {"sha256", file_sha256(path)}};
  }

  void csv(const std::string &name, const std::vector<std::string> &header,
           const std::vector<std::vector<double>> &cols) {
    const auto path = out_ / (name + ".csv");
    write_columns(path, header, cols);
    if (cfg_.svg)
      plot_csv(path, out_ / (name + ".svg"));
    files_.push_back(path.filename().string());
  }

  void text_file(const std::string &name, const std::string &text) {
    write_text(out_ / name, text);
    files_.push_back(name);
  }

  json envelope(json results) const {
    json config = {{"curves", cfg_.curves},
                   {"cache", cfg_.cache ? json(*cfg_.cache) : json(nullptr)},
                   {"zeros", cfg_.zeros ? json(*cfg_.zeros) : json(nullptr)},
                   {"primes", cfg_.primes},
                   {"window", cfg_.window},
                   {"step", cfg_.step},
                   {"ranges", json::array()},
                   {"rules", cfg_.rules},
                   {"bands", json::array()},
                   {"shuffles", cfg_.shuffles},
                   {"seed", cfg_.seed},
                   {"zero_sample", cfg_.zero_sample},
                   {"t_max", cfg_.t_max}};
    for (const auto &r : cfg_.ranges)
      config["ranges"].push_back({r.first, r.second});
    for (const auto &b : cfg_.bands)
      config["bands"].push_back({b.lo, b.hi});
    return {{"subcommand", sub_},
            {"config_hash", config_hash(cfg_)},
            {"seed", cfg_.seed},
            {"config", config},
            {"inputs", inputs_},
            {"results", std::move(results)},
            {"files", files_}};
  }

  void finish(json results) {
    write_text(out_ / (sub_ + ".json"), envelope(std::move(results)).dump(2) + "\n");
  }

  fs::path out_dir() const { return out_; }

private:
  std::string sub_;
  const RunConfig &cfg_;
  std::ostream &log_;
  fs::path out_;
  json inputs_ = json::object();
  std::vector<std::string> files_;
  std::optional<IngestResult> ingest_;
  std::optional<TraceMatrix> matrix_;
};

CurveTable union_of(const std::vector<CurveTable> &parts) {
  std::vector<CurveRecord> all;
  std::set<std::string> seen;
  for (const auto &t : parts)
    for (const auto &r : t.records())
      if (seen.insert(r.label).second)
        all.push_back(r);
  return CurveTable(std::move(all));
}

std::vector<double> as_double(std::span<const std::uint32_t> v) {
  return {v.begin(), v.end()};
}

std::vector<double> difference(const MurmurationProfile &a, const MurmurationProfile &b) {
  std::vector<double> d(a.mean_ap.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = a.mean_ap[i] - b.mean_ap[i];
  return d;
}

/// Matrix rows of the members of each group.
std::vector<std::vector<std::size_t>> group_rows(const CurveTable &t, const Partition &part,
                                                 const TraceMatrix &m) {
  const auto rows = rows_for(m, t);
  std::vector<std::vector<std::size_t>> out;
  for (const auto &members : part.members) {
    out.emplace_back();
    for (auto i : members)
      out.back().push_back(rows[i]);
  }
  return out;
}

/// Index of the group named `name` in `part`.
std::size_t group_index(const Partition &part, const std::string &name) {
  const auto it = std::find(part.names.begin(), part.names.end(), name);
  if (it == part.names.end())
    throw DataError("partition has no group " + name);
  return static_cast<std::size_t>(it - part.names.begin());
}

std::vector<CurveRecord> members(const CurveTable &t, const std::vector<std::size_t> &idx) {
  std::vector<CurveRecord> out;
  out.reserve(idx.size());
  for (auto i : idx)
    out.push_back(t[i]);
  return out;
}

// Sha rule group names; the difference profiles are always taken
// (Sha >= 4) minus (Sha = 1).
constexpr const char *kShaHigh = "sha>=4";
constexpr const char *kShaOne = "sha=1";

} // namespace

// ---------------------------------------------------------------- subcommands

namespace {

json cmd_ingest(Run &run) {
  const auto &in = run.ingest();
  const auto &t = in.table;
  json issues = json::array();
  for (std::size_t i = 0; i < in.issues.size() && i < 100; ++i)
    issues.push_back({{"line", in.issues[i].line},
                      {"label", in.issues[i].label},
                      {"message", in.issues[i].message}});
  std::map<std::string, std::size_t> ranks;
  std::size_t rank0 = 0, bsd_bad = 0;
  double worst = 0.0;
  for (const auto &r : t.records()) {
    ++ranks[std::to_string(r.rank)];
    if (r.rank == 0) {
      ++rank0;
      const double res = validate_bsd_residual(r);
      worst = std::max(worst, res);
      bsd_bad += res > 1e-3;
    }
  }
  const auto dd = dedupe_isogeny(t);
  return {{"rows_read", in.rows_read},
          {"curves", t.size()},
          {"rejected_rows", in.issues.size()},
          {"issues", issues},
          {"rank_counts", ranks},
          {"conductor_min", t.empty() ? 0u : t[0].conductor},
          {"conductor_max", t.empty() ? 0u : t[t.size() - 1].conductor},
          {"isogeny_classes", t.classes().size()},
          {"dedupe", {{"total", dd.total}, {"retained", dd.retained}, {"ratio", dd.retained_ratio()}}},
          {"bsd", {{"rank0_curves", rank0}, {"max_relative_residual", worst}, {"above_1e-3", bsd_bad}}}};
}

json cmd_traces(Run &run) {
  const auto &cfg = run.cfg();
  if (!cfg.cache)
    throw ArgumentError("traces needs a cache path (--cache)");
  const auto &path = *cfg.cache;
  const auto &table = run.table();
  const auto digest = table_digest(table);
  std::string status;
  std::optional<TraceMatrix> m;
  if (fs::exists(path)) {
    const auto recorded = Run::read_sidecar(path);
    if (recorded != digest)
      throw DataError("refusing trace cache " + path + ": it was built from different curves (" +
                      (recorded.empty() ? std::string("no digest recorded") : "digest " + recorded) +
                      ", ingested table " + digest + ")");
    auto loaded = load_trace_matrix(path);
    if (loaded.primes() == run.primes()) {
      status = "reused";
      m = std::move(loaded);
    } else {
      status = "refreshed";
    }
  } else {
    status = "built";
  }
  if (!m) {
    run.log() << "building traces for " << table.size() << " curves x " << cfg.primes << " primes\n";
    m = build_trace_matrix(table, run.primes(), cfg.threads);
    persist_trace_matrix(*m, path);
    write_text(Run::sidecar(path), digest + "\n");
  }
  std::size_t bad = 0, violations = 0;
  for (std::size_t i = 0; i < m->rows(); ++i)
    for (std::size_t j = 0; j < m->cols(); ++j) {
      if (m->is_bad(i, j)) {
        ++bad;
        continue;
      }
      const double a = m->at(i, j);
      violations += a * a > 4.0 * m->primes()[j];
    }
  if (violations)
    throw DataError(std::to_string(violations) + " good entries violate the Hasse bound");
  run.note_input("cache", path);
  return {{"status", status},
          {"curves", m->rows()},
          {"primes", m->cols()},
          {"largest_prime", m->cols() ? m->primes()[m->cols() - 1] : 0u},
          {"bad_entries", bad},
          {"hasse_violations", violations},
          {"curve_digest", digest}};
}

json cmd_windows(Run &run) {
  const auto &cfg = run.cfg();
  const auto &table = run.table();
  WindowParams wp;
  wp.width = cfg.window;
  wp.step = cfg.step;
  // One grid for both ranks so the residual series line up.
  std::optional<std::uint32_t> lo, hi;
  for (const auto &r : table.records())
    if (r.rank == 0 || r.rank == 1) {
      lo = std::min(lo.value_or(r.conductor), r.conductor);
      hi = std::max(hi.value_or(r.conductor), r.conductor);
    }
  if (lo) {
    wp.first_center = *lo + wp.width / 2.0;
    wp.last_center = *hi - wp.width / 2.0;
  }
  json per_inv = json::object();
  for (auto inv : {Invariant::period, Invariant::regulator, Invariant::sha, Invariant::tamagawa,
                   Invariant::torsion, Invariant::l_value}) {
    const std::string name(invariant_name(inv));
    per_inv[name] = attempt([&]() -> json {
      const auto s0 = sliding_window_series(table, inv, 0, wp);
      const auto s1 = sliding_window_series(table, inv, 1, wp);
      std::vector<double> v0, v1, n0, n1;
      for (std::size_t i = 0; i < s0.centers.size(); ++i) {
        v0.push_back(s0.values[i].value_or(NAN));
        n0.push_back(double(s0.counts[i]));
      }
      for (std::size_t i = 0; i < s1.centers.size(); ++i) {
        v1.push_back(s1.values[i].value_or(NAN));
        n1.push_back(double(s1.counts[i]));
      }
      if (s0.centers == s1.centers)
        run.csv("windows_" + name, {"center", "rank0", "rank0_n", "rank1", "rank1_n"},
                {s0.centers, v0, n0, v1, n1});
      json j = {{"rank0_windows", s0.centers.size()}, {"rank1_windows", s1.centers.size()}};
      j["residuals"] = attempt([&]() -> json {
        const auto d0 = savgol_detrend(s0), d1 = savgol_detrend(s1);
        json r = {{"points", std::min(d0.x.size(), d1.x.size())},
                  {"correlation", residual_correlation(d0, d1)}};
        // Segment: the largest power of two up to half the residual length.
        std::size_t seg = 8;
        while (seg * 4 <= d0.y.size())
          seg *= 2;
        const auto psd = welch_psd(d0.y, {seg, 0.5, true});
        run.csv("psd_" + name + "_rank0", {"frequency", "power"}, {psd.frequency, psd.power});
        const auto peak = std::max_element(psd.power.begin() + 1, psd.power.end()) - psd.power.begin();
        r["psd"] = {{"segment", seg}, {"segments", psd.segments}, {"peak_frequency", psd.frequency[peak]}};
        return r;
      });
      return j;
    });
  }

  std::vector<CurveTable> slices;
  for (const auto &r : cfg.ranges)
    slices.push_back(run.slice(r, {0, 1}));
  const auto needed = union_of(slices);
  json profiles = json::array();
  if (!needed.empty()) {
    const auto &m = run.matrix(needed);
    for (std::size_t k = 0; k < cfg.ranges.size(); ++k) {
      const auto &r = cfg.ranges[k];
      profiles.push_back(attempt([&]() -> json {
        const auto t0 = run.slice(r, {0}), t1 = run.slice(r, {1});
        if (t0.empty() || t1.empty())
          throw DataError("range " + range_tag(r) + " lacks rank-0 or rank-1 curves");
        const auto r0 = rows_for(m, t0), r1 = rows_for(m, t1);
        const auto p0 = murmuration_profile(r0, m), p1 = murmuration_profile(r1, m);
        run.csv("profile_rank_" + range_tag(r), {"prime", "rank0", "rank1"},
                {as_double(p0.primes.values()), p0.mean_ap, p1.mean_ap});
        return json{{"range", {r.first, r.second}},
                    {"n_rank0", t0.size()},
                    {"n_rank1", t1.size()},
                    {"correlation", pearson(p0.mean_ap, p1.mean_ap)}};
      }));
    }
  }
  return {{"window", cfg.window}, {"step", cfg.step}, {"invariants", per_inv}, {"rank_profiles", profiles}};
}

CurveTable rule_slice(Run &run, const ConductorRange &r, const std::string &rule) {
  return rule == "root_number" ? run.slice(r, {0, 1}) : run.slice(r, {0});
}

json cmd_stratify(Run &run) {
  const auto &cfg = run.cfg();
  std::vector<CurveTable> parts;
  for (const auto &r : cfg.ranges)
    for (const auto &rule : cfg.rules)
      parts.push_back(rule_slice(run, r, rule));
  for (const auto &w : default_scale_windows())
    parts.push_back(run.slice(w, {0, 1}));
  const auto needed = union_of(parts);
  if (needed.empty())
    throw DataError("no curves in the requested ranges");
  const auto &m = run.matrix(needed);

  json ranges = json::array();
  std::vector<double> pvals;
  std::vector<std::pair<std::size_t, std::string>> tested;
  for (std::size_t k = 0; k < cfg.ranges.size(); ++k) {
    const auto &r = cfg.ranges[k];
    json rules = json::object();
    for (const auto &id : cfg.rules) {
      rules[id] = attempt([&]() -> json {
        const auto slice = rule_slice(run, r, id);
        const auto rule = StratRule::named(id);
        run.log() << "stratify " << id << " on " << range_tag(r) << " (" << slice.size() << " curves)\n";
        const auto rep = stratify(slice, m, rule, run.perm());
        const auto part = partition(slice, rule);
        const auto profiles = group_profiles(slice, m, part);
        std::vector<std::string> header = {"prime"};
        std::vector<std::vector<double>> cols = {as_double(m.primes().values())};
        for (std::size_t g = 0; g < profiles.size(); ++g) {
          header.push_back(part.names[g]);
          cols.push_back(profiles[g].mean_ap);
        }
        run.csv("strat_" + id + "_" + range_tag(r), header, cols);
        pvals.push_back(rep.p_value);
        tested.emplace_back(k, id);
        return to_json(rep);
      });
    }
    ranges.push_back({{"range", {r.first, r.second}}, {"rules", rules}});
  }
  const auto bf = bonferroni(pvals);
  json bonf = {{"alpha", 0.001}, {"threshold", bf.threshold}, {"significant", json::array()}};
  for (std::size_t i = 0; i < tested.size(); ++i)
    if (bf.significant[i])
      bonf["significant"].push_back(range_tag(cfg.ranges[tested[i].first]) + ":" + tested[i].second);

  json scans = json::object();
  for (const auto &id : cfg.rules) {
    scans[id] = attempt([&]() -> json {
      const auto base = id == "root_number"
                            ? run.table().filter([](const CurveRecord &c) { return c.rank <= 1; })
                            : run.table().filter([](const CurveRecord &c) { return c.rank == 0; });
      const auto scan = scale_scan(base, m, StratRule::named(id), default_scale_windows());
      json w = json::array();
      for (std::size_t i = 0; i < scan.windows.size(); ++i)
        w.push_back({{"range", {scan.windows[i].first, scan.windows[i].second}},
                     {"center", scan.centers[i]},
                     {"rms", scan.rms[i]},
                     {"group_sizes", scan.group_sizes[i]}});
      return json{{"windows", w},
                  {"alpha", scan.fit.alpha},
                  {"alpha_stderr", scan.fit.alpha_stderr},
                  {"r_squared", scan.fit.r_squared}};
    });
  }
  return {{"ranges", ranges}, {"bonferroni", bonf}, {"scale_scan", scans}};
}

json matched_block(const MatchedPairs &pairs, const TraceMatrix &m, const PermutationParams &perm) {
  json j = {{"pairs", pairs.pairs.size()},
            {"max_distance", pairs.max_distance},
            {"mean_distance", pairs.mean_distance}};
  j["rms_group"] = matched_rms(pairs, m, PairedRmsMode::group);
  j["rms_per_pair"] = matched_rms(pairs, m, PairedRmsMode::per_pair);
  j["permutation"] = to_json(matched_permutation_test(pairs, m, perm));
  return j;
}

json cmd_confound(Run &run) {
  const auto &cfg = run.cfg();
  const auto range = cfg.ranges.front();
  const auto band = cfg.bands.front();
  const std::vector<ConductorRange> narrow = {{15000, 25000}, {25000, 40000}, {40000, 60000}, {60000, 90000}};
  const auto slice = run.slice(range, {0});
  if (slice.empty())
    throw DataError("no rank-0 curves in " + range_tag(range));
  std::vector<CurveTable> parts = {slice};
  for (const auto &w : narrow)
    parts.push_back(run.slice(w, {0}));
  const auto &m = run.matrix(union_of(parts));
  const auto tam = StratRule::named("tamagawa");
  const auto sha = StratRule::named("sha");
  const auto perm = run.perm();
  json out = {{"range", {range.first, range.second}}, {"band", {band.lo, band.hi}}};
  json summary = json::array();
  auto add = [&](const std::string &test, const json &rep) {
    if (rep.contains("error"))
      return;
    summary.push_back({{"test", test},
                       {"rms", rep["observed_rms"]},
                       {"p_value", rep["p_value"]},
                       {"survives", rep["p_value"].get<double>() < 0.001}});
  };

  // Test 1: fixed number of bad primes.
  json t1 = json::object();
  for (unsigned k = 1; k <= 4; ++k) {
    t1["omega=" + std::to_string(k)] = attempt([&] { return to_json(control_omega(slice, m, tam, k, perm)); });
    add("omega=" + std::to_string(k), t1["omega=" + std::to_string(k)]);
  }
  out["test1_omega"] = t1;

  // Test 2: conductor matching of the Tamagawa groups.
  out["test2_conductor_matching"] = attempt([&]() -> json {
    const auto part = partition(slice, tam);
    auto a = members(slice, part.members[0]), b = members(slice, part.members[1]);
    if (a.size() > b.size())
      std::swap(a, b);
    auto j = matched_block(match_nn(a, b, MatchKey::conductor, 500.0), m, perm);
    add("conductor_matching", j["permutation"]);
    return j;
  });

  // Test 3: narrow conductor windows.
  json t3 = json::array();
  for (const auto &w : narrow) {
    t3.push_back(attempt([&]() -> json {
      auto rep = to_json(stratify(run.slice(w, {0}), m, tam, perm));
      add("window_" + range_tag(w), rep);
      rep["range"] = {w.first, w.second};
      return rep;
    }));
  }
  out["test3_narrow_windows"] = t3;

  // Test 4: L-value quartiles against the Sha split.
  json sha_full = attempt([&] { return to_json(stratify(slice, m, sha, perm)); });
  out["test4_lvalue_vs_sha"] = {
      {"lvalue_quartiles", attempt([&] {
         StratRule q{"l_value_quartiles", Invariant::l_value, StratRule::Kind::quartiles, {}};
         return to_json(stratify(slice, m, q, perm));
       })},
      {"sha", sha_full}};
  add("sha_unbanded", sha_full);

  // Test 5: Sha split inside the L-value band.
  const auto banded = lvalue_band(slice, band);
  out["test5_lvalue_band"] = attempt([&]() -> json {
    if (banded.empty())
      throw DataError("no rank-0 curves in the L-value band");
    auto rep = to_json(stratify(banded, m, sha, perm));
    add("sha_in_band", rep);
    rep["n_curves"] = banded.size();
    return rep;
  });

  // Test 6: L-value matching of the Sha groups.
  out["test6_lvalue_matching"] = attempt([&]() -> json {
    const auto part = partition(slice, sha);
    const auto a = members(slice, part.members[group_index(part, kShaHigh)]);
    const auto b = members(slice, part.members[group_index(part, kShaOne)]);
    auto j = matched_block(match_nn(a, b, MatchKey::l_value, 0.1), m, perm);
    add("lvalue_matching", j["permutation"]);
    return j;
  });

  // Test 7: band + range + period halves.
  out["test7_triple_control"] = attempt([&]() -> json {
    const auto tc = triple_control(slice, m, band, range, perm);
    auto half = [&](const TripleHalf &h, const std::string &name) {
      json j = {{"n_curves", h.n_curves}};
      if (h.report) {
        j["report"] = to_json(*h.report);
        add(name, j["report"]);
      } else {
        j["error"] = h.error;
      }
      return j;
    };
    return json{{"median_period", tc.median_period},
                {"n_curves", tc.n_curves},
                {"small_period", half(tc.small_period, "triple_small_period")},
                {"large_period", half(tc.large_period, "triple_large_period")}};
  });
  out["summary"] = summary;

  // BSD decomposition and Euler sums.
  auto ratios = [&](const CurveTable &t, const StratRule &rule) {
    json arr = json::array();
    for (const auto &g : bsd_group_ratios(t, partition(t, rule)))
      arr.push_back({{"group", g.name},
                     {"n", g.n},
                     {"mean_bsd_ratio", g.mean_bsd_ratio},
                     {"mean_l_value", g.mean_l_value},
                     {"ratio", g.ratio},
                     {"mean_period", g.mean_period},
                     {"mean_log_l", g.mean_log_l}});
    return arr;
  };
  const StratRule exact_sha{"sha_exact", Invariant::sha, StratRule::Kind::thresholds,
                            {{"sha=1", 1, 1}, {"sha=4", 4, 4}, {"sha=9", 9, 9}}};
  out["bsd"] = {{"sha_groups", attempt([&] { return ratios(slice, sha); })},
                {"sha_groups_in_band", attempt([&] { return ratios(banded, sha); })},
                {"exact_sha", attempt([&] { return ratios(slice, exact_sha); })}};
  auto euler = [&](const CurveTable &t, const std::string &tag) -> json {
    const auto part = partition(t, sha);
    const auto profiles = group_profiles(t, m, part);
    const auto &hi = profiles[group_index(part, kShaHigh)];
    const auto &one = profiles[group_index(part, kShaOne)];
    const auto e = euler_cumsum(hi, one);
    run.csv("euler_" + tag, {"prime", "sum_sha_ge4", "sum_sha1", "delta"},
            {as_double(e.primes.values()), e.sum_a, e.sum_b, e.delta});
    const auto g = bsd_group_ratios(t, part);
    return {{"terminal_sum_sha_ge4", e.sum_a.back()},
            {"terminal_sum_sha1", e.sum_b.back()},
            {"terminal_delta", e.terminal_delta},
            {"peak_delta", e.peak_delta},
            {"peak_prime", e.primes[e.argmax]},
            {"log_l_gap", g[group_index(part, kShaHigh)].mean_log_l - g[group_index(part, kShaOne)].mean_log_l}};
  };
  out["euler"] = {{"unbanded", attempt([&] { return euler(slice, "unbanded"); })},
                  {"in_band", attempt([&] { return euler(banded, "in_band"); })}};
  out["period_vs_log_conductor"] =
      attempt([&] { return json(invariant_correlation(slice, Invariant::period, Invariant::log_conductor)); });
  return out;
}

json moments_json(const MomentProfile &p) {
  return {{"n", p.n},
          {"mean", p.summary_mean()},
          {"variance_over_p", p.summary_variance_over_p()},
          {"skewness", opt(p.summary_skewness())},
          {"excess_kurtosis", opt(p.summary_kurtosis())}};
}

json cmd_diagnose(Run &run) {
  const auto &cfg = run.cfg();
  const auto range = cfg.ranges.front();
  const auto band = cfg.bands.back();
  const auto slice = run.slice(range, {0});
  const auto both = run.slice(range, {0, 1});
  if (slice.empty())
    throw DataError("no rank-0 curves in " + range_tag(range));
  const auto &m = run.matrix(both);
  const auto banded = lvalue_band(slice, band);
  const auto sha = StratRule::named("sha");
  json out = {{"range", {range.first, range.second}}, {"band", {band.lo, band.hi}}, {"n_banded", banded.size()}};

  std::vector<std::size_t> hi_rows, one_rows;
  out["moments"] = attempt([&]() -> json {
    const auto part = partition(banded, sha);
    const auto rows = group_rows(banded, part, m);
    hi_rows = rows[group_index(part, kShaHigh)];
    one_rows = rows[group_index(part, kShaOne)];
    const auto a = moment_profile(hi_rows, m), b = moment_profile(one_rows, m);
    const auto ratio = variance_ratio(a, b);
    std::vector<double> sa, ka, sb, kb;
    for (std::size_t j = 0; j < a.mean.size(); ++j) {
      sa.push_back(a.skewness[j].value_or(NAN));
      ka.push_back(a.kurtosis[j].value_or(NAN));
      sb.push_back(b.skewness[j].value_or(NAN));
      kb.push_back(b.kurtosis[j].value_or(NAN));
    }
    run.csv("moments",
            {"prime", "mean_sha_ge4", "var_over_p_sha_ge4", "skew_sha_ge4", "kurt_sha_ge4",
             "mean_sha1", "var_over_p_sha1", "skew_sha1", "kurt_sha1", "variance_ratio"},
            {as_double(a.primes.values()), a.mean, a.variance_over_p, sa, ka, b.mean,
             b.variance_over_p, sb, kb, ratio.ratio});
    return json{{kShaHigh, moments_json(a)},
                {kShaOne, moments_json(b)},
                {"variance_ratio", {{"mean", ratio.mean}, {"sd", ratio.sd}}},
                {"mean_shift_test", [&] {
                   auto rep = permutation_test({hi_rows, one_rows}, m, run.perm());
                   rep.rule = "sha";
                   rep.group_names = {kShaHigh, kShaOne};
                   return to_json(rep);
                 }()}};
  });

  out["sato_tate"] = attempt([&] { return to_json(satotate_ks(hi_rows, one_rows, m, 1000)); });

  out["crossover"] = attempt([&]() -> json {
    const auto diff = difference(murmuration_profile(hi_rows, m), murmuration_profile(one_rows, m));
    const std::vector<std::uint32_t> landmarks = {5, 37, 251, 1009};
    const auto c = crossover_scan(m.primes(), diff, landmarks);
    run.csv("crossover", {"prime", "difference", "smoothed"}, {as_double(m.primes().values()), diff, c.smoothed});
    json lm = json::object();
    for (std::size_t i = 0; i < c.landmark_primes.size(); ++i)
      lm[std::to_string(c.landmark_primes[i])] = c.landmark_values[i];
    json j = {{"landmarks", lm}, {"crossing", nullptr}};
    if (c.crossing)
      j["crossing"] = {{"prime", c.crossing->prime}, {"direction", c.crossing->direction}};
    return j;
  });

  out["reduction"] = attempt([&]() -> json {
    const auto red = classify_reduction(m, slice);
    std::ostringstream s;
    s << "label,prime,type\n";
    std::map<std::string, std::size_t> counts;
    for (const auto &e : red.entries) {
      s << e.label << ',' << e.prime << ',' << reduction_name(e.type) << '\n';
      ++counts[std::string(reduction_name(e.type))];
    }
    run.text_file("reduction.csv", s.str());
    return json{{"curves", red.curves}, {"agree", red.agree}, {"agreement", red.agreement()}, {"counts", counts}};
  });

  out["bad_prime_share"] = attempt([&]() -> json {
    const auto part = partition(slice, StratRule::named("tamagawa"));
    const auto rows = group_rows(slice, part, m);
    const auto s = bad_prime_share(rows[0], rows[1], m);
    return json{{"full_rms", s.full_rms}, {"masked_rms", s.masked_rms}, {"percent", s.percent}};
  });

  out["effect_size"] = attempt([&]() -> json {
    const auto sp = group_profiles(slice, m, partition(slice, sha));
    const auto rule = StratRule::named("root_number");
    const auto rp = group_profiles(both, m, partition(both, rule));
    const double a = profile_rms(sp), b = profile_rms(rp);
    return json{{"sha_rms", a}, {"root_number_rms", b}, {"ratio", a / b}};
  });
  return out;
}

json zero_set_block(const std::vector<ZeroSet> &sets) {
  json j = {{"n", sets.size()}};
  j["mean_gammas"] = attempt([&] { return json(mean_gammas(sets)); });
  return j;
}

json cmd_zeros(Run &run) {
  const auto &cfg = run.cfg();
  const auto range = cfg.ranges.front();
  const auto band = cfg.bands.front();
  const auto slice = run.slice(range, {0});
  const auto banded = lvalue_band(slice, band).filter([](const CurveRecord &c) { return c.root_number == 1; });
  const auto sha = StratRule::named("sha");

  std::vector<ZeroSet> sets;
  if (cfg.zeros) {
    std::ifstream in(*cfg.zeros);
    sets = read_zero_csv(in);
    run.note_input("zeros", *cfg.zeros);
  } else {
    const auto part = partition(banded, sha);
    std::mt19937_64 rng(cfg.seed);
    std::vector<const CurveRecord *> todo;
    for (const char *name : {kShaOne, kShaHigh}) {
      auto idx = part.members[group_index(part, name)];
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(std::min(idx.size(), cfg.zero_sample));
      std::sort(idx.begin(), idx.end());
      for (auto i : idx)
        todo.push_back(&banded[i]);
    }
    run.log() << "locating zeros for " << todo.size() << " curves\n";
    sets.resize(todo.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < todo.size();) {
        try {
          sets[i] = curve_zeros(*todo[i], 5, cfg.t_max);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure)
            failure = std::current_exception();
        }
      }
    };
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    }
    if (failure)
      std::rethrow_exception(failure);
    std::ostringstream s;
    write_zero_csv(s, sets);
    run.text_file("zeros.csv", s.str());
  }

  // Group the sets by Sha using the ingested invariants.
  std::vector<ZeroSet> hi, one;
  std::vector<std::uint32_t> hi_n, one_n;
  std::size_t partial = 0, other = 0;
  for (const auto &z : sets) {
    const auto row = run.table().find(z.label);
    if (row < 0)
      throw DataError("zero set " + z.label + " has no curve in the table");
    const auto &rec = run.table()[static_cast<std::size_t>(row)];
    if (rec.root_number != 1)
      throw DataError("zero set " + z.label + " belongs to a curve with w = -1");
    if (!z.complete()) {
      ++partial;
      continue;
    }
    if (rec.sha() == 1) {
      one.push_back(z);
      one_n.push_back(rec.conductor);
    } else if (rec.sha() >= 4) {
      hi.push_back(z);
      hi_n.push_back(rec.conductor);
    } else {
      ++other;
    }
  }
  json out = {{"range", {range.first, range.second}},
              {"band", {band.lo, band.hi}},
              {"sets", sets.size()},
              {"partial_sets", partial},
              {"ungrouped_sets", other},
              {kShaHigh, zero_set_block(hi)},
              {kShaOne, zero_set_block(one)}};
  out["hotelling"] = attempt([&]() -> json {
    const auto h = hotelling_t2(std::span<const ZeroSet>(hi), std::span<const ZeroSet>(one));
    return json{{"t2", h.t2}, {"f", h.f}, {"df1", h.df1}, {"df2", h.df2}, {"p_value", h.p_value}};
  });
  out["one_level_density"] = attempt([&]() -> json {
    const auto da = one_level_density(hi, hi_n), db = one_level_density(one, one_n);
    std::vector<double> w;
    for (double x : da.bin_centers)
      w.push_back(so_even_density(x));
    run.csv("one_level_density", {"x", "sha_ge4", "sha1", "so_even"}, {da.bin_centers, da.density, db.density, w});
    const auto cmp = compare_densities(da, db);
    const double gap = std::abs(da.deviation - db.deviation);
    return json{{"deviation_sha_ge4", da.deviation},
                {"deviation_sha1", db.deviation},
                {"deviations_match", gap < 0.05 * std::min(da.deviation, db.deviation)},
                {"ks_all", to_json(cmp.all)},
                {"ks_first", to_json(cmp.first)}};
  });
  out["explicit_formula"] = attempt([&]() -> json {
    const auto ga = mean_gammas(hi), gb = mean_gammas(one);
    const auto part = partition(slice, sha);
    const auto &m = run.matrix(slice);
    const auto profiles = group_profiles(slice, m, part);
    const auto observed = difference(profiles[group_index(part, kShaHigh)], profiles[group_index(part, kShaOne)]);
    const auto e = explicit_predict(ga, gb, m.primes().values(), std::span<const double>(observed));
    run.csv("explicit_formula", {"prime", "predicted", "observed"}, {as_double(e.primes), e.predicted, observed});
    return json{{"correlation", opt(e.correlation)},
                {"rms_predicted", e.rms_predicted},
                {"rms_observed", opt(e.rms_observed)}};
  });
  return out;
}

json cmd_report(Run &run) {
  json all = json::object();
  const auto dir = run.out_dir();
  for (const auto &sub : subcommands()) {
    if (sub == "report")
      continue;
    const auto path = dir / (sub + ".json");
    if (!fs::exists(path))
      continue;
    std::ifstream in(path);
    const auto j = json::parse(in);
    all[sub] = {{"config_hash", j.value("config_hash", "")}, {"results", j["results"]}};
  }
  if (run.cfg().svg) {
    std::vector<fs::path> csvs;
    for (const auto &e : fs::directory_iterator(dir))
      if (e.path().extension() == ".csv" && e.path().filename() != "reduction.csv" &&
          e.path().filename() != "zeros.csv")
        csvs.push_back(e.path());
    std::sort(csvs.begin(), csvs.end());
    for (const auto &p : csvs)
      plot_csv(p, fs::path(p).replace_extension(".svg"));
  }
  return all;
}

} // namespace

int run(const std::string &subcommand, const RunConfig &cfg, std::ostream &log) {
  Run r(subcommand, cfg, log);
  try {
    const auto &names = subcommands();
    if (std::find(names.begin(), names.end(), subcommand) == names.end())
      throw ArgumentError("unknown subcommand '" + subcommand + "'");
    if (subcommand == "report") {
      fs::create_directories(cfg.out);
    } else {
      r.check_inputs(subcommand == "traces");
      r.ingest();
    }
    json results;
    if (subcommand == "ingest")
      results = cmd_ingest(r);
    else if (subcommand == "traces")
      results = cmd_traces(r);
    else if (subcommand == "windows")
      results = cmd_windows(r);
    else if (subcommand == "stratify")
      results = cmd_stratify(r);
    else if (subcommand == "confound")
      results = cmd_confound(r);
    else if (subcommand == "diagnose")
      results = cmd_diagnose(r);
    else if (subcommand == "zeros")
      results = cmd_zeros(r);
    else
      results = cmd_report(r);
    r.finish(std::move(results));
    return 0;
  } catch (const std::exception &e) {
    const json err = {{"subcommand", subcommand}, {"config_hash", config_hash(cfg)}, {"error", error_json(e)}};
    try {
      fs::create_directories(cfg.out);
      write_text(fs::path(cfg.out) / "error.json", err.dump(2) + "\n");
    } catch (const std::exception &) {
    }
    log << "murm " << subcommand << ": " << e.what() << '\n';
    return 1;
  }
}

} // namespace murm
