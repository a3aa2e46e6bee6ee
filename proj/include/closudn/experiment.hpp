/*
 * Copyright 2026 The closudn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <istream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "closudn/analysis.hpp"
#include "closudn/core.hpp"
#include "closudn/simulation.hpp"
#include "closudn/traffic.hpp"

namespace closudn {

/// Everything one simulation run needs.
struct RunPoint {
  SwitchConfig config;
  TrafficModel traffic;
  std::int64_t slots = 1000000;
  double warmup_fraction = 0.1;
};

struct SweepAxis {
  std::string name;
  std::vector<std::string> values;
};

struct ExperimentSpec {
  RunPoint base;
  std::vector<SweepAxis> sweep;  // cross product, last axis fastest
  std::uint64_t seed = 1;
  std::set<std::string> explicit_keys;
};

enum class Profile { ci, paper };

inline std::optional<Profile> parse_profile(std::string_view s) {
  if (s == "ci") return Profile::ci;
  if (s == "paper") return Profile::paper;
  return std::nullopt;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

inline std::optional<int> parse_size(std::string_view s) {
  auto ports = parse_number<int>(s);
  if (!ports || *ports < 1) return std::nullopt;
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(*ports))));
  if (side * side != *ports) return std::nullopt;
  return side;
}

}  // namespace detail

inline const std::set<std::string>& sweepable_keys() {
  static const std::set<std::string> keys{"load", "omega", "SP", "M", "BD", "iterations",
                                          "crosspoint_b", "architecture", "dispatch", "size"};
  return keys;
}

/// Applies one `key = value` setting to a run point. Returns an error message
/// for unknown keys or malformed values.
inline std::optional<std::string> apply_setting(RunPoint& p, std::string_view key, std::string_view value) {
  using detail::parse_number;
  auto bad = [&] { return std::string(key) + ": bad value '" + std::string(value) + "'"; };
  auto set_int = [&](int& field) -> std::optional<std::string> {
    auto v = parse_number<int>(value);
    if (!v) return bad();
    field = *v;
    return std::nullopt;
  };
  auto set_double = [&](double& field) -> std::optional<std::string> {
    auto v = parse_number<double>(value);
    if (!v) return bad();
    field = *v;
    return std::nullopt;
  };

  if (key == "n") return set_int(p.config.n);
  if (key == "k") return set_int(p.config.k);
  if (key == "m") return set_int(p.config.m);
  if (key == "M") return set_int(p.config.mesh_depth);
  if (key == "SP") return set_int(p.config.speedup);
  if (key == "BD") return set_int(p.config.buffer_depth);
  if (key == "iterations") return set_int(p.config.iterations);
  if (key == "crosspoint_b") return set_int(p.config.crosspoint_b);
  if (key == "size") {
    auto side = detail::parse_size(value);
    if (!side) return std::string("size: needs a square port count, got '") + std::string(value) + "'";
    p.config.n = *side;
    p.config.k = *side;
    return std::nullopt;
  }
  if (key == "architecture") {
    auto a = parse_architecture(value);
    if (!a) return bad();
    p.config.architecture = *a;
    return std::nullopt;
  }
  if (key == "dispatch") {
    auto d = parse_dispatch(value);
    if (!d) return bad();
    p.config.dispatch = *d;
    return std::nullopt;
  }
  if (key == "selection") {
    auto s = parse_selection(value);
    if (!s) return bad();
    p.config.mmm_selection = *s;
    return std::nullopt;
  }
  if (key == "im_fifo_capacity" || key == "egress_capacity") {
    auto v = parse_number<std::int64_t>(value);
    if (!v) return bad();
    if (key == "im_fifo_capacity") {
      p.config.im_fifo_capacity = *v;
    } else {
      p.config.egress_capacity = static_cast<int>(*v);
    }
    return std::nullopt;
  }
  if (key == "traffic") {
    auto t = parse_traffic(value);
    if (!t) return bad();
    p.traffic.kind = *t;
    return std::nullopt;
  }
  if (key == "load") return set_double(p.traffic.load);
  if (key == "omega") return set_double(p.traffic.omega);
  if (key == "mean_burst") return set_double(p.traffic.mean_burst);
  if (key == "warmup") return set_double(p.warmup_fraction);
  if (key == "slots") {
    auto v = parse_number<std::int64_t>(value);
    if (!v || *v < 1) return bad();
    p.slots = *v;
    return std::nullopt;
  }
  return "unknown key '" + std::string(key) + "'";
}

/// Reads the flat config format: one `key = value` per line, `#` starts a
/// comment, comma lists on sweepable keys define sweep axes in file order.
inline std::vector<std::string> parse_config(std::istream& in, ExperimentSpec& spec) {
  std::vector<std::string> errors;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string_view::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string key(detail::trim(s.substr(0, eq)));
    const std::string_view rhs = detail::trim(s.substr(eq + 1));
    std::vector<std::string> values;
    std::size_t start = 0;
    while (true) {
      const auto comma = rhs.find(',', start);
      values.emplace_back(detail::trim(rhs.substr(start, comma == std::string_view::npos ? rhs.npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (key.empty() || std::any_of(values.begin(), values.end(), [](const auto& v) { return v.empty(); })) {
      errors.push_back(where + "empty key or value");
      continue;
    }
    if (!spec.explicit_keys.insert(key).second) {
      errors.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    if (key == "seed") {
      auto v = detail::parse_number<std::uint64_t>(values[0]);
      if (values.size() != 1 || !v) {
        errors.push_back(where + "seed: bad value");
      } else {
        spec.seed = *v;
      }
      continue;
    }
    if (values.size() > 1) {
      if (!sweepable_keys().count(key)) {
        errors.push_back(where + "'" + key + "' cannot be swept");
        continue;
      }
      RunPoint probe = spec.base;
      bool ok = true;
      for (const auto& v : values) {
        if (auto e = apply_setting(probe, key, v)) {
          errors.push_back(where + *e);
          ok = false;
        }
      }
      if (ok) spec.sweep.push_back({key, values});
      continue;
    }
    if (auto e = apply_setting(spec.base, key, values[0])) errors.push_back(where + *e);
  }
  return errors;
}

/// Profile defaults: ci = 64 ports and 1e5 slots, paper = 256 ports and 1e6
/// slots. Keys set explicitly in the config win.
inline void apply_profile(ExperimentSpec& spec, Profile profile) {
  const bool has_shape = spec.explicit_keys.count("size") || spec.explicit_keys.count("n") ||
                         spec.explicit_keys.count("k");
  if (!has_shape) {
    const int side = profile == Profile::ci ? 8 : 16;
    spec.base.config.n = side;
    spec.base.config.k = side;
  }
  if (!spec.explicit_keys.count("slots")) spec.base.slots = profile == Profile::ci ? 100000 : 1000000;
}

/// Expands the sweep grid. Point i gets seed = spec.seed + i. Throws
/// ConfigError listing every invalid point.
inline std::vector<RunPoint> expand(const ExperimentSpec& spec) {
  std::vector<RunPoint> points;
  std::vector<std::string> errors;
  std::size_t total = 1;
  for (const auto& axis : spec.sweep) total *= axis.values.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    RunPoint p = spec.base;
    std::size_t rest = idx;
    std::vector<std::size_t> pick(spec.sweep.size());
    for (std::size_t a = spec.sweep.size(); a-- > 0;) {
      pick[a] = rest % spec.sweep[a].values.size();
      rest /= spec.sweep[a].values.size();
    }
    for (std::size_t a = 0; a < spec.sweep.size(); ++a) {
      if (auto e = apply_setting(p, spec.sweep[a].name, spec.sweep[a].values[pick[a]])) errors.push_back(*e);
    }
    p.config.seed = spec.seed + idx;
    try {
      p.config = validate(p.config);
      validate(p.traffic);
      if (!(p.warmup_fraction >= 0.0 && p.warmup_fraction < 1.0)) {
        throw ConfigError({"warmup outside [0, 1)"});
      }
    } catch (const ConfigError& e) {
      for (const auto& msg : e.errors()) errors.push_back("point " + std::to_string(idx) + ": " + msg);
    }
    points.push_back(std::move(p));
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return points;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "architecture,dispatch,n,k,m,M,SP,BD,iterations,crosspoint_b,traffic,load,omega,mean_burst,"
    "slots,seed,throughput,mean_delay,ooo_fraction,dropped";

inline constexpr int kCsvColumns = 20;
// Columns up to and including `seed` identify a point.
inline constexpr int kCsvKeyColumns = 16;

/// Shortest round-trip form, so echoed inputs match the config text.
inline std::string format_echo(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

inline std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string csv_key(const RunPoint& p) {
  const auto& c = p.config;
  std::string s;
  s += to_string(c.architecture);
  s += ',';
  s += to_string(c.dispatch);
  for (int v : {c.n, c.k, c.m, c.mesh_depth, c.speedup, c.buffer_depth, c.iterations, c.crosspoint_b}) {
    s += ',' + std::to_string(v);
  }
  s += ',';
  s += to_string(p.traffic.kind);
  s += ',' + format_echo(p.traffic.load) + ',' + format_echo(p.traffic.omega) + ',' +
       format_echo(p.traffic.mean_burst);
  s += ',' + std::to_string(p.slots) + ',' + std::to_string(c.seed);
  return s;
}

inline std::string csv_row(const RunPoint& p, const RunSummary& r) {
  return csv_key(p) + ',' + format_fixed(r.throughput) + ',' +
         (r.mean_delay ? format_fixed(*r.mean_delay) : std::string("NA")) + ',' + format_fixed(r.ooo_fraction) +
         ',' + std::to_string(r.dropped);
}

/// Sidecar rows `point,cm,row,col,proportion` for one run.
inline std::string pop_east_rows(std::size_t point, const RunPoint& p, const RunSummary& r) {
  std::string s;
  const int depth = p.config.mesh_depth;
  for (std::size_t cm = 0; cm < r.pop_east.size(); ++cm) {
    for (std::size_t l = 0; l < r.pop_east[cm].size(); ++l) {
      s += std::to_string(point) + ',' + std::to_string(cm) + ',' + std::to_string(l / depth) + ',' +
           std::to_string(l % depth) + ',' + format_fixed(r.pop_east[cm][l]) + '\n';
    }
  }
  return s;
}

inline RunSummary run_point(const RunPoint& p) {
  RunOptions opts;
  opts.slots = p.slots;
  opts.warmup_fraction = p.warmup_fraction;
  return simulate(p.config, p.traffic, opts);
}

/// Runs `points[first..]` on `parallel` threads and hands every result to
/// `sink` in point order, as soon as all earlier points are done.
inline void run_points(const std::vector<RunPoint>& points, std::size_t first, int parallel,
                       const std::function<void(std::size_t, const RunSummary&)>& sink) {
  const std::size_t total = points.size();
  if (first >= total) return;
  std::vector<std::optional<RunSummary>> done(total);
  std::exception_ptr failure;
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{first};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      try {
        RunSummary r = run_point(points[i]);
        std::lock_guard lock(mu);
        done[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  const int n_threads = std::max(1, std::min<int>(parallel, static_cast<int>(total - first)));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);

  for (std::size_t i = first; i < total; ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return done[i].has_value() || failure; });
    if (failure) break;
    RunSummary r = std::move(*done[i]);
    done[i].reset();
    lock.unlock();
    sink(i, r);
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Number of leading rows of an existing CSV that match `points`, or nullopt
/// when the file does not continue this sweep (wrong header or a differing row).
inline std::optional<std::size_t> resumable_rows(std::istream& existing, const std::vector<RunPoint>& points) {
  std::string line;
  if (!std::getline(existing, line) || line != kCsvHeader) return std::nullopt;
  std::size_t rows = 0;
  while (std::getline(existing, line)) {
    if (rows >= points.size()) return std::nullopt;
    const std::string key = csv_key(points[rows]);
    std::size_t commas = 0, cut = 0;
    for (; cut < line.size(); ++cut) {
      if (line[cut] == ',' && ++commas == kCsvKeyColumns) break;
    }
    if (line.compare(0, cut, key) != 0 || commas != kCsvKeyColumns) return std::nullopt;
    if (std::count(line.begin(), line.end(), ',') != kCsvColumns - 1) return std::nullopt;
    ++rows;
  }
  return rows;
}

}  // namespace closudn
