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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace closudn {

/// Thrown when a configuration (or an address derived from one) is invalid.
/// Carries every violated constraint, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) {
      if (!out.empty()) out += "; ";
      out += e;
    }
    return out;
  }

  std::vector<std::string> errors_;
};

/// A switch port seen as (module, local port). Used for both inputs
/// (module = IM index i) and outputs (module = OM index j).
struct PortAddress {
  int module_index = 0;
  int local_port = 0;
  int global = 0;

  friend bool operator==(const PortAddress&, const PortAddress&) = default;
};

/// Splits a global port number into (module, local). `total_ports` is N = n*k.
inline PortAddress decompose(int global, int n, int total_ports) {
  if (n <= 0) throw ConfigError({"n must be positive"});
  if (global < 0 || global >= total_ports) {
    throw ConfigError({"port " + std::to_string(global) + " out of range [0, " +
                       std::to_string(total_ports) + ")"});
  }
  return PortAddress{global / n, global % n, global};
}

inline PortAddress compose(int module_index, int local_port, int n) {
  return PortAddress{module_index, local_port, module_index * n + local_port};
}

/// The simulated fixed-size cell.
struct Packet {
  std::int64_t id = 0;
  PortAddress src;
  PortAddress dst;
  std::int64_t flow_seq = 0;
  std::int64_t arrival_slot = 0;
  std::optional<std::int64_t> departure_slot;
  std::optional<int> turn_column;
  // Slot at which the packet left its input-side queue (IM FIFO / VOQ).
  std::int64_t dispatch_slot = -1;
  // Time the packet entered its current buffer. Units are those of the owning
  // stage (external slots, or mesh sub-phase ticks inside a UDN).
  std::int64_t entered = 0;
  // Central module the packet crossed, -1 while unknown.
  int cm = -1;
  int mesh_hops = 0;
};

enum class Architecture { clos_udn, msm, mmm };
enum class DispatchMode { dynamic, fixed };  // `fixed` is the static wiring
enum class InputSelection { rr, lqf };

inline std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::clos_udn: return "clos_udn";
    case Architecture::msm: return "msm";
    case Architecture::mmm: return "mmm";
  }
  return "?";
}

inline std::string_view to_string(DispatchMode d) {
  return d == DispatchMode::dynamic ? "dynamic" : "static";
}

inline std::string_view to_string(InputSelection s) {
  return s == InputSelection::rr ? "rr" : "lqf";
}

inline std::optional<Architecture> parse_architecture(std::string_view s) {
  if (s == "clos_udn") return Architecture::clos_udn;
  if (s == "msm") return Architecture::msm;
  if (s == "mmm") return Architecture::mmm;
  return std::nullopt;
}

inline std::optional<DispatchMode> parse_dispatch(std::string_view s) {
  if (s == "dynamic") return DispatchMode::dynamic;
  if (s == "static") return DispatchMode::fixed;
  return std::nullopt;
}

inline std::optional<InputSelection> parse_selection(std::string_view s) {
  if (s == "rr") return InputSelection::rr;
  if (s == "lqf") return InputSelection::lqf;
  return std::nullopt;
}

/// Full switch parameterization. Zero for m / mesh_depth means "use default".
struct SwitchConfig {
  int n = 8;           // ports per IM / OM
  int k = 8;           // number of IMs / OMs
  int m = 0;           // number of CMs, default n
  int mesh_depth = 0;  // M, default k
  int speedup = 1;     // SP
  int buffer_depth = 4;  // BD
  Architecture architecture = Architecture::clos_udn;
  DispatchMode dispatch = DispatchMode::dynamic;
  int crosspoint_b = 1;
  int iterations = 1;
  InputSelection mmm_selection = InputSelection::lqf;
  std::optional<std::int64_t> im_fifo_capacity;  // nullopt = unbounded
  // Per-row egress stage between the east column and the LC link.
  std::optional<int> egress_capacity;  // nullopt = unbounded
  std::uint64_t seed = 1;

  int ports() const { return n * k; }

  friend bool operator==(const SwitchConfig&, const SwitchConfig&) = default;
};

/// Fills defaults and checks every constraint. Throws ConfigError listing all
/// violations.
inline SwitchConfig validate(SwitchConfig c) {
  std::vector<std::string> errors;
  if (c.n < 1) errors.emplace_back("n < 1");
  if (c.k < 1) errors.emplace_back("k < 1");
  if (c.m == 0) c.m = c.n;
  if (c.mesh_depth == 0) c.mesh_depth = c.k;
  if (c.m < c.n) errors.emplace_back("m < n");
  if (c.mesh_depth < 1) errors.emplace_back("M < 1");
  if (c.mesh_depth > c.k) errors.emplace_back("M > k");
  if (c.speedup < 1) errors.emplace_back("SP < 1");
  if (c.buffer_depth < 1) errors.emplace_back("BD < 1");
  if (c.architecture == Architecture::clos_udn && c.dispatch == DispatchMode::fixed &&
      c.m != c.n) {
    errors.emplace_back("static dispatch requires m = n");
  }
  if (c.architecture == Architecture::mmm && c.crosspoint_b < 1) {
    errors.emplace_back("crosspoint_b < 1");
  }
  if (c.architecture == Architecture::msm && (c.iterations < 1 || c.iterations > c.m)) {
    errors.emplace_back("iterations outside [1, m]");
  }
  if (c.im_fifo_capacity && *c.im_fifo_capacity < 1) {
    errors.emplace_back("im_fifo_capacity < 1");
  }
  if (c.egress_capacity && *c.egress_capacity < 1) errors.emplace_back("egress_capacity < 1");
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

/// External time base of a run.
struct SlotClock {
  std::int64_t slot = 0;
  std::int64_t warmup_slots = 0;
  std::int64_t total_slots = 0;

  static SlotClock with_warmup_fraction(std::int64_t total, double fraction) {
    return SlotClock{0, static_cast<std::int64_t>(static_cast<double>(total) * fraction), total};
  }

  bool measuring() const { return slot >= warmup_slots; }
  std::int64_t measured_slots() const { return total_slots - warmup_slots; }
};

/// Snapshot counts produced by one slot of any fabric.
struct SlotReport {
  std::int64_t arrived = 0;
  std::int64_t dropped = 0;
  std::int64_t delivered = 0;
  std::int64_t inversions = 0;
  std::int64_t occupancy = 0;
};

}  // namespace closudn
