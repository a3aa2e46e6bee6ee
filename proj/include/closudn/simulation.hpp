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

#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "closudn/analysis.hpp"
#include "closudn/baselines.hpp"
#include "closudn/closudn.hpp"
#include "closudn/core.hpp"
#include "closudn/traffic.hpp"

namespace closudn {

template <typename F>
concept Fabric = requires(F f, std::span<const Packet> arrivals) {
  { f.slot_step(arrivals) } -> std::same_as<SlotReport>;
  { f.departures() } -> std::convertible_to<std::span<const Packet>>;
  { f.occupancy() } -> std::convertible_to<std::int64_t>;
  { f.slot() } -> std::convertible_to<std::int64_t>;
};

struct RunOptions {
  std::int64_t slots = 100000;
  double warmup_fraction = 0.1;
  // Called after every slot with the report, for invariant checks in tests.
  std::function<void(const SlotReport&)> on_slot;
};

/// Turns traffic arrivals into packets: ids and per-flow sequence numbers.
class PacketFactory {
 public:
  explicit PacketFactory(int ports) : ports_(ports), next_seq_(static_cast<std::size_t>(ports) * ports, 0) {}

  Packet make(const Arrival& a, std::int64_t slot) {
    Packet p;
    p.id = next_id_++;
    p.src = a.src;
    p.dst = a.dst;
    p.flow_seq = next_seq_[static_cast<std::size_t>(a.src.global) * ports_ + a.dst.global]++;
    p.arrival_slot = slot;
    p.entered = slot;
    return p;
  }

 private:
  int ports_;
  std::int64_t next_id_ = 0;
  std::vector<std::int64_t> next_seq_;
};

/// Drives `fabric` for `opts.slots` slots of `traffic`, accumulating metrics
/// from the end of the warm-up.
template <Fabric F>
RunSummary run_fabric(F& fabric, const TrafficModel& traffic, Rng& rng, const RunOptions& opts) {
  const SwitchConfig& cfg = fabric.config();
  TrafficGenerator gen(traffic, cfg.n, cfg.k, rng);
  PacketFactory factory(cfg.ports());
  SlotClock clock = SlotClock::with_warmup_fraction(opts.slots, opts.warmup_fraction);
  RunMetrics metrics;
  std::vector<Arrival> arrivals;
  std::vector<Packet> packets;
  packets.reserve(cfg.ports());

  for (clock.slot = 0; clock.slot < clock.total_slots; ++clock.slot) {
    if (clock.slot == clock.warmup_slots) {
      if constexpr (requires { fabric.meshes(); }) {
        for (auto& cm : fabric.meshes()) cm.clear_link_counters();
      }
    }
    gen.generate_slot(rng, arrivals);
    packets.clear();
    for (const auto& a : arrivals) packets.push_back(factory.make(a, fabric.slot()));
    const SlotReport rep = fabric.slot_step(packets);
    if (opts.on_slot) opts.on_slot(rep);
    if (!clock.measuring()) continue;
    metrics.injected += rep.arrived;
    metrics.dropped += rep.dropped;
    metrics.inversions += rep.inversions;
    for (const Packet& p : fabric.departures()) {
      metrics.record_departure(*p.departure_slot - p.arrival_slot);
      if (p.dispatch_slot >= 0) {
        metrics.im_wait_sum += static_cast<double>(p.dispatch_slot - p.arrival_slot);
        ++metrics.im_wait_count;
      }
    }
  }

  if constexpr (requires { fabric.meshes(); }) {
    for (const auto& cm : fabric.meshes()) metrics.pop_east.push_back(cm.east_counts());
  }
  return finalize(metrics, clock.measured_slots(), cfg.ports());
}

/// Builds the fabric named by `config.architecture` and runs it with a PRNG
/// seeded from `config.seed`.
inline RunSummary simulate(const SwitchConfig& config, const TrafficModel& traffic, const RunOptions& opts) {
  const SwitchConfig cfg = validate(config);
  Rng rng(cfg.seed);
  switch (cfg.architecture) {
    case Architecture::clos_udn: {
      ClosUdnFabric f(cfg);
      return run_fabric(f, traffic, rng, opts);
    }
    case Architecture::msm: {
      MsmFabric f(cfg);
      return run_fabric(f, traffic, rng, opts);
    }
    case Architecture::mmm: {
      MmmFabric f(cfg);
      return run_fabric(f, traffic, rng, opts);
    }
  }
  throw ConfigError({"unknown architecture"});
}

}  // namespace closudn
