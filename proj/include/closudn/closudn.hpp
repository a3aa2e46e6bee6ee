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
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "closudn/buffers.hpp"
#include "closudn/core.hpp"
#include "closudn/udn.hpp"

namespace closudn {

/// IM(i): m FIFOs, FIFO(i, r) fed by input port IP(i, r). In dynamic mode each
/// FIFO has a round-robin CM pointer; pointers start at r and all advance by
/// one at the end of every slot, so they stay pairwise distinct.
struct InputModule {
  int index = 0;
  std::vector<std::deque<Packet>> fifos;
  std::vector<int> pointers;
  std::optional<std::int64_t> capacity;

  InputModule(int i, int m, std::optional<std::int64_t> cap) : index(i), fifos(m), pointers(m), capacity(cap) {
    for (int r = 0; r < m; ++r) pointers[r] = r;
  }

  std::int64_t occupancy() const {
    std::int64_t total = 0;
    for (const auto& f : fifos) total += static_cast<std::int64_t>(f.size());
    return total;
  }
};

struct Dispatch {
  int fifo;
  int cm;
  Packet packet;
};

/// Offers each eligible HoL packet to the CM named by its FIFO's pointer, then
/// advances every pointer. A packet that entered its FIFO this slot waits for
/// the next one.
inline void dispatch_dynamic(InputModule& im, std::span<UdnMesh> cms, std::int64_t slot,
                             std::vector<Dispatch>& sent) {
  sent.clear();
  const int m = static_cast<int>(im.fifos.size());
  for (int r = 0; r < m; ++r) {
    auto& fifo = im.fifos[r];
    if (fifo.empty() || fifo.front().arrival_slot >= slot) continue;
    const int target = im.pointers[r];
    Packet& head = fifo.front();
    head.dispatch_slot = slot;
    if (cms[target].inject(im.index, head)) {
      sent.push_back({r, target, std::move(head)});
      fifo.pop_front();
    } else {
      head.dispatch_slot = -1;
    }
  }
  for (auto& p : im.pointers) p = p + 1 == m ? 0 : p + 1;
}

inline std::vector<Dispatch> dispatch_dynamic(InputModule& im, std::span<UdnMesh> cms, std::int64_t slot) {
  std::vector<Dispatch> sent;
  dispatch_dynamic(im, cms, slot, sent);
  return sent;
}

/// Static wiring: FIFO(i, r) always feeds row i of CM(r).
inline void dispatch_static(InputModule& im, std::span<UdnMesh> cms, std::int64_t slot,
                            std::vector<Dispatch>& sent) {
  sent.clear();
  const int m = static_cast<int>(im.fifos.size());
  for (int r = 0; r < m; ++r) {
    auto& fifo = im.fifos[r];
    if (fifo.empty() || fifo.front().arrival_slot >= slot) continue;
    Packet& head = fifo.front();
    head.dispatch_slot = slot;
    if (cms[r].inject(im.index, head)) {
      sent.push_back({r, r, std::move(head)});
      fifo.pop_front();
    } else {
      head.dispatch_slot = -1;
    }
  }
}

inline std::vector<Dispatch> dispatch_static(InputModule& im, std::span<UdnMesh> cms, std::int64_t slot) {
  std::vector<Dispatch> sent;
  dispatch_static(im, cms, slot, sent);
  return sent;
}

/// Three-stage Clos switch whose central modules are UDN meshes.
///
/// One slot runs: (1) arrivals into FIFO(i, h); (2) dispatch; (3) SP mesh
/// sub-phases on every CM; (4) LC egress into the OP buffers; (5) every OP
/// buffer emits at most one packet.
class ClosUdnFabric {
 public:
  explicit ClosUdnFabric(const SwitchConfig& config)
      : config_(validate(config)), outputs_(config_.ports()) {
    if (config_.architecture != Architecture::clos_udn) {
      throw ConfigError({"ClosUdnFabric needs architecture clos_udn"});
    }
    for (int i = 0; i < config_.k; ++i) ims_.emplace_back(i, config_.m, config_.im_fifo_capacity);
    for (int r = 0; r < config_.m; ++r) {
      cms_.emplace_back(r, config_.k, config_.mesh_depth, config_.speedup, config_.buffer_depth,
                        config_.egress_capacity);
    }
  }

  const SwitchConfig& config() const { return config_; }
  std::int64_t slot() const { return slot_; }

  SlotReport slot_step(std::span<const Packet> arrivals) {
    SlotReport rep;
    departures_.clear();

    for (const Packet& p : arrivals) {
      ++rep.arrived;
      auto& fifo = ims_[p.src.module_index].fifos[p.src.local_port];
      if (config_.im_fifo_capacity && static_cast<std::int64_t>(fifo.size()) >= *config_.im_fifo_capacity) {
        ++rep.dropped;
        ++dropped_;
        continue;
      }
      fifo.push_back(p);
      ++im_occupancy_;
    }

    for (auto& im : ims_) {
      if (config_.dispatch == DispatchMode::dynamic) {
        dispatch_dynamic(im, cms_, slot_, sent_);
      } else {
        dispatch_static(im, cms_, slot_, sent_);
      }
      im_occupancy_ -= static_cast<std::int64_t>(sent_.size());
      dispatched_ += static_cast<std::int64_t>(sent_.size());
    }

    for (auto& cm : cms_) cm.run_subphases();

    for (auto& cm : cms_) {
      cm.collect_egress(egress_);
      for (auto& [j, pkt] : egress_) outputs_.deposit(std::move(pkt), slot_);
    }

    rep.inversions = outputs_.emit(slot_, departures_);
    rep.delivered = static_cast<std::int64_t>(departures_.size());
    rep.occupancy = occupancy();
    ++slot_;
    return rep;
  }

  /// Packets emitted by the last slot_step.
  std::span<const Packet> departures() const { return departures_; }

  std::int64_t occupancy() const {
    std::int64_t mesh = 0;
    for (const auto& cm : cms_) mesh += cm.in_flight();
    return im_occupancy_ + mesh + outputs_.occupancy();
  }

  std::int64_t dropped() const { return dropped_; }
  std::int64_t inversions() const { return outputs_.order().inversions(); }

  const std::vector<InputModule>& input_modules() const { return ims_; }
  std::vector<UdnMesh>& meshes() { return cms_; }
  const std::vector<UdnMesh>& meshes() const { return cms_; }
  const OutputStage& outputs() const { return outputs_; }

 private:
  SwitchConfig config_;
  std::vector<InputModule> ims_;
  std::vector<UdnMesh> cms_;
  OutputStage outputs_;
  std::vector<Packet> departures_;
  std::vector<std::pair<int, Packet>> egress_;
  std::vector<Dispatch> sent_;
  std::int64_t slot_ = 0;
  std::int64_t im_occupancy_ = 0;
  std::int64_t dropped_ = 0;
  std::int64_t dispatched_ = 0;
};

}  // namespace closudn
