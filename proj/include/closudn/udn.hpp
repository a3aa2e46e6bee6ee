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

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "closudn/buffers.hpp"
#include "closudn/core.hpp"

namespace closudn {

/// Unidirectional NoC central module: a k x M grid of input-queued
/// mini-routers. Packets are injected on the west edge (one injection point per
/// IM row) and leave on the east edge through LC(r, j), row j -> OM(j).
///
/// Timing. The mesh runs SP sub-phases per external slot; tick = slot * SP +
/// sub-phase. A packet that entered a FIFO at tick t may leave it from tick
/// t + 1. Injection happens during the dispatch phase (before the sub-phases),
/// so an injected packet first moves in the following slot: crossing the LI
/// link costs one external slot. Each row emits at most one packet per external
/// slot on its LC link.

enum class Direction : std::uint8_t { east = 0, north = 1, south = 2, exit = 3 };

/// Ingress FIFOs of a mini-router. `from_north` holds packets travelling
/// south; `from_south` holds packets travelling north.
enum class Ingress : std::uint8_t { west = 0, from_north = 1, from_south = 2 };

inline constexpr int kIngressCount = 3;
inline constexpr int kOutputCount = 3;  // east (or exit), north, south

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

class RoutingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Column at which a packet turns toward its destination row.
inline int turn_column_for(const PortAddress& dst, int mesh_depth) {
  return dst.global % mesh_depth;
}

/// Modulo-XY next hop: east to the turn column, vertical to the destination
/// row, then east to the exit.
inline Direction route_next_hop(const Packet& pkt, Cell at, int k, int mesh_depth) {
  if (!pkt.turn_column) throw RoutingError("packet has no turn column");
  const int turn = *pkt.turn_column;
  const int dst_row = pkt.dst.module_index;
  if (at.row < 0 || at.row >= k || at.col < 0 || at.col >= mesh_depth) {
    throw RoutingError("cell outside the mesh");
  }
  if (at.col < turn) return Direction::east;
  if (at.row != dst_row) {
    if (at.col > turn) {
      throw RoutingError("packet " + std::to_string(pkt.id) + " passed its turn column");
    }
    return dst_row < at.row ? Direction::north : Direction::south;
  }
  return at.col < mesh_depth - 1 ? Direction::east : Direction::exit;
}

/// Mesh-internal handle of a packet. The packet itself stays in the mesh's
/// pool; routers only move these.
struct Flit {
  std::int64_t entered = 0;  // sub-phase tick
  std::int32_t slot = 0;     // pool index
  std::int32_t hops = 0;
  std::int16_t turn = 0;
  std::int16_t dst_row = 0;
};

struct MiniRouter {
  int row = 0;
  int col = 0;
  std::array<BoundedFifo<Flit>, kIngressCount> ingress;
  int held = 0;  // packets over all ingress FIFOs
  // Last granted ingress per output link (east, north, south).
  std::array<std::uint8_t, kOutputCount> last_grant{kIngressCount - 1, kIngressCount - 1,
                                                   kIngressCount - 1};
};

/// Observer invoked for every in-mesh move, before the move is applied.
using MoveObserver = std::function<void(int cm, const Packet&, Cell from, Direction)>;

class UdnMesh {
 public:
  UdnMesh(int cm_index, int k, int mesh_depth, int speedup, int buffer_depth,
          std::optional<int> egress_capacity = std::nullopt)
      : cm_(cm_index), k_(k), depth_(mesh_depth), speedup_(speedup), bd_(buffer_depth),
        egress_cap_(egress_capacity ? static_cast<std::size_t>(*egress_capacity) : SIZE_MAX),
        egress_(k), east_count_(static_cast<std::size_t>(k) * mesh_depth, 0) {
    if (k < 1 || mesh_depth < 1 || mesh_depth > k || speedup < 1 || buffer_depth < 1 ||
        (egress_capacity && *egress_capacity < 1)) {
      throw ConfigError({"invalid mesh dimensions"});
    }
    routers_.reserve(static_cast<std::size_t>(k) * mesh_depth);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < mesh_depth; ++c) {
        MiniRouter mr;
        mr.row = r;
        mr.col = c;
        for (auto& f : mr.ingress) f = BoundedFifo<Flit>(buffer_depth);
        routers_.push_back(std::move(mr));
      }
    }
  }

  int cm_index() const { return cm_; }
  int rows() const { return k_; }
  int depth() const { return depth_; }
  int speedup() const { return speedup_; }
  int buffer_depth() const { return bd_; }
  std::int64_t slot() const { return slot_; }

  const MiniRouter& router(int row, int col) const { return routers_[index(row, col)]; }
  const Packet& packet(const Flit& f) const { return pool_[f.slot]; }

  /// Offers `pkt` to the west-column injection FIFO of `row`. On refusal the
  /// mesh is unchanged and the caller keeps the packet.
  bool inject(int row, const Packet& pkt) {
    auto& fifo = routers_[index(row, 0)].ingress[static_cast<int>(Ingress::west)];
    if (fifo.full()) return false;
    Flit f;
    if (free_.empty()) {
      f.slot = static_cast<std::int32_t>(pool_.size());
      pool_.push_back(pkt);
    } else {
      f.slot = free_.back();
      free_.pop_back();
      pool_[f.slot] = pkt;
    }
    Packet& p = pool_[f.slot];
    p.turn_column = turn_column_for(p.dst, depth_);
    p.cm = cm_;
    p.mesh_hops = 0;
    f.turn = static_cast<std::int16_t>(*p.turn_column);
    f.dst_row = static_cast<std::int16_t>(p.dst.module_index);
    // Eligible from the first sub-phase of the next slot.
    f.entered = (slot_ + 1) * speedup_ - 1;
    p.entered = f.entered;
    fifo.push(f);
    ++routers_[index(row, 0)].held;
    ++injected_;
    ++in_flight_;
    return true;
  }

  /// One sub-phase: every output link grants at most one requesting ingress,
  /// round-robin from one past its last grant. Grants are decided on the
  /// pre-sub-phase state and then applied together. Returns packets moved.
  int mesh_subphase() {
    if (subphase_ >= speedup_) throw std::logic_error("more than SP sub-phases in one slot");
    const std::int64_t tick = slot_ * speedup_ + subphase_;
    grants_.clear();

    for (int idx = 0; idx < static_cast<int>(routers_.size()); ++idx) {
      MiniRouter& mr = routers_[idx];
      if (mr.held == 0) continue;
      std::array<std::int8_t, kIngressCount> wants{-1, -1, -1};
      // requesters[out]: bit q set when ingress q wants output `out`.
      std::array<std::uint8_t, kOutputCount> requesters{0, 0, 0};
      for (int q = 0; q < kIngressCount; ++q) {
        const auto& fifo = mr.ingress[q];
        if (fifo.empty() || fifo.front().entered >= tick) continue;
        const Direction d = next_hop(fifo.front(), mr);
        wants[q] = static_cast<std::int8_t>(d);
        requesters[d == Direction::exit ? 0 : static_cast<int>(d)] |= static_cast<std::uint8_t>(1u << q);
      }
      for (int out = 0; out < kOutputCount; ++out) {
        if (requesters[out] == 0 || !has_room(mr, out)) continue;
        int q = mr.last_grant[out];
        do {
          q = q == kIngressCount - 1 ? 0 : q + 1;
        } while (!(requesters[out] & (1u << q)));
        grants_.push_back({idx, q, wants[q]});
        mr.last_grant[out] = static_cast<std::uint8_t>(q);
      }
    }

    for (const auto& g : grants_) apply(g, tick);
    ++subphase_;
    moved_ += static_cast<std::int64_t>(grants_.size());
    return static_cast<int>(grants_.size());
  }

  /// Runs the remaining sub-phases of the current slot.
  int run_subphases() {
    int moved = 0;
    while (subphase_ < speedup_) moved += mesh_subphase();
    return moved;
  }

  /// Returns the packets that left on LC links this slot, as (j, packet), and
  /// closes the slot.
  std::vector<std::pair<int, Packet>> collect_egress() {
    std::vector<std::pair<int, Packet>> out;
    collect_egress(out);
    return out;
  }

  void collect_egress(std::vector<std::pair<int, Packet>>& out) {
    out.clear();
    for (int row = 0; row < k_; ++row) {
      if (egress_[row].empty()) continue;
      const Flit f = egress_[row].front();
      egress_[row].pop_front();
      Packet& p = pool_[f.slot];
      p.mesh_hops = f.hops;
      p.entered = f.entered;
      out.emplace_back(row, std::move(p));
      free_.push_back(f.slot);
    }
    exited_ += static_cast<std::int64_t>(out.size());
    in_flight_ -= static_cast<std::int64_t>(out.size());
    subphase_ = 0;
    ++slot_;
  }

  std::int64_t injected() const { return injected_; }
  std::int64_t exited() const { return exited_; }
  std::int64_t in_flight() const { return in_flight_; }
  std::int64_t moved() const { return moved_; }

  /// Packets sent on the east output of router (row, col); the last column's
  /// east output is the LC link.
  std::int64_t east_count(int row, int col) const { return east_count_[index(row, col)]; }
  const std::vector<std::int64_t>& east_counts() const { return east_count_; }
  void clear_link_counters() { std::fill(east_count_.begin(), east_count_.end(), 0); }

  void set_move_observer(MoveObserver obs) { observer_ = std::move(obs); }

  /// Recounts buffered packets and checks the FIFO bound. Throws on violation.
  void check_invariants() const {
    std::int64_t held = 0;
    for (const auto& mr : routers_) {
      int here = 0;
      for (const auto& f : mr.ingress) {
        if (static_cast<int>(f.size()) > bd_) throw std::logic_error("ingress FIFO above BD");
        here += static_cast<int>(f.size());
      }
      if (here != mr.held) throw std::logic_error("router occupancy counter out of sync");
      held += here;
    }
    for (const auto& e : egress_) {
      if (e.size() > egress_cap_) throw std::logic_error("egress stage above capacity");
      held += static_cast<std::int64_t>(e.size());
    }
    if (held != in_flight_ || injected_ != exited_ + in_flight_) {
      throw std::logic_error("mesh packet conservation violated");
    }
  }

 private:
  struct Grant {
    int router;
    int ingress;
    int dir;
  };

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * depth_ + col;
  }

  // route_next_hop without the argument checks; the mesh only holds packets it
  // stamped itself.
  Direction next_hop(const Flit& f, const MiniRouter& mr) const {
    const int turn = f.turn;
    const int dst_row = f.dst_row;
    if (mr.col < turn) return Direction::east;
    if (mr.row != dst_row) {
      if (mr.col > turn) throw RoutingError("packet passed its turn column");
      return dst_row < mr.row ? Direction::north : Direction::south;
    }
    return mr.col < depth_ - 1 ? Direction::east : Direction::exit;
  }

  bool has_room(const MiniRouter& mr, int out) const {
    switch (static_cast<Direction>(out)) {
      case Direction::east:
        if (mr.col == depth_ - 1) return egress_[mr.row].size() < egress_cap_;
        return !routers_[index(mr.row, mr.col + 1)].ingress[0].full();
      case Direction::north:
        return mr.row > 0 && !routers_[index(mr.row - 1, mr.col)].ingress[2].full();
      case Direction::south:
        return mr.row < k_ - 1 && !routers_[index(mr.row + 1, mr.col)].ingress[1].full();
      default:
        return false;
    }
  }

  void apply(const Grant& g, std::int64_t tick) {
    MiniRouter& mr = routers_[g.router];
    const Cell from{mr.row, mr.col};
    const auto dir = static_cast<Direction>(g.dir);
    Flit p = mr.ingress[g.ingress].pop();
    if (observer_) {
      pool_[p.slot].mesh_hops = p.hops;
      observer_(cm_, pool_[p.slot], from, dir);
    }
    --mr.held;
    p.entered = tick;
    ++p.hops;
    MiniRouter* next = nullptr;
    switch (dir) {
      case Direction::east:
        ++east_count_[g.router];
        next = &routers_[g.router + 1];
        next->ingress[0].push(p);
        break;
      case Direction::exit:
        ++east_count_[g.router];
        egress_[from.row].push_back(p);
        break;
      case Direction::north:
        next = &routers_[index(from.row - 1, from.col)];
        next->ingress[2].push(p);
        break;
      case Direction::south:
        next = &routers_[index(from.row + 1, from.col)];
        next->ingress[1].push(p);
        break;
    }
    if (next) ++next->held;
  }

  int cm_;
  int k_;
  int depth_;
  int speedup_;
  int bd_;
  std::vector<MiniRouter> routers_;
  // Egress FIFO per row between the east-column router and LC(r, row); the LC
  // drains one packet per external slot.
  std::size_t egress_cap_;
  std::vector<std::deque<Flit>> egress_;
  std::vector<Packet> pool_;
  std::vector<std::int32_t> free_;
  std::vector<std::int64_t> east_count_;
  std::vector<Grant> grants_;
  MoveObserver observer_;
  std::int64_t slot_ = 0;
  int subphase_ = 0;
  std::int64_t injected_ = 0;
  std::int64_t exited_ = 0;
  std::int64_t in_flight_ = 0;
  std::int64_t moved_ = 0;
};

}  // namespace closudn
