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
#include <span>
#include <stdexcept>
#include <vector>

#include "closudn/buffers.hpp"
#include "closudn/core.hpp"

namespace closudn {

// ---------------------------------------------------------------------------
// MSM with concurrent round-robin dispatching (CRRD)
// ---------------------------------------------------------------------------

/// VOQ slot of output OP(j, h) inside an MSM input module: v = h * k + j, so
/// neighbouring VOQs belong to different OMs. A run of LI pointers sitting on
/// consecutive VOQs then requests distinct LCs.
inline int msm_voq_index(const PortAddress& dst, int k) { return dst.local_port * k + dst.module_index; }
inline int msm_voq_om(int v, int k) { return v % k; }

/// IM(i) of the MSM switch: one VOQ per switch output, one round-robin arbiter
/// per LI link (over VOQs) and one per VOQ (over LI links).
struct MsmInputModule {
  int index = 0;
  std::vector<std::deque<Packet>> voqs;
  std::vector<int> link_ptr;  // m entries, VOQ index
  std::vector<int> voq_ptr;   // N entries, link index

  MsmInputModule(int i, int ports, int m) : index(i), voqs(ports), link_ptr(m, 0), voq_ptr(ports, 0) {}

  int links() const { return static_cast<int>(link_ptr.size()); }

  bool eligible(int v, std::int64_t slot) const {
    return !voqs[v].empty() && voqs[v].front().arrival_slot < slot;
  }
};

struct VoqLinkMatch {
  int voq;
  int link;
  int iteration;
};

/// Phase 1 of CRRD: `iterations` rounds of request / grant / accept between
/// the unmatched eligible VOQs and the unmatched LI links. Pointers are not
/// touched here; see commit_crrd_pointers.
inline std::vector<VoqLinkMatch> crrd_match(const MsmInputModule& im, int iterations, std::int64_t slot) {
  const int ports = static_cast<int>(im.voqs.size());
  const int m = im.links();
  std::vector<int> voq_link(ports, -1);
  std::vector<int> link_voq(m, -1);
  std::vector<int> grant_to(m, -1);
  std::vector<VoqLinkMatch> out;

  for (int it = 0; it < iterations; ++it) {
    // Each unmatched link grants one requesting VOQ, round-robin.
    bool any_grant = false;
    for (int r = 0; r < m; ++r) {
      grant_to[r] = -1;
      if (link_voq[r] >= 0) continue;
      for (int step = 0; step < ports; ++step) {
        const int v = (im.link_ptr[r] + step) % ports;
        if (voq_link[v] < 0 && im.eligible(v, slot)) {
          grant_to[r] = v;
          any_grant = true;
          break;
        }
      }
    }
    if (!any_grant) break;
    // Each granted VOQ accepts one link, round-robin from its own pointer.
    for (int r = 0; r < m; ++r) {
      const int v = grant_to[r];
      if (v < 0 || voq_link[v] >= 0) continue;
      int accepted = -1;
      for (int step = 0; step < m; ++step) {
        const int cand = (im.voq_ptr[v] + step) % m;
        if (grant_to[cand] == v) {
          accepted = cand;
          break;
        }
      }
      voq_link[v] = accepted;
      link_voq[accepted] = v;
      out.push_back({v, accepted, it});
    }
  }
  return out;
}

inline void commit_crrd_pointers(MsmInputModule& im, const VoqLinkMatch& match) {
  im.link_ptr[match.link] = (match.voq + 1) % static_cast<int>(im.voqs.size());
  im.voq_ptr[match.voq] = (match.link + 1) % im.links();
}

/// A phase-1 winner asking CM(link) for LC(link, om).
struct CmRequest {
  int im;
  int link;
  int voq;
  int om;
};

/// Phase 2 for one CM: each LC(r, j) grants one request, round-robin over IMs
/// from `lc_ptr[j]`. Returns the indices (into `requests`) that won, and
/// advances the pointer of every granting LC one past the winner.
inline std::vector<int> msm_cm_match(std::span<const CmRequest> requests, std::vector<int>& lc_ptr, int k) {
  std::vector<int> best(lc_ptr.size(), -1);
  std::vector<int> best_dist(lc_ptr.size(), k + 1);
  for (int idx = 0; idx < static_cast<int>(requests.size()); ++idx) {
    const auto& q = requests[idx];
    const int dist = (q.im - lc_ptr[q.om] + k) % k;
    if (dist < best_dist[q.om]) {
      best_dist[q.om] = dist;
      best[q.om] = idx;
    }
  }
  std::vector<int> granted;
  for (int j = 0; j < static_cast<int>(best.size()); ++j) {
    if (best[j] < 0) continue;
    granted.push_back(best[j]);
    lc_ptr[j] = (requests[best[j]].im + 1) % k;
  }
  return granted;
}

/// Memory-space-memory Clos switch with bufferless CMs. A packet granted in
/// both CRRD phases crosses IM -> CM -> OM within the slot and lands in its OP
/// buffer.
class MsmFabric {
 public:
  explicit MsmFabric(const SwitchConfig& config) : config_(validate(config)), outputs_(config_.ports()) {
    if (config_.architecture != Architecture::msm) throw ConfigError({"MsmFabric needs architecture msm"});
    for (int i = 0; i < config_.k; ++i) ims_.emplace_back(i, config_.ports(), config_.m);
    lc_ptr_.assign(config_.m, std::vector<int>(config_.k, 0));
    requests_.resize(config_.m);
  }

  const SwitchConfig& config() const { return config_; }
  std::int64_t slot() const { return slot_; }

  SlotReport slot_step(std::span<const Packet> arrivals) {
    SlotReport rep;
    departures_.clear();
    for (const Packet& p : arrivals) {
      ++rep.arrived;
      auto& voq = ims_[p.src.module_index].voqs[msm_voq_index(p.dst, config_.k)];
      if (config_.im_fifo_capacity && static_cast<std::int64_t>(voq.size()) >= *config_.im_fifo_capacity) {
        ++rep.dropped;
        ++dropped_;
        continue;
      }
      voq.push_back(p);
      ++im_occupancy_;
    }

    for (auto& r : requests_) r.clear();
    for (auto& im : ims_) {
      auto matches = crrd_match(im, config_.iterations, slot_);
      check_conflict_free(matches);
      for (const auto& mt : matches) {
        const int om = msm_voq_om(mt.voq, config_.k);
        requests_[mt.link].push_back({im.index, mt.link, mt.voq, om});
      }
    }

    for (int r = 0; r < config_.m; ++r) {
      const auto granted = msm_cm_match(requests_[r], lc_ptr_[r], config_.k);
      for (int idx : granted) {
        const auto& q = requests_[r][idx];
        auto& im = ims_[q.im];
        commit_crrd_pointers(im, {q.voq, q.link, 0});
        Packet p = std::move(im.voqs[q.voq].front());
        im.voqs[q.voq].pop_front();
        --im_occupancy_;
        p.dispatch_slot = slot_;
        p.cm = r;
        outputs_.deposit(std::move(p), slot_);
      }
    }

    rep.inversions = outputs_.emit(slot_, departures_);
    rep.delivered = static_cast<std::int64_t>(departures_.size());
    rep.occupancy = occupancy();
    ++slot_;
    return rep;
  }

  std::span<const Packet> departures() const { return departures_; }
  std::int64_t occupancy() const { return im_occupancy_ + outputs_.occupancy(); }
  std::int64_t dropped() const { return dropped_; }
  std::int64_t inversions() const { return outputs_.order().inversions(); }
  const std::vector<MsmInputModule>& input_modules() const { return ims_; }

 private:
  void check_conflict_free(const std::vector<VoqLinkMatch>& matches) const {
    std::vector<char> voq_used(config_.ports(), 0), link_used(config_.m, 0);
    for (const auto& mt : matches) {
      if (voq_used[mt.voq]++ || link_used[mt.link]++) throw std::logic_error("CRRD produced a conflicting match");
    }
  }

  SwitchConfig config_;
  std::vector<MsmInputModule> ims_;
  std::vector<std::vector<int>> lc_ptr_;
  std::vector<std::vector<CmRequest>> requests_;
  OutputStage outputs_;
  std::vector<Packet> departures_;
  std::int64_t slot_ = 0;
  std::int64_t im_occupancy_ = 0;
  std::int64_t dropped_ = 0;
};

// ---------------------------------------------------------------------------
// MMM: buffered IM, CM and OM
// ---------------------------------------------------------------------------

/// Memory-memory-memory Clos switch.
///
/// Per input port: k VOQs (one per OM) and m VCMQs (one per CM). Per CM: k x k
/// crosspoint buffers of b cells. Per OM: m x n crosspoint buffers of b cells,
/// which also act as the output buffers. Every transfer into a crosspoint is
/// credit-gated; a CM crosspoint credit is taken when a cell enters a VCMQ and
/// returned when the cell leaves the crosspoint.
///
/// Stages are served output-first each slot, so a cell advances at most one
/// stage per slot and space freed by a departure is reusable in the same slot.
class MmmFabric {
 public:
  explicit MmmFabric(const SwitchConfig& config) : config_(validate(config)), order_(config_.ports()) {
    if (config_.architecture != Architecture::mmm) throw ConfigError({"MmmFabric needs architecture mmm"});
    const int n = config_.n, k = config_.k, m = config_.m;
    const int ports = config_.ports();
    voq_.assign(static_cast<std::size_t>(ports) * k, {});
    vcmq_.assign(static_cast<std::size_t>(ports) * m, {});
    in_ptr_.assign(ports, 0);
    vc_ptr_.assign(ports, 0);
    li_ptr_.assign(static_cast<std::size_t>(k) * m, 0);
    cm_xp_.assign(static_cast<std::size_t>(m) * k * k, {});
    credit_.assign(static_cast<std::size_t>(m) * k * k, config_.crosspoint_b);
    lc_ptr_.assign(static_cast<std::size_t>(m) * k, 0);
    om_xp_.assign(static_cast<std::size_t>(k) * m * n, {});
    op_ptr_.assign(ports, 0);
  }

  const SwitchConfig& config() const { return config_; }
  std::int64_t slot() const { return slot_; }

  SlotReport slot_step(std::span<const Packet> arrivals) {
    SlotReport rep;
    departures_.clear();
    const int n = config_.n, k = config_.k, m = config_.m;
    const auto b = static_cast<std::size_t>(config_.crosspoint_b);

    for (const Packet& p : arrivals) {
      ++rep.arrived;
      auto& q = voq_[voq_index(p.src.global, p.dst.module_index)];
      if (config_.im_fifo_capacity && static_cast<std::int64_t>(q.size()) >= *config_.im_fifo_capacity) {
        ++rep.dropped;
        ++dropped_;
        continue;
      }
      Packet c = p;
      c.entered = slot_;
      q.push_back(std::move(c));
      ++occupancy_;
    }

    // OP emission: round-robin over the OM crosspoints of each output.
    for (int j = 0; j < k; ++j) {
      for (int h = 0; h < n; ++h) {
        const int port = j * n + h;
        for (int step = 0; step < m; ++step) {
          const int r = (op_ptr_[port] + step) % m;
          auto& xp = om_xp_[om_index(j, r, h)];
          if (xp.empty() || xp.front().entered >= slot_) continue;
          Packet p = std::move(xp.front());
          xp.pop_front();
          --occupancy_;
          p.departure_slot = slot_;
          if (order_.record(p)) ++rep.inversions;
          departures_.push_back(std::move(p));
          op_ptr_[port] = (r + 1) % m;
          break;
        }
      }
    }

    // LC(r, j): round-robin over the CM crosspoints (i, j) whose head has room
    // in its OM crosspoint.
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < k; ++j) {
        int& ptr = lc_ptr_[static_cast<std::size_t>(r) * k + j];
        for (int step = 0; step < k; ++step) {
          const int i = (ptr + step) % k;
          auto& xp = cm_xp_[cm_index(r, i, j)];
          if (xp.empty() || xp.front().entered >= slot_) continue;
          auto& dst = om_xp_[om_index(j, r, xp.front().dst.local_port)];
          if (dst.size() >= b) continue;
          Packet p = std::move(xp.front());
          xp.pop_front();
          ++credit_[cm_index(r, i, j)];
          p.entered = slot_;
          dst.push_back(std::move(p));
          ptr = (i + 1) % k;
          break;
        }
      }
    }

    // LI(i, r): round-robin over the n VCMQs of IM(i) bound for CM(r).
    for (int i = 0; i < k; ++i) {
      for (int r = 0; r < m; ++r) {
        int& ptr = li_ptr_[static_cast<std::size_t>(i) * m + r];
        for (int step = 0; step < n; ++step) {
          const int h = (ptr + step) % n;
          auto& q = vcmq_[vcmq_index(i * n + h, r)];
          if (q.empty() || q.front().entered >= slot_) continue;
          Packet p = std::move(q.front());
          q.pop_front();
          p.entered = slot_;
          p.cm = r;
          auto& xp = cm_xp_[cm_index(r, i, p.dst.module_index)];
          if (xp.size() >= b) throw std::logic_error("CM crosspoint overflow");
          xp.push_back(std::move(p));
          ptr = (h + 1) % n;
          break;
        }
      }
    }

    // Input arbiters: pick a VOQ (RR or LQF) that holds a credit at some CM
    // and move its head into the VCMQ of the first such CM, round-robin.
    for (int s = 0; s < config_.ports(); ++s) {
      const int i = s / n;
      const int v = select_voq(s, i);
      if (v < 0) continue;
      int chosen = -1;
      for (int step = 0; step < m; ++step) {
        const int r = (vc_ptr_[s] + step) % m;
        if (credit_[cm_index(r, i, v)] > 0) {
          chosen = r;
          break;
        }
      }
      auto& q = voq_[voq_index(s, v)];
      Packet p = std::move(q.front());
      q.pop_front();
      --credit_[cm_index(chosen, i, v)];
      p.entered = slot_;
      p.dispatch_slot = slot_;
      vcmq_[vcmq_index(s, chosen)].push_back(std::move(p));
      vc_ptr_[s] = (chosen + 1) % m;
      if (config_.mmm_selection == InputSelection::rr) in_ptr_[s] = (v + 1) % k;
    }

    rep.delivered = static_cast<std::int64_t>(departures_.size());
    rep.occupancy = occupancy_;
    ++slot_;
    return rep;
  }

  std::span<const Packet> departures() const { return departures_; }
  std::int64_t occupancy() const { return occupancy_; }
  std::int64_t dropped() const { return dropped_; }
  std::int64_t inversions() const { return order_.inversions(); }

  /// Largest CM or OM crosspoint occupancy right now.
  std::size_t max_crosspoint_occupancy() const {
    std::size_t best = 0;
    for (const auto& q : cm_xp_) best = std::max(best, q.size());
    for (const auto& q : om_xp_) best = std::max(best, q.size());
    return best;
  }

 private:
  std::size_t voq_index(int port, int om) const { return static_cast<std::size_t>(port) * config_.k + om; }
  std::size_t vcmq_index(int port, int cm) const { return static_cast<std::size_t>(port) * config_.m + cm; }
  std::size_t cm_index(int r, int i, int j) const {
    return (static_cast<std::size_t>(r) * config_.k + i) * config_.k + j;
  }
  std::size_t om_index(int j, int r, int h) const {
    return (static_cast<std::size_t>(j) * config_.m + r) * config_.n + h;
  }

  bool has_credit(int i, int om) const {
    for (int r = 0; r < config_.m; ++r) {
      if (credit_[cm_index(r, i, om)] > 0) return true;
    }
    return false;
  }

  // Returns the OM index of the selected VOQ, or -1.
  int select_voq(int port, int i) const {
    const int k = config_.k;
    if (config_.mmm_selection == InputSelection::rr) {
      for (int step = 0; step < k; ++step) {
        const int v = (in_ptr_[port] + step) % k;
        const auto& q = voq_[voq_index(port, v)];
        if (!q.empty() && q.front().entered < slot_ && has_credit(i, v)) return v;
      }
      return -1;
    }
    int best = -1;
    std::size_t best_len = 0;
    for (int v = 0; v < k; ++v) {
      const auto& q = voq_[voq_index(port, v)];
      if (q.empty() || q.front().entered >= slot_ || !has_credit(i, v)) continue;
      if (q.size() > best_len) {
        best = v;
        best_len = q.size();
      }
    }
    return best;
  }

  SwitchConfig config_;
  std::vector<std::deque<Packet>> voq_;
  std::vector<std::deque<Packet>> vcmq_;
  std::vector<int> in_ptr_;
  std::vector<int> vc_ptr_;
  std::vector<int> li_ptr_;
  std::vector<std::deque<Packet>> cm_xp_;
  std::vector<int> credit_;
  std::vector<int> lc_ptr_;
  std::vector<std::deque<Packet>> om_xp_;
  std::vector<int> op_ptr_;
  OrderTracker order_;
  std::vector<Packet> departures_;
  std::int64_t slot_ = 0;
  std::int64_t occupancy_ = 0;
  std::int64_t dropped_ = 0;
};

}  // namespace closudn
