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

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "closudn/core.hpp"

namespace closudn {

/// Fixed-capacity FIFO over a ring. Capacity is set once at construction.
template <typename T>
class BoundedFifo {
 public:
  BoundedFifo() = default;
  explicit BoundedFifo(std::size_t capacity) : slots_(capacity) {}

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  bool full() const { return size_ == slots_.size(); }

  const T& front() const {
    assert(size_ > 0);
    return slots_[head_];
  }
  T& front() {
    assert(size_ > 0);
    return slots_[head_];
  }

  // Returns false (and leaves the queue untouched) when full.
  bool push(T value) {
    if (full()) return false;
    std::size_t tail = head_ + size_;
    if (tail >= slots_.size()) tail -= slots_.size();
    slots_[tail] = std::move(value);
    ++size_;
    return true;
  }

  T pop() {
    assert(size_ > 0);
    T out = std::move(slots_[head_]);
    if (++head_ == slots_.size()) head_ = 0;
    --size_;
    return out;
  }

  template <typename F>
  void for_each(F&& f) const {
    std::size_t idx = head_;
    for (std::size_t i = 0; i < size_; ++i) {
      f(slots_[idx]);
      if (++idx == slots_.size()) idx = 0;
    }
  }

 private:
  std::vector<T> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

/// Counts per-flow sequence inversions at departure. A departure whose
/// flow_seq is below the highest already departed on its flow counts once.
class OrderTracker {
 public:
  explicit OrderTracker(int ports = 0)
      : ports_(ports), max_seq_(static_cast<std::size_t>(ports) * ports, -1) {}

  // Returns true when the departure is an inversion.
  bool record(const Packet& p) {
    auto& seen = max_seq_[static_cast<std::size_t>(p.src.global) * ports_ + p.dst.global];
    if (p.flow_seq < seen) {
      ++inversions_;
      return true;
    }
    seen = p.flow_seq;
    return false;
  }

  std::int64_t inversions() const { return inversions_; }

 private:
  int ports_;
  std::vector<std::int64_t> max_seq_;
  std::int64_t inversions_ = 0;
};

/// Unbounded per-port output buffers. Each buffer emits at most one packet per
/// slot; a packet deposited in slot s is eligible from slot s+1.
class OutputStage {
 public:
  explicit OutputStage(int ports = 0) : buffers_(ports), order_(ports) {}

  void deposit(Packet p, std::int64_t slot) {
    p.entered = slot;
    auto& q = buffers_[p.dst.global];
    q.push_back(std::move(p));
    ++occupancy_;
  }

  // Emits one packet from every buffer whose head is eligible, appending to
  // `out`. Returns the number of inversions among the emitted packets.
  std::int64_t emit(std::int64_t slot, std::vector<Packet>& out) {
    std::int64_t inv = 0;
    for (auto& q : buffers_) {
      if (q.empty() || q.front().entered >= slot) continue;
      Packet p = std::move(q.front());
      q.pop_front();
      --occupancy_;
      p.departure_slot = slot;
      if (order_.record(p)) ++inv;
      out.push_back(std::move(p));
    }
    return inv;
  }

  std::int64_t occupancy() const { return occupancy_; }
  std::size_t buffer_size(int port) const { return buffers_[port].size(); }
  const OrderTracker& order() const { return order_; }

 private:
  std::vector<std::deque<Packet>> buffers_;
  OrderTracker order_;
  std::int64_t occupancy_ = 0;
};

}  // namespace closudn
