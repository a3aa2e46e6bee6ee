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

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "closudn/core.hpp"

namespace closudn {

// ---------------------------------------------------------------------------
// Closed-form models
// ---------------------------------------------------------------------------

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Probability that a saturated router ingress sends back a flow-control
/// signal: [P_p (1 - P_serv)]^BD.
inline double p_ctr(double p_present, double p_serv, int buffer_depth) {
  return std::pow(p_present * (1.0 - p_serv), buffer_depth);
}

struct BlockingModelInput {
  double rho = 0.5;
  double mu = 1.0;
  int buffer_depth = 4;
  int n_ingr = 4;
};

/// Mean blocking delay of an IM FIFO head feeding a UDN west column.
/// P_p is taken as rho (M/D/1 server utilization); P_serv = 1 / n_ingr.
/// An empty system (rho = 0) has no blocking.
inline double blocking_delay(const BlockingModelInput& in) {
  if (!(in.rho >= 0.0) || in.rho >= 1.0) throw DomainError("blocking_delay needs 0 <= rho < 1");
  if (!(in.mu > 0.0)) throw DomainError("blocking_delay needs mu > 0");
  if (in.rho == 0.0) return 0.0;
  const double ctrl = p_ctr(in.rho, 1.0 / in.n_ingr, in.buffer_depth);
  const double p_fwd = in.rho * (1.0 - ctrl);
  const double mu_mod = p_fwd * in.mu;
  return (1.0 / (2.0 * mu_mod)) * (in.rho / (1.0 - in.rho));
}

/// M/D/1 mean waiting time with unit service.
inline double md1_wait(double rho) {
  if (!(rho >= 0.0) || rho >= 1.0) throw DomainError("md1_wait needs 0 <= rho < 1");
  return rho / (2.0 * (1.0 - rho));
}

/// Crosspoints of the CRRD IM arbiter interconnect: floor(3/4 nkm(nk-1)(m-1)).
inline std::uint64_t crrd_crosspoints(std::uint64_t n, std::uint64_t k, std::uint64_t m) {
  if (n == 0 || k == 0 || m == 0) return 0;
  const std::uint64_t prod = n * k * m * (n * k - 1) * (m - 1);
  return 3 * (prod / 4) + 3 * (prod % 4) / 4;
}

// ---------------------------------------------------------------------------
// Run metrics
// ---------------------------------------------------------------------------

/// Accumulates statistics over the measured (post warm-up) part of a run.
/// Merge is plain addition, so per-thread accumulators can be combined.
struct RunMetrics {
  std::int64_t injected = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::int64_t inversions = 0;
  double delay_sum = 0.0;
  double im_wait_sum = 0.0;
  std::int64_t im_wait_count = 0;
  std::map<std::int64_t, std::int64_t> delay_histogram;
  // pop_east[cm][row * M + col]
  std::vector<std::vector<std::int64_t>> pop_east;

  void record_departure(std::int64_t delay) {
    ++delivered;
    delay_sum += static_cast<double>(delay);
    ++delay_histogram[delay];
  }

  RunMetrics& operator+=(const RunMetrics& o) {
    injected += o.injected;
    delivered += o.delivered;
    dropped += o.dropped;
    inversions += o.inversions;
    delay_sum += o.delay_sum;
    im_wait_sum += o.im_wait_sum;
    im_wait_count += o.im_wait_count;
    for (const auto& [d, c] : o.delay_histogram) delay_histogram[d] += c;
    if (pop_east.size() < o.pop_east.size()) pop_east.resize(o.pop_east.size());
    for (std::size_t r = 0; r < o.pop_east.size(); ++r) {
      if (pop_east[r].size() < o.pop_east[r].size()) pop_east[r].resize(o.pop_east[r].size(), 0);
      for (std::size_t l = 0; l < o.pop_east[r].size(); ++l) pop_east[r][l] += o.pop_east[r][l];
    }
    return *this;
  }
};

/// Flat per-run record.
struct RunSummary {
  std::int64_t measured_slots = 0;
  std::int64_t delivered = 0;
  std::int64_t injected = 0;
  std::int64_t dropped = 0;
  double throughput = 0.0;
  std::optional<double> mean_delay;  // undefined when nothing was delivered
  std::optional<double> mean_im_wait;
  std::int64_t inversions = 0;
  double ooo_fraction = 0.0;
  // pop_east[cm][row * M + col], proportions of all east-link traversals.
  std::vector<std::vector<double>> pop_east;
};

inline RunSummary finalize(const RunMetrics& m, std::int64_t measured_slots, int ports) {
  RunSummary s;
  s.measured_slots = measured_slots;
  s.delivered = m.delivered;
  s.injected = m.injected;
  s.dropped = m.dropped;
  s.inversions = m.inversions;
  if (measured_slots > 0 && ports > 0) {
    s.throughput = static_cast<double>(m.delivered) / (static_cast<double>(ports) * measured_slots);
  }
  if (m.delivered > 0) {
    s.mean_delay = m.delay_sum / static_cast<double>(m.delivered);
    s.ooo_fraction = static_cast<double>(m.inversions) / static_cast<double>(m.delivered);
  }
  if (m.im_wait_count > 0) s.mean_im_wait = m.im_wait_sum / static_cast<double>(m.im_wait_count);
  std::int64_t east_total = 0;
  for (const auto& links : m.pop_east) {
    for (auto c : links) east_total += c;
  }
  for (const auto& links : m.pop_east) {
    std::vector<double> props(links.size(), 0.0);
    if (east_total > 0) {
      for (std::size_t l = 0; l < links.size(); ++l) props[l] = static_cast<double>(links[l]) / east_total;
    }
    s.pop_east.push_back(std::move(props));
  }
  return s;
}

/// Coefficient of variation of the east-link proportions, pooled over all CMs
/// (0 = perfectly even).
inline double pop_unevenness(const std::vector<std::vector<double>>& pop) {
  std::vector<double> all;
  for (const auto& cm : pop) all.insert(all.end(), cm.begin(), cm.end());
  if (all.empty()) return 0.0;
  double mean = 0.0;
  for (double v : all) mean += v;
  mean /= static_cast<double>(all.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double v : all) var += (v - mean) * (v - mean);
  var /= static_cast<double>(all.size());
  return std::sqrt(var) / mean;
}

}  // namespace closudn
