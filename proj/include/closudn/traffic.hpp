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
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "closudn/core.hpp"

namespace closudn {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline int uniform_int(Rng& rng, int bound) {
  return std::uniform_int_distribution<int>(0, bound - 1)(rng);
}

enum class TrafficKind { bernoulli_uniform, bursty_uniform, unbalanced, diagonal };

inline std::string_view to_string(TrafficKind t) {
  switch (t) {
    case TrafficKind::bernoulli_uniform: return "bernoulli_uniform";
    case TrafficKind::bursty_uniform: return "bursty_uniform";
    case TrafficKind::unbalanced: return "unbalanced";
    case TrafficKind::diagonal: return "diagonal";
  }
  return "?";
}

inline std::optional<TrafficKind> parse_traffic(std::string_view s) {
  if (s == "bernoulli_uniform" || s == "uniform") return TrafficKind::bernoulli_uniform;
  if (s == "bursty_uniform" || s == "bursty") return TrafficKind::bursty_uniform;
  if (s == "unbalanced" || s == "hotspot") return TrafficKind::unbalanced;
  if (s == "diagonal") return TrafficKind::diagonal;
  return std::nullopt;
}

struct TrafficModel {
  TrafficKind kind = TrafficKind::bernoulli_uniform;
  double load = 0.5;        // per input port
  double omega = 0.0;       // unbalanced only
  double mean_burst = 10.0; // bursty only

  /// Hot-spot traffic is unbalanced traffic with omega = 0.5.
  static TrafficModel hot_spot(double load) {
    return TrafficModel{TrafficKind::unbalanced, load, 0.5, 10.0};
  }

  friend bool operator==(const TrafficModel&, const TrafficModel&) = default;
};

inline void validate(const TrafficModel& t) {
  std::vector<std::string> errors;
  if (!(t.load >= 0.0 && t.load <= 1.0)) errors.emplace_back("load outside [0, 1]");
  if (!(t.omega >= 0.0 && t.omega <= 1.0)) errors.emplace_back("omega outside [0, 1]");
  if (!(t.mean_burst >= 1.0)) errors.emplace_back("mean_burst < 1");
  if (t.kind == TrafficKind::bursty_uniform && t.load >= 1.0) {
    errors.emplace_back("bursty traffic needs load < 1");
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

/// Per-slot leave-ON probability of the bursty source: bursts are geometric
/// with mean B.
inline double burst_end_probability(double mean_burst) { return 1.0 / mean_burst; }

/// Per-slot OFF->ON probability of the two-state chain, chosen so that the
/// stationary ON fraction equals the load.
inline double burst_start_probability(double load, double mean_burst) {
  return load / (mean_burst * (1.0 - load));
}

/// Start probability used by the generator. Idle gaps are geometric on
/// {0, 1, ...} with the same mean B(1-rho)/rho as the two-state chain, which
/// keeps the source valid for every load below one (the chain saturates at
/// rho = B/(B+1)).
inline double burst_start_probability_gapless(double load, double mean_burst) {
  if (load <= 0.0) return 0.0;
  return load / (load + mean_burst * (1.0 - load));
}

struct Arrival {
  PortAddress src;
  PortAddress dst;
};

/// On/off state of one bursty input.
struct BurstState {
  bool on = false;
  PortAddress current_dst;
};

class TrafficGenerator {
 public:
  TrafficGenerator(TrafficModel model, int n, int k, Rng& rng)
      : model_(model), n_(n), ports_(n * k), bursts_(static_cast<std::size_t>(n) * k) {
    validate(model_);
    if (model_.kind == TrafficKind::bursty_uniform) {
      p_start_ = burst_start_probability_gapless(model_.load, model_.mean_burst);
      p_end_ = burst_end_probability(model_.mean_burst);
      // Start from the stationary distribution.
      for (auto& b : bursts_) {
        b.on = uniform01(rng) < model_.load;
        if (b.on) b.current_dst = port(uniform_int(rng, ports_));
      }
    }
  }

  const TrafficModel& model() const { return model_; }
  const BurstState& burst_state(int input) const { return bursts_[input]; }

  /// At most one arrival per input per slot, appended to `out` in input order.
  void generate_slot(Rng& rng, std::vector<Arrival>& out) {
    out.clear();
    for (int s = 0; s < ports_; ++s) {
      switch (model_.kind) {
        case TrafficKind::bernoulli_uniform:
          if (uniform01(rng) < model_.load) out.push_back({port(s), port(uniform_int(rng, ports_))});
          break;
        case TrafficKind::unbalanced:
          if (uniform01(rng) < model_.load) {
            int d = uniform01(rng) < model_.omega ? s : uniform_int(rng, ports_);
            out.push_back({port(s), port(d)});
          }
          break;
        case TrafficKind::diagonal:
          if (uniform01(rng) < model_.load) out.push_back({port(s), port(s)});
          break;
        case TrafficKind::bursty_uniform: {
          auto& b = bursts_[s];
          if (!b.on && uniform01(rng) < p_start_) {
            b.on = true;
            b.current_dst = port(uniform_int(rng, ports_));
          }
          if (b.on) {
            out.push_back({port(s), b.current_dst});
            if (uniform01(rng) < p_end_) b.on = false;
          }
          break;
        }
      }
    }
  }

  std::vector<Arrival> generate_slot(Rng& rng) {
    std::vector<Arrival> out;
    generate_slot(rng, out);
    return out;
  }

 private:
  PortAddress port(int global) const { return compose(global / n_, global % n_, n_); }

  TrafficModel model_;
  int n_;
  int ports_;
  std::vector<BurstState> bursts_;
  double p_start_ = 0.0;
  double p_end_ = 1.0;
};

}  // namespace closudn
