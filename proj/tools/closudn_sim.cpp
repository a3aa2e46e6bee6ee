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

// Sweep runner: reads a key = value config, runs every grid point and writes
// one CSV row per point.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "closudn/experiment.hpp"

namespace {

int fail(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "error: " << e << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace closudn;

  CLI::App app{"Slot-level simulator for Clos-UDN, MSM and MMM packet switches"};
  std::string config_path;
  std::string out_path;
  std::string pop_path;
  std::string profile_name = "ci";
  std::optional<std::int64_t> slots;
  std::optional<std::uint64_t> seed;
  int parallel = 1;
  app.add_option("--config", config_path, "Experiment config (key = value lines)")->required();
  app.add_option("--out", out_path, "CSV output path (stdout when omitted)");
  app.add_option("--slots", slots, "Total slots per run, overrides config and profile");
  app.add_option("--seed", seed, "Base seed; point i uses seed + i");
  app.add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--profile", profile_name, "Default scale: ci (64 ports, 1e5 slots) or paper (256 ports, 1e6 slots)")
      ->check(CLI::IsMember({"ci", "paper"}));
  app.add_option("--pop-east", pop_path, "Sidecar CSV with east-link usage proportions");
  CLI11_PARSE(app, argc, argv);

  std::ifstream cfg(config_path);
  if (!cfg) return fail({"cannot open config '" + config_path + "'"});
  ExperimentSpec spec;
  if (auto errors = parse_config(cfg, spec); !errors.empty()) return fail(errors);
  apply_profile(spec, *parse_profile(profile_name));
  if (slots) {
    if (*slots < 1) return fail({"--slots must be positive"});
    spec.base.slots = *slots;
  }
  if (seed) spec.seed = *seed;

  std::vector<RunPoint> points;
  try {
    points = expand(spec);
  } catch (const ConfigError& e) {
    return fail(e.errors());
  }

  std::size_t first = 0;
  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    std::ifstream existing(out_path);
    std::optional<std::size_t> done;
    if (existing) done = resumable_rows(existing, points);
    existing.close();
    if (done) {
      first = *done;
      out_file.open(out_path, std::ios::app);
      if (first > 0) std::cerr << "resuming after " << first << " finished rows\n";
    } else {
      out_file.open(out_path, std::ios::trunc);
      out_file << kCsvHeader << '\n' << std::flush;
    }
    if (!out_file) return fail({"cannot write '" + out_path + "'"});
    out = &out_file;
  } else {
    std::cout << kCsvHeader << '\n';
  }

  std::ofstream pop_file;
  if (!pop_path.empty()) {
    pop_file.open(pop_path, first > 0 ? std::ios::app : std::ios::trunc);
    if (!pop_file) return fail({"cannot write '" + pop_path + "'"});
    if (first == 0) pop_file << "point,cm,row,col,proportion\n";
  }

  try {
    run_points(points, first, parallel, [&](std::size_t i, const RunSummary& r) {
      *out << csv_row(points[i], r) << '\n' << std::flush;
      if (pop_file.is_open()) pop_file << pop_east_rows(i, points[i], r) << std::flush;
      const auto& p = points[i];
      std::fprintf(stderr, "[%zu/%zu] %s %s load=%s  throughput=%.4f  delay=%s\n", i + 1, points.size(),
                   std::string(to_string(p.config.architecture)).c_str(),
                   std::string(to_string(p.traffic.kind)).c_str(), format_echo(p.traffic.load).c_str(),
                   r.throughput, r.mean_delay ? format_fixed(*r.mean_delay).c_str() : "NA");
    });
  } catch (const std::exception& e) {
    return fail({e.what()});
  }
  return 0;
}
