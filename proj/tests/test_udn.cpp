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

#include <gtest/gtest.h>

#include <cstdlib>
#include <map>
#include <vector>

#include "closudn/traffic.hpp"
#include "closudn/udn.hpp"

namespace closudn {
namespace {

Packet to_port(int dst_global, int n, int ports, std::int64_t id = 0, int src_row = 0) {
  Packet p;
  p.id = id;
  p.dst = decompose(dst_global, n, ports);
  p.src = compose(src_row, 0, n);
  return p;
}

// Independent statement of the path rule: east along the entry row up to the
// turn column, vertical to the destination row, east to the last column.
std::vector<Cell> expected_path(int entry_row, int dst_global, int dst_row, int mesh_depth) {
  std::vector<Cell> cells;
  const int turn = dst_global % mesh_depth;
  for (int c = 0; c <= turn; ++c) cells.push_back({entry_row, c});
  const int step = dst_row > entry_row ? 1 : -1;
  for (int r = entry_row; r != dst_row;) {
    r += step;
    cells.push_back({r, turn});
  }
  for (int c = turn + 1; c < mesh_depth; ++c) cells.push_back({dst_row, c});
  return cells;
}

TEST(Routing, HandTracedTurn) {
  // 8x8 mesh, enter row 2, destination OM 5 port 45: turn at column 5.
  const Packet base = to_port(45, 8, 64);
  EXPECT_EQ(turn_column_for(base.dst, 8), 5);
  Packet p = base;
  p.turn_column = 5;
  Cell at{2, 0};
  int horizontal = 0, vertical = 0;
  std::vector<Cell> visited{at};
  for (int guard = 0; guard < 64; ++guard) {
    const Direction d = route_next_hop(p, at, 8, 8);
    if (d == Direction::exit) break;
    if (d == Direction::east) {
      ++at.col;
      ++horizontal;
    } else {
      at.row += d == Direction::south ? 1 : -1;
      ++vertical;
    }
    visited.push_back(at);
  }
  EXPECT_EQ(horizontal, 7);
  EXPECT_EQ(vertical, 3);
  EXPECT_EQ(visited, expected_path(2, 45, 5, 8));
  EXPECT_EQ(visited[5], (Cell{2, 5}));
  EXPECT_EQ(visited[8], (Cell{5, 5}));
}

TEST(Routing, SameRowIsStraight) {
  Packet p = to_port(3 * 8 + 6, 8, 64);
  p.turn_column = turn_column_for(p.dst, 8);
  for (int c = 0; c < 7; ++c) EXPECT_EQ(route_next_hop(p, {3, c}, 8, 8), Direction::east);
  EXPECT_EQ(route_next_hop(p, {3, 7}, 8, 8), Direction::exit);
}

TEST(Routing, RejectsPassedTurn) {
  Packet p = to_port(45, 8, 64);
  p.turn_column = 5;
  EXPECT_THROW(route_next_hop(p, {2, 6}, 8, 8), RoutingError);
  EXPECT_THROW(route_next_hop(p, {9, 0}, 8, 8), RoutingError);
}

TEST(Inject, EmptyMeshAccepts) {
  UdnMesh mesh(0, 8, 8, 1, 4);
  for (int row = 0; row < 8; ++row) EXPECT_TRUE(mesh.inject(row, to_port(0, 8, 64)));
}

TEST(Inject, FullInjectionFifoRefuses) {
  UdnMesh mesh(0, 8, 8, 1, 4);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(mesh.inject(3, to_port(i, 8, 64, i)));
  EXPECT_FALSE(mesh.inject(3, to_port(9, 8, 64, 9)));
  EXPECT_EQ(mesh.injected(), 4);
  mesh.check_invariants();
}

TEST(Inject, DepartureLaterInSlotDoesNotFreeRoomAtDispatch) {
  // 2x2 mesh, BD = 1. The packet injected in slot 0 leaves its FIFO during the
  // sub-phase of slot 1, which runs after slot 1's dispatch phase.
  UdnMesh mesh(0, 2, 2, 1, 1);
  EXPECT_TRUE(mesh.inject(0, to_port(0, 2, 4, 1)));
  mesh.run_subphases();
  mesh.collect_egress();
  EXPECT_FALSE(mesh.inject(0, to_port(0, 2, 4, 2)));  // dispatch of slot 1
  EXPECT_EQ(mesh.run_subphases(), 1);
  mesh.collect_egress();
  EXPECT_TRUE(mesh.inject(0, to_port(0, 2, 4, 3)));  // dispatch of slot 2
}

TEST(Subphase, SinglePacketMovesOneHopPerSubphase) {
  // Same-row packet, SP = 1: M - 1 in-mesh hops, then the exit hop.
  UdnMesh mesh(0, 8, 8, 1, 4);
  ASSERT_TRUE(mesh.inject(4, to_port(4 * 8 + 7, 8, 64)));
  mesh.run_subphases();
  EXPECT_TRUE(mesh.collect_egress().empty());  // slot 0: not yet eligible
  int slots = 0;
  std::vector<std::pair<int, Packet>> out;
  while (out.empty()) {
    ASSERT_LT(slots, 20);
    EXPECT_EQ(mesh.run_subphases(), 1);
    out = mesh.collect_egress();
    ++slots;
  }
  EXPECT_EQ(slots, 8);
  EXPECT_EQ(out[0].first, 4);
  EXPECT_EQ(out[0].second.mesh_hops, 8);
}

TEST(Subphase, SpeedupTwoHalvesTransit) {
  UdnMesh mesh(0, 8, 8, 2, 4);
  ASSERT_TRUE(mesh.inject(0, to_port(7, 8, 64)));
  mesh.run_subphases();
  mesh.collect_egress();
  int slots = 0;
  while (mesh.collect_egress().empty()) {
    ASSERT_LT(slots, 20);
    mesh.run_subphases();
    ++slots;
    if (!mesh.collect_egress().empty()) break;
  }
  EXPECT_EQ(slots, 4);
}

TEST(Subphase, RoundRobinAlternates) {
  // Two routers in one column (k = 2, M = 1). Row 0 traffic and row 1 traffic
  // (arriving from the south) contend for the exit of router (0, 0).
  UdnMesh mesh(0, 2, 1, 1, 4);
  std::vector<int> exit_sources;
  mesh.set_move_observer([&](int, const Packet& p, Cell from, Direction d) {
    if (from == Cell{0, 0} && d == Direction::exit) exit_sources.push_back(p.src.module_index);
  });
  std::int64_t id = 0;
  for (int slot = 0; slot < 200; ++slot) {
    mesh.inject(0, to_port(0, 1, 2, id++, 0));
    mesh.inject(1, to_port(0, 1, 2, id++, 1));
    mesh.run_subphases();
    mesh.collect_egress();
  }
  ASSERT_GT(exit_sources.size(), 100u);
  for (std::size_t i = 20; i + 1 < exit_sources.size(); ++i) {
    EXPECT_NE(exit_sources[i], exit_sources[i + 1]) << "at " << i;
  }
}

TEST(Subphase, FullDownstreamBlocksLink) {
  // 2x2 mesh, SP = 2 and a one-packet egress stage. Both rows send
  // to row 0, two packets per slot, while the LC drains one per slot, so the
  // second sub-phase of every steady slot finds the egress stage full.
  UdnMesh mesh(0, 2, 2, 2, 4, 1);
  std::map<int, int> exits_by_subphase;
  int sub = 0;
  int slot = 0;
  mesh.set_move_observer([&](int, const Packet&, Cell from, Direction d) {
    if (slot >= 10 && from.col == 1 && d == Direction::exit) ++exits_by_subphase[sub];
  });
  std::int64_t id = 0;
  for (slot = 0; slot < 50; ++slot) {
    mesh.inject(0, to_port(0, 2, 4, id++, 0));
    mesh.inject(1, to_port(0, 2, 4, id++, 1));
    for (sub = 0; sub < 2; ++sub) {
      mesh.mesh_subphase();
      mesh.check_invariants();
    }
    mesh.collect_egress();
  }
  EXPECT_EQ(exits_by_subphase[0], 40);
  EXPECT_EQ(exits_by_subphase[1], 0);
}

TEST(CollectEgress, OnePerRowPerSlot) {
  // k = 2, M = 1, SP = 4: both packets reach the row-0 exit in slot 1.
  UdnMesh mesh(0, 2, 1, 4, 4);
  ASSERT_TRUE(mesh.inject(0, to_port(0, 1, 2, 1, 0)));
  ASSERT_TRUE(mesh.inject(1, to_port(0, 1, 2, 2, 1)));
  mesh.run_subphases();
  EXPECT_TRUE(mesh.collect_egress().empty());
  EXPECT_EQ(mesh.run_subphases(), 3);  // exit, north, exit
  auto first = mesh.collect_egress();
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].first, 0);
  EXPECT_EQ(first[0].second.id, 1);
  EXPECT_EQ(mesh.in_flight(), 1);
  mesh.run_subphases();
  auto second = mesh.collect_egress();
  ASSERT_EQ(second.size(), 1u);
  EXPECT_EQ(second[0].second.id, 2);
}

TEST(CollectEgress, EmptyWhenNothingExits) {
  UdnMesh mesh(0, 4, 4, 1, 4);
  mesh.run_subphases();
  EXPECT_TRUE(mesh.collect_egress().empty());
}

struct MeshRun {
  std::map<std::int64_t, std::vector<Cell>> paths;
  std::map<std::int64_t, Packet> delivered;
};

// Random admissible traffic: every row offers one packet per slot with
// probability `load` to a uniform destination of an N = k * k switch.
MeshRun drive_random(UdnMesh& mesh, int slots, double load, std::uint64_t seed) {
  MeshRun run;
  const int k = mesh.rows();
  const int ports = k * k;
  mesh.set_move_observer([&](int, const Packet& p, Cell from, Direction) { run.paths[p.id].push_back(from); });
  Rng rng(seed);
  std::int64_t id = 0;
  for (int slot = 0; slot < slots; ++slot) {
    for (int row = 0; row < k; ++row) {
      if (uniform01(rng) >= load) continue;
      Packet p = to_port(uniform_int(rng, ports), k, ports, id, row);
      if (mesh.inject(row, p)) ++id;
    }
    for (int s = 0; s < mesh.speedup(); ++s) {
      mesh.mesh_subphase();
      mesh.check_invariants();
    }
    for (auto& [row, p] : mesh.collect_egress()) {
      EXPECT_EQ(row, p.dst.module_index);
      run.delivered[p.id] = p;
    }
    mesh.check_invariants();
  }
  mesh.set_move_observer(nullptr);
  return run;
}

TEST(MeshProperties, MinimalDeterministicEastwardPaths) {
  for (int sp : {1, 2}) {
    UdnMesh mesh(0, 8, 8, sp, 4);
    const MeshRun run = drive_random(mesh, 3000, 0.7, 17 + sp);
    ASSERT_GT(run.delivered.size(), 1000u);
    for (const auto& [id, p] : run.delivered) {
      const auto& path = run.paths.at(id);
      EXPECT_EQ(path, expected_path(p.src.module_index, p.dst.global, p.dst.module_index, 8));
      for (std::size_t h = 1; h < path.size(); ++h) EXPECT_GE(path[h].col, path[h - 1].col);
      EXPECT_EQ(p.mesh_hops, 7 + std::abs(p.src.module_index - p.dst.module_index) + 1);
    }
  }
}

TEST(MeshProperties, DrainsAfterInjectionStops) {
  for (int sp : {1, 2}) {
    UdnMesh mesh(0, 8, 8, sp, 4);
    drive_random(mesh, 100000, 1.0, 5);
    EXPECT_LE(mesh.in_flight(), 8 * 8 * 3 * 4 + 100000);
    int slots = 0;
    while (mesh.in_flight() > 0) {
      ASSERT_LT(slots, 100000) << "mesh did not drain";
      mesh.run_subphases();
      mesh.collect_egress();
      mesh.check_invariants();
      ++slots;
    }
    EXPECT_EQ(mesh.injected(), mesh.exited());
  }
}

TEST(MeshProperties, SmallerDepth) {
  // M < k: turn columns wrap over fewer columns.
  UdnMesh mesh(0, 8, 3, 1, 2);
  const MeshRun run = drive_random(mesh, 2000, 0.5, 8);
  ASSERT_GT(run.delivered.size(), 500u);
  for (const auto& [id, p] : run.delivered) {
    EXPECT_EQ(run.paths.at(id), expected_path(p.src.module_index, p.dst.global, p.dst.module_index, 3));
  }
}

TEST(EastCounts, LastColumnCountsExits) {
  UdnMesh mesh(0, 2, 2, 1, 4);
  ASSERT_TRUE(mesh.inject(1, to_port(3, 2, 4)));  // row 1, turn column 1
  for (int s = 0; s < 4; ++s) {
    mesh.run_subphases();
    mesh.collect_egress();
  }
  EXPECT_EQ(mesh.east_count(1, 0), 1);
  EXPECT_EQ(mesh.east_count(1, 1), 1);
  EXPECT_EQ(mesh.east_count(0, 0), 0);
  mesh.clear_link_counters();
  EXPECT_EQ(mesh.east_count(1, 1), 0);
}

}  // namespace
}  // namespace closudn
