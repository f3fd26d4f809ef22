// Copyright 2026 The hevec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hevec/schedule.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace hevec;
using hevec::testing::load_checked;

namespace {

IndexFreeProgram distance() {
  return to_index_free(load_checked("distance4.he"));
}

} // namespace

TEST(Schedule, InitialLayoutExplodesEverything) {
  IndexFreeProgram p = distance();
  Schedule s = initial_schedule(p);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.at(1).str(), "{i_1:0:4:1, j_1:1:4:1} []");
  EXPECT_EQ(s.at(1).block_size(), 1);
}

TEST(Schedule, VectorizePadsToPowerOfTwo) {
  Program prog = check(parse("input a: [3] from client\nsum(a)"));
  IndexFreeProgram p = to_index_free(prog);
  Layout l = vectorize_dim(initial_schedule(p).at(0), p.sites[0], "a_d0_0", 8);
  ASSERT_EQ(l.vectorized.size(), 1u);
  EXPECT_EQ(l.vectorized[0].extent, 4);
  EXPECT_EQ(l.vectorized[0].valid, 3);
  EXPECT_THROW(vectorize_dim(initial_schedule(p).at(0), p.sites[0], "a_d0_0", 2),
               ScheduleInvalid);
}

TEST(Schedule, TileSplitsExtentAndStride) {
  IndexFreeProgram p = distance();
  Layout l = tile_dim(initial_schedule(p).at(1), p.sites[1], "j_1", 2);
  EXPECT_EQ(l.str(), "{i_1:0:4:1, j_1_s1:1:2:1, j_1_s2:1:2:2} []");
  EXPECT_THROW(tile_dim(l, p.sites[1], "i_1", 3), ScheduleInvalid);
}

TEST(Schedule, RollNeedsVectorizedPartner) {
  IndexFreeProgram p = distance();
  Layout l = initial_schedule(p).at(0);
  EXPECT_FALSE(roll_applicable(l, p.sites[0], "j_0"));
  l = vectorize_dim(l, p.sites[0], "i_0", 16);
  EXPECT_TRUE(roll_applicable(l, p.sites[0], "j_0"));
  Layout r = apply_roll(l, p.sites[0], "j_0");
  EXPECT_EQ(r.pre, Preprocess::roll(1, 0));
}

TEST(Schedule, RollIsABijectionOnPositions) {
  IndexFreeProgram p = distance();
  for (int site : {0, 1}) {
    Layout l = vectorize_dim(initial_schedule(p).at(site), p.sites[site],
                             "i_" + std::to_string(site), 16);
    Layout r = apply_roll(l, p.sites[site], "j_" + std::to_string(site));
    const auto &dims = p.sites[site].traversal.dims;
    std::set<std::vector<int64_t>> plain, rolled;
    for (const auto &c : coordinates(l.exploded))
      for (int64_t s = 0; s < l.block_size(); ++s) {
        plain.insert(*layout_position(l, dims, c, s));
        rolled.insert(*layout_position(r, dims, c, s));
      }
    EXPECT_EQ(plain, rolled);
    EXPECT_EQ(rolled.size(), 16u);
  }
}

TEST(Schedule, PaddingSlotsHaveNoPosition) {
  Program prog = check(parse("input a: [3] from client\nsum(a)"));
  IndexFreeProgram p = to_index_free(prog);
  Layout l = vectorize_dim(initial_schedule(p).at(0), p.sites[0], "a_d0_0", 8);
  EXPECT_TRUE(layout_position(l, p.sites[0].traversal.dims, {}, 2));
  EXPECT_FALSE(layout_position(l, p.sites[0].traversal.dims, {}, 3));
}

TEST(Schedule, ParseRoundTripsThroughPrint) {
  IndexFreeProgram p = distance();
  Schedule s = parse_schedule("0: roll(1,0) {j:1:4:1} [(0,4,1)]\n"
                              "1: roll(1,0) {j:1:4:1} [(0,4,1)]\n",
                              p, 16);
  EXPECT_EQ(s.at(0).str(), "roll(1,0) {j_0:1:4:1} [(0,4,1)]");
  EXPECT_EQ(s.at(2).str(), initial_schedule(p).at(2).str());
  std::string text;
  for (const auto &[id, l] : s)
    text += std::to_string(id) + ": " + l.str() + "\n";
  EXPECT_EQ(serialize(parse_schedule(text, p, 16)), serialize(s));
}

TEST(Schedule, ParseRejectsBadLayouts) {
  IndexFreeProgram p = distance();
  EXPECT_THROW(parse_schedule("0: {i:0:4:1} []\n", p, 16), ParseError);
  EXPECT_THROW(parse_schedule("1: {} [(0,4,1),(1,4,1)]\n", p, 8), ParseError);
  EXPECT_THROW(parse_schedule("1: roll(1,0) {i:0:4:1} [(1,4,1)]\n", p, 16),
               ParseError);
  EXPECT_THROW(parse_schedule("9: {} []\n", p, 16), ParseError);
}

TEST(Schedule, NeighborsAreDistinctAndTilingIsEpochGated) {
  IndexFreeProgram p = distance();
  Schedule s = initial_schedule(p);
  auto count_tiled = [&](const std::vector<Schedule> &ns) {
    int n = 0;
    for (const auto &x : ns)
      for (const auto &[id, l] : x)
        n += l.exploded.size() + l.vectorized.size() >
             p.sites[id].traversal.dims.size();
    return n;
  };
  auto e1 = neighbors(s, p, {1, 16});
  auto e2 = neighbors(s, p, {2, 16});
  EXPECT_EQ(count_tiled(e1), 0);
  EXPECT_GT(count_tiled(e2), 0);
  std::set<std::string> keys;
  for (const auto &x : e2)
    EXPECT_TRUE(keys.insert(serialize(x)).second);
  EXPECT_FALSE(keys.count(serialize(s)));
}

TEST(Schedule, GroupMoveVectorizesAllSitesOfAClass) {
  IndexFreeProgram p = distance();
  bool found = false;
  for (const Schedule &n : neighbors(initial_schedule(p), p, {1, 16})) {
    int vec = 0;
    for (const auto &[id, l] : n)
      vec += !l.vectorized.empty();
    found = found || vec == 4;
  }
  EXPECT_TRUE(found);
}
