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

#include "hevec/cgen.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace hevec;
using hevec::testing::load_checked;
using hevec::testing::random_inputs;

namespace {

OutputLayout vec_layout(std::vector<OutDim> dims,
                        std::vector<ExplodedDim> exploded = {},
                        Preprocess pre = {}) {
  OutputLayout l;
  l.pre = pre;
  l.dims = std::move(dims);
  l.exploded = std::move(exploded);
  return l;
}

OutDim vec(int dim, int64_t extent) {
  return {OutDim::Kind::Vec, dim, extent, 1, extent};
}
OutDim red(int64_t e) { return {OutDim::Kind::Reduced, 0, e, 1, e}; }
OutDim rep(int64_t e) { return {OutDim::Kind::Repeated, 0, e, 1, e}; }

// Walks a rotate-and-reduce chain and records its rotation amounts.
void rotations(const CPtr &c, std::vector<int64_t> &out, int &ops) {
  if (c->kind == CNode::Kind::Op) {
    ++ops;
    if (c->kids[1]->kind == CNode::Kind::Rot)
      out.push_back(c->kids[1]->offset.constant);
    rotations(c->kids[0], out, ops);
  }
}

bool matches_interpreter(const Program &p, const CircuitProgram &c,
                         std::mt19937_64 &rng, int trials) {
  for (int t = 0; t < trials; ++t) {
    InputMap in = random_inputs(p, rng);
    CircuitEvaluator ev(c, in);
    if (!(decode_output(c, ev.outputs()) == interpret(p, in)))
      return false;
  }
  return true;
}

const char *kDiagonal = "0: roll(1,0) {j:1:4:1} [(0,4,1)]\n"
                        "1: roll(1,0) {j:1:4:1} [(0,4,1)]\n"
                        "2: roll(1,0) {j:1:4:1} [(0,4,1)]\n"
                        "3: roll(1,0) {j:1:4:1} [(0,4,1)]\n";
const char *kRowWise = "0: {i:0:4:1} [(1,4,1)]\n1: {i:0:4:1} [(1,4,1)]\n"
                       "2: {i:0:4:1} [(1,4,1)]\n3: {i:0:4:1} [(1,4,1)]\n";

} // namespace

TEST(ReducePreprocess, Cases) {
  EXPECT_EQ(*reduce_preprocess(1, Preprocess::roll(1, 0)), Preprocess::identity());
  EXPECT_FALSE(reduce_preprocess(0, Preprocess::roll(1, 0)));
  EXPECT_EQ(*reduce_preprocess(3, Preprocess::identity()), Preprocess::identity());
  EXPECT_EQ(*reduce_preprocess(0, Preprocess::roll(2, 1)), Preprocess::roll(1, 0));
}

TEST(ReduceLayout, OutermostVectorDimRepeats) {
  auto r = reduce_layout(1, vec_layout({vec(1, 4)}, {{"i", 0, 4, 1}}));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first.str(), "{i:0:4:1} [rep(4)]");
  ASSERT_EQ(r->second.size(), 1u);
  EXPECT_FALSE(r->second[0].exploded);
}

TEST(ReduceLayout, InnerVectorDimLeavesGarbage) {
  auto r = reduce_layout(1, vec_layout({vec(0, 4), vec(1, 4)}));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first.str(), "{} [(0,4,1), red(4)]");
  EXPECT_EQ(r->second[0].width, 1);
}

TEST(ReduceLayout, ExplodedDimIsRemovedAndRollCleared) {
  auto r = reduce_layout(
      1, vec_layout({vec(0, 4)}, {{"j", 1, 4, 1}}, Preprocess::roll(1, 0)));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first.str(), "{} [(0,4,1)]");
  ASSERT_EQ(r->second.size(), 1u);
  EXPECT_TRUE(r->second[0].exploded);
  EXPECT_EQ(r->second[0].name, "j");
  EXPECT_FALSE(reduce_layout(
      0, vec_layout({vec(0, 4)}, {{"j", 1, 4, 1}}, Preprocess::roll(1, 0))));
}

TEST(ReduceLayout, RankOneFullyExploded) {
  auto r = reduce_layout(0, vec_layout({}, {{"a", 0, 4, 1}}));
  ASSERT_TRUE(r);
  EXPECT_TRUE(r->first.exploded.empty());
  EXPECT_TRUE(r->first.dims.empty());
  EXPECT_EQ(r->second.size(), 1u);
}

TEST(GenReduce, RotationChains) {
  auto chain = [](int64_t e, int64_t w) {
    ReducedDim r;
    r.extent = e;
    r.width = w;
    r.valid = e;
    std::vector<int64_t> rots;
    int ops = 0;
    rotations(gen_reduce(BinOp::Add, CNode::var("c", true), {r}), rots, ops);
    std::reverse(rots.begin(), rots.end());
    return std::make_pair(rots, ops);
  };
  EXPECT_EQ(chain(4, 1), std::make_pair(std::vector<int64_t>{-2, -1}, 2));
  EXPECT_EQ(chain(16, 16),
            std::make_pair(std::vector<int64_t>{-128, -64, -32, -16}, 4));
  EXPECT_EQ(chain(1, 1), std::make_pair(std::vector<int64_t>{}, 0));
  for (int64_t e : {2, 4, 8, 16}) {
    auto [rots, ops] = chain(e, 1);
    EXPECT_EQ(static_cast<int>(rots.size()), ceil_log2(e));
    EXPECT_EQ(ops, ceil_log2(e));
  }
}

TEST(GenReduce, SlotSimulationLeavesFold) {
  std::mt19937_64 rng(5);
  for (BinOp op : {BinOp::Add, BinOp::Mul})
    for (int64_t e : {2, 4, 8})
      for (bool outer : {true, false}) {
        // outer: [e, 2] with the reduced dim outermost; else [2, e].
        OutputLayout ol = outer ? vec_layout({vec(0, e), vec(1, 2)})
                                : vec_layout({vec(1, 2), vec(0, e)});
        auto r = reduce_layout(0, ol);
        ASSERT_TRUE(r);
        CircuitProgram p;
        p.slots = 4 * e;
        VarEntry v;
        v.cipher = true;
        MaterializedVector mv;
        mv.array = "x";
        mv.offsets = {0, 0};
        VecDim d0, d1;
        d0.extent = outer ? e : 2;
        d0.content = {{outer ? 0 : 1, 1}};
        d1.extent = outer ? 2 : e;
        d1.content = {{outer ? 1 : 0, 1}};
        mv.dims = {d0, d1};
        v.map[{}] = CObject::vector(mv);
        p.reg.vars["x"] = v;
        CLet l;
        l.name = "out";
        l.body = gen_reduce(op, CNode::var("x", true), r->second);
        p.lets.push_back(l);
        Nest x({e, 2});
        for (auto &val : x.data)
          val = static_cast<int64_t>(rng() % 5) - 2;
        InputMap in{{"x", x}};
        CircuitEvaluator ev(p, in);
        std::vector<int64_t> got = ev.let_value("out", {});
        for (int64_t s = 0; s < p.slots; ++s) {
          int64_t b = s % (2 * e);
          int64_t other = outer ? b % 2 : b / e;
          int64_t q = outer ? b / 2 : b % e;
          int64_t want = x.at({0, other});
          for (int64_t k = 1; k < e; ++k)
            want = apply_binop(op, want, x.at({k, other}));
          if (outer || q == 0)
            EXPECT_EQ(got[s], want) << "e=" << e << " slot " << s;
        }
        EXPECT_EQ(r->first.dims[outer ? 0 : 1].kind,
                  outer ? OutDim::Kind::Repeated : OutDim::Kind::Reduced);
      }
}

TEST(Coerce, Lattice) {
  OutputLayout diag = vec_layout({vec(0, 4)});
  EXPECT_TRUE(coerce(OutputLayout::top(), diag));
  EXPECT_TRUE(coerce(vec_layout({rep(4), vec(0, 4)}), diag));
  EXPECT_FALSE(coerce(diag, vec_layout({rep(4), vec(0, 4)})));
  EXPECT_FALSE(coerce(vec_layout({red(4)}), vec_layout({})));
  EXPECT_TRUE(coerce(vec_layout({rep(2), rep(4)}), vec_layout({})));
  EXPECT_TRUE(coerce(diag, diag));
}

TEST(Cgen, DiagonalDistance) {
  Program prog = load_checked("distance4.he");
  IndexFreeProgram p = to_index_free(prog);
  CircuitProgram c = cgen(p, parse_schedule(kDiagonal, p, 16), 16);
  ASSERT_EQ(c.lets.size(), 1u);
  EXPECT_EQ(print(*c.out().body),
            "sum_vec{j_0:4}(((rot(-1*j_0, ct1) - pt1) * (rot(-1*j_0, ct1) - pt1)))");
  EXPECT_TRUE(c.out().dims.empty());
  std::mt19937_64 rng(1);
  EXPECT_TRUE(matches_interpreter(prog, c, rng, 20));
}

TEST(Cgen, RowWiseDistanceRepeats) {
  Program prog = load_checked("distance4.he");
  IndexFreeProgram p = to_index_free(prog);
  CircuitProgram c = cgen(p, parse_schedule(kRowWise, p, 16), 16);
  EXPECT_EQ(c.out().layout.str(), "{i_0:0:4:1} [rep(4)]");
  ASSERT_EQ(c.out().dims.size(), 1u);
  std::mt19937_64 rng(2);
  EXPECT_TRUE(matches_interpreter(prog, c, rng, 20));
}

TEST(Cgen, LiteralOnlyProgram) {
  Program prog = check(parse("for i: 3 { 2 * 3 + 1 }"));
  CircuitProgram c = cgen(to_index_free(prog), {}, 8);
  ASSERT_EQ(c.lets.size(), 1u);
  EXPECT_EQ(c.out().body->kind, CNode::Kind::Lit);
  EXPECT_EQ(c.out().body->value, 7);
  Nest n = decode_output(c, {});
  EXPECT_EQ(n.data, std::vector<int64_t>({7, 7, 7}));
}

TEST(Cgen, MismatchedOperandLayoutsAreInvalid) {
  Program prog = check(parse("input a: [2,2] from server\n"
                             "input x: [2,2] from client\n"
                             "for i: 2 { for j: 2 { a[i][j] * x[i][j] } }"));
  IndexFreeProgram p = to_index_free(prog);
  Schedule s = parse_schedule("0: {i:0:2:1} [(1,2,1)]\n1: {j:1:2:1} [(0,2,1)]\n",
                              p, 4);
  EXPECT_THROW(cgen(p, s, 4), ScheduleInvalid);
}

TEST(Cgen, ReducingTheRollPartnerIsInvalid) {
  Program prog = check(parse("input a: [4,4] from client\n"
                             "for j: 4 { sum(for i: 4 { a[i][j] }) }"));
  IndexFreeProgram p = to_index_free(prog);
  Schedule s = parse_schedule("0: roll(0,1) {i:0:4:1} [(1,4,1)]\n", p, 4);
  EXPECT_THROW(cgen(p, s, 4), ScheduleInvalid);
}

TEST(Cgen, PaddedReductionsMaskPadding) {
  Program prog = check(parse("input a: [3] from client\n"
                             "input b: [3] from client\n"
                             "sum(a) * product(for i: 3 { b[i] + 1 })"));
  IndexFreeProgram p = to_index_free(prog);
  Schedule s = parse_schedule("0: {} [(0,4,1)]\n1: {} [(0,4,1)]\n", p, 8);
  CircuitProgram c = cgen(p, s, 8);
  std::mt19937_64 rng(3);
  EXPECT_TRUE(matches_interpreter(prog, c, rng, 20));
}

TEST(Cgen, Deterministic) {
  IndexFreeProgram p = to_index_free(load_checked("matmul4.he"));
  Schedule s = initial_schedule(p);
  EXPECT_EQ(print(cgen(p, s, 16)), print(cgen(p, s, 16)));
}

TEST(Cgen, RandomValidSchedulesPreserveSemantics) {
  std::mt19937_64 rng(17);
  for (const std::string &name : hevec::testing::small_corpus()) {
    Program prog = load_checked(name);
    IndexFreeProgram p = to_index_free(prog);
    int checked = 0;
    for (int walk = 0; walk < 4; ++walk) {
      Schedule s = initial_schedule(p);
      for (int step = 0; step < 6; ++step) {
        auto ns = neighbors(s, p, {3, 64});
        std::shuffle(ns.begin(), ns.end(), rng);
        bool moved = false;
        for (const Schedule &n : ns) {
          try {
            CircuitProgram c = cgen(p, n, 64);
            bool low = name == "retrieval16.he" || name == "set_union8.he";
            std::mt19937_64 r2(rng());
            for (int t = 0; t < 3; ++t) {
              InputMap in = low ? random_inputs(prog, r2, 0, 1)
                                : random_inputs(prog, r2);
              CircuitEvaluator ev(c, in);
              ASSERT_EQ(decode_output(c, ev.outputs()), interpret(prog, in))
                  << name << "\n" << print_schedule(n, p);
            }
            s = n;
            moved = true;
            ++checked;
            break;
          } catch (const ScheduleInvalid &) {
          }
        }
        if (!moved)
          break;
      }
    }
    EXPECT_GT(checked, 4) << name;
  }
}
