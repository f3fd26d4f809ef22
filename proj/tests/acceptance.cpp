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
//
// Acceptance checks: one PASS/FAIL line per criterion.  Exit status is the
// number of failed criteria.

#include "fidelity.hpp"
#include "hevec/driver.hpp"
#include "identities.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

using namespace hevec;
using hevec::testing::random_inputs;
using hevec::testing::read_corpus;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void criterion(int n, const std::string &title, double limit_s,
               const std::function<Outcome()> &body) {
  auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  bool in_time = secs < limit_s;
  bool ok = o.ok && in_time;
  failures += !ok;
  std::printf("%s criterion %d (%s): %s [%.2fs, limit %.0fs%s]\n",
              ok ? "PASS" : "FAIL", n, title.c_str(), o.detail.c_str(), secs,
              limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

const char *kRowWise = "0: {i:0:4:1} [(1,4,1)]\n1: {i:0:4:1} [(1,4,1)]\n"
                       "2: {i:0:4:1} [(1,4,1)]\n3: {i:0:4:1} [(1,4,1)]\n";
const char *kDiagonal = "0: roll(1,0) {j:1:4:1} [(0,4,1)]\n"
                        "1: roll(1,0) {j:1:4:1} [(0,4,1)]\n"
                        "2: roll(1,0) {j:1:4:1} [(0,4,1)]\n"
                        "3: roll(1,0) {j:1:4:1} [(0,4,1)]\n";
// Image vectorized over an extended 8x8 block, so every (i, j) shift is a
// rotation of one vector followed by a mask.
const char *kSimoMasked = "0: {o:2:2:1, i:3:3:1, j:4:3:1} [(0,8,1),(1,8,1)]\n"
                          "1: {o:2:2:1, i:3:3:1, j:4:3:1} [(0,8,1),(1,8,1)]\n";
const char *kSisoMasked = "0: {i:2:3:1, j:3:3:1} [(0,8,1),(1,8,1)]\n"
                          "1: {i:2:3:1, j:3:3:1} [(0,8,1),(1,8,1)]\n";

struct Bench {
  std::string file;
  int64_t slots;
  bool bits; // inputs drawn from {0, 1}
};

const std::vector<Bench> &benchmarks() {
  static const std::vector<Bench> b = {
      {"conv_simo8.he", 64, false},    {"conv_siso8.he", 64, false},
      {"distance8.he", 64, false},     {"matmul4.he", 64, false},
      {"retrieval16.he", 64, true},    {"set_union8.he", 64, true},
      {"distance64.he", 4096, false},  {"matmul16.he", 256, false}};
  return b;
}

InputMap draw(const Program &p, const Bench &b, std::mt19937_64 &rng) {
  return b.bits ? random_inputs(p, rng, 0, 1) : random_inputs(p, rng, -20, 20);
}

Compiled compile_file(const std::string &file, int64_t slots, int opt,
                      const char *schedule = nullptr) {
  CompileOptions o;
  o.slots = slots;
  o.opt = opt;
  if (schedule)
    o.schedule = schedule;
  return compile(read_corpus(file), o);
}

std::string trace_tuple(const OpTrace &t) {
  return "(in " + std::to_string(t.input_vectors) + ", out " +
         std::to_string(t.output_vectors) + ", add " + std::to_string(t.add_cc) +
         ", rot " + std::to_string(t.rotations_cc) + ")";
}

bool trace_is(const OpTrace &t, int64_t in, int64_t out, int64_t add,
              int64_t rot) {
  return t.input_vectors == in && t.output_vectors == out && t.add_cc == add &&
         t.rotations_cc == rot;
}

// CP multiplications in the innermost loop body that holds a CC rotation.
void rotated_bodies(const std::vector<LStmt> &ss, std::vector<int> &cp_muls,
                    std::vector<int> &rots) {
  int r = 0, m = 0;
  for (const LStmt &s : ss) {
    if (s.kind == LStmt::Kind::For)
      rotated_bodies(s.body, cp_muls, rots);
    r += s.kind == LStmt::Kind::Rot && s.itype == IType::CC;
    m += s.kind == LStmt::Kind::Instr && s.itype == IType::CP &&
         s.op == BinOp::Mul;
  }
  if (r > 0) {
    rots.push_back(r);
    cp_muls.push_back(m);
  }
}

bool has_native_mask_filter_let(const LoopNestProgram &p) {
  std::function<bool(const std::vector<LStmt> &)> native_mul =
      [&](const std::vector<LStmt> &ss) {
        for (const LStmt &s : ss) {
          if (s.kind == LStmt::Kind::For && native_mul(s.body))
            return true;
          if (s.kind == LStmt::Kind::Instr && s.itype == IType::N &&
              s.op == BinOp::Mul)
            return true;
        }
        return false;
      };
  bool decl = false;
  for (const LStmt &s : p.stmts)
    if (s.kind == LStmt::Kind::Decl && s.type == VType::N &&
        s.name.rfind("__partial", 0) == 0)
      decl = true;
  return decl && native_mul(p.stmts);
}

} // namespace

int main() {
  criterion(1, "distance 4x4 layout traces", 1, [] {
    std::mt19937_64 rng(1);
    Compiled row = compile_file("distance4.he", 4, 0, kRowWise);
    Compiled diag = compile_file("distance4.he", 4, 0, kDiagonal);
    InputMap in = random_inputs(row.program, rng);
    RunResult r = run(row, in), d = run(diag, in);
    Nest want = interpret(row.program, in);
    bool ok = trace_is(r.trace, 5, 4, 8, 8) && trace_is(d.trace, 5, 1, 3, 3) &&
              r.output == want && d.output == want;
    return Outcome{ok, "row-wise " + trace_tuple(r.trace) + ", diagonal " +
                           trace_tuple(d.trace)};
  });

  criterion(2, "epoch-1 search on distance 4x4", 5, [] {
    std::mt19937_64 rng(2);
    CompileOptions o;
    o.slots = 4;
    o.epochs = 1;
    Compiled s = compile(read_corpus("distance4.he"), o);
    Compiled row = compile_file("distance4.he", 4, 0, kRowWise);
    OpTrace t = run(s, random_inputs(s.program, rng)).trace;
    bool ok = s.cost.total <= row.cost.total && trace_is(t, 5, 1, 3, 3);
    return Outcome{ok, "cost " + std::to_string(s.cost.total) + " vs row-wise " +
                           std::to_string(row.cost.total) + ", trace " +
                           trace_tuple(t)};
  });

  criterion(3, "rotate-and-reduce uses log2(e) rotations and ops", 1, [] {
    Outcome o;
    for (int64_t e : {2, 4, 8, 16})
      for (int64_t n : {e, e - 1}) {
        if (n < 2 || (n == e - 1 && e == 2))
          continue;
        std::string src = "input x: [" + std::to_string(n) +
                          "] from client\nsum(x)\n";
        std::string sched = "0: {} [(0," + std::to_string(e) + ",1)]\n";
        CompileOptions opt;
        opt.slots = e;
        opt.schedule = sched;
        Compiled c = compile(src, opt);
        std::mt19937_64 rng(e);
        InputMap in = random_inputs(c.program, rng);
        RunResult r = run(c, in);
        int64_t ops = r.trace.add_cc + r.trace.add_cp + r.trace.mul_cp +
                      r.trace.mul_cc + r.trace.sub_cc + r.trace.sub_cp;
        bool ok = r.trace.rotations_cc == ceil_log2(e) && ops == ceil_log2(e) &&
                  r.output == interpret(c.program, in);
        o.ok &= ok;
        o.detail += (o.detail.empty() ? "" : ", ") + std::string("n=") +
                    std::to_string(n) + "/e=" + std::to_string(e) + ": " +
                    std::to_string(r.trace.rotations_cc) + " rot " +
                    std::to_string(ops) + " ops";
      }
    return o;
  });

  criterion(4, "simulator equals interpreter on the benchmarks", 120, [] {
    Outcome o;
    std::mt19937_64 rng(4);
    for (const Bench &b : benchmarks()) {
      Compiled c = compile_file(b.file, b.slots, 1);
      int good = 0;
      for (int t = 0; t < 20; ++t) {
        InputMap in = draw(c.program, b, rng);
        good += run(c, in).output == interpret(c.program, in);
      }
      o.ok &= good == 20;
      o.detail += (o.detail.empty() ? "" : ", ") + b.file + " " +
                  std::to_string(good) + "/20";
    }
    return o;
  });

  criterion(5, "conv hoists mask x filter and halves CP multiplications", 30, [] {
    Outcome o;
    for (auto [file, sched] : {std::pair{"conv_simo8.he", kSimoMasked},
                               std::pair{"conv_siso8.he", kSisoMasked}}) {
      Compiled c0 = compile_file(file, 64, 0, sched);
      Compiled c1 = compile_file(file, 64, 1, sched);
      std::vector<int> m0, r0, m1, r1;
      rotated_bodies(c0.loopnest.stmts, m0, r0);
      rotated_bodies(c1.loopnest.stmts, m1, r1);
      bool ok = !r0.empty() && !r1.empty();
      for (size_t k = 0; k < r0.size(); ++k)
        ok &= m0[k] == 2 * r0[k];
      for (size_t k = 0; k < r1.size(); ++k)
        ok &= m1[k] == r1[k];
      bool native = has_native_mask_filter_let(c1.loopnest);
      std::mt19937_64 rng(5);
      InputMap in = random_inputs(c1.program, rng, -20, 20);
      RunResult a = run(c0, in), b = run(c1, in);
      Nest want = interpret(c1.program, in);
      ok &= native && a.output == want && b.output == want &&
            b.trace.mul_cp * 2 == a.trace.mul_cp;
      o.ok &= ok;
      o.detail += (o.detail.empty() ? "" : "; ") + std::string(file) +
                  ": CP muls per rotated vector " +
                  std::to_string(m0.empty() ? -1 : m0[0]) + " -> " +
                  std::to_string(m1.empty() ? -1 : m1[0]) + ", native let " +
                  (native ? "yes" : "no") + ", mul_cp " +
                  std::to_string(a.trace.mul_cp) + " -> " +
                  std::to_string(b.trace.mul_cp);
    }
    return o;
  });

  criterion(6, "rewrites are sound and never raise the cost", 60, [] {
    Outcome o;
    int families = 0, seed = 6;
    for (const auto &f : hevec::testing::identity_families()) {
      int held = hevec::testing::identity_holds(f, seed++);
      bool ok = f.sound ? held == 1000 : held < 1000;
      o.ok &= ok;
      families += ok;
      if (!ok)
        o.detail += "identity '" + f.name + "' held " + std::to_string(held) +
                    "/1000; ";
    }
    o.detail += std::to_string(families) + " identity families ok";
    std::mt19937_64 rng(6);
    int circuits = 0;
    for (const Bench &b : benchmarks()) {
      Compiled c = compile_file(b.file, b.slots, 0);
      // Re-run generation to get the unhoisted circuit for this schedule.
      CircuitProgram before = cgen(c.index_free, c.schedule, b.slots);
      CircuitProgram after = optimize(before, CostWeights{});
      double cb = cost(before, CostWeights{}).total;
      double ca = cost(after, CostWeights{}).total;
      bool ok = ca <= cb + 1e-9;
      for (int t = 0; t < 3 && ok; ++t) {
        InputMap in = draw(c.program, b, rng);
        CircuitEvaluator eb(before, in), ea(after, in);
        ok = decode_output(after, ea.outputs()) == decode_output(before, eb.outputs());
      }
      o.ok &= ok;
      circuits += ok;
      if (!ok)
        o.detail += "; " + b.file + " failed";
    }
    o.detail += ", " + std::to_string(circuits) + " corpus circuits ok";
    return o;
  });

  criterion(7, "no plain-plain operation outside native lets", 10, [] {
    Outcome o;
    int checked = 0;
    for (const Bench &b : benchmarks())
      for (int opt = 0; opt < 2; ++opt) {
        Compiled c = compile_file(b.file, b.slots, opt);
        int left = count_plain_ops(c.circuit);
        o.ok &= left == 0;
        ++checked;
        if (left)
          o.detail += b.file + " opt" + std::to_string(opt) + ": " +
                      std::to_string(left) + " left; ";
      }
    o.detail += std::to_string(checked) + " compiled programs checked";
    return o;
  });

  criterion(8, "exhaustive materialization fidelity", 60, [] {
    Outcome o;
    std::mt19937_64 rng(8);
    int pairs = 0, fails = 0;
    for (const Bench &b : benchmarks()) {
      IndexFreeProgram p = to_index_free(hevec::testing::load_checked(b.file));
      auto res = hevec::testing::fidelity_sweep(p, 256, 3, 256, rng);
      pairs += res.pairs;
      fails += res.failures;
      if (res.failures)
        o.detail += b.file + ": " + res.first_failure + "; ";
    }
    o.ok = fails == 0 && pairs > 0;
    o.detail += std::to_string(pairs) + " traversal/layout pairs, " +
                std::to_string(fails) + " failures";
    return o;
  });

  std::printf("SKIP criterion 9 (wall-clock timings of an HE library): not "
              "reproducible here; covered by operation counts above\n");
  return failures;
}
