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

#include "hevec/frontend.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace hevec;
using hevec::testing::load_checked;
using hevec::testing::read_corpus;

namespace {

Nest nest(Shape s, std::vector<int64_t> data) {
  Nest n(std::move(s));
  n.data = std::move(data);
  return n;
}

// Straight-line reference implementations of the corpus benchmarks, written
// without the interpreter so the two can be compared.
Nest distance_ref(const Nest &point, const Nest &tests) {
  int64_t n = point.shape[0];
  Nest out({tests.shape[0]});
  for (int64_t i = 0; i < tests.shape[0]; ++i)
    for (int64_t j = 0; j < n; ++j) {
      int64_t d = point.data[j] - tests.data[i * n + j];
      out.data[i] += d * d;
    }
  return out;
}

Nest matmul_ref(const Nest &a, const Nest &b) {
  int64_t n = a.shape[0];
  Nest out({n, n});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t k = 0; k < n; ++k)
        out.data[i * n + j] += a.data[i * n + k] * b.data[k * n + j];
  return out;
}

Nest conv_simo_ref(const Nest &img, const Nest &filter) {
  int64_t w = img.shape[0], o = filter.shape[0], r = w - 2;
  Nest out({r, r, o});
  for (int64_t x = 0; x < r; ++x)
    for (int64_t y = 0; y < r; ++y)
      for (int64_t f = 0; f < o; ++f) {
        int64_t acc = 0;
        for (int64_t i = 0; i < 3; ++i)
          for (int64_t j = 0; j < 3; ++j)
            acc += img.data[(x + i) * w + y + j] * filter.data[f * 9 + i * 3 + j];
        out.data[(x * r + y) * o + f] = acc;
      }
  return out;
}

Nest conv_siso_ref(const Nest &img, const Nest &filter) {
  int64_t w = img.shape[0], r = w - 2;
  Nest out({r, r});
  for (int64_t x = 0; x < r; ++x)
    for (int64_t y = 0; y < r; ++y)
      for (int64_t i = 0; i < 3; ++i)
        for (int64_t j = 0; j < 3; ++j)
          out.data[x * r + y] +=
              img.data[(x + i) * w + y + j] * filter.data[i * 3 + j];
  return out;
}

int64_t retrieval_ref(const Nest &keys, const Nest &values, const Nest &query) {
  int64_t n = keys.shape[0], b = keys.shape[1], acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    int64_t m = 1;
    for (int64_t j = 0; j < b; ++j) {
      int64_t d = query.data[j] - keys.data[i * b + j];
      m *= 1 - d * d;
    }
    acc += values.data[i] * m;
  }
  return acc;
}

int64_t set_union_ref(const InputMap &in) {
  const Nest &aid = in.at("a_id"), &bid = in.at("b_id");
  const Nest &ad = in.at("a_data"), &bd = in.at("b_data");
  int64_t n = aid.shape[0], b = aid.shape[1], acc = 0;
  for (int64_t v : ad.data)
    acc += v;
  for (int64_t j = 0; j < n; ++j) {
    int64_t absent = 1;
    for (int64_t i = 0; i < n; ++i) {
      int64_t eq = 1;
      for (int64_t k = 0; k < b; ++k) {
        int64_t d = aid.data[i * b + k] - bid.data[j * b + k];
        eq *= 1 - d * d;
      }
      absent *= 1 - eq;
    }
    acc += bd.data[j] * absent;
  }
  return acc;
}

} // namespace

TEST(Parse, ScalarLiteral) {
  Program p = parse("42");
  ASSERT_TRUE(p.stmts.empty());
  EXPECT_EQ(p.output->kind, Expr::Kind::Literal);
  EXPECT_EQ(p.output->value, 42);
  EXPECT_TRUE(check(p).output->shape.empty());
}

TEST(Parse, SumDesugarsToReduceOverFor) {
  Program p = parse(read_corpus("distance4.he"));
  const Expr &f = *p.output;
  ASSERT_EQ(f.kind, Expr::Kind::For);
  EXPECT_EQ(f.extent, 4);
  const Expr &r = *f.kids[0];
  ASSERT_EQ(r.kind, Expr::Kind::Reduce);
  EXPECT_EQ(r.op, BinOp::Add);
  EXPECT_EQ(r.dim, 0);
  EXPECT_EQ(r.kids[0]->kind, Expr::Kind::For);
}

TEST(Parse, RejectsIndexVariableProduct) {
  try {
    parse(read_corpus("bad_index.he"));
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line, 16); // below the license header
    EXPECT_NE(std::string(e.what()).find("multiplied"), std::string::npos);
  }
}

TEST(Parse, ReportsLineAndColumn) {
  try {
    parse("input a: [4] from client\nlet b = a + in\nb");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_EQ(e.col, 13);
  }
}

TEST(Parse, AffineNormalForm) {
  Program p = parse("input a: [9] from client\nfor i: 3 { a[2*(i+1) - i + 3] }");
  const Affine &a = p.output->kids[0]->indices[0];
  EXPECT_EQ(a.constant, 5);
  EXPECT_EQ(a.coeff("i"), 1);
}

TEST(Parse, PrintReparseFixpointOnCorpus) {
  for (const char *name :
       {"distance4.he", "distance64.he", "conv_simo8.he", "conv_siso8.he",
        "matmul4.he", "matmul16.he", "retrieval16.he", "set_union8.he"}) {
    Program p = parse(read_corpus(name));
    std::string once = print(p);
    Program q = parse(once);
    EXPECT_TRUE(structurally_equal(p, q)) << name;
    EXPECT_EQ(print(q), once) << name;
  }
}

TEST(Parse, NegativeLiteralsAndOffsetsRoundTrip) {
  Program p = parse(
      "input a: [4] from client\nfor i: 4 { (a[i - 1] - -2) * a[-i + 3] }");
  Program q = parse(print(p));
  EXPECT_TRUE(structurally_equal(p, q));
}

TEST(Check, DistanceOutputShape) {
  Program p = load_checked("distance4.he");
  EXPECT_EQ(p.output->shape, Shape({4}));
  EXPECT_TRUE(p.output->cipher);
}

TEST(Check, ReduceOfLiteralIsScalar) {
  Program p = check(parse("sum(for i: 5 { 7 })"));
  EXPECT_TRUE(p.output->shape.empty());
  EXPECT_FALSE(p.output->cipher);
}

TEST(Check, Errors) {
  EXPECT_THROW(check(parse("input a: [2] from client\ninput b: [3] from client\n"
                           "a + b")),
               CheckError);
  EXPECT_THROW(check(parse("reduce(+, 1, for i: 3 { 1 })")), CheckError);
  EXPECT_THROW(check(parse("reduce(-, 0, for i: 3 { 1 })")), CheckError);
  EXPECT_THROW(check(parse("for i: 3 { b[i] }")), CheckError);
  EXPECT_THROW(check(parse("input a: [3] from client\nfor i: 3 { a[j] }")),
               CheckError);
  EXPECT_THROW(check(parse("input a: [3] from client\nfor i: 3 { i[0] }")),
               CheckError);
}

TEST(Check, ServerOnlyProgramIsPlain) {
  Program p = load_checked("matmul4.he");
  EXPECT_TRUE(p.stmts[3].expr->cipher);
  EXPECT_EQ(p.output->shape, Shape({4, 4}));
}

TEST(Interpret, DistanceIdentity) {
  Program p = load_checked("distance4.he");
  InputMap in;
  in["a"] = nest({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  in["x"] = nest({4}, {1, 0, 0, 0});
  EXPECT_EQ(interpret(p, in).data, std::vector<int64_t>({0, 2, 2, 2}));
}

TEST(Interpret, MatmulIdentity) {
  Program p = check(parse("input A: [2,2] from server\ninput B: [2,2] from "
                          "client\nfor i: 2 { for j: 2 { sum(for k: 2 { "
                          "A[i][k] * B[k][j] }) } }"));
  InputMap in;
  in["A"] = nest({2, 2}, {1, 2, 3, 4});
  in["B"] = nest({2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(interpret(p, in).data, std::vector<int64_t>({1, 2, 3, 4}));
}

TEST(Interpret, OutOfRangeIndexReadsZero) {
  Program p =
      check(parse("input a: [3] from client\nfor i: 3 { a[i + 1] + a[i - 1] }"));
  InputMap in;
  in["a"] = nest({3}, {1, 2, 3});
  EXPECT_EQ(interpret(p, in).data, std::vector<int64_t>({2, 4, 2}));
}

TEST(Interpret, ZeroInputsGiveZeroOutput) {
  for (const auto &name : hevec::testing::small_corpus()) {
    if (name.rfind("retrieval", 0) == 0 || name.rfind("set_union", 0) == 0)
      continue; // literal 1 terms make zero inputs map to nonzero outputs
    Program p = load_checked(name);
    std::mt19937_64 rng(1);
    InputMap in = hevec::testing::random_inputs(p, rng, 0, 0);
    Nest out = interpret(p, in);
    for (int64_t v : out.data)
      EXPECT_EQ(v, 0) << name;
  }
}

TEST(Interpret, MissingInput) {
  Program p = load_checked("distance4.he");
  EXPECT_THROW(interpret(p, {}), Error);
}

TEST(Interpret, AgreesWithStraightLineReferences) {
  std::mt19937_64 rng(7);
  Program d8 = load_checked("distance8.he"), d64 = load_checked("distance64.he");
  Program simo = load_checked("conv_simo8.he"),
          siso = load_checked("conv_siso8.he");
  Program mm = load_checked("matmul4.he"), ret = load_checked("retrieval16.he");
  Program su = load_checked("set_union8.he");
  for (int trial = 0; trial < 20; ++trial) {
    auto in = hevec::testing::random_inputs(d8, rng);
    EXPECT_EQ(interpret(d8, in), distance_ref(in["point"], in["tests"]));
    in = hevec::testing::random_inputs(d64, rng);
    EXPECT_EQ(interpret(d64, in), distance_ref(in["point"], in["tests"]));
    in = hevec::testing::random_inputs(simo, rng);
    EXPECT_EQ(interpret(simo, in), conv_simo_ref(in["img"], in["filter"]));
    in = hevec::testing::random_inputs(siso, rng);
    EXPECT_EQ(interpret(siso, in), conv_siso_ref(in["img"], in["filter"]));
    in = hevec::testing::random_inputs(mm, rng);
    EXPECT_EQ(interpret(mm, in),
              matmul_ref(in["A2"], matmul_ref(in["A1"], in["B"])));
    in = hevec::testing::random_inputs(ret, rng, 0, 1);
    EXPECT_EQ(interpret(ret, in).data[0],
              retrieval_ref(in["keys"], in["values"], in["query"]));
    in = hevec::testing::random_inputs(su, rng, 0, 1);
    EXPECT_EQ(interpret(su, in).data[0], set_union_ref(in));
  }
}
