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
// Source language: parser, shape checker and reference interpreter.

#ifndef HEVEC_FRONTEND_HPP
#define HEVEC_FRONTEND_HPP

#include "hevec/common.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hevec {

enum class BinOp { Add, Sub, Mul };
enum class Party { Client, Server };

const char *binop_symbol(BinOp op);
int64_t apply_binop(BinOp op, int64_t a, int64_t b);

/// Index expression in normal form: constant + sum(coeff * var).
struct Affine {
  int64_t constant = 0;
  std::map<std::string, int64_t> coeffs;

  bool operator==(const Affine &o) const {
    return constant == o.constant && coeffs == o.coeffs;
  }
  int64_t coeff(const std::string &var) const;
  std::string str() const;
};

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Expr {
  enum class Kind { Literal, Index, Op, Reduce, For };

  Kind kind = Kind::Literal;
  int64_t value = 0;
  // Array name for Index, index variable for For.
  std::string name;
  std::vector<Affine> indices;
  // Operator of Op; Add or Mul for Reduce.
  BinOp op = BinOp::Add;
  int dim = 0;
  int64_t extent = 0;
  std::vector<ExprPtr> kids;

  // Set by check().
  Shape shape;
  bool cipher = false;

  int line = 0;
  int col = 0;
};

struct Statement {
  enum class Kind { Input, Let };
  Kind kind = Kind::Input;
  std::string name;
  Shape shape;
  Party party = Party::Client;
  ExprPtr expr;
};

struct Program {
  std::vector<Statement> stmts;
  ExprPtr output;

  const Statement *find(const std::string &name) const;
};

Program parse(const std::string &text);
std::string print(const Program &p);
std::string print(const Expr &e);
bool structurally_equal(const Expr &a, const Expr &b);
bool structurally_equal(const Program &a, const Program &b);

/// Annotates a deep copy of the program with shapes and cipher taint.
Program check(const Program &p);

using InputMap = std::map<std::string, Nest>;

/// Reference semantics.  Out-of-range affine indices read as zero.
Nest interpret(const Program &p, const InputMap &inputs);

} // namespace hevec

#endif // HEVEC_FRONTEND_HPP
