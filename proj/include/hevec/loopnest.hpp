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
// Loop-nest IR: arrays of native, plaintext and ciphertext vectors,
// three-address instructions and for loops over dimension names.

#ifndef HEVEC_LOOPNEST_HPP
#define HEVEC_LOOPNEST_HPP

#include "hevec/circuit.hpp"

namespace hevec {

/// N: native, P: plaintext, C: ciphertext, I: integer (rotation tables).
enum class VType { N, P, C, I };
/// Instruction types: native, cipher-plain, cipher-cipher.
enum class IType { N, CP, CC };

const char *vtype_name(VType t);
const char *itype_name(IType t);

/// An instruction id (`instrN`) or an array element `name[d1][d2]`.
struct LRef {
  std::string name;
  std::vector<std::string> idx;
  bool instr = false;

  std::string str() const;
  bool operator==(const LRef &o) const {
    return name == o.name && idx == o.idx && instr == o.instr;
  }
};

struct AmountTerm {
  int64_t coeff = 1;
  LRef ref; // a dimension name (no idx) or an integer array element
  bool dim = true;
};

struct Amount {
  int64_t constant = 0;
  std::vector<AmountTerm> terms;
  std::string str() const;
};

struct Constructor {
  enum class Kind { Const, Mask, Vector };
  Kind kind = Kind::Const;
  int64_t value = 0;
  MaskSpec mask;
  MaterializedVector vec;
  std::string str() const;
};

struct LStmt {
  enum class Kind {
    Val,       // val name: T = constructor
    Decl,      // var name: T[e..] (unset until assigned)
    Encode,    // encode(name): native val retagged as plaintext
    Assign,    // target = src | encode(src) | integer
    Instr,     // id = op(IT, a, b)
    Rot,       // id = rot(IT, amount, a)
    For,       // for dim in range(extent) { body }
  };
  Kind kind = Kind::Instr;
  std::string name; // val/decl/encode name, instr id, loop dim
  VType type = VType::C;
  Shape extents;
  Constructor ctor;
  LRef target, src;
  bool encode = false;  // Assign: src is encoded on the way
  bool literal = false; // Assign: integer value in `value`
  int64_t value = 0;
  BinOp op = BinOp::Add;
  IType itype = IType::CC;
  std::vector<LRef> args;
  Amount amount;
  bool inplace = false; // first operand dies here and may be overwritten
  int64_t extent = 0;
  std::vector<LStmt> body;
};

struct LoopNestProgram {
  std::vector<LStmt> stmts;
  int64_t slots = 1;
  std::string out = "out";
  std::vector<std::pair<std::string, int64_t>> out_dims;
};

std::string print(const LoopNestProgram &p);

/// Lowers a (hoisted) circuit program.  Plain-plain operations outside
/// native lets are rejected.
LoopNestProgram lower(const CircuitProgram &p);

/// Merges instructions with identical opcode, type, operands and amount
/// within a region and the regions nested in it.
LoopNestProgram value_number(const LoopNestProgram &p);

/// Marks instructions whose first operand is a single-use result of the
/// same region.
void mark_inplace(LoopNestProgram &p);

int count_instructions(const LoopNestProgram &p);

} // namespace hevec

#endif // HEVEC_LOOPNEST_HPP
