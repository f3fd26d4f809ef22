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
// Circuit IR: let-bound vector expressions parameterized by dimension
// variables, plus the registry that resolves variables per coordinate.

#ifndef HEVEC_CIRCUIT_HPP
#define HEVEC_CIRCUIT_HPP

#include "hevec/schedule.hpp"

#include <optional>
#include <set>

namespace hevec {

/// Slot marker values used by symbolic vector contents.
constexpr int64_t kZero = -1;
constexpr int64_t kGarbage = -2;

struct VecDim {
  int64_t extent = 1;
  int64_t oob_left = 0;
  int64_t oob_right = 0;
  std::vector<ContentDim> content;

  int64_t total() const { return oob_left + extent + oob_right; }
  bool operator==(const VecDim &o) const {
    return extent == o.extent && oob_left == o.oob_left &&
           oob_right == o.oob_right && content == o.content;
  }
};

/// A concrete packed vector over an input array.  Preprocess positions
/// refer to array dimensions.
struct MaterializedVector {
  std::string array;
  Preprocess pre;
  std::vector<int64_t> offsets;
  std::vector<VecDim> dims;

  int64_t block() const;
  /// Flat array index per block slot, kZero for slots reading nothing.
  std::vector<int64_t> content(const Shape &array_shape) const;
  std::string str() const;
  bool operator==(const MaterializedVector &o) const {
    return array == o.array && pre == o.pre && offsets == o.offsets &&
           dims == o.dims;
  }
};

struct MaskDim {
  int64_t extent = 1;
  int64_t lo = 0;
  int64_t hi = 0; // inclusive; lo > hi is the empty interval
  bool operator==(const MaskDim &o) const {
    return extent == o.extent && lo == o.lo && hi == o.hi;
  }
};

struct MaskSpec {
  std::vector<MaskDim> dims;
  int64_t block() const;
  std::vector<int64_t> values() const;
  std::string str() const;
  bool operator==(const MaskSpec &o) const { return dims == o.dims; }
};

struct CObject {
  enum class Kind { Const, Mask, Vector, LetRef };
  Kind kind = Kind::Const;
  int64_t value = 0;
  MaskSpec mask;
  MaterializedVector vec;
  std::string let;
  std::vector<int64_t> coord;

  static CObject constant(int64_t v);
  static CObject of_mask(MaskSpec m);
  static CObject vector(MaterializedVector v);
  static CObject let_ref(std::string let, std::vector<int64_t> coord);
  bool operator==(const CObject &o) const;
  std::string str() const;
};

using Coord = std::vector<int64_t>;

struct VarEntry {
  std::vector<std::string> domain;
  Shape extents;
  std::map<Coord, CObject> map;
  bool cipher = false;
};

struct OffsetEntry {
  std::vector<std::string> domain;
  Shape extents;
  std::map<Coord, int64_t> map;
};

using Env = std::map<std::string, int64_t>;

struct Registry {
  std::map<std::string, VarEntry> vars;
  std::map<std::string, OffsetEntry> offsets;

  std::string fresh_var(const std::string &prefix);
  const CObject &lookup(const std::string &var, const Env &env) const;
  int64_t offset(const std::string &var, const Env &env) const;
  /// Renames dimension variables in the domains of the given entries.
  void rename(const std::set<std::string> &names,
              const std::map<std::string, std::string> &renaming);

private:
  std::map<std::string, int> counters_;
};

/// Rotation amount: constant + sum(coeff * dim var) + sum(coeff * offset var).
struct Offset {
  int64_t constant = 0;
  std::map<std::string, int64_t> dims;
  std::map<std::string, int64_t> vars;

  bool is_constant() const { return dims.empty() && vars.empty(); }
  Offset operator+(const Offset &o) const;
  Offset scaled(int64_t k) const;
  bool operator==(const Offset &o) const {
    return constant == o.constant && dims == o.dims && vars == o.vars;
  }
  bool operator<(const Offset &o) const {
    return std::tie(constant, dims, vars) < std::tie(o.constant, o.dims, o.vars);
  }
  int64_t eval(const Registry &reg, const Env &env) const;
  std::string str() const;
};

struct CNode;
using CPtr = std::shared_ptr<const CNode>;

struct CNode {
  enum class Kind { CtVar, PtVar, Lit, Op, Rot, ReduceDim };
  Kind kind = Kind::Lit;
  std::string name; // variable or bound dimension
  int64_t value = 0;
  BinOp op = BinOp::Add;
  Offset offset;
  int64_t extent = 0;
  std::vector<CPtr> kids;
  bool cipher = false;

  static CPtr var(const std::string &name, bool cipher);
  static CPtr lit(int64_t v);
  static CPtr binop(BinOp op, CPtr a, CPtr b);
  static CPtr rot(Offset o, CPtr a);
  static CPtr reduce_dim(const std::string &dim, int64_t extent, BinOp op,
                         CPtr body);
};

std::string print(const CNode &c);
bool structurally_equal(const CNode &a, const CNode &b);

/// Free dimension variables, including those reached through registry
/// variables and offset variables.
std::set<std::string> free_dims(const CPtr &c, const Registry &reg);
/// Rewrites dimension names (free occurrences) and registry domains.
CPtr rename_dims(const CPtr &c, const std::map<std::string, std::string> &r);
void collect_vars(const CPtr &c, std::set<std::string> &vars,
                  std::set<std::string> &offset_vars);

struct OutDim {
  enum class Kind { Vec, Reduced, Repeated };
  Kind kind = Kind::Vec;
  int dim = 0;
  int64_t extent = 1;
  int64_t stride = 1;
  int64_t valid = 1;

  bool operator==(const OutDim &o) const;
  std::string str() const;
};

struct OutputLayout {
  bool wildcard = false;
  Preprocess pre;
  std::vector<ExplodedDim> exploded;
  std::vector<OutDim> dims;

  static OutputLayout top() {
    OutputLayout l;
    l.wildcard = true;
    return l;
  }
  int64_t block() const;
  int64_t width(size_t k) const;
  std::string str() const;
};

/// Coercion: the wildcard goes anywhere, leading repeated dims may drop.
bool coerce(const OutputLayout &from, const OutputLayout &to);

struct CLet {
  std::string name;
  std::vector<std::pair<std::string, int64_t>> dims;
  CPtr body;
  bool native = false;
  OutputLayout layout;
  std::optional<int64_t> pad;
};

struct CircuitProgram {
  std::vector<CLet> lets;
  Registry reg;
  int64_t slots = 1;
  Shape out_shape;
  std::map<std::string, Shape> input_shapes;

  const CLet *find(const std::string &name) const;
  const CLet &out() const { return lets.back(); }
};

std::string print(const CircuitProgram &p);

/// Merges registry variables with identical tables, hash-conses every let
/// body and drops registry entries no longer referenced.
void share_subterms(CircuitProgram &p);

/// Packs a materialized vector from array data, replicated to `slots`.
std::vector<int64_t> pack(const MaterializedVector &v, const Nest &array,
                          int64_t slots);
std::vector<int64_t> rotate(const std::vector<int64_t> &v, int64_t r);

/// Direct recursive evaluation over the registry.  Results map let
/// coordinates to slot vectors.
class CircuitEvaluator {
public:
  CircuitEvaluator(const CircuitProgram &p, const InputMap &inputs);
  const std::vector<int64_t> &let_value(const std::string &let,
                                        const Coord &coord);
  std::map<Coord, std::vector<int64_t>> outputs();
  std::vector<int64_t> eval(const CPtr &c, Env &env);

private:
  std::vector<int64_t> object(const CObject &o);

  const CircuitProgram &p_;
  InputMap inputs_;
  std::map<std::pair<std::string, Coord>, std::vector<int64_t>> memo_;
};

//===----------------------------------------------------------------------===//
// Cost model
//===----------------------------------------------------------------------===//

struct CostWeights {
  std::map<std::string, double> w = {
      {"add_cc", 1},  {"add_cp", 1},   {"add_pp", 0.1}, {"sub_cc", 1},
      {"sub_cp", 1},  {"sub_pp", 0.1}, {"mul_cc", 2},   {"mul_cp", 2},
      {"mul_pp", 0.1}, {"rot_c", 1},   {"rot_p", 0.1},  {"input_vector", 2},
      {"depth", 1}};

  double get(const std::string &k) const { return w.at(k); }
  double op(BinOp op, bool c1, bool c2) const;
  /// Reads `key = value` lines; unknown keys are rejected.
  static CostWeights parse(const std::string &text);
};

struct CostValue {
  double total = 0;
  double ops = 0;
  std::map<std::string, double> counts;
  int64_t input_vectors = 0;
  int64_t depth = 0;
  std::string str() const;
};

CostValue cost(const CircuitProgram &p, const CostWeights &w);
/// Op cost of a single expression at multiplicity m (no auxiliary terms).
double expr_cost(const CPtr &c, const CostWeights &w, double m = 1);

} // namespace hevec

#endif // HEVEC_CIRCUIT_HPP
