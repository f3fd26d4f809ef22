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
// Index-free programs: For nodes and indexing are replaced by indexing sites
// that carry array traversals.

#ifndef HEVEC_INDEX_FREE_HPP
#define HEVEC_INDEX_FREE_HPP

#include "hevec/frontend.hpp"

namespace hevec {

struct ContentDim {
  int dim = 0;
  int64_t stride = 1;
  bool operator==(const ContentDim &o) const {
    return dim == o.dim && stride == o.stride;
  }
};

struct TraversalDim {
  int64_t extent = 1;
  std::vector<ContentDim> content;
};

struct ArrayTraversal {
  std::string array;
  std::vector<int64_t> offsets;
  std::vector<TraversalDim> dims;

  /// Flat element index at the given traversal position, or -1 when the
  /// position reads outside the array.
  int64_t element(const Shape &array_shape,
                  const std::vector<int64_t> &pos) const;
  std::string str() const;
};

struct Site {
  int id = 0;
  ArrayTraversal traversal;
  Shape array_shape;
  bool is_input = true;
  bool cipher = false;
  // One human-readable name per traversal dim (the For variable, or
  // "<array>_d<k>" for dimensions the site does not index).
  std::vector<std::string> dim_names;
  // Equivalence class per traversal dim; dims combined by element-wise
  // operations share a class.
  std::vector<int> dim_class;
};

struct IfExpr;
using IfExprPtr = std::shared_ptr<IfExpr>;

struct IfExpr {
  enum class Kind { Literal, Site, Op, Reduce };
  Kind kind = Kind::Literal;
  int64_t value = 0;
  int site = -1;
  BinOp op = BinOp::Add;
  int dim = 0;
  std::vector<IfExprPtr> kids;
  Shape shape;
  bool cipher = false;
};

struct IfStatement {
  Statement::Kind kind = Statement::Kind::Input;
  std::string name;
  Shape shape;
  Party party = Party::Client;
  IfExprPtr expr;
};

struct IndexFreeProgram {
  std::vector<IfStatement> stmts;
  IfExprPtr output;
  std::vector<Site> sites;

  const IfStatement *find(const std::string &name) const;
  Shape array_shape(const std::string &name) const;
};

IndexFreeProgram to_index_free(const Program &checked);
std::string print(const IndexFreeProgram &p);

/// Direct semantics of the index-free form, independent of the frontend
/// interpreter.
Nest interpret(const IndexFreeProgram &p, const InputMap &inputs);

} // namespace hevec

#endif // HEVEC_INDEX_FREE_HPP
