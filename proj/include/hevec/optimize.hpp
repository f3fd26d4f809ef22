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

// Algebraic circuit rewriting and plaintext hoisting.

#ifndef HEVEC_OPTIMIZE_HPP
#define HEVEC_OPTIMIZE_HPP

#include "hevec/circuit.hpp"

namespace hevec {

struct OptimizeOptions {
  // E-nodes that saturation may add on top of the initial graph of a let.
  int node_budget = 500;
  double seconds = 60;
};

/// Rewrites every let body with the circuit identities and keeps a rewrite
/// only when the program cost does not increase.
CircuitProgram optimize(const CircuitProgram &p, const CostWeights &w,
                        const OptimizeOptions &opt = {});

/// Moves each maximal plaintext-only subexpression with at least one
/// operation into a native let and reads it back through a plaintext
/// variable.  A let whose whole body is plaintext becomes native itself.
CircuitProgram hoist_plaintexts(const CircuitProgram &p);

/// Binary operations with two plaintext operands outside native lets.
int count_plain_ops(const CircuitProgram &p);

} // namespace hevec

#endif // HEVEC_OPTIMIZE_HPP
