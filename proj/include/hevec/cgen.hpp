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

// Circuit generation: index-free program + schedule -> circuit program.

#ifndef HEVEC_CGEN_HPP
#define HEVEC_CGEN_HPP

#include "hevec/materialize.hpp"

namespace hevec {

/// A schedule dimension consumed by a reduction.
struct ReducedDim {
  bool exploded = false;
  std::string name; // exploded only
  int64_t extent = 1;
  size_t pos = 0;     // index into the vector dims (vectorized only)
  int64_t width = 1;  // slot width of one step along the dim
  int64_t valid = 1;
};

std::optional<Preprocess> reduce_preprocess(int n, const Preprocess &p);

/// Output layout after reducing traversal dim n, with the schedule dims
/// that were reduced; nullopt when the preprocessing cannot be reduced.
std::optional<std::pair<OutputLayout, std::vector<ReducedDim>>>
reduce_layout(int n, const OutputLayout &ol);

/// Rotate-and-reduce for vectorized dims, ReduceDim for exploded ones.
CPtr gen_reduce(BinOp op, CPtr c, const std::vector<ReducedDim> &reduced);

CircuitProgram cgen(const IndexFreeProgram &p, const Schedule &s,
                    int64_t slots);

/// Producer view of the final `out` let, used to decode results.
Producer output_producer(const CircuitProgram &p);

/// Rebuilds the output array from the vectors of `out`, one per exploded
/// coordinate.  Throws when an element is never produced.
Nest decode_output(const CircuitProgram &p,
                   const std::map<Coord, std::vector<int64_t>> &vectors);

} // namespace hevec

#endif // HEVEC_CGEN_HPP
