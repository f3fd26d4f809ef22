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
// Slot-vector virtual machine for loop-nest programs, operation counting
// and the call-script emitter.

#ifndef HEVEC_BACKEND_HPP
#define HEVEC_BACKEND_HPP

#include "hevec/loopnest.hpp"

namespace hevec {

struct OpTrace {
  int64_t rotations_cc = 0;
  int64_t add_cc = 0, add_cp = 0;
  int64_t sub_cc = 0, sub_cp = 0;
  int64_t mul_cc = 0, mul_cp = 0;
  int64_t native_ops = 0;
  int64_t encodes = 0;
  int64_t input_vectors = 0;
  int64_t output_vectors = 0;
  int64_t mult_depth = 0;

  std::string json() const;
  bool operator==(const OpTrace &o) const;
};

struct SimResult {
  std::map<Coord, std::vector<int64_t>> outputs;
  OpTrace trace;
};

/// Runs `p` over `slots` slots (0 keeps the compiled count).  Rotations by
/// a multiple of the slot count and adds into a fresh accumulator are free.
SimResult simulate(const LoopNestProgram &p, const InputMap &inputs,
                   int64_t slots = 0);

/// `key = value` lines naming the target call for each abstract API entry:
/// make_vector, encode, encrypt, add, sub, mul, rotate, decrypt.
using Binding = std::map<std::string, std::string>;
Binding default_binding();
Binding parse_binding(const std::string &text);

std::string emit_script(const LoopNestProgram &p, const Binding &b);

} // namespace hevec

#endif // HEVEC_BACKEND_HPP
