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
// End-to-end pipeline shared by the command-line tool and the tests.

#ifndef HEVEC_DRIVER_HPP
#define HEVEC_DRIVER_HPP

#include "hevec/backend.hpp"
#include "hevec/optimize.hpp"
#include "hevec/search.hpp"

namespace hevec {

struct CompileOptions {
  int64_t slots = 16;
  int epochs = 1;
  int opt = 0; // 0: hoist only, 1: rewrite then hoist
  std::optional<std::string> schedule; // forced schedule text
  CostWeights weights;
  OptimizeOptions optimize;
  int max_evals = 4000;
  double search_seconds = 60;
};

struct Compiled {
  Program program;
  IndexFreeProgram index_free;
  Schedule schedule;
  CircuitProgram circuit; // after optimization and hoisting
  CostValue cost;
  LoopNestProgram loopnest;
};

Compiled compile(const std::string &source, const CompileOptions &opt);

struct RunResult {
  Nest output;
  OpTrace trace;
};

RunResult run(const Compiled &c, const InputMap &inputs, int64_t slots = 0);

/// JSON helpers: inputs are an object of nested integer arrays.
InputMap inputs_from_json(const std::string &text, const Program &p);
std::string nest_to_json(const Nest &n);

} // namespace hevec

#endif // HEVEC_DRIVER_HPP
