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

// Epoch-staged best-first search over schedules.

#ifndef HEVEC_SEARCH_HPP
#define HEVEC_SEARCH_HPP

#include "hevec/cgen.hpp"

namespace hevec {

struct SearchOptions {
  int epochs = 1;
  int64_t slots = 16;
  CostWeights weights;
  // Candidate schedules evaluated per epoch, and wall-clock limit overall.
  int max_evals = 4000;
  double seconds = 60;
};

struct SearchResult {
  Schedule schedule;
  CircuitProgram circuit;
  CostValue cost;
  int evaluated = 0;
  int invalid = 0;
};

/// Total number of exploded dims, the first tie-breaker after cost.
int exploded_count(const Schedule &s);

SearchResult search(const IndexFreeProgram &p, const SearchOptions &opt);

} // namespace hevec

#endif // HEVEC_SEARCH_HPP
