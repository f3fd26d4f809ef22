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
// Layouts, schedules and the schedule transformers used by the search.

#ifndef HEVEC_SCHEDULE_HPP
#define HEVEC_SCHEDULE_HPP

#include "hevec/index_free.hpp"

#include <optional>

namespace hevec {

struct Preprocess {
  enum class Kind { Identity, Roll };
  Kind kind = Kind::Identity;
  // Traversal (or array) dimension positions for Roll: x_a <- (x_a + x_b) mod n.
  int a = -1;
  int b = -1;

  static Preprocess identity() { return {}; }
  static Preprocess roll(int a, int b) { return {Kind::Roll, a, b}; }
  bool is_roll() const { return kind == Kind::Roll; }
  bool operator==(const Preprocess &o) const {
    return kind == o.kind && (kind == Kind::Identity || (a == o.a && b == o.b));
  }
  std::string str() const;
};

struct ExplodedDim {
  std::string name;
  int dim = 0;
  int64_t extent = 1;
  int64_t stride = 1;
};

struct VectorizedDim {
  int dim = 0;
  int64_t extent = 1; // padded to a power of two
  int64_t stride = 1;
  int64_t valid = 1;  // extent before padding
  bool operator==(const VectorizedDim &o) const {
    return dim == o.dim && extent == o.extent && stride == o.stride &&
           valid == o.valid;
  }
};

struct Layout {
  Preprocess pre;
  std::vector<ExplodedDim> exploded;
  std::vector<VectorizedDim> vectorized;

  int64_t block_size() const;
  /// Number of schedule dims (exploded or vectorized) covering traversal dim d.
  int dims_covering(int d) const;
  std::string str() const;
};

using Schedule = std::map<int, Layout>;

/// Gives exploded dims their canonical names: "<dim>_<site>" when the dim
/// covers a whole traversal dim, "<dim>_<site>_s<stride>" otherwise.
void canonicalize(Layout &l, const Site &site);

Schedule initial_schedule(const IndexFreeProgram &p);

Layout vectorize_dim(const Layout &l, const Site &site, const std::string &name,
                     int64_t slots);
Layout tile_dim(const Layout &l, const Site &site, const std::string &name,
                int64_t tile);

/// Applicability of the roll transformer for exploded dim `name` against
/// the outermost vectorized dim.
bool roll_applicable(const Layout &l, const Site &site, const std::string &name);
Layout apply_roll(const Layout &l, const Site &site, const std::string &name);

/// Traversal position of a (coordinate, block slot) pair with the layout's
/// preprocessing applied; nullopt for padding slots.
std::optional<std::vector<int64_t>>
layout_position(const Layout &l, const std::vector<TraversalDim> &dims,
                const std::vector<int64_t> &coord, int64_t slot);

/// Enumerates exploded coordinates in lexicographic order of l.exploded.
std::vector<std::vector<int64_t>> coordinates(const std::vector<ExplodedDim> &e);

std::string serialize(const Schedule &s);
std::string print_schedule(const Schedule &s, const IndexFreeProgram &p);
/// Parses lines of the form
///   <site>: [roll(a,b)] {name:dim:extent:stride, ...} [(dim,extent,stride), ...]
/// Sites that are not mentioned keep their initial layout.
Schedule parse_schedule(const std::string &text, const IndexFreeProgram &p,
                        int64_t slots);

struct NeighborOptions {
  int epoch = 1;
  int64_t slots = 1;
};

std::vector<Schedule> neighbors(const Schedule &s, const IndexFreeProgram &p,
                                const NeighborOptions &opt);

} // namespace hevec

#endif // HEVEC_SCHEDULE_HPP
