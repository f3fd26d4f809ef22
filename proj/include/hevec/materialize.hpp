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
// Layout application, vector derivation and the materializers that turn an
// indexing site into a circuit expression.

#ifndef HEVEC_MATERIALIZE_HPP
#define HEVEC_MATERIALIZE_HPP

#include "hevec/circuit.hpp"

namespace hevec {

/// Symbolic slot contents of a site vector: the flat element index of the
/// indexed array per block slot, or kZero.
std::vector<int64_t> site_content(const Site &site, const Layout &l,
                                  const Coord &coord);

/// Default materializer: one descriptor per exploded coordinate.  With
/// `extended`, padding slots of vectorized dims keep reading the array.
MaterializedVector default_vector(const Site &site, const Layout &l,
                                  const Coord &coord, bool extended = false);

/// Coordinate -> vector map of the default (or roll) materializer.
std::vector<std::pair<Coord, MaterializedVector>>
apply_layout(const Site &site, const Layout &l);

struct Derivation {
  int64_t rotation = 0;
  std::optional<MaskSpec> mask;
};

/// Finds (r, m) with rot(r, source) * m == target slot-wise.  Target slots
/// marked kZero must come out zero; kGarbage in the source never matches an
/// element.  `target_dims` are the extents of the target's slot dims.
std::optional<Derivation> derive(const std::vector<int64_t> &target,
                                 const Shape &target_dims,
                                 const std::vector<int64_t> &source);

std::optional<Derivation> derive_vector(const MaterializedVector &target,
                                        const MaterializedVector &source,
                                        const Shape &array_shape);

/// Rotation amounts of the fill phase for a reduced dim of padded extent
/// `extent` and slot width `width`.
std::vector<int64_t> clean_and_fill_rotations(int64_t extent, int64_t width);

/// Symbolic effect of clean-and-fill on dims `ks` of a block laid out with
/// extents `dims`: every position takes the value at position 0 of each k.
std::vector<int64_t> clean_and_fill(const std::vector<int64_t> &content,
                                    const Shape &dims,
                                    const std::vector<size_t> &ks);

/// What circuit generation knows about a let-bound array.
struct Producer {
  std::string name;
  Shape shape;
  OutputLayout layout;
  std::optional<int64_t> pad;
  bool cipher = false;
  std::optional<int64_t> constant; // set for wildcard producers
};

/// Symbolic contents of a producer vector at an exploded coordinate.
std::vector<int64_t> producer_content(const Producer &p, const Coord &coord);

struct SiteCircuit {
  CPtr expr;
  OutputLayout layout;
  std::optional<int64_t> pad;
};

SiteCircuit materialize_input(const Site &site, const Layout &l, Registry &reg);
SiteCircuit materialize_expr(const Site &site, const Layout &l,
                             const Producer &producer, Registry &reg);

/// Output layout a site produces under a layout.
OutputLayout site_layout(const Layout &l);

} // namespace hevec

#endif // HEVEC_MATERIALIZE_HPP
