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

#include "hevec/materialize.hpp"

#include <algorithm>
#include <unordered_map>

namespace hevec {

namespace {

int64_t ceil_div(int64_t a, int64_t b) {
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

int64_t floor_div(int64_t a, int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

Shape vec_extents(const Layout &l) {
  Shape s;
  for (const auto &v : l.vectorized)
    s.push_back(v.extent);
  return s;
}

std::vector<int64_t> rotate_block(const std::vector<int64_t> &v, int64_t r) {
  int64_t n = static_cast<int64_t>(v.size());
  std::vector<int64_t> out(n);
  for (int64_t i = 0; i < n; ++i)
    out[i] = v[floor_mod(i - r, n)];
  return out;
}

// Representative of r modulo l in (-l, 0].
int64_t normalize_rotation(int64_t r, int64_t l) {
  int64_t m = floor_mod(r, l);
  return m == 0 ? 0 : m - l;
}

std::optional<Derivation> check_rotation(const std::vector<int64_t> &target,
                                         const Shape &tdims,
                                         const std::vector<int64_t> &source,
                                         int64_t r) {
  int64_t bt = static_cast<int64_t>(target.size());
  int64_t bs = static_cast<int64_t>(source.size());
  int64_t len = std::max(bt, bs);
  std::vector<char> is_bad(bt, 0);
  bool any_bad = false;
  for (int64_t i = 0; i < len; ++i) {
    int64_t t = target[i % bt];
    int64_t s = source[floor_mod(i - r, bs)];
    if (t >= 0) {
      if (s != t)
        return std::nullopt;
    } else if (s != kZero) {
      is_bad[i % bt] = 1;
      any_bad = true;
    }
  }
  Derivation d;
  d.rotation = r;
  if (!any_bad)
    return d;
  size_t n = tdims.size();
  std::vector<int64_t> lo(n, INT64_MAX), hi(n, INT64_MIN);
  bool any_el = false;
  for (int64_t i = 0; i < bt; ++i) {
    if (target[i] < 0)
      continue;
    any_el = true;
    auto q = unflatten_index(tdims, i);
    for (size_t k = 0; k < n; ++k) {
      lo[k] = std::min(lo[k], q[k]);
      hi[k] = std::max(hi[k], q[k]);
    }
  }
  MaskSpec m;
  for (size_t k = 0; k < n; ++k)
    m.dims.push_back(any_el ? MaskDim{tdims[k], lo[k], hi[k]}
                            : MaskDim{tdims[k], 1, 0});
  if (any_el) {
    for (int64_t i = 0; i < bt; ++i) {
      if (!is_bad[i])
        continue;
      auto q = unflatten_index(tdims, i);
      bool inside = true;
      for (size_t k = 0; k < n; ++k)
        inside = inside && q[k] >= lo[k] && q[k] <= hi[k];
      if (inside)
        return std::nullopt;
    }
  }
  d.mask = m;
  return d;
}

bool better(const Derivation &a, const Derivation &b) {
  auto key = [](const Derivation &d) {
    return std::make_tuple(d.mask.has_value(), d.rotation != 0,
                           d.rotation < 0 ? -d.rotation : d.rotation);
  };
  return key(a) < key(b);
}

using ElementIndex = std::unordered_map<int64_t, std::vector<std::pair<int, int64_t>>>;

void index_source(ElementIndex &idx, int src, const std::vector<int64_t> &c) {
  for (int64_t j = 0; j < static_cast<int64_t>(c.size()); ++j)
    if (c[j] >= 0)
      idx[c[j]].push_back({src, j});
}

// Best derivation of `target` from any of `sources`; returns the source
// index alongside.
std::optional<std::pair<int, Derivation>>
derive_any(const std::vector<int64_t> &target, const Shape &tdims,
           const std::vector<std::vector<int64_t>> &sources,
           const ElementIndex &idx) {
  std::optional<std::pair<int, Derivation>> best;
  auto consider = [&](int src, int64_t r) {
    int64_t len = std::max<int64_t>(target.size(), sources[src].size());
    r = normalize_rotation(r, len);
    if (best && best->first == src && best->second.rotation == r)
      return;
    if (auto d = check_rotation(target, tdims, sources[src], r))
      if (!best || better(*d, best->second))
        best = std::make_pair(src, *d);
  };
  int64_t i0 = -1;
  for (int64_t i = 0; i < static_cast<int64_t>(target.size()); ++i)
    if (target[i] >= 0) {
      i0 = i;
      break;
    }
  if (i0 < 0) {
    for (int s = 0; s < static_cast<int>(sources.size()); ++s)
      consider(s, 0);
    return best;
  }
  auto it = idx.find(target[i0]);
  if (it == idx.end())
    return best;
  for (const auto &[src, j] : it->second) {
    consider(src, i0 - j);
    if (best && !best->second.mask && best->second.rotation == 0)
      break;
  }
  return best;
}

// Rotation offsets as an affine function of the coordinate when possible,
// otherwise through a fresh offset variable.
Offset rotation_offset(const std::vector<ExplodedDim> &ex,
                       const std::vector<Coord> &coords,
                       const std::vector<int64_t> &rots, Registry &reg) {
  Offset off;
  std::map<Coord, int64_t> by;
  for (size_t k = 0; k < coords.size(); ++k)
    by[coords[k]] = rots[k];
  Coord zero(ex.size(), 0);
  off.constant = by.at(zero);
  for (size_t d = 0; d < ex.size(); ++d) {
    if (ex[d].extent < 2)
      continue;
    Coord u = zero;
    u[d] = 1;
    int64_t c = by.at(u) - off.constant;
    if (c != 0)
      off.dims[ex[d].name] = c;
  }
  bool affine = true;
  for (size_t k = 0; k < coords.size() && affine; ++k) {
    int64_t v = off.constant;
    for (size_t d = 0; d < ex.size(); ++d)
      if (auto it = off.dims.find(ex[d].name); it != off.dims.end())
        v += it->second * coords[k][d];
    affine = v == rots[k];
  }
  if (affine)
    return off;
  std::string name = reg.fresh_var("o");
  OffsetEntry e;
  for (const auto &d : ex) {
    e.domain.push_back(d.name);
    e.extents.push_back(d.extent);
  }
  e.map = by;
  reg.offsets[name] = e;
  Offset v;
  v.vars[name] = 1;
  return v;
}

// Wraps `base` in rot/mask according to per-coordinate derivations.
CPtr finish(CPtr base, const std::vector<ExplodedDim> &ex,
            const std::vector<Coord> &coords,
            const std::vector<Derivation> &ds, Registry &reg) {
  std::vector<int64_t> rots;
  bool any_rot = false, any_mask = false;
  for (const auto &d : ds) {
    rots.push_back(d.rotation);
    any_rot = any_rot || d.rotation != 0;
    any_mask = any_mask || d.mask.has_value();
  }
  CPtr e = std::move(base);
  if (any_rot)
    e = CNode::rot(rotation_offset(ex, coords, rots, reg), e);
  if (any_mask) {
    std::string name = reg.fresh_var("pt");
    VarEntry v;
    for (const auto &d : ex) {
      v.domain.push_back(d.name);
      v.extents.push_back(d.extent);
    }
    for (size_t k = 0; k < coords.size(); ++k)
      v.map[coords[k]] =
          ds[k].mask ? CObject::of_mask(*ds[k].mask) : CObject::constant(1);
    reg.vars[name] = v;
    e = CNode::binop(BinOp::Mul, e, CNode::var(name, false));
  }
  return e;
}

VarEntry domain_entry(const std::vector<ExplodedDim> &ex, bool cipher) {
  VarEntry v;
  v.cipher = cipher;
  for (const auto &d : ex) {
    v.domain.push_back(d.name);
    v.extents.push_back(d.extent);
  }
  return v;
}

int roll_case(const Site &site, const Layout &l) {
  if (!l.pre.is_roll())
    return 0;
  if (site.traversal.dims[l.pre.a].content.empty())
    return 1;
  if (site.traversal.dims[l.pre.b].content.empty())
    return 3;
  return 2;
}

} // namespace

std::vector<int64_t> site_content(const Site &site, const Layout &l,
                                  const Coord &coord) {
  int64_t b = l.block_size();
  std::vector<int64_t> out(b, kZero);
  for (int64_t s = 0; s < b; ++s) {
    auto pos = layout_position(l, site.traversal.dims, coord, s);
    if (pos)
      out[s] = site.traversal.element(site.array_shape, *pos);
  }
  return out;
}

MaterializedVector default_vector(const Site &site, const Layout &l,
                                  const Coord &coord, bool extended) {
  const ArrayTraversal &t = site.traversal;
  MaterializedVector v;
  v.array = t.array;
  v.offsets = t.offsets;
  for (size_t k = 0; k < l.exploded.size(); ++k) {
    const ExplodedDim &e = l.exploded[k];
    for (const ContentDim &c : t.dims[e.dim].content)
      v.offsets[c.dim] += coord[k] * e.stride * c.stride;
  }
  int case_ = roll_case(site, l);
  std::set<int> rolled;
  if (case_ == 2) {
    int aa = t.dims[l.pre.a].content[0].dim, ab = t.dims[l.pre.b].content[0].dim;
    v.pre = Preprocess::roll(aa, ab);
    rolled = {aa, ab};
  }
  std::map<int, int> touches;
  for (const auto &vd : l.vectorized)
    for (const ContentDim &c : t.dims[vd.dim].content)
      ++touches[c.dim];
  for (const auto &vd : l.vectorized) {
    VecDim d;
    int64_t valid = extended ? vd.extent : vd.valid;
    d.extent = valid;
    d.oob_right = vd.extent - valid;
    for (const ContentDim &c : t.dims[vd.dim].content)
      d.content.push_back({c.dim, c.stride * vd.stride});
    if (d.content.size() == 1 && touches[d.content[0].dim] == 1 &&
        d.content[0].stride > 0 && !rolled.count(d.content[0].dim)) {
      int ad = d.content[0].dim;
      int64_t st = d.content[0].stride, off = v.offsets[ad];
      int64_t qlo = std::max<int64_t>(0, ceil_div(-off, st));
      int64_t qhi =
          std::min<int64_t>(valid - 1, floor_div(site.array_shape[ad] - 1 - off, st));
      if (qlo > qhi) {
        d.extent = 0;
        d.oob_left = 0;
        d.oob_right = vd.extent;
      } else {
        d.extent = qhi - qlo + 1;
        d.oob_left = qlo;
        d.oob_right = vd.extent - qhi - 1;
        v.offsets[ad] += qlo * st;
      }
    }
    v.dims.push_back(d);
  }
  return v;
}

std::vector<std::pair<Coord, MaterializedVector>>
apply_layout(const Site &site, const Layout &l) {
  std::vector<std::pair<Coord, MaterializedVector>> out;
  int case_ = roll_case(site, l);
  Site ws = site;
  Layout wl = l;
  if (case_ == 1 || case_ == 3)
    wl.pre = Preprocess::identity();
  if (case_ == 3) {
    ws.traversal.dims[l.pre.b].content = site.traversal.dims[l.pre.a].content;
    ws.traversal.dims[l.pre.a].content.clear();
  }
  for (const Coord &c : coordinates(l.exploded)) {
    if (case_ == 3) {
      bool base = true;
      for (size_t k = 0; k < l.exploded.size(); ++k)
        if (l.exploded[k].dim == l.pre.a && c[k] != 0)
          base = false;
      if (!base)
        continue;
    }
    out.emplace_back(c, default_vector(ws, wl, c));
  }
  return out;
}

std::optional<Derivation> derive(const std::vector<int64_t> &target,
                                 const Shape &target_dims,
                                 const std::vector<int64_t> &source) {
  ElementIndex idx;
  index_source(idx, 0, source);
  auto r = derive_any(target, target_dims, {source}, idx);
  if (!r)
    return std::nullopt;
  return r->second;
}

std::optional<Derivation> derive_vector(const MaterializedVector &target,
                                        const MaterializedVector &source,
                                        const Shape &array_shape) {
  if (target.array != source.array)
    return std::nullopt;
  Shape dims;
  for (const auto &d : target.dims)
    dims.push_back(d.total());
  return derive(target.content(array_shape), dims, source.content(array_shape));
}

std::vector<int64_t> clean_and_fill_rotations(int64_t extent, int64_t width) {
  if (!is_pow2(extent))
    throw Error("clean-and-fill needs a power-of-two extent");
  std::vector<int64_t> r;
  for (int64_t t = 1; t < extent; t *= 2)
    r.push_back(width * t);
  return r;
}

std::vector<int64_t> clean_and_fill(const std::vector<int64_t> &content,
                                    const Shape &dims,
                                    const std::vector<size_t> &ks) {
  std::vector<int64_t> out(content.size());
  for (int64_t s = 0; s < static_cast<int64_t>(content.size()); ++s) {
    auto q = unflatten_index(dims, s);
    for (size_t k : ks)
      q[k] = 0;
    out[s] = content[flatten_index(dims, q)];
  }
  return out;
}

std::vector<int64_t> producer_content(const Producer &p, const Coord &coord) {
  const OutputLayout &l = p.layout;
  int64_t b = l.block();
  std::vector<int64_t> out(b, kGarbage);
  Shape ext;
  for (const auto &d : l.dims)
    ext.push_back(d.extent);
  bool pad_zero = p.pad && *p.pad == 0;
  for (int64_t s = 0; s < b; ++s) {
    auto q = unflatten_index(ext, s);
    std::vector<int64_t> pos(p.shape.size(), 0);
    for (size_t k = 0; k < l.exploded.size(); ++k)
      pos[l.exploded[k].dim] += coord[k] * l.exploded[k].stride;
    bool garbage = false, pad = false;
    for (size_t k = 0; k < l.dims.size(); ++k) {
      const OutDim &d = l.dims[k];
      if (d.kind == OutDim::Kind::Reduced && q[k] != 0)
        garbage = true;
      if (d.kind == OutDim::Kind::Vec) {
        if (q[k] >= d.valid)
          pad = true;
        else
          pos[d.dim] += q[k] * d.stride;
      }
    }
    if (garbage || (pad && !pad_zero))
      continue;
    if (pad) {
      out[s] = kZero;
      continue;
    }
    if (l.pre.is_roll())
      pos[l.pre.a] = floor_mod(pos[l.pre.a] + pos[l.pre.b], p.shape[l.pre.a]);
    out[s] = flatten_index(p.shape, pos);
  }
  return out;
}

OutputLayout site_layout(const Layout &l) {
  OutputLayout o;
  o.pre = l.pre;
  o.exploded = l.exploded;
  for (const auto &v : l.vectorized)
    o.dims.push_back({OutDim::Kind::Vec, v.dim, v.extent, v.stride, v.valid});
  return o;
}

SiteCircuit materialize_input(const Site &site, const Layout &l, Registry &reg) {
  int case_ = roll_case(site, l);
  Site ws = site;
  Layout wl = l;
  if (case_ == 1 || case_ == 3)
    wl.pre = Preprocess::identity();
  if (case_ == 3) {
    ws.traversal.dims[l.pre.b].content = site.traversal.dims[l.pre.a].content;
    ws.traversal.dims[l.pre.a].content.clear();
  }
  const Shape tdims = vec_extents(l);
  std::vector<Coord> coords = coordinates(l.exploded);
  std::vector<std::vector<int64_t>> targets;
  for (const Coord &c : coords) {
    targets.push_back(site_content(ws, wl, c));
    if (!(default_vector(ws, wl, c).content(site.array_shape) ==
          targets.back()))
      throw ScheduleInvalid("site " + std::to_string(site.id) +
                            ": layout is not expressible as packed vectors");
  }

  struct Plan {
    std::vector<MaterializedVector> bases;
    std::vector<int> base_of;
    std::vector<Derivation> ds;
  };
  auto run_pass = [&](bool extended) -> std::optional<Plan> {
    Plan plan;
    std::vector<std::vector<int64_t>> contents;
    ElementIndex idx;
    for (size_t k = 0; k < coords.size(); ++k) {
      auto got = derive_any(targets[k], tdims, contents, idx);
      if (!got) {
        MaterializedVector own = default_vector(ws, wl, coords[k], extended);
        std::vector<int64_t> oc = own.content(site.array_shape);
        auto self = check_rotation(targets[k], tdims, oc, 0);
        if (!self)
          return std::nullopt;
        plan.bases.push_back(own);
        contents.push_back(oc);
        index_source(idx, static_cast<int>(contents.size()) - 1, oc);
        got = std::make_pair(static_cast<int>(contents.size()) - 1, *self);
      }
      plan.base_of.push_back(got->first);
      plan.ds.push_back(got->second);
    }
    return plan;
  };
  std::optional<Plan> plan = run_pass(false);
  if (case_ != 2 && !l.vectorized.empty())
    if (auto ext = run_pass(true); ext && ext->bases.size() < plan->bases.size())
      plan = ext;

  std::string var = reg.fresh_var(site.cipher ? "ct" : "pt");
  VarEntry entry = domain_entry(l.exploded, site.cipher);
  for (size_t k = 0; k < coords.size(); ++k)
    entry.map[coords[k]] = CObject::vector(plan->bases[plan->base_of[k]]);
  reg.vars[var] = entry;
  CPtr e = finish(CNode::var(var, site.cipher), l.exploded, coords, plan->ds,
                  reg);

  if (case_ == 1 || case_ == 3) {
    int64_t wb = 1;
    for (size_t k = 1; k < l.vectorized.size(); ++k)
      wb *= l.vectorized[k].extent;
    size_t ka = 0;
    while (l.exploded[ka].dim != l.pre.a)
      ++ka;
    for (size_t k = 0; k < coords.size(); ++k) {
      std::vector<int64_t> got = targets[k];
      if (case_ == 3)
        got = rotate_block(got, -wb * coords[k][ka]);
      if (got != site_content(site, l, coords[k]))
        throw ScheduleInvalid("site " + std::to_string(site.id) +
                              ": roll materialization mismatch");
    }
    if (case_ == 3) {
      Offset o;
      o.dims[l.exploded[ka].name] = -wb;
      e = CNode::rot(o, e);
    }
  }
  return {e, site_layout(l), 0};
}

SiteCircuit materialize_expr(const Site &site, const Layout &l,
                             const Producer &producer, Registry &reg) {
  const Shape tdims = vec_extents(l);
  std::vector<Coord> coords = coordinates(l.exploded);
  std::vector<std::vector<int64_t>> targets;
  for (const Coord &c : coords)
    targets.push_back(site_content(site, l, c));

  if (producer.constant) {
    // Constant array: the value where the traversal reads, zero elsewhere.
    std::vector<Derivation> ds;
    bool any_zero = false;
    for (const auto &t : targets) {
      Derivation d;
      bool zeros = std::count(t.begin(), t.end(), kZero) > 0;
      if (zeros) {
        any_zero = true;
        std::vector<int64_t> ones(t.size(), 0);
        auto m = check_rotation(t, tdims, std::vector<int64_t>(t.size(), kGarbage), 0);
        if (!m)
          throw ScheduleInvalid("site " + std::to_string(site.id) +
                                ": constant array read is not a box");
        d = *m;
      }
      ds.push_back(d);
    }
    CPtr e = CNode::lit(*producer.constant);
    if (any_zero) {
      // Reuse finish() for the mask; constants never rotate.
      for (auto &d : ds)
        d.rotation = 0;
      e = finish(e, l.exploded, coords, ds, reg);
    }
    return {e, site_layout(l), any_zero ? std::optional<int64_t>(0)
                                        : producer.constant};
  }

  const OutputLayout &pl = producer.layout;
  std::vector<Coord> pcoords = coordinates(pl.exploded);
  std::vector<std::vector<int64_t>> pcontents;
  for (const Coord &pc : pcoords)
    pcontents.push_back(producer_content(producer, pc));
  Shape pdims;
  std::vector<size_t> reduced;
  for (size_t k = 0; k < pl.dims.size(); ++k) {
    pdims.push_back(pl.dims[k].extent);
    if (pl.dims[k].kind == OutDim::Kind::Reduced && pl.dims[k].extent > 1)
      reduced.push_back(k);
  }
  std::vector<std::vector<size_t>> candidates = {{}};
  for (size_t k : reduced)
    candidates.push_back({k});
  if (reduced.size() > 1)
    candidates.push_back(reduced);

  for (const auto &cf : candidates) {
    std::vector<std::vector<int64_t>> sources;
    ElementIndex idx;
    for (size_t p = 0; p < pcontents.size(); ++p) {
      sources.push_back(cf.empty() ? pcontents[p]
                                   : clean_and_fill(pcontents[p], pdims, cf));
      index_source(idx, static_cast<int>(p), sources.back());
    }
    std::vector<int> src_of;
    std::vector<Derivation> ds;
    bool ok = true;
    for (size_t k = 0; k < coords.size() && ok; ++k) {
      auto got = derive_any(targets[k], tdims, sources, idx);
      if (!got) {
        ok = false;
        break;
      }
      src_of.push_back(got->first);
      ds.push_back(got->second);
    }
    if (!ok)
      continue;
    std::string var = reg.fresh_var(producer.cipher ? "ct" : "pt");
    VarEntry entry = domain_entry(l.exploded, producer.cipher);
    for (size_t k = 0; k < coords.size(); ++k)
      entry.map[coords[k]] = CObject::let_ref(producer.name, pcoords[src_of[k]]);
    reg.vars[var] = entry;
    CPtr e = CNode::var(var, producer.cipher);
    if (!cf.empty()) {
      MaskSpec keep;
      for (size_t k = 0; k < pdims.size(); ++k) {
        bool clean = std::find(cf.begin(), cf.end(), k) != cf.end();
        keep.dims.push_back({pdims[k], 0, clean ? 0 : pdims[k] - 1});
      }
      std::string mv = reg.fresh_var("pt");
      VarEntry me;
      me.map[{}] = CObject::of_mask(keep);
      reg.vars[mv] = me;
      e = CNode::binop(BinOp::Mul, e, CNode::var(mv, false));
      for (size_t k : cf)
        for (int64_t r : clean_and_fill_rotations(pdims[k], pl.width(k))) {
          Offset o;
          o.constant = r;
          e = CNode::binop(BinOp::Add, e, CNode::rot(o, e));
        }
    }
    e = finish(e, l.exploded, coords, ds, reg);
    return {e, site_layout(l), 0};
  }
  throw ScheduleInvalid("site " + std::to_string(site.id) +
                        ": vectors of '" + producer.name +
                        "' cannot be derived from its output layout");
}

} // namespace hevec
