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

#include "hevec/circuit.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace hevec {

//===----------------------------------------------------------------------===//
// Vectors and masks
//===----------------------------------------------------------------------===//

int64_t MaterializedVector::block() const {
  int64_t b = 1;
  for (const auto &d : dims)
    b *= d.total();
  return b;
}

std::vector<int64_t>
MaterializedVector::content(const Shape &array_shape) const {
  std::vector<int64_t> out(block(), kZero);
  Shape totals;
  for (const auto &d : dims)
    totals.push_back(d.total());
  int64_t slot = 0;
  std::vector<int64_t> idx(offsets.size());
  for_each_index(totals, [&](const std::vector<int64_t> &q) {
    int64_t s = slot++;
    idx = offsets;
    for (size_t j = 0; j < dims.size(); ++j) {
      const VecDim &d = dims[j];
      int64_t rel = q[j] - d.oob_left;
      if (rel < 0 || rel >= d.extent)
        return;
      for (const ContentDim &c : d.content)
        idx[c.dim] += rel * c.stride;
    }
    for (size_t k = 0; k < idx.size(); ++k)
      if (idx[k] < 0 || idx[k] >= array_shape[k])
        return;
    if (pre.is_roll())
      idx[pre.a] = floor_mod(idx[pre.a] + idx[pre.b], array_shape[pre.a]);
    out[s] = flatten_index(array_shape, idx);
  });
  return out;
}

std::string MaterializedVector::str() const {
  std::ostringstream os;
  os << array;
  if (pre.is_roll())
    os << "." << pre.str();
  os << "(";
  for (size_t k = 0; k < offsets.size(); ++k)
    os << (k ? ", " : "") << offsets[k];
  os << ")[";
  for (size_t j = 0; j < dims.size(); ++j) {
    const VecDim &d = dims[j];
    os << (j ? ", " : "") << "(" << d.extent << ", " << d.oob_left << ", "
       << d.oob_right;
    if (d.content.empty()) {
      os << ", {})";
      continue;
    }
    os << " {";
    for (size_t c = 0; c < d.content.size(); ++c)
      os << (c ? ", " : "") << d.content[c].dim << " :: " << d.content[c].stride;
    os << "})";
  }
  os << "]";
  return os.str();
}

int64_t MaskSpec::block() const {
  int64_t b = 1;
  for (const auto &d : dims)
    b *= d.extent;
  return b;
}

std::vector<int64_t> MaskSpec::values() const {
  std::vector<int64_t> out;
  out.reserve(block());
  Shape ext;
  for (const auto &d : dims)
    ext.push_back(d.extent);
  for_each_index(ext, [&](const std::vector<int64_t> &q) {
    int64_t v = 1;
    for (size_t j = 0; j < dims.size(); ++j)
      if (q[j] < dims[j].lo || q[j] > dims[j].hi)
        v = 0;
    out.push_back(v);
  });
  return out;
}

std::string MaskSpec::str() const {
  std::ostringstream os;
  os << "mask([";
  for (size_t j = 0; j < dims.size(); ++j)
    os << (j ? ", " : "") << "(" << dims[j].extent << ", " << dims[j].lo
       << ", " << dims[j].hi << ")";
  os << "])";
  return os.str();
}

CObject CObject::constant(int64_t v) {
  CObject o;
  o.kind = Kind::Const;
  o.value = v;
  return o;
}

CObject CObject::of_mask(MaskSpec m) {
  CObject o;
  o.kind = Kind::Mask;
  o.mask = std::move(m);
  return o;
}

CObject CObject::vector(MaterializedVector v) {
  CObject o;
  o.kind = Kind::Vector;
  o.vec = std::move(v);
  return o;
}

CObject CObject::let_ref(std::string let, std::vector<int64_t> coord) {
  CObject o;
  o.kind = Kind::LetRef;
  o.let = std::move(let);
  o.coord = std::move(coord);
  return o;
}

bool CObject::operator==(const CObject &o) const {
  if (kind != o.kind)
    return false;
  switch (kind) {
  case Kind::Const:
    return value == o.value;
  case Kind::Mask:
    return mask == o.mask;
  case Kind::Vector:
    return vec == o.vec;
  case Kind::LetRef:
    return let == o.let && coord == o.coord;
  }
  return false;
}

std::string CObject::str() const {
  switch (kind) {
  case Kind::Const:
    return "const(" + std::to_string(value) + ")";
  case Kind::Mask:
    return mask.str();
  case Kind::Vector:
    return "vector(" + vec.str() + ")";
  case Kind::LetRef:
    return let + "[" + join_ints(coord, "][") + "]";
  }
  return "?";
}

//===----------------------------------------------------------------------===//
// Registry and offsets
//===----------------------------------------------------------------------===//

std::string Registry::fresh_var(const std::string &prefix) {
  while (true) {
    std::string name = prefix + std::to_string(++counters_[prefix]);
    if (!vars.count(name) && !offsets.count(name))
      return name;
  }
}

namespace {

Coord project(const std::vector<std::string> &domain, const Env &env) {
  Coord c;
  c.reserve(domain.size());
  for (const auto &d : domain) {
    auto it = env.find(d);
    if (it == env.end())
      throw Error("dimension variable '" + d + "' is unbound");
    c.push_back(it->second);
  }
  return c;
}

} // namespace

const CObject &Registry::lookup(const std::string &var, const Env &env) const {
  const VarEntry &e = vars.at(var);
  auto it = e.map.find(project(e.domain, env));
  if (it == e.map.end())
    throw Error("registry has no entry for '" + var + "' at this coordinate");
  return it->second;
}

int64_t Registry::offset(const std::string &var, const Env &env) const {
  const OffsetEntry &e = offsets.at(var);
  return e.map.at(project(e.domain, env));
}

void Registry::rename(const std::set<std::string> &names,
                      const std::map<std::string, std::string> &renaming) {
  auto apply = [&](std::vector<std::string> &domain) {
    for (auto &d : domain) {
      auto it = renaming.find(d);
      if (it != renaming.end())
        d = it->second;
    }
  };
  for (const auto &n : names) {
    if (auto it = vars.find(n); it != vars.end())
      apply(it->second.domain);
    if (auto it = offsets.find(n); it != offsets.end())
      apply(it->second.domain);
  }
}

Offset Offset::operator+(const Offset &o) const {
  Offset r = *this;
  r.constant += o.constant;
  for (const auto &[k, v] : o.dims)
    if ((r.dims[k] += v) == 0)
      r.dims.erase(k);
  for (const auto &[k, v] : o.vars)
    if ((r.vars[k] += v) == 0)
      r.vars.erase(k);
  return r;
}

Offset Offset::scaled(int64_t k) const {
  Offset r;
  if (k == 0)
    return r;
  r.constant = constant * k;
  for (const auto &[n, v] : dims)
    r.dims[n] = v * k;
  for (const auto &[n, v] : vars)
    r.vars[n] = v * k;
  return r;
}

int64_t Offset::eval(const Registry &reg, const Env &env) const {
  int64_t v = constant;
  for (const auto &[d, c] : dims)
    v += c * env.at(d);
  for (const auto &[o, c] : vars)
    v += c * reg.offset(o, env);
  return v;
}

std::string Offset::str() const {
  std::vector<std::string> terms;
  auto term = [](int64_t c, const std::string &n) {
    return c == 1 ? n : std::to_string(c) + "*" + n;
  };
  for (const auto &[d, c] : dims)
    terms.push_back(term(c, d));
  for (const auto &[o, c] : vars)
    terms.push_back(term(c, o));
  if (constant != 0 || terms.empty())
    terms.push_back(std::to_string(constant));
  std::string s;
  for (size_t k = 0; k < terms.size(); ++k)
    s += (k ? " + " : "") + terms[k];
  return s;
}

//===----------------------------------------------------------------------===//
// Expressions
//===----------------------------------------------------------------------===//

CPtr CNode::var(const std::string &name, bool cipher) {
  auto n = std::make_shared<CNode>();
  n->kind = cipher ? Kind::CtVar : Kind::PtVar;
  n->name = name;
  n->cipher = cipher;
  return n;
}

CPtr CNode::lit(int64_t v) {
  auto n = std::make_shared<CNode>();
  n->kind = Kind::Lit;
  n->value = v;
  return n;
}

CPtr CNode::binop(BinOp op, CPtr a, CPtr b) {
  auto n = std::make_shared<CNode>();
  n->kind = Kind::Op;
  n->op = op;
  n->cipher = a->cipher || b->cipher;
  n->kids = {std::move(a), std::move(b)};
  return n;
}

CPtr CNode::rot(Offset o, CPtr a) {
  auto n = std::make_shared<CNode>();
  n->kind = Kind::Rot;
  n->offset = std::move(o);
  n->cipher = a->cipher;
  n->kids = {std::move(a)};
  return n;
}

CPtr CNode::reduce_dim(const std::string &dim, int64_t extent, BinOp op,
                       CPtr body) {
  auto n = std::make_shared<CNode>();
  n->kind = Kind::ReduceDim;
  n->name = dim;
  n->extent = extent;
  n->op = op;
  n->cipher = body->cipher;
  n->kids = {std::move(body)};
  return n;
}

std::string print(const CNode &c) {
  switch (c.kind) {
  case CNode::Kind::CtVar:
  case CNode::Kind::PtVar:
    return c.name;
  case CNode::Kind::Lit:
    return std::to_string(c.value);
  case CNode::Kind::Op:
    return "(" + print(*c.kids[0]) + " " + binop_symbol(c.op) + " " +
           print(*c.kids[1]) + ")";
  case CNode::Kind::Rot:
    return "rot(" + c.offset.str() + ", " + print(*c.kids[0]) + ")";
  case CNode::Kind::ReduceDim:
    return std::string(c.op == BinOp::Mul ? "prod_vec{" : "sum_vec{") + c.name +
           ":" + std::to_string(c.extent) + "}(" + print(*c.kids[0]) + ")";
  }
  return "?";
}

bool structurally_equal(const CNode &a, const CNode &b) {
  if (&a == &b)
    return true;
  if (a.kind != b.kind || a.name != b.name || a.value != b.value ||
      a.op != b.op || !(a.offset == b.offset) || a.extent != b.extent ||
      a.kids.size() != b.kids.size())
    return false;
  for (size_t k = 0; k < a.kids.size(); ++k)
    if (!structurally_equal(*a.kids[k], *b.kids[k]))
      return false;
  return true;
}

std::set<std::string> free_dims(const CPtr &c, const Registry &reg) {
  std::set<std::string> out;
  switch (c->kind) {
  case CNode::Kind::CtVar:
  case CNode::Kind::PtVar:
    if (auto it = reg.vars.find(c->name); it != reg.vars.end())
      out.insert(it->second.domain.begin(), it->second.domain.end());
    break;
  case CNode::Kind::Lit:
    break;
  case CNode::Kind::Op:
    out = free_dims(c->kids[0], reg);
    for (const auto &d : free_dims(c->kids[1], reg))
      out.insert(d);
    break;
  case CNode::Kind::Rot:
    out = free_dims(c->kids[0], reg);
    for (const auto &[d, k] : c->offset.dims)
      out.insert(d);
    for (const auto &[o, k] : c->offset.vars) {
      const auto &dom = reg.offsets.at(o).domain;
      out.insert(dom.begin(), dom.end());
    }
    break;
  case CNode::Kind::ReduceDim:
    out = free_dims(c->kids[0], reg);
    out.erase(c->name);
    break;
  }
  return out;
}

namespace {

CPtr rename_memo(const CPtr &c, const std::map<std::string, std::string> &r,
                 std::map<const CNode *, CPtr> &memo) {
  if (auto it = memo.find(c.get()); it != memo.end())
    return it->second;
  auto ren = [&](const std::string &n) {
    auto it = r.find(n);
    return it == r.end() ? n : it->second;
  };
  CPtr out = c;
  switch (c->kind) {
  case CNode::Kind::CtVar:
  case CNode::Kind::PtVar:
  case CNode::Kind::Lit:
    break;
  case CNode::Kind::Op:
    out = CNode::binop(c->op, rename_memo(c->kids[0], r, memo),
                       rename_memo(c->kids[1], r, memo));
    break;
  case CNode::Kind::Rot: {
    Offset o = c->offset;
    o.dims.clear();
    for (const auto &[d, k] : c->offset.dims)
      o.dims[ren(d)] += k;
    out = CNode::rot(o, rename_memo(c->kids[0], r, memo));
    break;
  }
  case CNode::Kind::ReduceDim:
    out = CNode::reduce_dim(ren(c->name), c->extent, c->op,
                            rename_memo(c->kids[0], r, memo));
    break;
  }
  memo[c.get()] = out;
  return out;
}

} // namespace

CPtr rename_dims(const CPtr &c, const std::map<std::string, std::string> &r) {
  // Memoized so shared subterms stay shared.
  std::map<const CNode *, CPtr> memo;
  return rename_memo(c, r, memo);
}

void collect_vars(const CPtr &c, std::set<std::string> &vars,
                  std::set<std::string> &offset_vars) {
  if (c->kind == CNode::Kind::CtVar || c->kind == CNode::Kind::PtVar)
    vars.insert(c->name);
  if (c->kind == CNode::Kind::Rot)
    for (const auto &[o, k] : c->offset.vars)
      offset_vars.insert(o);
  for (const auto &k : c->kids)
    collect_vars(k, vars, offset_vars);
}

//===----------------------------------------------------------------------===//
// Output layouts
//===----------------------------------------------------------------------===//

bool OutDim::operator==(const OutDim &o) const {
  if (kind != o.kind || extent != o.extent)
    return false;
  return kind != Kind::Vec ||
         (dim == o.dim && stride == o.stride && valid == o.valid);
}

std::string OutDim::str() const {
  switch (kind) {
  case Kind::Vec:
    return "(" + std::to_string(dim) + "," + std::to_string(extent) + "," +
           std::to_string(stride) +
           (valid != extent ? "/" + std::to_string(valid) : "") + ")";
  case Kind::Reduced:
    return "red(" + std::to_string(extent) + ")";
  case Kind::Repeated:
    return "rep(" + std::to_string(extent) + ")";
  }
  return "?";
}

int64_t OutputLayout::block() const {
  int64_t b = 1;
  for (const auto &d : dims)
    b *= d.extent;
  return b;
}

int64_t OutputLayout::width(size_t k) const {
  int64_t w = 1;
  for (size_t j = k + 1; j < dims.size(); ++j)
    w *= dims[j].extent;
  return w;
}

std::string OutputLayout::str() const {
  if (wildcard)
    return "T";
  std::ostringstream os;
  if (pre.is_roll())
    os << pre.str() << " ";
  os << "{";
  for (size_t k = 0; k < exploded.size(); ++k)
    os << (k ? ", " : "") << exploded[k].name << ":" << exploded[k].dim << ":"
       << exploded[k].extent << ":" << exploded[k].stride;
  os << "} [";
  for (size_t k = 0; k < dims.size(); ++k)
    os << (k ? ", " : "") << dims[k].str();
  os << "]";
  return os.str();
}

namespace {

std::vector<std::tuple<int, int64_t, int64_t>>
exploded_key(const std::vector<ExplodedDim> &e) {
  std::vector<std::tuple<int, int64_t, int64_t>> k;
  for (const auto &d : e)
    k.emplace_back(d.dim, d.extent, d.stride);
  std::sort(k.begin(), k.end());
  return k;
}

} // namespace

bool coerce(const OutputLayout &from, const OutputLayout &to) {
  if (from.wildcard)
    return true;
  if (to.wildcard)
    return false;
  if (!(from.pre == to.pre) ||
      exploded_key(from.exploded) != exploded_key(to.exploded))
    return false;
  size_t drop = 0;
  while (true) {
    if (from.dims.size() - drop == to.dims.size() &&
        std::equal(to.dims.begin(), to.dims.end(), from.dims.begin() + drop))
      return true;
    if (drop < from.dims.size() &&
        from.dims[drop].kind == OutDim::Kind::Repeated)
      ++drop;
    else
      return false;
  }
}

//===----------------------------------------------------------------------===//
// Programs
//===----------------------------------------------------------------------===//

const CLet *CircuitProgram::find(const std::string &name) const {
  for (const auto &l : lets)
    if (l.name == name)
      return &l;
  return nullptr;
}

std::string print(const CircuitProgram &p) {
  std::ostringstream os;
  for (const auto &l : p.lets) {
    os << (l.native ? "native let " : "let ") << l.name << "{";
    for (size_t k = 0; k < l.dims.size(); ++k)
      os << (k ? ", " : "") << l.dims[k].first << ":" << l.dims[k].second;
    os << "} = " << print(*l.body) << "\n";
    if (!l.native)
      os << "  # layout " << l.layout.str() << "\n";
  }
  os << "registry:\n";
  for (const auto &[name, e] : p.reg.vars) {
    os << "  " << name << (e.cipher ? " : C" : " : P") << " ["
       << [&] {
            std::string s;
            for (size_t k = 0; k < e.domain.size(); ++k)
              s += (k ? ", " : "") + e.domain[k];
            return s;
          }()
       << "]\n";
    for (const auto &[c, o] : e.map)
      os << "    {" << join_ints(c, ", ") << "} -> " << o.str() << "\n";
  }
  for (const auto &[name, e] : p.reg.offsets) {
    os << "  " << name << " : offset [";
    for (size_t k = 0; k < e.domain.size(); ++k)
      os << (k ? ", " : "") << e.domain[k];
    os << "]\n";
    for (const auto &[c, v] : e.map)
      os << "    {" << join_ints(c, ", ") << "} -> " << v << "\n";
  }
  return os.str();
}

namespace {

bool same_entry(const VarEntry &a, const VarEntry &b) {
  return a.domain == b.domain && a.extents == b.extents && a.cipher == b.cipher &&
         a.map == b.map;
}

class HashCons {
public:
  HashCons(const std::map<std::string, std::string> &var_ren) : ren_(var_ren) {}

  CPtr run(const CPtr &c) {
    if (auto it = done_.find(c.get()); it != done_.end())
      return it->second;
    auto n = std::make_shared<CNode>(*c);
    for (auto &k : n->kids)
      k = run(k);
    if (auto it = ren_.find(n->name);
        it != ren_.end() &&
        (n->kind == CNode::Kind::CtVar || n->kind == CNode::Kind::PtVar))
      n->name = it->second;
    if (n->kind == CNode::Kind::Rot) {
      Offset o = n->offset;
      o.vars.clear();
      for (const auto &[v, k] : n->offset.vars) {
        auto it = ren_.find(v);
        o.vars[it == ren_.end() ? v : it->second] += k;
      }
      n->offset = o;
    }
    std::ostringstream key;
    key << static_cast<int>(n->kind) << "|" << n->name << "|" << n->value
        << "|" << static_cast<int>(n->op) << "|" << n->offset.str() << "|"
        << n->extent;
    for (const auto &k : n->kids)
      key << "|" << k.get();
    auto [it, fresh] = table_.emplace(key.str(), n);
    return done_[c.get()] = it->second;
  }

private:
  const std::map<std::string, std::string> &ren_;
  std::map<std::string, CPtr> table_;
  std::map<const CNode *, CPtr> done_;
};

} // namespace

void share_subterms(CircuitProgram &p) {
  std::map<std::string, std::string> ren;
  std::vector<std::string> kept;
  for (const auto &[name, e] : p.reg.vars) {
    bool merged = false;
    for (const auto &k : kept)
      if (same_entry(p.reg.vars.at(k), e)) {
        ren[name] = k;
        merged = true;
        break;
      }
    if (!merged)
      kept.push_back(name);
  }
  std::vector<std::string> kept_off;
  for (const auto &[name, e] : p.reg.offsets) {
    bool merged = false;
    for (const auto &k : kept_off) {
      const OffsetEntry &o = p.reg.offsets.at(k);
      if (o.domain == e.domain && o.extents == e.extents && o.map == e.map) {
        ren[name] = k;
        merged = true;
        break;
      }
    }
    if (!merged)
      kept_off.push_back(name);
  }
  HashCons hc(ren);
  std::set<std::string> used, used_off;
  for (auto &l : p.lets) {
    l.body = hc.run(l.body);
    collect_vars(l.body, used, used_off);
  }
  for (auto it = p.reg.vars.begin(); it != p.reg.vars.end();)
    it = used.count(it->first) ? std::next(it) : p.reg.vars.erase(it);
  for (auto it = p.reg.offsets.begin(); it != p.reg.offsets.end();)
    it = used_off.count(it->first) ? std::next(it) : p.reg.offsets.erase(it);
}

std::vector<int64_t> pack(const MaterializedVector &v, const Nest &array,
                          int64_t slots) {
  std::vector<int64_t> content = v.content(array.shape);
  int64_t b = static_cast<int64_t>(content.size());
  if (slots % b != 0)
    throw Error("vector block of " + std::to_string(b) +
                " slots does not divide the slot count");
  std::vector<int64_t> out(slots);
  for (int64_t i = 0; i < slots; ++i) {
    int64_t el = content[i % b];
    out[i] = el < 0 ? 0 : array.data[el];
  }
  return out;
}

std::vector<int64_t> rotate(const std::vector<int64_t> &v, int64_t r) {
  int64_t n = static_cast<int64_t>(v.size());
  std::vector<int64_t> out(n);
  for (int64_t i = 0; i < n; ++i)
    out[i] = v[floor_mod(i - r, n)];
  return out;
}

CircuitEvaluator::CircuitEvaluator(const CircuitProgram &p,
                                   const InputMap &inputs)
    : p_(p), inputs_(inputs) {}

std::vector<int64_t> CircuitEvaluator::object(const CObject &o) {
  switch (o.kind) {
  case CObject::Kind::Const:
    return std::vector<int64_t>(p_.slots, o.value);
  case CObject::Kind::Mask: {
    std::vector<int64_t> m = o.mask.values(), out(p_.slots);
    for (int64_t i = 0; i < p_.slots; ++i)
      out[i] = m[i % m.size()];
    return out;
  }
  case CObject::Kind::Vector:
    return pack(o.vec, inputs_.at(o.vec.array), p_.slots);
  case CObject::Kind::LetRef:
    return let_value(o.let, o.coord);
  }
  return {};
}

const std::vector<int64_t> &CircuitEvaluator::let_value(const std::string &let,
                                                        const Coord &coord) {
  auto key = std::make_pair(let, coord);
  if (auto it = memo_.find(key); it != memo_.end())
    return it->second;
  const CLet *l = p_.find(let);
  if (!l)
    throw Error("unknown let '" + let + "'");
  Env env;
  for (size_t k = 0; k < l->dims.size(); ++k)
    env[l->dims[k].first] = coord.at(k);
  std::vector<int64_t> v = eval(l->body, env);
  return memo_[key] = std::move(v);
}

std::map<Coord, std::vector<int64_t>> CircuitEvaluator::outputs() {
  const CLet &out = p_.out();
  Shape ext;
  for (const auto &d : out.dims)
    ext.push_back(d.second);
  std::map<Coord, std::vector<int64_t>> res;
  for_each_index(ext, [&](const std::vector<int64_t> &c) {
    res[c] = let_value(out.name, c);
  });
  return res;
}

std::vector<int64_t> CircuitEvaluator::eval(const CPtr &c, Env &env) {
  switch (c->kind) {
  case CNode::Kind::CtVar:
  case CNode::Kind::PtVar:
    return object(p_.reg.lookup(c->name, env));
  case CNode::Kind::Lit:
    return std::vector<int64_t>(p_.slots, c->value);
  case CNode::Kind::Op: {
    std::vector<int64_t> a = eval(c->kids[0], env), b = eval(c->kids[1], env);
    for (size_t i = 0; i < a.size(); ++i)
      a[i] = apply_binop(c->op, a[i], b[i]);
    return a;
  }
  case CNode::Kind::Rot:
    return rotate(eval(c->kids[0], env), c->offset.eval(p_.reg, env));
  case CNode::Kind::ReduceDim: {
    std::optional<int64_t> saved;
    if (auto it = env.find(c->name); it != env.end())
      saved = it->second;
    std::vector<int64_t> acc;
    for (int64_t k = 0; k < c->extent; ++k) {
      env[c->name] = k;
      std::vector<int64_t> v = eval(c->kids[0], env);
      if (k == 0) {
        acc = std::move(v);
      } else {
        for (size_t i = 0; i < acc.size(); ++i)
          acc[i] = apply_binop(c->op, acc[i], v[i]);
      }
    }
    if (saved)
      env[c->name] = *saved;
    else
      env.erase(c->name);
    return acc;
  }
  }
  return {};
}

//===----------------------------------------------------------------------===//
// Cost
//===----------------------------------------------------------------------===//

double CostWeights::op(BinOp op, bool c1, bool c2) const {
  std::string k = op == BinOp::Add ? "add" : op == BinOp::Sub ? "sub" : "mul";
  k += (c1 && c2) ? "_cc" : (c1 || c2) ? "_cp" : "_pp";
  return w.at(k);
}

CostWeights CostWeights::parse(const std::string &text) {
  CostWeights cw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos)
      line.resize(h);
    auto eq = line.find('=');
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    if (trim(line).empty())
      continue;
    if (eq == std::string::npos)
      throw ParseError("expected key = value", lineno, 1);
    std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (!cw.w.count(k))
      throw ParseError("unknown cost weight '" + k + "'", lineno, 1);
    cw.w[k] = std::stod(v);
  }
  return cw;
}

std::string CostValue::str() const {
  std::ostringstream os;
  os << "total " << total << " (ops " << ops << ", input vectors "
     << input_vectors << ", depth " << depth << ")";
  for (const auto &[k, v] : counts)
    os << " " << k << "=" << v;
  return os.str();
}

namespace {

class CostWalker {
public:
  explicit CostWalker(const CostWeights &w) : w_(w) {}

  void walk(const CPtr &c, double m) {
    if (!seen_.insert({c.get(), m}).second)
      return;
    switch (c->kind) {
    case CNode::Kind::CtVar:
    case CNode::Kind::PtVar:
    case CNode::Kind::Lit:
      return;
    case CNode::Kind::Op: {
      bool a = c->kids[0]->cipher, b = c->kids[1]->cipher;
      charge(op_key(c->op, a, b), m, w_.op(c->op, a, b));
      walk(c->kids[0], m);
      walk(c->kids[1], m);
      return;
    }
    case CNode::Kind::Rot:
      charge(c->cipher ? "rot_c" : "rot_p", m,
             w_.get(c->cipher ? "rot_c" : "rot_p"));
      walk(c->kids[0], m);
      return;
    case CNode::Kind::ReduceDim: {
      bool t = c->kids[0]->cipher;
      charge(op_key(c->op, t, t), m * static_cast<double>(c->extent - 1),
             w_.op(c->op, t, t));
      walk(c->kids[0], m * static_cast<double>(c->extent));
      return;
    }
    }
  }

  void reset() { seen_.clear(); }
  double total = 0;
  std::map<std::string, double> counts;

private:
  static std::string op_key(BinOp op, bool a, bool b) {
    std::string k = op == BinOp::Add ? "add" : op == BinOp::Sub ? "sub" : "mul";
    return k + ((a && b) ? "_cc" : (a || b) ? "_cp" : "_pp");
  }
  void charge(const std::string &k, double m, double w) {
    counts[k] += m;
    total += m * w;
  }

  const CostWeights &w_;
  std::set<std::pair<const CNode *, double>> seen_;
};

} // namespace

double expr_cost(const CPtr &c, const CostWeights &w, double m) {
  CostWalker walker(w);
  walker.walk(c, m);
  return walker.total;
}

CostValue cost(const CircuitProgram &p, const CostWeights &w) {
  CostValue v;
  CostWalker walker(w);
  std::map<std::string, int64_t> let_depth;
  std::vector<MaterializedVector> inputs;
  std::set<std::string> seen_vars;

  std::function<int64_t(const CPtr &)> depth = [&](const CPtr &c) -> int64_t {
    switch (c->kind) {
    case CNode::Kind::CtVar:
    case CNode::Kind::PtVar: {
      int64_t d = 0;
      auto it = p.reg.vars.find(c->name);
      if (it == p.reg.vars.end())
        return 0;
      for (const auto &[coord, o] : it->second.map)
        if (o.kind == CObject::Kind::LetRef && let_depth.count(o.let))
          d = std::max(d, let_depth[o.let]);
      return d;
    }
    case CNode::Kind::Lit:
      return 0;
    case CNode::Kind::Op: {
      int64_t d = std::max(depth(c->kids[0]), depth(c->kids[1]));
      bool cc = c->kids[0]->cipher && c->kids[1]->cipher;
      return d + (c->op == BinOp::Mul && cc ? 1 : 0);
    }
    case CNode::Kind::Rot:
      return depth(c->kids[0]);
    case CNode::Kind::ReduceDim: {
      int64_t d = depth(c->kids[0]);
      return d + (c->op == BinOp::Mul && c->cipher ? ceil_log2(c->extent) : 0);
    }
    }
    return 0;
  };

  for (const auto &l : p.lets) {
    double m = 1;
    for (const auto &d : l.dims)
      m *= static_cast<double>(d.second);
    walker.reset();
    walker.walk(l.body, m);
    let_depth[l.name] = depth(l.body);
    std::set<std::string> vars, offs;
    collect_vars(l.body, vars, offs);
    for (const auto &name : vars) {
      if (!seen_vars.insert(name).second)
        continue;
      for (const auto &[coord, o] : p.reg.vars.at(name).map)
        if (o.kind == CObject::Kind::Vector &&
            std::find(inputs.begin(), inputs.end(), o.vec) == inputs.end())
          inputs.push_back(o.vec);
    }
  }
  v.ops = walker.total;
  v.counts = walker.counts;
  v.input_vectors = static_cast<int64_t>(inputs.size());
  v.depth = let_depth[p.out().name];
  v.total = v.ops + w.get("input_vector") * static_cast<double>(v.input_vectors) +
            w.get("depth") * static_cast<double>(v.depth);
  return v;
}

} // namespace hevec
