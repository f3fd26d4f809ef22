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

#include "hevec/cgen.hpp"

#include <algorithm>

namespace hevec {

std::optional<Preprocess> reduce_preprocess(int n, const Preprocess &p) {
  if (!p.is_roll())
    return p;
  if (n == p.a)
    return Preprocess::identity();
  if (n == p.b)
    return std::nullopt;
  return Preprocess::roll(p.a > n ? p.a - 1 : p.a, p.b > n ? p.b - 1 : p.b);
}

std::optional<std::pair<OutputLayout, std::vector<ReducedDim>>>
reduce_layout(int n, const OutputLayout &ol) {
  auto pre = reduce_preprocess(n, ol.pre);
  if (!pre)
    return std::nullopt;
  OutputLayout out;
  out.pre = *pre;
  std::vector<ReducedDim> reduced;
  for (const ExplodedDim &e : ol.exploded) {
    if (e.dim == n) {
      ReducedDim r;
      r.exploded = true;
      r.name = e.name;
      r.extent = e.extent;
      reduced.push_back(r);
      continue;
    }
    ExplodedDim k = e;
    if (k.dim > n)
      --k.dim;
    out.exploded.push_back(k);
  }
  // A reduced vector dim repeats its result when every dim outside it
  // repeats too; otherwise the wrapped windows leave garbage.
  bool outer_repeats = true;
  for (size_t k = 0; k < ol.dims.size(); ++k) {
    OutDim d = ol.dims[k];
    if (d.kind == OutDim::Kind::Vec && d.dim == n) {
      ReducedDim r;
      r.extent = d.extent;
      r.pos = k;
      r.width = ol.width(k);
      r.valid = d.valid;
      reduced.push_back(r);
      d.kind = (outer_repeats || d.extent == 1) ? OutDim::Kind::Repeated
                                                : OutDim::Kind::Reduced;
      d.dim = 0;
      d.stride = 1;
      d.valid = d.extent;
    } else if (d.kind == OutDim::Kind::Vec && d.dim > n) {
      --d.dim;
    }
    outer_repeats = outer_repeats && d.kind == OutDim::Kind::Repeated;
    out.dims.push_back(d);
  }
  return std::make_pair(out, reduced);
}

CPtr gen_reduce(BinOp op, CPtr c, const std::vector<ReducedDim> &reduced) {
  for (const ReducedDim &r : reduced)
    if (r.exploded)
      c = CNode::reduce_dim(r.name, r.extent, op, c);
  std::vector<ReducedDim> vec;
  for (const ReducedDim &r : reduced)
    if (!r.exploded)
      vec.push_back(r);
  // Innermost first, so outer chains also fold any wrapped windows.
  std::sort(vec.begin(), vec.end(),
            [](const ReducedDim &x, const ReducedDim &y) { return x.pos > y.pos; });
  for (const ReducedDim &r : vec) {
    for (int64_t t = r.extent / 2; t >= 1; t /= 2) {
      Offset o;
      o.constant = -r.width * t;
      c = CNode::binop(op, c, CNode::rot(o, c));
    }
  }
  return c;
}

namespace {

struct Gen {
  CPtr c;
  OutputLayout ol;
  std::optional<int64_t> pad;
  std::optional<int64_t> constant;
};

std::optional<int64_t> fold(BinOp op, std::optional<int64_t> a,
                            std::optional<int64_t> b) {
  if (!a || !b)
    return std::nullopt;
  return apply_binop(op, *a, *b);
}

int64_t fold_reduce(BinOp op, int64_t v, int64_t e) {
  int64_t acc = v;
  for (int64_t k = 1; k < e; ++k)
    acc = apply_binop(op, acc, v);
  return acc;
}

class Generator {
public:
  Generator(const IndexFreeProgram &p, const Schedule &s, int64_t slots)
      : p_(p), s_(s) {
    out_.slots = slots;
  }

  CircuitProgram run() {
    for (const IfStatement &st : p_.stmts) {
      if (st.kind == Statement::Kind::Input) {
        out_.input_shapes[st.name] = st.shape;
        continue;
      }
      if (st.name == "out" || st.name.rfind("__", 0) == 0)
        throw Error("let name '" + st.name + "' is reserved");
      emit(st.name, st.shape, gen(*st.expr));
    }
    out_.out_shape = p_.output->shape;
    emit("out", p_.output->shape, gen(*p_.output));
    share_subterms(out_);
    return std::move(out_);
  }

private:
  void emit(const std::string &name, const Shape &shape, const Gen &g) {
    Producer pr;
    pr.name = name;
    pr.shape = shape;
    pr.layout = g.ol;
    pr.pad = g.pad;
    pr.cipher = g.c->cipher;
    pr.constant = g.constant;
    producers_[name] = pr;
    // Constant lets are folded into their readers; `out` is always emitted.
    if (g.constant && name != "out")
      return;
    CLet l;
    l.name = name;
    for (const ExplodedDim &e : g.ol.exploded)
      l.dims.emplace_back(e.name, e.extent);
    l.body = g.c;
    l.layout = g.ol;
    l.pad = g.pad;
    std::set<std::string> bound;
    for (const auto &d : l.dims)
      bound.insert(d.first);
    for (const auto &d : free_dims(l.body, out_.reg))
      if (!bound.count(d))
        throw Error("internal: dimension '" + d + "' escapes let '" + name +
                    "'");
    out_.lets.push_back(std::move(l));
  }

  const Layout &layout_of(const Site &site) const {
    auto it = s_.find(site.id);
    if (it == s_.end())
      throw ScheduleInvalid("site " + std::to_string(site.id) +
                            " has no layout");
    return it->second;
  }

  CPtr mask_var(const OutputLayout &ol, size_t k, int64_t lo, int64_t hi) {
    MaskSpec m;
    for (size_t j = 0; j < ol.dims.size(); ++j)
      m.dims.push_back(j == k ? MaskDim{ol.dims[j].extent, lo, hi}
                              : MaskDim{ol.dims[j].extent, 0,
                                        ol.dims[j].extent - 1});
    std::string name = out_.reg.fresh_var("pt");
    VarEntry e;
    e.map[{}] = CObject::of_mask(m);
    out_.reg.vars[name] = e;
    return CNode::var(name, false);
  }

  Gen gen(const IfExpr &e) {
    switch (e.kind) {
    case IfExpr::Kind::Literal:
      return {CNode::lit(e.value), OutputLayout::top(), e.value, e.value};
    case IfExpr::Kind::Site: {
      const Site &site = p_.sites.at(e.site);
      const Layout &l = layout_of(site);
      SiteCircuit sc =
          site.is_input
              ? materialize_input(site, l, out_.reg)
              : materialize_expr(site, l, producers_.at(site.traversal.array),
                                 out_.reg);
      return {sc.expr, sc.layout, sc.pad, std::nullopt};
    }
    case IfExpr::Kind::Op:
      return gen_op(e);
    case IfExpr::Kind::Reduce:
      return gen_reduce_expr(e);
    }
    throw Error("internal: unknown index-free node");
  }

  Gen gen_op(const IfExpr &e) {
    Gen l = gen(*e.kids[0]), r = gen(*e.kids[1]);
    if (l.constant && r.constant) {
      int64_t v = apply_binop(e.op, *l.constant, *r.constant);
      return {CNode::lit(v), OutputLayout::top(), v, v};
    }
    if (l.ol.wildcard || r.ol.wildcard) {
      const OutputLayout &ol = l.ol.wildcard ? r.ol : l.ol;
      return {CNode::binop(e.op, l.c, r.c), ol, fold(e.op, l.pad, r.pad),
              std::nullopt};
    }
    if (!(l.ol.pre == r.ol.pre))
      throw ScheduleInvalid("operands disagree on preprocessing: " +
                            l.ol.str() + " vs " + r.ol.str());
    if (l.ol.exploded.size() != r.ol.exploded.size())
      throw ScheduleInvalid("operands disagree on exploded dims: " +
                            l.ol.str() + " vs " + r.ol.str());
    std::map<std::string, std::string> ren;
    for (ExplodedDim &rd : r.ol.exploded) {
      auto it = std::find_if(l.ol.exploded.begin(), l.ol.exploded.end(),
                             [&](const ExplodedDim &ld) {
                               return ld.dim == rd.dim && ld.extent == rd.extent &&
                                      ld.stride == rd.stride;
                             });
      if (it == l.ol.exploded.end())
        throw ScheduleInvalid("operands disagree on exploded dims: " +
                              l.ol.str() + " vs " + r.ol.str());
      if (it->name != rd.name) {
        ren[rd.name] = it->name;
        rd.name = it->name;
      }
    }
    if (!ren.empty()) {
      std::set<std::string> vars, offs;
      collect_vars(r.c, vars, offs);
      vars.insert(offs.begin(), offs.end());
      out_.reg.rename(vars, ren);
      r.c = rename_dims(r.c, ren);
    }
    OutputLayout ol;
    if (coerce(l.ol, r.ol))
      ol = r.ol;
    else if (coerce(r.ol, l.ol))
      ol = l.ol;
    else
      throw ScheduleInvalid("operand layouts do not unify: " + l.ol.str() +
                            " vs " + r.ol.str());
    return {CNode::binop(e.op, l.c, r.c), ol, fold(e.op, l.pad, r.pad),
            std::nullopt};
  }

  Gen gen_reduce_expr(const IfExpr &e) {
    Gen k = gen(*e.kids[0]);
    int64_t extent = e.kids[0]->shape.at(e.dim);
    if (k.constant) {
      int64_t v = fold_reduce(e.op, *k.constant, extent);
      return {CNode::lit(v), OutputLayout::top(), v, v};
    }
    auto rl = reduce_layout(e.dim, k.ol);
    if (!rl)
      throw ScheduleInvalid("reduction over dim " + std::to_string(e.dim) +
                            " is incompatible with " + k.ol.pre.str());
    std::vector<ReducedDim> ex, vec;
    for (const ReducedDim &r : rl->second)
      (r.exploded ? ex : vec).push_back(r);
    CPtr c = gen_reduce(e.op, k.c, ex);
    // Padding slots of a reduced vector dim must hold the identity.
    int64_t identity = e.op == BinOp::Mul ? 1 : 0;
    for (const ReducedDim &r : vec) {
      if (r.valid == r.extent || (k.pad && *k.pad == identity))
        continue;
      if (e.op == BinOp::Mul && k.pad && *k.pad == 0) {
        c = CNode::binop(BinOp::Add, c,
                         mask_var(k.ol, r.pos, r.valid, r.extent - 1));
        continue;
      }
      c = CNode::binop(BinOp::Mul, c, mask_var(k.ol, r.pos, 0, r.valid - 1));
      if (e.op == BinOp::Mul)
        c = CNode::binop(BinOp::Add, c,
                         mask_var(k.ol, r.pos, r.valid, r.extent - 1));
    }
    c = gen_reduce(e.op, c, vec);
    std::optional<int64_t> pad;
    if (k.pad && (*k.pad == 0 || (e.op == BinOp::Mul && *k.pad == 1)))
      pad = k.pad;
    return {c, rl->first, pad, std::nullopt};
  }

  const IndexFreeProgram &p_;
  const Schedule &s_;
  CircuitProgram out_;
  std::map<std::string, Producer> producers_;
};

} // namespace

CircuitProgram cgen(const IndexFreeProgram &p, const Schedule &s,
                    int64_t slots) {
  return Generator(p, s, slots).run();
}

Producer output_producer(const CircuitProgram &p) {
  const CLet &o = p.out();
  Producer pr;
  pr.name = o.name;
  pr.shape = p.out_shape;
  pr.layout = o.layout;
  pr.pad = o.pad;
  pr.cipher = o.body->cipher;
  if (o.layout.wildcard)
    pr.constant = o.body->value;
  return pr;
}

Nest decode_output(const CircuitProgram &p,
                   const std::map<Coord, std::vector<int64_t>> &vectors) {
  Producer pr = output_producer(p);
  Nest out(p.out_shape);
  if (pr.constant) {
    std::fill(out.data.begin(), out.data.end(), *pr.constant);
    return out;
  }
  std::vector<char> seen(out.data.size(), 0);
  for (const Coord &c : coordinates(pr.layout.exploded)) {
    const std::vector<int64_t> &v = vectors.at(c);
    std::vector<int64_t> content = producer_content(pr, c);
    for (size_t s = 0; s < content.size(); ++s) {
      if (content[s] < 0 || seen[content[s]])
        continue;
      out.data[content[s]] = v.at(s);
      seen[content[s]] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw Error("output layout does not cover every element");
  return out;
}

} // namespace hevec
