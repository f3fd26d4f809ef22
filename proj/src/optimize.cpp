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

#include "hevec/optimize.hpp"

#include <chrono>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace hevec {

namespace {

using Clock = std::chrono::steady_clock;

struct ENode {
  CNode::Kind kind = CNode::Kind::Lit;
  std::string name;
  int64_t value = 0;
  BinOp op = BinOp::Add;
  Offset offset;
  int64_t extent = 0;
  std::vector<int> kids;

  std::string key() const {
    std::ostringstream os;
    os << static_cast<int>(kind) << "|" << name << "|" << value << "|"
       << static_cast<int>(op) << "|" << offset.str() << "|" << extent;
    for (int k : kids)
      os << "|" << k;
    return os.str();
  }
};

using DimSet = std::set<std::string>;

DimSet offset_dims(const Offset &o, const Registry &reg) {
  DimSet s;
  for (const auto &[d, k] : o.dims)
    s.insert(d);
  for (const auto &[v, k] : o.vars) {
    const auto &dom = reg.offsets.at(v).domain;
    s.insert(dom.begin(), dom.end());
  }
  return s;
}

class EGraph {
public:
  EGraph(const Registry &reg, int64_t slots) : reg_(reg), slots_(slots) {}

  int find(int c) {
    while (parent_[c] != c)
      c = parent_[c] = parent_[parent_[c]];
    return c;
  }

  // Returns -1 once the node cap is reached and the node is new; merges
  // with -1 are ignored.
  int add(ENode n) {
    for (int &k : n.kids) {
      if (k < 0)
        return -1;
      k = find(k);
    }
    std::string key = n.key();
    if (auto it = memo_.find(key); it != memo_.end())
      return find(it->second);
    if (count_ >= cap_)
      return -1;
    int id = static_cast<int>(parent_.size());
    parent_.push_back(id);
    dims_.push_back(node_dims(n));
    nodes_.push_back({n});
    memo_[key] = id;
    ++count_;
    ++changes_;
    return id;
  }

  bool merge(int a, int b) {
    if (a < 0 || b < 0)
      return false;
    a = find(a);
    b = find(b);
    if (a == b)
      return false;
    if (a > b)
      std::swap(a, b);
    parent_[b] = a;
    std::vector<ENode> moved = std::move(nodes_[b]);
    nodes_[b].clear();
    nodes_[a].insert(nodes_[a].end(), moved.begin(), moved.end());
    DimSet both;
    for (const auto &d : dims_[a])
      if (dims_[b].count(d))
        both.insert(d);
    dims_[a] = both;
    ++changes_;
    return true;
  }

  void rebuild() {
    while (true) {
      std::vector<std::pair<int, int>> pending;
      memo_.clear();
      count_ = 0;
      for (int c = 0; c < static_cast<int>(nodes_.size()); ++c) {
        if (find(c) != c)
          continue;
        std::vector<ENode> out;
        std::set<std::string> seen;
        for (ENode n : nodes_[c]) {
          for (int &k : n.kids)
            k = find(k);
          std::string key = n.key();
          if (!seen.insert(key).second)
            continue;
          auto [it, fresh] = memo_.emplace(key, c);
          if (!fresh && find(it->second) != c)
            pending.emplace_back(it->second, c);
          out.push_back(std::move(n));
        }
        count_ += static_cast<int>(out.size());
        nodes_[c] = std::move(out);
      }
      if (pending.empty())
        return;
      for (auto [a, b] : pending)
        merge(a, b);
    }
  }

  std::vector<ENode> nodes(int c) { return nodes_[find(c)]; }
  const DimSet &dims(int c) { return dims_[find(c)]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int count() const { return count_; }
  long changes() const { return changes_; }
  int64_t slots() const { return slots_; }
  void set_cap(int cap) { cap_ = cap; }
  const Registry &reg() const { return reg_; }

  bool has_lit(int c, int64_t v) {
    for (const ENode &n : nodes_[find(c)])
      if (n.kind == CNode::Kind::Lit && n.value == v)
        return true;
    return false;
  }
  std::optional<int64_t> lit(int c) {
    for (const ENode &n : nodes_[find(c)])
      if (n.kind == CNode::Kind::Lit)
        return n.value;
    return std::nullopt;
  }

private:
  DimSet node_dims(const ENode &n) {
    DimSet s;
    switch (n.kind) {
    case CNode::Kind::CtVar:
    case CNode::Kind::PtVar:
      if (auto it = reg_.vars.find(n.name); it != reg_.vars.end())
        s.insert(it->second.domain.begin(), it->second.domain.end());
      break;
    case CNode::Kind::Lit:
      break;
    case CNode::Kind::Rot:
      s = offset_dims(n.offset, reg_);
      [[fallthrough]];
    case CNode::Kind::Op:
    case CNode::Kind::ReduceDim:
      for (int k : n.kids)
        s.insert(dims_[find(k)].begin(), dims_[find(k)].end());
      if (n.kind == CNode::Kind::ReduceDim)
        s.erase(n.name);
      break;
    }
    return s;
  }

  const Registry &reg_;
  int64_t slots_;
  std::vector<int> parent_;
  std::vector<std::vector<ENode>> nodes_;
  std::vector<DimSet> dims_;
  std::unordered_map<std::string, int> memo_;
  int count_ = 0;
  int cap_ = std::numeric_limits<int>::max();
  long changes_ = 0;
};

ENode lit_node(int64_t v) {
  ENode n;
  n.kind = CNode::Kind::Lit;
  n.value = v;
  return n;
}
ENode op_node(BinOp op, int a, int b) {
  ENode n;
  n.kind = CNode::Kind::Op;
  n.op = op;
  n.kids = {a, b};
  return n;
}
ENode rot_node(const Offset &o, int a) {
  ENode n;
  n.kind = CNode::Kind::Rot;
  n.offset = o;
  n.kids = {a};
  return n;
}
ENode reduce_node(const std::string &d, int64_t e, BinOp op, int a) {
  ENode n;
  n.kind = CNode::Kind::ReduceDim;
  n.name = d;
  n.extent = e;
  n.op = op;
  n.kids = {a};
  return n;
}

bool zero_offset(const Offset &o, int64_t slots) {
  return o.dims.empty() && o.vars.empty() && floor_mod(o.constant, slots) == 0;
}

Offset clean(Offset o) {
  for (auto it = o.dims.begin(); it != o.dims.end();)
    it = it->second == 0 ? o.dims.erase(it) : std::next(it);
  for (auto it = o.vars.begin(); it != o.vars.end();)
    it = it->second == 0 ? o.vars.erase(it) : std::next(it);
  return o;
}

// One pass of the identities over a snapshot of the graph.  `expand`
// enables the directions that grow terms.
void apply_rules(EGraph &g, bool expand, int limit, Clock::time_point deadline) {
  std::vector<std::pair<int, std::vector<ENode>>> snap;
  for (int c = 0; c < g.size(); ++c)
    if (g.find(c) == c)
      snap.emplace_back(c, g.nodes(c));
  auto over = [&] { return g.count() > limit || Clock::now() > deadline; };
  for (auto &[c, ns] : snap) {
    for (const ENode &n : ns) {
      if (over())
        return;
      switch (n.kind) {
      case CNode::Kind::Op: {
        int a = n.kids[0], b = n.kids[1];
        auto la = g.lit(a), lb = g.lit(b);
        if (la && lb)
          g.merge(c, g.add(lit_node(apply_binop(n.op, *la, *lb))));
        if (n.op == BinOp::Add) {
          if (g.has_lit(b, 0))
            g.merge(c, a);
          if (g.has_lit(a, 0))
            g.merge(c, b);
        } else if (n.op == BinOp::Sub) {
          if (g.has_lit(b, 0))
            g.merge(c, a);
          if (g.find(a) == g.find(b))
            g.merge(c, g.add(lit_node(0)));
        } else {
          if (g.has_lit(b, 1))
            g.merge(c, a);
          if (g.has_lit(a, 1))
            g.merge(c, b);
          if (g.has_lit(a, 0) || g.has_lit(b, 0))
            g.merge(c, g.add(lit_node(0)));
        }
        if (n.op != BinOp::Sub) {
          g.merge(c, g.add(op_node(n.op, b, a)));
          for (const ENode &m : g.nodes(a))
            if (m.kind == CNode::Kind::Op && m.op == n.op)
              g.merge(c, g.add(op_node(n.op, m.kids[0],
                                       g.add(op_node(n.op, m.kids[1], b)))));
          for (const ENode &m : g.nodes(b))
            if (m.kind == CNode::Kind::Op && m.op == n.op)
              g.merge(c, g.add(op_node(n.op, g.add(op_node(n.op, a, m.kids[0])),
                                       m.kids[1])));
        }
        // Factoring: a*x op a*y = a*(x op y).
        if (n.op != BinOp::Mul)
          for (const ENode &m1 : g.nodes(a))
            for (const ENode &m2 : g.nodes(b))
              if (m1.kind == CNode::Kind::Op && m2.kind == CNode::Kind::Op &&
                  m1.op == BinOp::Mul && m2.op == BinOp::Mul &&
                  g.find(m1.kids[0]) == g.find(m2.kids[0]))
                g.merge(c, g.add(op_node(
                               BinOp::Mul, m1.kids[0],
                               g.add(op_node(n.op, m1.kids[1], m2.kids[1])))));
        // rot(o, x) op rot(o, y) = rot(o, x op y).
        for (const ENode &r1 : g.nodes(a))
          for (const ENode &r2 : g.nodes(b))
            if (r1.kind == CNode::Kind::Rot && r2.kind == CNode::Kind::Rot &&
                r1.offset == r2.offset)
              g.merge(c, g.add(rot_node(
                             r1.offset, g.add(op_node(n.op, r1.kids[0], r2.kids[0])))));
        if (!expand)
          break;
        if (n.op == BinOp::Mul) {
          for (const ENode &m : g.nodes(b))
            if (m.kind == CNode::Kind::Op && m.op != BinOp::Mul)
              g.merge(c, g.add(op_node(m.op, g.add(op_node(BinOp::Mul, a, m.kids[0])),
                                       g.add(op_node(BinOp::Mul, a, m.kids[1])))));
          for (const ENode &m : g.nodes(b))
            if (m.kind == CNode::Kind::ReduceDim && m.op == BinOp::Add &&
                !g.dims(a).count(m.name))
              g.merge(c, g.add(reduce_node(m.name, m.extent, BinOp::Add,
                                           g.add(op_node(BinOp::Mul, a, m.kids[0])))));
        }
        break;
      }
      case CNode::Kind::Rot: {
        int x = n.kids[0];
        if (zero_offset(n.offset, g.slots()) || g.lit(x))
          g.merge(c, x);
        for (const ENode &m : g.nodes(x)) {
          if (m.kind == CNode::Kind::Rot) {
            Offset o = clean(n.offset + m.offset);
            g.merge(c, zero_offset(o, g.slots()) ? g.find(m.kids[0])
                                                 : g.add(rot_node(o, m.kids[0])));
          }
          if (!expand)
            continue;
          if (m.kind == CNode::Kind::Op)
            g.merge(c, g.add(op_node(m.op, g.add(rot_node(n.offset, m.kids[0])),
                                     g.add(rot_node(n.offset, m.kids[1])))));
          if (m.kind == CNode::Kind::ReduceDim &&
              !offset_dims(n.offset, g.reg()).count(m.name))
            g.merge(c, g.add(reduce_node(m.name, m.extent, m.op,
                                         g.add(rot_node(n.offset, m.kids[0])))));
        }
        break;
      }
      case CNode::Kind::ReduceDim: {
        int x = n.kids[0];
        if (n.op == BinOp::Add && !g.dims(x).count(n.name))
          g.merge(c, g.add(op_node(BinOp::Mul, g.add(lit_node(n.extent)), x)));
        for (const ENode &m : g.nodes(x)) {
          if (m.kind == CNode::Kind::Rot &&
              !offset_dims(m.offset, g.reg()).count(n.name))
            g.merge(c, g.add(rot_node(m.offset,
                                      g.add(reduce_node(n.name, n.extent, n.op,
                                                        m.kids[0])))));
          if (n.op == BinOp::Add && m.kind == CNode::Kind::Op &&
              m.op == BinOp::Mul && !g.dims(m.kids[0]).count(n.name))
            g.merge(c, g.add(op_node(BinOp::Mul, m.kids[0],
                                     g.add(reduce_node(n.name, n.extent, n.op,
                                                       m.kids[1])))));
        }
        break;
      }
      default:
        break;
      }
    }
  }
}

class Extractor {
public:
  Extractor(EGraph &g, const CostWeights &w) : g_(g), w_(w) {
    int n = g.size();
    best_.assign(n, std::numeric_limits<double>::infinity());
    cipher_.assign(n, false);
    choice_.assign(n, ENode{});
    bool changed = true;
    while (changed) {
      changed = false;
      for (int c = 0; c < n; ++c) {
        if (g.find(c) != c)
          continue;
        for (const ENode &node : g.nodes(c)) {
          auto [cost, ci] = node_cost(node);
          if (cost < best_[c] - 1e-12) {
            best_[c] = cost;
            cipher_[c] = ci;
            choice_[c] = node;
            changed = true;
          }
        }
      }
    }
  }

  CPtr build(int c) {
    c = g_.find(c);
    if (auto it = built_.find(c); it != built_.end())
      return it->second;
    const ENode &n = choice_[c];
    CPtr out;
    switch (n.kind) {
    case CNode::Kind::CtVar:
    case CNode::Kind::PtVar:
      out = CNode::var(n.name, n.kind == CNode::Kind::CtVar);
      break;
    case CNode::Kind::Lit:
      out = CNode::lit(n.value);
      break;
    case CNode::Kind::Op:
      out = CNode::binop(n.op, build(n.kids[0]), build(n.kids[1]));
      break;
    case CNode::Kind::Rot:
      out = CNode::rot(n.offset, build(n.kids[0]));
      break;
    case CNode::Kind::ReduceDim:
      out = CNode::reduce_dim(n.name, n.extent, n.op, build(n.kids[0]));
      break;
    }
    return built_[c] = out;
  }

private:
  std::pair<double, bool> node_cost(const ENode &n) {
    constexpr double eps = 1e-9;
    auto kid = [&](int k) {
      int c = g_.find(k);
      return std::make_pair(best_[c], static_cast<bool>(cipher_[c]));
    };
    switch (n.kind) {
    case CNode::Kind::CtVar:
      return {0, true};
    case CNode::Kind::PtVar:
    case CNode::Kind::Lit:
      return {0, false};
    case CNode::Kind::Op: {
      auto [ca, ta] = kid(n.kids[0]);
      auto [cb, tb] = kid(n.kids[1]);
      return {ca + cb + w_.op(n.op, ta, tb) + eps, ta || tb};
    }
    case CNode::Kind::Rot: {
      auto [cx, tx] = kid(n.kids[0]);
      return {cx + w_.get(tx ? "rot_c" : "rot_p") + eps, tx};
    }
    case CNode::Kind::ReduceDim: {
      auto [cx, tx] = kid(n.kids[0]);
      double e = static_cast<double>(n.extent);
      return {e * cx + (e - 1) * w_.op(n.op, tx, tx) + eps, tx};
    }
    }
    return {0, false};
  }

  EGraph &g_;
  const CostWeights &w_;
  std::vector<double> best_;
  std::vector<char> cipher_;
  std::vector<ENode> choice_;
  std::map<int, CPtr> built_;
};

int add_term(EGraph &g, const CPtr &c, std::map<const CNode *, int> &memo) {
  if (auto it = memo.find(c.get()); it != memo.end())
    return it->second;
  ENode n;
  n.kind = c->kind;
  n.name = c->name;
  n.value = c->value;
  n.op = c->op;
  n.offset = c->offset;
  n.extent = c->extent;
  for (const auto &k : c->kids)
    n.kids.push_back(add_term(g, k, memo));
  return memo[c.get()] = g.add(n);
}

CPtr optimize_body(const CPtr &body, const Registry &reg, int64_t slots,
                   const CostWeights &w, const OptimizeOptions &opt,
                   Clock::time_point deadline) {
  EGraph g(reg, slots);
  std::map<const CNode *, int> memo;
  int root = add_term(g, body, memo);
  int limit = g.count() + opt.node_budget;
  g.set_cap(limit);
  for (int iter = 0; iter < 64; ++iter) {
    long before = g.changes();
    apply_rules(g, false, limit, deadline);
    g.rebuild();
    if (g.changes() == before) {
      apply_rules(g, true, limit, deadline);
      g.rebuild();
    }
    if (g.changes() == before || g.count() > limit || Clock::now() > deadline)
      break;
  }
  return Extractor(g, w).build(root);
}

} // namespace

CircuitProgram optimize(const CircuitProgram &p, const CostWeights &w,
                        const OptimizeOptions &opt) {
  auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(opt.seconds));
  CircuitProgram best = p;
  double best_cost = cost(best, w).total;
  for (size_t k = 0; k < best.lets.size(); ++k) {
    if (best.lets[k].native)
      continue;
    CPtr body = optimize_body(best.lets[k].body, best.reg, best.slots, w, opt,
                              deadline);
    CircuitProgram cand = best;
    cand.lets[k].body = body;
    double c = cost(cand, w).total;
    if (c <= best_cost) {
      best = std::move(cand);
      best_cost = c;
    }
  }
  return best;
}

namespace {

class Hoister {
public:
  Hoister(CircuitProgram &out) : out_(out) {}

  CPtr walk(const CPtr &c, const std::vector<std::pair<std::string, int64_t>> &ctx) {
    if (auto it = memo_.find(c.get()); it != memo_.end())
      return it->second;
    CPtr res = c;
    bool leaf = c->kind == CNode::Kind::CtVar || c->kind == CNode::Kind::PtVar ||
                c->kind == CNode::Kind::Lit;
    if (!c->cipher && !leaf) {
      res = hoist(c, ctx);
    } else if (c->kind == CNode::Kind::ReduceDim) {
      auto inner = ctx;
      inner.emplace_back(c->name, c->extent);
      res = CNode::reduce_dim(c->name, c->extent, c->op, walk(c->kids[0], inner));
    } else if (c->kind == CNode::Kind::Op) {
      res = CNode::binop(c->op, walk(c->kids[0], ctx), walk(c->kids[1], ctx));
    } else if (c->kind == CNode::Kind::Rot) {
      res = CNode::rot(c->offset, walk(c->kids[0], ctx));
    }
    return memo_[c.get()] = res;
  }

  std::vector<CLet> partials;

private:
  CPtr hoist(const CPtr &c, const std::vector<std::pair<std::string, int64_t>> &ctx) {
    std::set<std::string> fd = free_dims(c, out_.reg);
    CLet l;
    l.name = out_.reg.fresh_var("__partial_");
    l.native = true;
    l.body = c;
    for (const auto &d : ctx)
      if (fd.count(d.first))
        l.dims.push_back(d);
    std::string var = out_.reg.fresh_var("pt");
    VarEntry e;
    Shape ext;
    for (const auto &d : l.dims) {
      e.domain.push_back(d.first);
      e.extents.push_back(d.second);
      ext.push_back(d.second);
    }
    for_each_index(ext, [&](const std::vector<int64_t> &coord) {
      e.map[coord] = CObject::let_ref(l.name, coord);
    });
    out_.reg.vars[var] = e;
    partials.push_back(std::move(l));
    return CNode::var(var, false);
  }

  CircuitProgram &out_;
  std::map<const CNode *, CPtr> memo_;
};

int count_plain(const CPtr &c, std::set<const CNode *> &seen) {
  if (!seen.insert(c.get()).second)
    return 0;
  int n = 0;
  if ((c->kind == CNode::Kind::Op || c->kind == CNode::Kind::ReduceDim ||
       c->kind == CNode::Kind::Rot) &&
      !c->cipher)
    ++n;
  for (const auto &k : c->kids)
    n += count_plain(k, seen);
  return n;
}

} // namespace

CircuitProgram hoist_plaintexts(const CircuitProgram &p) {
  CircuitProgram out = p;
  out.lets.clear();
  for (const CLet &l : p.lets) {
    CLet nl = l;
    bool leaf = l.body->kind == CNode::Kind::CtVar ||
                l.body->kind == CNode::Kind::PtVar ||
                l.body->kind == CNode::Kind::Lit;
    if (!l.native && !l.body->cipher && !leaf) {
      nl.native = true;
    } else if (!l.native) {
      Hoister h(out);
      nl.body = h.walk(l.body, l.dims);
      for (auto &pl : h.partials)
        out.lets.push_back(std::move(pl));
    }
    out.lets.push_back(std::move(nl));
  }
  return out;
}

int count_plain_ops(const CircuitProgram &p) {
  int n = 0;
  for (const CLet &l : p.lets) {
    if (l.native)
      continue;
    std::set<const CNode *> seen;
    n += count_plain(l.body, seen);
  }
  return n;
}

} // namespace hevec
