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

#include "hevec/loopnest.hpp"

#include <functional>
#include <sstream>

namespace hevec {

const char *vtype_name(VType t) {
  switch (t) {
  case VType::N:
    return "N";
  case VType::P:
    return "P";
  case VType::C:
    return "C";
  case VType::I:
    return "I";
  }
  return "?";
}

const char *itype_name(IType t) {
  switch (t) {
  case IType::N:
    return "N";
  case IType::CP:
    return "CP";
  case IType::CC:
    return "CC";
  }
  return "?";
}

std::string LRef::str() const {
  std::string s = name;
  for (const auto &i : idx)
    s += "[" + i + "]";
  return s;
}

std::string Amount::str() const {
  std::vector<std::string> parts;
  if (constant != 0 || terms.empty())
    parts.push_back(std::to_string(constant));
  for (const auto &t : terms)
    parts.push_back(t.coeff == 1 ? t.ref.str()
                                 : std::to_string(t.coeff) + "*" + t.ref.str());
  std::string s;
  for (size_t k = 0; k < parts.size(); ++k)
    s += (k ? " + " : "") + parts[k];
  return parts.size() > 1 ? "(" + s + ")" : s;
}

std::string Constructor::str() const {
  switch (kind) {
  case Kind::Const:
    return "const(" + std::to_string(value) + ")";
  case Kind::Mask:
    return mask.str();
  case Kind::Vector:
    return "vector(" + vec.str() + ")";
  }
  return "";
}

namespace {

const char *op_name(BinOp op) {
  switch (op) {
  case BinOp::Add:
    return "add";
  case BinOp::Sub:
    return "sub";
  case BinOp::Mul:
    return "mul";
  }
  return "?";
}

void print_stmts(const std::vector<LStmt> &ss, int depth, std::ostream &os) {
  std::string ind(4 * depth, ' ');
  for (const LStmt &s : ss) {
    os << ind;
    switch (s.kind) {
    case LStmt::Kind::Val:
      os << "val " << s.name << ": " << vtype_name(s.type) << " = "
         << s.ctor.str();
      break;
    case LStmt::Kind::Decl:
      os << "var " << s.name << ": " << vtype_name(s.type);
      for (int64_t e : s.extents)
        os << "[" << e << "]";
      break;
    case LStmt::Kind::Encode:
      os << "encode(" << s.name << ")";
      break;
    case LStmt::Kind::Assign:
      os << s.target.str() << " = ";
      if (s.literal)
        os << s.value;
      else if (s.encode)
        os << "encode(" << s.src.str() << ")";
      else
        os << s.src.str();
      break;
    case LStmt::Kind::Instr:
      os << s.name << " = " << op_name(s.op) << "(" << itype_name(s.itype)
         << ", " << s.args[0].str() << ", " << s.args[1].str() << ")";
      break;
    case LStmt::Kind::Rot:
      os << s.name << " = rot(" << itype_name(s.itype) << ", " << s.amount.str()
         << ", " << s.args[0].str() << ")";
      break;
    case LStmt::Kind::For:
      os << "for " << s.name << " in range(" << s.extent << ") {\n";
      print_stmts(s.body, depth + 1, os);
      os << ind << "}";
      break;
    }
    if (s.inplace)
      os << " [inplace]";
    os << "\n";
  }
}

LRef instr_ref(const std::string &id) { return {id, {}, true}; }
LRef array_ref(const std::string &name, std::vector<std::string> idx = {}) {
  return {name, std::move(idx), false};
}

std::vector<std::string> literal_idx(const Coord &c) {
  std::vector<std::string> out;
  for (int64_t v : c)
    out.push_back(std::to_string(v));
  return out;
}

struct Typed {
  LRef ref;
  VType type;
};

class Lowerer {
public:
  explicit Lowerer(const CircuitProgram &p) : p_(p) {}

  LoopNestProgram run() {
    LoopNestProgram out;
    out.slots = p_.slots;
    for (const CLet &l : p_.lets) {
      vals_.clear();
      encodes_.clear();
      fills_.clear();
      native_ = l.native;
      std::vector<LStmt> body;
      regions_ = {&body};
      memo_ = {{}};
      Typed r = translate(l.body);
      std::vector<std::string> idx;
      for (const auto &d : l.dims)
        idx.push_back(d.first);
      LStmt assign;
      assign.kind = LStmt::Kind::Assign;
      assign.target = array_ref(l.name, idx);
      assign.src = r.ref;
      body.push_back(assign);
      for (auto it = l.dims.rbegin(); it != l.dims.rend(); ++it) {
        LStmt loop;
        loop.kind = LStmt::Kind::For;
        loop.name = it->first;
        loop.extent = it->second;
        loop.body = std::move(body);
        body = {std::move(loop)};
      }
      LStmt decl;
      decl.kind = LStmt::Kind::Decl;
      decl.name = l.name;
      decl.type = r.type;
      for (const auto &d : l.dims)
        decl.extents.push_back(d.second);
      let_types_[l.name] = r.type;
      for (auto *part : {&vals_, &encodes_, &fills_})
        out.stmts.insert(out.stmts.end(), part->begin(), part->end());
      out.stmts.push_back(decl);
      out.stmts.insert(out.stmts.end(), body.begin(), body.end());
    }
    out.out = p_.out().name;
    out.out_dims = p_.out().dims;
    return out;
  }

private:
  std::vector<LStmt> &region() { return *regions_.back(); }

  std::string fresh_instr() { return "instr" + std::to_string(++instrs_); }

  // Declares (once per program) a constructor of the wanted type.
  LRef ensure_val(const CObject &o, VType want) {
    Constructor c;
    std::string stem;
    switch (o.kind) {
    case CObject::Kind::Const:
      c.kind = Constructor::Kind::Const;
      c.value = o.value;
      stem = "const_";
      break;
    case CObject::Kind::Mask:
      c.kind = Constructor::Kind::Mask;
      c.mask = o.mask;
      stem = "mask_";
      break;
    case CObject::Kind::Vector:
      c.kind = Constructor::Kind::Vector;
      c.vec = o.vec;
      stem = "v_" + o.vec.array + "_";
      break;
    case CObject::Kind::LetRef:
      throw Error("internal: let reference is not a constructor");
    }
    auto key = std::make_pair(c.str(), want);
    if (auto it = val_names_.find(key); it != val_names_.end())
      return array_ref(it->second);
    std::string name = stem + std::to_string(++stems_[stem]);
    LStmt v;
    v.kind = LStmt::Kind::Val;
    v.name = name;
    v.type = want == VType::C ? VType::C : VType::N;
    v.ctor = c;
    vals_.push_back(v);
    if (want == VType::P) {
      LStmt e;
      e.kind = LStmt::Kind::Encode;
      e.name = name;
      encodes_.push_back(e);
    }
    val_names_[key] = name;
    return array_ref(name);
  }

  Typed ensure_var(const std::string &var, bool cipher) {
    const VarEntry &e = p_.reg.vars.at(var);
    VType want = cipher ? VType::C : native_ ? VType::N : VType::P;
    std::string name = var + (want == VType::N ? "_n" : "");
    Typed out{array_ref(name, e.domain), want};
    if (!arrays_.insert(name).second)
      return out;
    LStmt decl;
    decl.kind = LStmt::Kind::Decl;
    decl.name = name;
    decl.type = want;
    decl.extents = e.extents;
    fills_.push_back(decl);
    Coord none(e.extents.size());
    for_each_index(e.extents, [&](const Coord &c) {
      auto it = e.map.find(c);
      if (it == e.map.end())
        throw Error("internal: registry variable '" + var +
                    "' has no entry for a coordinate");
      LStmt a;
      a.kind = LStmt::Kind::Assign;
      a.target = array_ref(name, literal_idx(c));
      const CObject &o = it->second;
      if (o.kind == CObject::Kind::LetRef) {
        VType have = let_types_.at(o.let);
        a.src = array_ref(o.let, literal_idx(o.coord));
        if (have == VType::N && want == VType::P)
          a.encode = true;
        else if (have != want)
          throw Error("internal: let '" + o.let + "' has type " +
                      vtype_name(have) + " but is read as " + vtype_name(want));
      } else {
        a.src = ensure_val(o, want);
      }
      fills_.push_back(a);
    });
    return out;
  }

  LRef ensure_offset(const std::string &var) {
    const OffsetEntry &e = p_.reg.offsets.at(var);
    LRef out = array_ref(var, e.domain);
    if (!arrays_.insert(var).second)
      return out;
    LStmt decl;
    decl.kind = LStmt::Kind::Decl;
    decl.name = var;
    decl.type = VType::I;
    decl.extents = e.extents;
    fills_.push_back(decl);
    for_each_index(e.extents, [&](const Coord &c) {
      LStmt a;
      a.kind = LStmt::Kind::Assign;
      a.target = array_ref(var, literal_idx(c));
      a.literal = true;
      a.value = e.map.at(c);
      fills_.push_back(a);
    });
    return out;
  }

  Typed emit_op(BinOp op, const Typed &a, const Typed &b) {
    IType it;
    VType t;
    if (a.type == VType::N && b.type == VType::N) {
      it = IType::N;
      t = VType::N;
    } else if (a.type == VType::C && b.type == VType::C) {
      it = IType::CC;
      t = VType::C;
    } else if ((a.type == VType::C && b.type == VType::P) ||
               (a.type == VType::P && b.type == VType::C)) {
      it = IType::CP;
      t = VType::C;
    } else {
      throw Error(std::string("cannot lower ") + op_name(op) + " on " +
                  vtype_name(a.type) + " and " + vtype_name(b.type) +
                  " operands; plaintext computations must be hoisted first");
    }
    LStmt s;
    s.kind = LStmt::Kind::Instr;
    s.name = fresh_instr();
    s.op = op;
    s.itype = it;
    s.args = {a.ref, b.ref};
    region().push_back(s);
    return {instr_ref(s.name), t};
  }

  Typed translate(const CPtr &c) {
    for (auto it = memo_.rbegin(); it != memo_.rend(); ++it)
      if (auto f = it->find(c.get()); f != it->end())
        return f->second;
    Typed r = translate_node(c);
    memo_.back().emplace(c.get(), r);
    return r;
  }

  Typed translate_node(const CPtr &c) {
    switch (c->kind) {
    case CNode::Kind::CtVar:
      return ensure_var(c->name, true);
    case CNode::Kind::PtVar:
      return ensure_var(c->name, false);
    case CNode::Kind::Lit: {
      VType want = native_ ? VType::N : VType::P;
      return {ensure_val(CObject::constant(c->value), want), want};
    }
    case CNode::Kind::Op: {
      Typed a = translate(c->kids[0]);
      Typed b = translate(c->kids[1]);
      return emit_op(c->op, a, b);
    }
    case CNode::Kind::Rot: {
      Typed x = translate(c->kids[0]);
      if (x.type == VType::P)
        throw Error("cannot rotate an encoded plaintext; hoist it first");
      LStmt s;
      s.kind = LStmt::Kind::Rot;
      s.name = fresh_instr();
      s.itype = x.type == VType::C ? IType::CC : IType::N;
      s.args = {x.ref};
      s.amount.constant = c->offset.constant;
      for (const auto &[d, k] : c->offset.dims)
        s.amount.terms.push_back({k, array_ref(d), true});
      for (const auto &[v, k] : c->offset.vars)
        s.amount.terms.push_back({k, ensure_offset(v), false});
      region().push_back(s);
      return {instr_ref(s.name), x.type};
    }
    case CNode::Kind::ReduceDim:
      return translate_reduce(c);
    }
    throw Error("internal: unknown circuit node");
  }

  Typed translate_reduce(const CPtr &c) {
    if (c->op == BinOp::Sub)
      throw Error("internal: subtraction reductions are not supported");
    std::string acc = "__reduce_" + std::to_string(++reduces_);
    bool sum = c->op == BinOp::Add;
    std::vector<LStmt> body;
    regions_.push_back(&body);
    memo_.emplace_back();
    Typed r = translate(c->kids[0]);
    if (sum && c->extent > 1) {
      Typed acc_t{array_ref(acc), r.type};
      Typed s = emit_op(BinOp::Add, acc_t, r);
      LStmt a;
      a.kind = LStmt::Kind::Assign;
      a.target = array_ref(acc);
      a.src = s.ref;
      body.push_back(a);
    } else {
      LStmt a;
      a.kind = LStmt::Kind::Assign;
      a.target = sum ? array_ref(acc) : array_ref(acc, {c->name});
      a.src = r.ref;
      body.push_back(a);
    }
    memo_.pop_back();
    regions_.pop_back();
    LStmt decl;
    decl.kind = LStmt::Kind::Decl;
    decl.name = acc;
    decl.type = r.type;
    if (!sum)
      decl.extents = {c->extent};
    region().push_back(decl);
    LStmt loop;
    loop.kind = LStmt::Kind::For;
    loop.name = c->name;
    loop.extent = c->extent;
    loop.body = std::move(body);
    region().push_back(std::move(loop));
    if (sum)
      return {array_ref(acc), r.type};
    // Balanced tree: pair adjacent entries left to right, level by level.
    std::vector<Typed> level;
    for (int64_t k = 0; k < c->extent; ++k)
      level.push_back({array_ref(acc, {std::to_string(k)}), r.type});
    while (level.size() > 1) {
      std::vector<Typed> next;
      for (size_t k = 0; k + 1 < level.size(); k += 2)
        next.push_back(emit_op(c->op, level[k], level[k + 1]));
      if (level.size() % 2)
        next.push_back(level.back());
      level = std::move(next);
    }
    return level.front();
  }

  const CircuitProgram &p_;
  bool native_ = false;
  std::vector<LStmt> vals_, encodes_, fills_;
  std::vector<std::vector<LStmt> *> regions_;
  std::vector<std::map<const CNode *, Typed>> memo_;
  std::map<std::pair<std::string, VType>, std::string> val_names_;
  std::map<std::string, int> stems_;
  std::set<std::string> arrays_;
  std::map<std::string, VType> let_types_;
  int instrs_ = 0;
  int reduces_ = 0;
};

// Arrays a statement list may (re)define, including nested loops.
void written_arrays(const std::vector<LStmt> &ss, std::set<std::string> &out) {
  for (const LStmt &s : ss) {
    if (s.kind == LStmt::Kind::Assign)
      out.insert(s.target.name);
    else if (s.kind == LStmt::Kind::Decl || s.kind == LStmt::Kind::Encode)
      out.insert(s.name);
    else if (s.kind == LStmt::Kind::For)
      written_arrays(s.body, out);
  }
}

struct Numbered {
  std::string id;
  std::set<std::string> reads;
};

class ValueNumbering {
public:
  void region(std::vector<LStmt> &ss) {
    scopes_.emplace_back();
    std::vector<LStmt> out;
    for (LStmt &s : ss) {
      for (LRef &a : s.args)
        rename(a);
      if (s.kind == LStmt::Kind::Assign && !s.literal)
        rename(s.src);
      switch (s.kind) {
      case LStmt::Kind::Instr:
      case LStmt::Kind::Rot: {
        std::string key = instr_key(s);
        if (const Numbered *n = lookup(key)) {
          renaming_[s.name] = n->id;
          continue;
        }
        Numbered n{s.name, {}};
        auto note = [&](const LRef &r) {
          if (r.instr)
            return;
          n.reads.insert(r.name);
          n.reads.insert(r.idx.begin(), r.idx.end());
        };
        for (const LRef &a : s.args)
          note(a);
        for (const AmountTerm &t : s.amount.terms)
          note(t.ref);
        scopes_.back().emplace(key, n);
        break;
      }
      case LStmt::Kind::Assign:
        invalidate(s.target.name);
        break;
      case LStmt::Kind::Decl:
      case LStmt::Kind::Encode:
        invalidate(s.name);
        break;
      case LStmt::Kind::For: {
        std::set<std::string> w;
        written_arrays(s.body, w);
        w.insert(s.name);
        for (const auto &name : w)
          invalidate(name);
        region(s.body);
        break;
      }
      case LStmt::Kind::Val:
        break;
      }
      out.push_back(std::move(s));
    }
    ss = std::move(out);
    scopes_.pop_back();
  }

private:
  void rename(LRef &r) {
    if (!r.instr)
      return;
    if (auto it = renaming_.find(r.name); it != renaming_.end())
      r.name = it->second;
  }

  static std::string instr_key(const LStmt &s) {
    std::ostringstream os;
    os << (s.kind == LStmt::Kind::Rot ? "rot" : op_name(s.op)) << "|"
       << itype_name(s.itype) << "|" << s.amount.str();
    for (const LRef &a : s.args)
      os << "|" << (a.instr ? "#" : "") << a.str();
    return os.str();
  }

  const Numbered *lookup(const std::string &key) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (auto f = it->find(key); f != it->end())
        return &f->second;
    return nullptr;
  }

  // `name` is an array being written or a dim being rebound.
  void invalidate(const std::string &name) {
    for (auto &scope : scopes_)
      for (auto it = scope.begin(); it != scope.end();)
        it = it->second.reads.count(name) ? scope.erase(it) : std::next(it);
  }

  std::vector<std::map<std::string, Numbered>> scopes_;
  std::map<std::string, std::string> renaming_;
};

void count_uses(const std::vector<LStmt> &ss, std::map<std::string, int> &uses) {
  for (const LStmt &s : ss) {
    for (const LRef &a : s.args)
      if (a.instr)
        ++uses[a.name];
    if (s.kind == LStmt::Kind::Assign && !s.literal && s.src.instr)
      ++uses[s.src.name];
    if (s.kind == LStmt::Kind::For)
      count_uses(s.body, uses);
  }
}

void mark_region(std::vector<LStmt> &ss, const std::map<std::string, int> &uses) {
  std::set<std::string> local;
  for (LStmt &s : ss) {
    if (s.kind == LStmt::Kind::For) {
      mark_region(s.body, uses);
      continue;
    }
    if ((s.kind == LStmt::Kind::Instr || s.kind == LStmt::Kind::Rot) &&
        s.args[0].instr && local.count(s.args[0].name) &&
        uses.at(s.args[0].name) == 1)
      s.inplace = true;
    if (s.kind == LStmt::Kind::Instr || s.kind == LStmt::Kind::Rot)
      local.insert(s.name);
  }
}

int count_in(const std::vector<LStmt> &ss) {
  int n = 0;
  for (const LStmt &s : ss)
    n += s.kind == LStmt::Kind::For
             ? count_in(s.body)
             : (s.kind == LStmt::Kind::Instr || s.kind == LStmt::Kind::Rot);
  return n;
}

} // namespace

std::string print(const LoopNestProgram &p) {
  std::ostringstream os;
  print_stmts(p.stmts, 0, os);
  return os.str();
}

LoopNestProgram lower(const CircuitProgram &p) { return Lowerer(p).run(); }

LoopNestProgram value_number(const LoopNestProgram &p) {
  LoopNestProgram out = p;
  ValueNumbering().region(out.stmts);
  return out;
}

void mark_inplace(LoopNestProgram &p) {
  std::map<std::string, int> uses;
  count_uses(p.stmts, uses);
  mark_region(p.stmts, uses);
}

int count_instructions(const LoopNestProgram &p) { return count_in(p.stmts); }

} // namespace hevec
