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

#include "hevec/backend.hpp"

#include "json.hpp"

#include <sstream>
#include <unordered_map>

namespace hevec {

std::string OpTrace::json() const {
  nlohmann::ordered_json j;
  j["rotations_cc"] = rotations_cc;
  j["add_cc"] = add_cc;
  j["add_cp"] = add_cp;
  j["sub_cc"] = sub_cc;
  j["sub_cp"] = sub_cp;
  j["mul_cc"] = mul_cc;
  j["mul_cp"] = mul_cp;
  j["native_ops"] = native_ops;
  j["encodes"] = encodes;
  j["input_vectors"] = input_vectors;
  j["output_vectors"] = output_vectors;
  j["mult_depth"] = mult_depth;
  return j.dump();
}

bool OpTrace::operator==(const OpTrace &o) const { return json() == o.json(); }

namespace {

struct Value {
  std::shared_ptr<const std::vector<int64_t>> v;
  VType type = VType::N;
  int64_t depth = 0;
  bool set = false;
};

struct Array {
  Shape extents;
  VType type = VType::N;
  std::vector<Value> elems;
  std::vector<int64_t> ints;
};

class Machine {
public:
  Machine(const LoopNestProgram &p, const InputMap &in, int64_t slots)
      : p_(p), in_(in), slots_(slots) {
    if (!is_pow2(slots_))
      throw Error("slot count " + std::to_string(slots_) +
                  " is not a power of two");
  }

  SimResult run() {
    exec(p_.stmts);
    SimResult r;
    const Array &out = arrays_.at(p_.out);
    for_each_index(out.extents, [&](const Coord &c) {
      const Value &v = out.elems.at(flatten_index(out.extents, c));
      if (!v.set)
        throw Error("output coordinate never assigned");
      r.outputs[c] = *v.v;
      trace_.mult_depth = std::max(trace_.mult_depth, v.depth);
    });
    trace_.output_vectors = shape_size(out.extents);
    r.trace = trace_;
    return r;
  }

private:
  int64_t index(const std::string &i) const {
    if (!i.empty() && (std::isdigit(static_cast<unsigned char>(i[0])) || i[0] == '-'))
      return std::stoll(i);
    auto it = env_.find(i);
    if (it == env_.end())
      throw Error("unbound loop variable '" + i + "'");
    return it->second;
  }

  Array &array(const std::string &name) {
    auto it = arrays_.find(name);
    if (it == arrays_.end())
      throw Error("undeclared array '" + name + "'");
    return it->second;
  }

  size_t position(const Array &a, const LRef &r) const {
    if (r.idx.size() != a.extents.size())
      throw Error("wrong number of indices for '" + r.name + "'");
    Coord c;
    for (size_t k = 0; k < r.idx.size(); ++k) {
      int64_t v = index(r.idx[k]);
      if (v < 0 || v >= a.extents[k])
        throw Error("index out of range for '" + r.name + "'");
      c.push_back(v);
    }
    return static_cast<size_t>(flatten_index(a.extents, c));
  }

  Value &ref(const LRef &r) {
    if (r.instr) {
      auto it = instrs_.find(r.name);
      if (it == instrs_.end())
        throw Error("instruction '" + r.name + "' used before definition");
      return it->second;
    }
    Array &a = array(r.name);
    return a.elems.at(position(a, r));
  }

  int64_t amount(const Amount &am) {
    int64_t v = am.constant;
    for (const AmountTerm &t : am.terms) {
      if (t.dim) {
        v += t.coeff * index(t.ref.name);
      } else {
        Array &a = array(t.ref.name);
        v += t.coeff * a.ints.at(position(a, t.ref));
      }
    }
    return v;
  }

  std::vector<int64_t> construct(const Constructor &c) {
    switch (c.kind) {
    case Constructor::Kind::Const:
      return std::vector<int64_t>(slots_, c.value);
    case Constructor::Kind::Mask: {
      std::vector<int64_t> m = c.mask.values(), out(slots_);
      if (static_cast<int64_t>(m.size()) > slots_)
        throw Error("mask block exceeds the slot count");
      for (int64_t i = 0; i < slots_; ++i)
        out[i] = m[i % m.size()];
      return out;
    }
    case Constructor::Kind::Vector: {
      auto it = in_.find(c.vec.array);
      if (it == in_.end())
        throw Error("missing input array '" + c.vec.array + "'");
      return pack(c.vec, it->second, slots_);
    }
    }
    return {};
  }

  static void expect(bool ok, const std::string &what) {
    if (!ok)
      throw Error("type violation: " + what);
  }

  void instr(const LStmt &s) {
    const Value &a = ref(s.args[0]);
    const Value &b = ref(s.args[1]);
    if (!a.set || !b.set) {
      // A fresh accumulator: the sum starts as the other operand.
      if (s.op != BinOp::Add || (!a.set && !b.set))
        throw Error("read of an unset value in '" + s.name + "'");
      instrs_[s.name] = a.set ? a : b;
      return;
    }
    switch (s.itype) {
    case IType::N:
      expect(a.type == VType::N && b.type == VType::N,
             s.name + " expects native operands");
      ++trace_.native_ops;
      break;
    case IType::CC:
      expect(a.type == VType::C && b.type == VType::C,
             s.name + " expects ciphertext operands");
      break;
    case IType::CP:
      expect((a.type == VType::C && b.type == VType::P) ||
                 (a.type == VType::P && b.type == VType::C),
             s.name + " expects a ciphertext and a plaintext");
      break;
    }
    if (s.itype != IType::N) {
      bool cc = s.itype == IType::CC;
      switch (s.op) {
      case BinOp::Add:
        ++(cc ? trace_.add_cc : trace_.add_cp);
        break;
      case BinOp::Sub:
        ++(cc ? trace_.sub_cc : trace_.sub_cp);
        break;
      case BinOp::Mul:
        ++(cc ? trace_.mul_cc : trace_.mul_cp);
        break;
      }
    }
    auto out = std::make_shared<std::vector<int64_t>>(slots_);
    for (int64_t i = 0; i < slots_; ++i)
      (*out)[i] = apply_binop(s.op, (*a.v)[i], (*b.v)[i]);
    Value r;
    r.v = std::move(out);
    r.type = s.itype == IType::N ? VType::N : VType::C;
    r.depth = std::max(a.depth, b.depth) +
              (s.op == BinOp::Mul && s.itype == IType::CC ? 1 : 0);
    r.set = true;
    instrs_[s.name] = std::move(r);
  }

  void rot(const LStmt &s) {
    const Value &x = ref(s.args[0]);
    if (!x.set)
      throw Error("read of an unset value in '" + s.name + "'");
    expect(s.itype == IType::CC ? x.type == VType::C : x.type == VType::N,
           s.name + " rotates a value of the wrong type");
    int64_t r = floor_mod(amount(s.amount), slots_);
    Value out = x;
    if (r != 0) {
      out.v = std::make_shared<std::vector<int64_t>>(rotate(*x.v, r));
      ++(s.itype == IType::CC ? trace_.rotations_cc : trace_.native_ops);
    }
    instrs_[s.name] = std::move(out);
  }

  void assign(const LStmt &s) {
    Array &a = array(s.target.name);
    size_t pos = position(a, s.target);
    if (s.literal) {
      expect(a.type == VType::I, "integer stored into a vector array");
      a.ints.at(pos) = s.value;
      return;
    }
    Value v = ref(s.src);
    if (!v.set)
      throw Error("read of an unset value '" + s.src.str() + "'");
    if (s.encode) {
      expect(v.type == VType::N, "only native vectors can be encoded");
      v.type = VType::P;
      ++trace_.encodes;
    }
    expect(v.type == a.type, std::string("storing ") + vtype_name(v.type) +
                                 " into " + vtype_name(a.type) + " array '" +
                                 s.target.name + "'");
    a.elems.at(pos) = std::move(v);
  }

  void exec(const std::vector<LStmt> &ss) {
    for (const LStmt &s : ss) {
      switch (s.kind) {
      case LStmt::Kind::Val: {
        Array a;
        a.type = s.type;
        Value v;
        v.v = std::make_shared<std::vector<int64_t>>(construct(s.ctor));
        v.type = s.type;
        v.set = true;
        a.elems = {v};
        arrays_[s.name] = std::move(a);
        if (s.ctor.kind == Constructor::Kind::Vector)
          ++trace_.input_vectors;
        break;
      }
      case LStmt::Kind::Decl: {
        Array a;
        a.extents = s.extents;
        a.type = s.type;
        size_t n = static_cast<size_t>(shape_size(s.extents));
        if (s.type == VType::I)
          a.ints.assign(n, 0);
        else
          a.elems.assign(n, Value{});
        arrays_[s.name] = std::move(a);
        break;
      }
      case LStmt::Kind::Encode: {
        Array &a = array(s.name);
        expect(a.type == VType::N && a.elems.size() == 1,
               "encode of '" + s.name + "' expects a native value");
        a.type = VType::P;
        a.elems[0].type = VType::P;
        ++trace_.encodes;
        break;
      }
      case LStmt::Kind::Assign:
        assign(s);
        break;
      case LStmt::Kind::Instr:
        instr(s);
        break;
      case LStmt::Kind::Rot:
        rot(s);
        break;
      case LStmt::Kind::For: {
        std::optional<int64_t> saved;
        if (auto it = env_.find(s.name); it != env_.end())
          saved = it->second;
        for (int64_t k = 0; k < s.extent; ++k) {
          env_[s.name] = k;
          exec(s.body);
        }
        if (saved)
          env_[s.name] = *saved;
        else
          env_.erase(s.name);
        break;
      }
      }
    }
  }

  const LoopNestProgram &p_;
  const InputMap &in_;
  int64_t slots_;
  std::unordered_map<std::string, Array> arrays_;
  std::unordered_map<std::string, Value> instrs_;
  std::map<std::string, int64_t> env_;
  OpTrace trace_;
};

} // namespace

SimResult simulate(const LoopNestProgram &p, const InputMap &inputs,
                   int64_t slots) {
  return Machine(p, inputs, slots ? slots : p.slots).run();
}

//===----------------------------------------------------------------------===//
// Script emission
//===----------------------------------------------------------------------===//

Binding default_binding() {
  Binding b;
  for (const char *k : {"make_vector", "encode", "encrypt", "add", "sub", "mul",
                        "rotate", "decrypt"})
    b[k] = k;
  return b;
}

Binding parse_binding(const std::string &text) {
  Binding b;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos)
      line.erase(h);
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, e - a + 1);
    };
    line = trim(line);
    if (line.empty())
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("binding line " + std::to_string(n) + ": expected key = value");
    b[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return b;
}

namespace {

class Emitter {
public:
  explicit Emitter(const Binding &b) : b_(b) {}

  std::string run(const LoopNestProgram &p) {
    os_ << "# Generated server program; slots = " << p.slots << "\n";
    stmts(p.stmts, 0);
    std::string ind;
    std::vector<std::string> idx;
    for (const auto &d : p.out_dims)
      idx.push_back(d.first);
    os_ << (idx.empty() ? "" : "result = {}\n");
    for (size_t k = 0; k < p.out_dims.size(); ++k) {
      os_ << ind << "for " << p.out_dims[k].first << " in range("
          << p.out_dims[k].second << "):\n";
      ind += "    ";
    }
    LRef out{p.out, idx, false};
    os_ << ind << "result" << key(idx) << " = " << api("decrypt") << "("
        << ref(out) << ")\n";
    return os_.str();
  }

private:
  const std::string &api(const std::string &name) const {
    auto it = b_.find(name);
    if (it == b_.end())
      throw Error("unbound API name '" + name + "'");
    return it->second;
  }

  static std::string key(const std::vector<std::string> &idx) {
    if (idx.empty())
      return "";
    std::string s = "[";
    for (size_t k = 0; k < idx.size(); ++k)
      s += (k ? ", " : "") + idx[k];
    return s + (idx.size() == 1 ? ",]" : "]");
  }

  static std::string ref(const LRef &r) {
    return r.instr ? r.name : r.name + key(r.idx);
  }

  static std::string quoted(const std::string &s) {
    std::string out = "\"";
    for (char c : s)
      out += c == '"' ? std::string("\\\"") : std::string(1, c);
    return out + "\"";
  }

  void stmts(const std::vector<LStmt> &ss, int depth) {
    std::string ind(4 * depth, ' ');
    if (ss.empty())
      os_ << ind << "pass\n";
    for (const LStmt &s : ss) {
      switch (s.kind) {
      case LStmt::Kind::Val: {
        std::string kind = s.ctor.kind == Constructor::Kind::Vector
                               ? s.ctor.vec.array
                           : s.ctor.kind == Constructor::Kind::Mask ? "mask"
                                                                     : "const";
        std::string made = api("make_vector") + "(" + quoted(kind) + ", " +
                           quoted(s.ctor.str()) + ")";
        if (s.type == VType::C)
          made = api("encrypt") + "(" + made + ")";
        os_ << ind << s.name << " = " << made << "\n";
        break;
      }
      case LStmt::Kind::Decl:
        os_ << ind << s.name << (s.extents.empty() ? " = None\n" : " = {}\n");
        if (s.extents.empty())
          scalars_.insert(s.name);
        break;
      case LStmt::Kind::Encode:
        os_ << ind << s.name << " = " << api("encode") << "(" << s.name << ")\n";
        break;
      case LStmt::Kind::Assign:
        os_ << ind << ref(s.target) << " = ";
        if (s.literal)
          os_ << s.value;
        else if (s.encode)
          os_ << api("encode") << "(" << ref(s.src) << ")";
        else
          os_ << ref(s.src);
        os_ << "\n";
        break;
      case LStmt::Kind::Instr: {
        const char *op = s.op == BinOp::Add   ? "add"
                         : s.op == BinOp::Sub ? "sub"
                                              : "mul";
        std::string call = api(op) + "(" + ref(s.args[0]) + ", " +
                           ref(s.args[1]) + ")";
        // A fresh accumulator contributes nothing to its first sum.
        for (int k = 0; k < 2 && s.op == BinOp::Add; ++k)
          if (!s.args[k].instr && scalars_.count(s.args[k].name)) {
            call = ref(s.args[1 - k]) + " if " + ref(s.args[k]) +
                   " is None else " + call;
            break;
          }
        os_ << ind << s.name << " = " << call << "\n";
        break;
      }
      case LStmt::Kind::Rot: {
        std::string am = s.amount.str();
        for (const AmountTerm &t : s.amount.terms)
          if (!t.dim)
            am.replace(am.find(t.ref.str()), t.ref.str().size(), ref(t.ref));
        os_ << ind << s.name << " = " << api("rotate") << "(" << ref(s.args[0])
            << ", " << am << ")\n";
        break;
      }
      case LStmt::Kind::For:
        os_ << ind << "for " << s.name << " in range(" << s.extent << "):\n";
        stmts(s.body, depth + 1);
        break;
      }
    }
  }

  const Binding &b_;
  std::ostringstream os_;
  std::set<std::string> scalars_;
};

} // namespace

std::string emit_script(const LoopNestProgram &p, const Binding &b) {
  return Emitter(b).run(p);
}

} // namespace hevec
