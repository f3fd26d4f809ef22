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

#include "hevec/index_free.hpp"

#include <numeric>
#include <sstream>

namespace hevec {

int64_t ArrayTraversal::element(const Shape &array_shape,
                                const std::vector<int64_t> &pos) const {
  std::vector<int64_t> idx = offsets;
  for (size_t k = 0; k < dims.size(); ++k)
    for (const ContentDim &c : dims[k].content)
      idx[c.dim] += pos[k] * c.stride;
  for (size_t d = 0; d < idx.size(); ++d)
    if (idx[d] < 0 || idx[d] >= array_shape[d])
      return -1;
  return flatten_index(array_shape, idx);
}

std::string ArrayTraversal::str() const {
  std::ostringstream os;
  os << array << ":(" << join_ints(offsets, ",") << ")[";
  for (size_t k = 0; k < dims.size(); ++k) {
    if (k)
      os << ",";
    os << "{" << dims[k].extent << ",{";
    for (size_t c = 0; c < dims[k].content.size(); ++c)
      os << (c ? "," : "") << dims[k].content[c].dim
         << "::" << dims[k].content[c].stride;
    os << "}}";
  }
  os << "]";
  return os.str();
}

const IfStatement *IndexFreeProgram::find(const std::string &name) const {
  for (const auto &s : stmts)
    if (s.name == name)
      return &s;
  return nullptr;
}

Shape IndexFreeProgram::array_shape(const std::string &name) const {
  const IfStatement *s = find(name);
  if (!s)
    throw Error("unknown array '" + name + "'");
  return s->shape;
}

namespace {

class Converter {
public:
  IndexFreeProgram run(const Program &p) {
    IndexFreeProgram out;
    prog_ = &out;
    for (const auto &s : p.stmts) {
      IfStatement st;
      st.kind = s.kind;
      st.name = s.name;
      st.shape = s.shape;
      st.party = s.party;
      if (s.kind == Statement::Kind::Let)
        st.expr = convert(*s.expr).first;
      out.stmts.push_back(st);
      shapes_[s.name] = {s.shape, s.kind == Statement::Kind::Input,
                         s.kind == Statement::Kind::Input
                             ? s.party == Party::Client
                             : s.expr->cipher};
    }
    out.output = convert(*p.output).first;
    for (Site &site : out.sites)
      for (int &c : site.dim_class)
        c = find(c);
    return out;
  }

private:
  struct ArrayInfo {
    Shape shape;
    bool input;
    bool cipher;
  };
  using Classes = std::vector<int>;

  int fresh() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }
  int find(int c) {
    while (parent_[c] != c)
      c = parent_[c] = parent_[parent_[c]];
    return c;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b)
      parent_[std::max(a, b)] = std::min(a, b);
  }

  Shape context() const {
    Shape s;
    for (const auto &f : stack_)
      s.push_back(f.second);
    return s;
  }

  std::pair<IfExprPtr, Classes> convert(const Expr &e) {
    auto out = std::make_shared<IfExpr>();
    out->cipher = e.cipher;
    out->shape = context();
    out->shape.insert(out->shape.end(), e.shape.begin(), e.shape.end());
    Classes cls;
    switch (e.kind) {
    case Expr::Kind::Literal:
      out->kind = IfExpr::Kind::Literal;
      out->value = e.value;
      for (size_t k = 0; k < out->shape.size(); ++k)
        cls.push_back(fresh());
      break;
    case Expr::Kind::Index: {
      const ArrayInfo &info = shapes_.at(e.name);
      Site site;
      site.id = static_cast<int>(prog_->sites.size());
      site.array_shape = info.shape;
      site.is_input = info.input;
      site.cipher = info.cipher;
      ArrayTraversal &t = site.traversal;
      t.array = e.name;
      t.offsets.assign(info.shape.size(), 0);
      for (size_t d = 0; d < e.indices.size(); ++d)
        t.offsets[d] = e.indices[d].constant;
      for (const auto &[var, extent] : stack_) {
        TraversalDim td;
        td.extent = extent;
        for (size_t d = 0; d < e.indices.size(); ++d) {
          int64_t c = e.indices[d].coeff(var);
          if (c != 0)
            td.content.push_back({static_cast<int>(d), c});
        }
        t.dims.push_back(td);
        site.dim_names.push_back(var);
      }
      for (size_t d = e.indices.size(); d < info.shape.size(); ++d) {
        t.dims.push_back({info.shape[d], {{static_cast<int>(d), 1}}});
        site.dim_names.push_back(e.name + "_d" + std::to_string(d));
      }
      for (size_t k = 0; k < t.dims.size(); ++k)
        cls.push_back(fresh());
      site.dim_class = cls;
      out->kind = IfExpr::Kind::Site;
      out->site = site.id;
      prog_->sites.push_back(std::move(site));
      break;
    }
    case Expr::Kind::Op: {
      auto [l, lc] = convert(*e.kids[0]);
      auto [r, rc] = convert(*e.kids[1]);
      for (size_t k = 0; k < lc.size(); ++k)
        unite(lc[k], rc[k]);
      out->kind = IfExpr::Kind::Op;
      out->op = e.op;
      out->kids = {l, r};
      cls = lc;
      break;
    }
    case Expr::Kind::Reduce: {
      auto [b, bc] = convert(*e.kids[0]);
      out->kind = IfExpr::Kind::Reduce;
      out->op = e.op;
      out->dim = static_cast<int>(stack_.size()) + e.dim;
      out->kids = {b};
      cls = bc;
      cls.erase(cls.begin() + out->dim);
      break;
    }
    case Expr::Kind::For: {
      stack_.emplace_back(e.name, e.extent);
      auto res = convert(*e.kids[0]);
      stack_.pop_back();
      return res;
    }
    }
    return {out, cls};
  }

  IndexFreeProgram *prog_ = nullptr;
  std::map<std::string, ArrayInfo> shapes_;
  std::vector<std::pair<std::string, int64_t>> stack_;
  std::vector<int> parent_;
};

std::string print_expr(const IndexFreeProgram &p, const IfExpr &e) {
  std::ostringstream os;
  switch (e.kind) {
  case IfExpr::Kind::Literal:
    os << e.value;
    break;
  case IfExpr::Kind::Site:
    os << "#" << e.site << "=" << p.sites[e.site].traversal.str();
    break;
  case IfExpr::Kind::Op:
    os << "(" << print_expr(p, *e.kids[0]) << " " << binop_symbol(e.op) << " "
       << print_expr(p, *e.kids[1]) << ")";
    break;
  case IfExpr::Kind::Reduce:
    os << "reduce(" << binop_symbol(e.op) << ", " << e.dim << ", "
       << print_expr(p, *e.kids[0]) << ")";
    break;
  }
  return os.str();
}

class IfInterpreter {
public:
  IfInterpreter(const IndexFreeProgram &p, const InputMap &inputs)
      : p_(p), arrays_(inputs) {}

  Nest run() {
    for (const auto &s : p_.stmts) {
      if (s.kind == Statement::Kind::Input) {
        if (!arrays_.count(s.name))
          throw Error("missing input '" + s.name + "'");
      } else {
        arrays_[s.name] = eval(*s.expr);
      }
    }
    return eval(*p_.output);
  }

private:
  Nest eval(const IfExpr &e) {
    Nest out(e.shape);
    switch (e.kind) {
    case IfExpr::Kind::Literal:
      std::fill(out.data.begin(), out.data.end(), e.value);
      break;
    case IfExpr::Kind::Site: {
      const Site &s = p_.sites[e.site];
      const Nest &arr = arrays_.at(s.traversal.array);
      int64_t flat = 0;
      for_each_index(e.shape, [&](const std::vector<int64_t> &pos) {
        int64_t el = s.traversal.element(s.array_shape, pos);
        out.data[flat++] = el < 0 ? 0 : arr.data[el];
      });
      break;
    }
    case IfExpr::Kind::Op: {
      Nest l = eval(*e.kids[0]), r = eval(*e.kids[1]);
      for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = apply_binop(e.op, l.data[i], r.data[i]);
      break;
    }
    case IfExpr::Kind::Reduce: {
      Nest b = eval(*e.kids[0]);
      std::vector<bool> seen(out.data.size(), false);
      int64_t flat = 0;
      for_each_index(b.shape, [&](const std::vector<int64_t> &pos) {
        std::vector<int64_t> rp = pos;
        rp.erase(rp.begin() + e.dim);
        int64_t o = flatten_index(e.shape, rp);
        int64_t v = b.data[flat++];
        out.data[o] = seen[o] ? apply_binop(e.op, out.data[o], v) : v;
        seen[o] = true;
      });
      break;
    }
    }
    return out;
  }

  const IndexFreeProgram &p_;
  InputMap arrays_;
};

} // namespace

IndexFreeProgram to_index_free(const Program &checked) {
  return Converter().run(checked);
}

std::string print(const IndexFreeProgram &p) {
  std::ostringstream os;
  for (const auto &s : p.stmts) {
    if (s.kind == Statement::Kind::Input)
      os << "input " << s.name << ": [" << join_ints(s.shape, ", ")
         << "] from " << (s.party == Party::Client ? "client" : "server")
         << "\n";
    else
      os << "let " << s.name << " = " << print_expr(p, *s.expr) << " in\n";
  }
  os << print_expr(p, *p.output) << "\n";
  return os.str();
}

Nest interpret(const IndexFreeProgram &p, const InputMap &inputs) {
  return IfInterpreter(p, inputs).run();
}

} // namespace hevec
