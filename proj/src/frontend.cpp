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

#include "hevec/frontend.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace hevec {

const char *binop_symbol(BinOp op) {
  switch (op) {
  case BinOp::Add:
    return "+";
  case BinOp::Sub:
    return "-";
  case BinOp::Mul:
    return "*";
  }
  return "?";
}

int64_t apply_binop(BinOp op, int64_t a, int64_t b) {
  // Wrapping two's-complement arithmetic; overflow is well defined and
  // identical in the interpreter and the simulator.
  auto ua = static_cast<uint64_t>(a), ub = static_cast<uint64_t>(b);
  switch (op) {
  case BinOp::Add:
    return static_cast<int64_t>(ua + ub);
  case BinOp::Sub:
    return static_cast<int64_t>(ua - ub);
  case BinOp::Mul:
    return static_cast<int64_t>(ua * ub);
  }
  return 0;
}

int64_t Affine::coeff(const std::string &var) const {
  auto it = coeffs.find(var);
  return it == coeffs.end() ? 0 : it->second;
}

std::string Affine::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto &[var, c] : coeffs) {
    int64_t mag = c < 0 ? -c : c;
    if (first)
      os << (c < 0 ? "-" : "");
    else
      os << (c < 0 ? " - " : " + ");
    if (mag != 1)
      os << mag << "*";
    os << var;
    first = false;
  }
  if (first)
    os << constant;
  else if (constant > 0)
    os << " + " << constant;
  else if (constant < 0)
    os << " - " << -constant;
  return os.str();
}

const Statement *Program::find(const std::string &name) const {
  for (const auto &s : stmts)
    if (s.name == name)
      return &s;
  return nullptr;
}

//===----------------------------------------------------------------------===//
// Lexer
//===----------------------------------------------------------------------===//

namespace {

struct Token {
  enum class Kind { Ident, Int, Sym, End };
  Kind kind = Kind::End;
  std::string text;
  int64_t value = 0;
  int line = 1;
  int col = 1;
};

std::vector<Token> lex(const std::string &src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n')
        advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      t.kind = Token::Kind::Ident;
      t.text = src.substr(i, j - i);
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
        ++j;
      t.kind = Token::Kind::Int;
      t.text = src.substr(i, j - i);
      t.value = std::stoll(t.text);
      advance(j - i);
    } else if (std::string("[]{}():,=+-*").find(c) != std::string::npos) {
      t.kind = Token::Kind::Sym;
      t.text = std::string(1, c);
      advance(1);
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line,
                       col);
    }
    out.push_back(t);
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

//===----------------------------------------------------------------------===//
// Parser
//===----------------------------------------------------------------------===//

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    while (true) {
      if (isIdent("input")) {
        p.stmts.push_back(input());
      } else if (isIdent("let")) {
        p.stmts.push_back(let());
      } else {
        break;
      }
    }
    p.output = expr();
    if (peek().kind != Token::Kind::End)
      fail("expected end of program");
    return p;
  }

private:
  const Token &peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string &msg) const {
    const Token &t = peek();
    std::string got = t.kind == Token::Kind::End ? "end of input" : t.text;
    throw ParseError(msg + " (got '" + got + "')", t.line, t.col);
  }

  bool isIdent(const char *s) const {
    return peek().kind == Token::Kind::Ident && peek().text == s;
  }
  bool isSym(const char *s) const {
    return peek().kind == Token::Kind::Sym && peek().text == s;
  }
  void expectSym(const char *s) {
    if (!isSym(s))
      fail(std::string("expected '") + s + "'");
    next();
  }
  void expectIdent(const char *s) {
    if (!isIdent(s))
      fail(std::string("expected '") + s + "'");
    next();
  }
  std::string ident() {
    if (peek().kind != Token::Kind::Ident)
      fail("expected identifier");
    static const std::set<std::string> kw = {"input", "let", "in", "for",
                                             "sum", "product", "from",
                                             "reduce"};
    if (kw.count(peek().text))
      fail("unexpected keyword");
    return next().text;
  }
  int64_t integer() {
    bool neg = false;
    if (isSym("-")) {
      next();
      neg = true;
    }
    if (peek().kind != Token::Kind::Int)
      fail("expected integer");
    int64_t v = next().value;
    return neg ? -v : v;
  }

  Statement input() {
    expectIdent("input");
    Statement s;
    s.kind = Statement::Kind::Input;
    s.name = ident();
    expectSym(":");
    expectSym("[");
    if (!isSym("]")) {
      s.shape.push_back(integer());
      while (isSym(",")) {
        next();
        s.shape.push_back(integer());
      }
    }
    expectSym("]");
    expectIdent("from");
    if (isIdent("client")) {
      s.party = Party::Client;
    } else if (isIdent("server")) {
      s.party = Party::Server;
    } else {
      fail("expected 'client' or 'server'");
    }
    next();
    return s;
  }

  Statement let() {
    expectIdent("let");
    Statement s;
    s.kind = Statement::Kind::Let;
    s.name = ident();
    expectSym("=");
    s.expr = expr();
    expectIdent("in");
    return s;
  }

  ExprPtr mk(Expr::Kind k, const Token &at) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->line = at.line;
    e->col = at.col;
    return e;
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (isSym("+") || isSym("-")) {
      Token t = next();
      auto e = mk(Expr::Kind::Op, t);
      e->op = t.text == "+" ? BinOp::Add : BinOp::Sub;
      e->kids = {lhs, term()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = primary();
    while (isSym("*")) {
      Token t = next();
      auto e = mk(Expr::Kind::Op, t);
      e->op = BinOp::Mul;
      e->kids = {lhs, primary()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr primary() {
    Token t = peek();
    if (t.kind == Token::Kind::Int || isSym("-")) {
      auto e = mk(Expr::Kind::Literal, t);
      e->value = integer();
      return e;
    }
    if (isSym("(")) {
      next();
      ExprPtr e = expr();
      expectSym(")");
      return e;
    }
    if (isIdent("sum") || isIdent("product")) {
      next();
      auto e = mk(Expr::Kind::Reduce, t);
      e->op = t.text == "sum" ? BinOp::Add : BinOp::Mul;
      expectSym("(");
      e->kids = {expr()};
      expectSym(")");
      return e;
    }
    if (isIdent("reduce")) {
      next();
      auto e = mk(Expr::Kind::Reduce, t);
      expectSym("(");
      if (isSym("+")) {
        e->op = BinOp::Add;
      } else if (isSym("*")) {
        e->op = BinOp::Mul;
      } else if (isSym("-")) {
        e->op = BinOp::Sub;
      } else {
        fail("expected reduction operator");
      }
      next();
      expectSym(",");
      e->dim = static_cast<int>(integer());
      expectSym(",");
      e->kids = {expr()};
      expectSym(")");
      return e;
    }
    if (isIdent("for")) {
      next();
      auto e = mk(Expr::Kind::For, t);
      e->name = ident();
      expectSym(":");
      e->extent = integer();
      expectSym("{");
      e->kids = {expr()};
      expectSym("}");
      return e;
    }
    if (t.kind == Token::Kind::Ident) {
      auto e = mk(Expr::Kind::Index, t);
      e->name = ident();
      while (isSym("[")) {
        next();
        e->indices.push_back(indexExpr());
        expectSym("]");
      }
      return e;
    }
    fail("expected expression");
  }

  Affine indexExpr() {
    Affine lhs = indexTerm();
    while (isSym("+") || isSym("-")) {
      bool sub = next().text == "-";
      Affine rhs = indexTerm();
      lhs.constant += sub ? -rhs.constant : rhs.constant;
      for (const auto &[v, c] : rhs.coeffs)
        lhs.coeffs[v] += sub ? -c : c;
      prune(lhs);
    }
    return lhs;
  }

  Affine indexTerm() {
    Affine lhs = indexFactor();
    while (isSym("*")) {
      next();
      Affine rhs = indexFactor();
      if (!lhs.coeffs.empty() && !rhs.coeffs.empty())
        fail("index variables cannot be multiplied together");
      const Affine &k = lhs.coeffs.empty() ? lhs : rhs;
      Affine v = lhs.coeffs.empty() ? rhs : lhs;
      v.constant *= k.constant;
      for (auto &entry : v.coeffs)
        entry.second *= k.constant;
      prune(v);
      lhs = v;
    }
    return lhs;
  }

  Affine indexFactor() {
    Affine a;
    if (isSym("-")) {
      next();
      Affine inner = indexFactor();
      inner.constant = -inner.constant;
      for (auto &entry : inner.coeffs)
        entry.second = -entry.second;
      return inner;
    }
    if (isSym("(")) {
      next();
      a = indexExpr();
      expectSym(")");
      return a;
    }
    if (peek().kind == Token::Kind::Int) {
      a.constant = next().value;
      return a;
    }
    a.coeffs[ident()] = 1;
    return a;
  }

  static void prune(Affine &a) {
    for (auto it = a.coeffs.begin(); it != a.coeffs.end();)
      it = it->second == 0 ? a.coeffs.erase(it) : std::next(it);
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

} // namespace

Program parse(const std::string &text) { return Parser(lex(text)).program(); }

//===----------------------------------------------------------------------===//
// Printing and structural equality
//===----------------------------------------------------------------------===//

std::string print(const Expr &e) {
  std::ostringstream os;
  switch (e.kind) {
  case Expr::Kind::Literal:
    os << e.value;
    break;
  case Expr::Kind::Index:
    os << e.name;
    for (const auto &a : e.indices)
      os << "[" << a.str() << "]";
    break;
  case Expr::Kind::Op:
    os << "(" << print(*e.kids[0]) << " " << binop_symbol(e.op) << " "
       << print(*e.kids[1]) << ")";
    break;
  case Expr::Kind::Reduce:
    if (e.dim == 0 && e.op != BinOp::Sub)
      os << (e.op == BinOp::Add ? "sum(" : "product(") << print(*e.kids[0])
         << ")";
    else
      os << "reduce(" << binop_symbol(e.op) << ", " << e.dim << ", "
         << print(*e.kids[0]) << ")";
    break;
  case Expr::Kind::For:
    os << "for " << e.name << ": " << e.extent << " { " << print(*e.kids[0])
       << " }";
    break;
  }
  return os.str();
}

std::string print(const Program &p) {
  std::ostringstream os;
  for (const auto &s : p.stmts) {
    if (s.kind == Statement::Kind::Input) {
      os << "input " << s.name << ": [" << join_ints(s.shape, ", ")
         << "] from " << (s.party == Party::Client ? "client" : "server")
         << "\n";
    } else {
      os << "let " << s.name << " = " << print(*s.expr) << " in\n";
    }
  }
  os << print(*p.output) << "\n";
  return os.str();
}

bool structurally_equal(const Expr &a, const Expr &b) {
  if (a.kind != b.kind || a.kids.size() != b.kids.size())
    return false;
  switch (a.kind) {
  case Expr::Kind::Literal:
    if (a.value != b.value)
      return false;
    break;
  case Expr::Kind::Index:
    if (a.name != b.name || a.indices != b.indices)
      return false;
    break;
  case Expr::Kind::Op:
    if (a.op != b.op)
      return false;
    break;
  case Expr::Kind::Reduce:
    if (a.op != b.op || a.dim != b.dim)
      return false;
    break;
  case Expr::Kind::For:
    if (a.name != b.name || a.extent != b.extent)
      return false;
    break;
  }
  for (size_t i = 0; i < a.kids.size(); ++i)
    if (!structurally_equal(*a.kids[i], *b.kids[i]))
      return false;
  return true;
}

bool structurally_equal(const Program &a, const Program &b) {
  if (a.stmts.size() != b.stmts.size())
    return false;
  for (size_t i = 0; i < a.stmts.size(); ++i) {
    const Statement &x = a.stmts[i], &y = b.stmts[i];
    if (x.kind != y.kind || x.name != y.name)
      return false;
    if (x.kind == Statement::Kind::Input) {
      if (x.shape != y.shape || x.party != y.party)
        return false;
    } else if (!structurally_equal(*x.expr, *y.expr)) {
      return false;
    }
  }
  return structurally_equal(*a.output, *b.output);
}

//===----------------------------------------------------------------------===//
// Checker
//===----------------------------------------------------------------------===//

namespace {

struct ArrayInfo {
  Shape shape;
  bool cipher;
};

class Checker {
public:
  Program run(const Program &p) {
    Program out;
    for (const auto &s : p.stmts) {
      if (arrays_.count(s.name))
        throw CheckError("array '" + s.name + "' is bound twice");
      Statement c = s;
      if (s.kind == Statement::Kind::Input) {
        for (int64_t e : s.shape)
          if (e < 1)
            throw CheckError("input '" + s.name + "' has a non-positive extent");
        arrays_[s.name] = {s.shape, s.party == Party::Client};
      } else {
        c.expr = visit(*s.expr);
        c.shape = c.expr->shape;
        arrays_[s.name] = {c.shape, c.expr->cipher};
      }
      out.stmts.push_back(c);
    }
    out.output = visit(*p.output);
    return out;
  }

private:
  [[noreturn]] static void fail(const Expr &e, const std::string &msg) {
    throw CheckError(std::to_string(e.line) + ":" + std::to_string(e.col) +
                     ": " + msg);
  }

  ExprPtr visit(const Expr &src) {
    auto e = std::make_shared<Expr>(src);
    e->kids.clear();
    switch (src.kind) {
    case Expr::Kind::Literal:
      e->shape = {};
      e->cipher = false;
      break;
    case Expr::Kind::Index: {
      if (loopVars_.count(src.name))
        fail(src, "only array variables can be indexed ('" + src.name +
                      "' is an index variable)");
      auto it = arrays_.find(src.name);
      if (it == arrays_.end())
        fail(src, "unbound array '" + src.name + "'");
      const Shape &sh = it->second.shape;
      if (src.indices.size() > sh.size())
        fail(src, "too many indices for '" + src.name + "'");
      for (const auto &a : src.indices)
        for (const auto &[var, c] : a.coeffs)
          if (!loopVars_.count(var))
            fail(src, "unbound index variable '" + var + "'");
      e->shape.assign(sh.begin() + static_cast<long>(src.indices.size()),
                      sh.end());
      e->cipher = it->second.cipher;
      break;
    }
    case Expr::Kind::Op: {
      ExprPtr l = visit(*src.kids[0]);
      ExprPtr r = visit(*src.kids[1]);
      if (l->shape != r->shape)
        fail(src, "shape mismatch: [" + join_ints(l->shape, ",") + "] vs [" +
                      join_ints(r->shape, ",") + "]");
      e->shape = l->shape;
      e->cipher = l->cipher || r->cipher;
      e->kids = {l, r};
      break;
    }
    case Expr::Kind::Reduce: {
      if (src.op == BinOp::Sub)
        fail(src, "reductions must use + or *");
      ExprPtr b = visit(*src.kids[0]);
      if (src.dim < 0 || src.dim >= static_cast<int>(b->shape.size()))
        fail(src, "reduction dimension " + std::to_string(src.dim) +
                      " out of range for rank " +
                      std::to_string(b->shape.size()));
      e->shape = b->shape;
      e->shape.erase(e->shape.begin() + src.dim);
      e->cipher = b->cipher;
      e->kids = {b};
      break;
    }
    case Expr::Kind::For: {
      if (src.extent < 1)
        fail(src, "loop extent must be positive");
      if (loopVars_.count(src.name) || arrays_.count(src.name))
        fail(src, "index variable '" + src.name + "' shadows another name");
      loopVars_.insert(src.name);
      ExprPtr b = visit(*src.kids[0]);
      loopVars_.erase(src.name);
      e->shape = {src.extent};
      e->shape.insert(e->shape.end(), b->shape.begin(), b->shape.end());
      e->cipher = b->cipher;
      e->kids = {b};
      break;
    }
    }
    return e;
  }

  std::map<std::string, ArrayInfo> arrays_;
  std::set<std::string> loopVars_;
};

} // namespace

Program check(const Program &p) { return Checker().run(p); }

//===----------------------------------------------------------------------===//
// Interpreter
//===----------------------------------------------------------------------===//

namespace {

class Interpreter {
public:
  explicit Interpreter(const InputMap &inputs) : arrays_(inputs) {}

  Nest run(const Program &p) {
    for (const auto &s : p.stmts) {
      if (s.kind == Statement::Kind::Input) {
        auto it = arrays_.find(s.name);
        if (it == arrays_.end())
          throw Error("missing input '" + s.name + "'");
        if (it->second.shape != s.shape)
          throw Error("input '" + s.name + "' has shape [" +
                      join_ints(it->second.shape, ",") + "], expected [" +
                      join_ints(s.shape, ",") + "]");
      } else {
        arrays_[s.name] = eval(*s.expr);
      }
    }
    return eval(*p.output);
  }

private:
  Nest eval(const Expr &e) {
    switch (e.kind) {
    case Expr::Kind::Literal:
      return Nest::scalar(e.value);
    case Expr::Kind::Index: {
      const Nest &a = arrays_.at(e.name);
      size_t k = e.indices.size();
      Shape rest(a.shape.begin() + static_cast<long>(k), a.shape.end());
      Nest out(rest);
      int64_t flat = 0;
      for (size_t d = 0; d < k; ++d) {
        int64_t v = e.indices[d].constant;
        for (const auto &[var, c] : e.indices[d].coeffs)
          v += c * env_.at(var);
        if (v < 0 || v >= a.shape[d])
          return out;
        flat = flat * a.shape[d] + v;
      }
      int64_t inner = out.size();
      std::copy(a.data.begin() + flat * inner,
                a.data.begin() + (flat + 1) * inner, out.data.begin());
      return out;
    }
    case Expr::Kind::Op: {
      Nest l = eval(*e.kids[0]);
      Nest r = eval(*e.kids[1]);
      for (size_t i = 0; i < l.data.size(); ++i)
        l.data[i] = apply_binop(e.op, l.data[i], r.data[i]);
      return l;
    }
    case Expr::Kind::Reduce: {
      Nest b = eval(*e.kids[0]);
      Shape rs = b.shape;
      rs.erase(rs.begin() + e.dim);
      Nest out(rs);
      int64_t outer = 1, inner = 1, n = b.shape[e.dim];
      for (int d = 0; d < e.dim; ++d)
        outer *= b.shape[d];
      for (size_t d = e.dim + 1; d < b.shape.size(); ++d)
        inner *= b.shape[d];
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) {
          int64_t acc = b.data[(o * n) * inner + i];
          for (int64_t j = 1; j < n; ++j)
            acc = apply_binop(e.op, acc, b.data[(o * n + j) * inner + i]);
          out.data[o * inner + i] = acc;
        }
      return out;
    }
    case Expr::Kind::For: {
      Nest out;
      for (int64_t i = 0; i < e.extent; ++i) {
        env_[e.name] = i;
        Nest b = eval(*e.kids[0]);
        if (i == 0) {
          Shape s = {e.extent};
          s.insert(s.end(), b.shape.begin(), b.shape.end());
          out = Nest(s);
        }
        std::copy(b.data.begin(), b.data.end(),
                  out.data.begin() + i * b.size());
      }
      env_.erase(e.name);
      return out;
    }
    }
    return Nest();
  }

  InputMap arrays_;
  std::map<std::string, int64_t> env_;
};

} // namespace

Nest interpret(const Program &p, const InputMap &inputs) {
  return Interpreter(inputs).run(p);
}

} // namespace hevec
