// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "helmflow/ast.hpp"

namespace helmflow {
namespace {

// Hard caps keeping hostile inputs cheap to reject. Product tensors in the
// supported kernels stay far below these.
constexpr int kMaxRank = 16;
constexpr int64_t kMaxExtent = 1 << 20;
constexpr int64_t kMaxElements = int64_t{1} << 31;

enum class Tok {
  End, Ident, Int, Var, InputQ, OutputQ, LocalQ,
  Colon, Equal, Hash, Star, Dot, LBracket, RBracket, LParen, RParen,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int64_t value = 0;
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_ws_and_comments();
    Token t;
    t.loc = {line_, col_};
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        advance();
      t.text = std::string(src_.substr(start, pos_ - start));
      if (t.text == "var") t.kind = Tok::Var;
      else if (t.text == "input") t.kind = Tok::InputQ;
      else if (t.text == "output") t.kind = Tok::OutputQ;
      else if (t.text == "local") t.kind = Tok::LocalQ;
      else t.kind = Tok::Ident;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
      t.text = std::string(src_.substr(start, pos_ - start));
      if (t.text.size() > 18)
        throw CompileError(t.loc, "integer literal too large: " + t.text);
      t.kind = Tok::Int;
      t.value = std::stoll(t.text);
      return t;
    }
    advance();
    switch (c) {
      case ':': t.kind = Tok::Colon; return t;
      case '=': t.kind = Tok::Equal; return t;
      case '#': t.kind = Tok::Hash; return t;
      case '*': t.kind = Tok::Star; return t;
      case '.': t.kind = Tok::Dot; return t;
      case '[': t.kind = Tok::LBracket; return t;
      case ']': t.kind = Tok::RBracket; return t;
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      default:
        throw CompileError(
            t.loc, std::string("unexpected character '") +
                       (std::isprint(static_cast<unsigned char>(c))
                            ? std::string(1, c)
                            : "\\x" + std::to_string(static_cast<unsigned char>(c))) +
                       "'");
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const char* tok_name(Tok k) {
  switch (k) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::Var: return "'var'";
    case Tok::InputQ: return "'input'";
    case Tok::OutputQ: return "'output'";
    case Tok::LocalQ: return "'local'";
    case Tok::Colon: return "':'";
    case Tok::Equal: return "'='";
    case Tok::Hash: return "'#'";
    case Tok::Star: return "'*'";
    case Tok::Dot: return "'.'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { bump(); }

  TensorProgram parse() {
    TensorProgram prog;
    while (cur_.kind != Tok::End) {
      if (cur_.kind == Tok::Var) {
        prog.decls.push_back(parse_decl(prog));
      } else if (cur_.kind == Tok::Ident) {
        prog.statements.push_back(parse_statement());
      } else {
        throw CompileError(cur_.loc, std::string("expected declaration or "
                                                 "statement, found ") +
                                         tok_name(cur_.kind));
      }
    }
    check_semantics(prog);
    return prog;
  }

 private:
  void bump() { cur_ = lexer_.next(); }

  Token expect(Tok k, const char* what) {
    if (cur_.kind != k)
      throw CompileError(cur_.loc, std::string("expected ") + what +
                                       ", found " + tok_name(cur_.kind));
    Token t = cur_;
    bump();
    return t;
  }

  TensorDecl parse_decl(const TensorProgram& prog) {
    TensorDecl d;
    d.loc = cur_.loc;
    expect(Tok::Var, "'var'");
    switch (cur_.kind) {
      case Tok::InputQ: d.qual = Qualifier::Input; break;
      case Tok::OutputQ: d.qual = Qualifier::Output; break;
      case Tok::LocalQ: d.qual = Qualifier::Local; break;
      default:
        throw CompileError(cur_.loc,
                           std::string("expected qualifier 'input', 'output' "
                                       "or 'local', found ") +
                               tok_name(cur_.kind));
    }
    bump();
    Token name = expect(Tok::Ident, "tensor name");
    d.name = name.text;
    d.loc = name.loc;
    if (prog.find_decl(d.name))
      throw CompileError(name.loc, "tensor '" + d.name + "' already declared");
    expect(Tok::Colon, "':'");
    expect(Tok::LBracket, "'['");
    int64_t elems = 1;
    while (cur_.kind != Tok::RBracket) {
      Token e = expect(Tok::Int, "dimension extent or ']'");
      if (e.value < 1 || e.value > kMaxExtent)
        throw CompileError(e.loc, "extent must be in [1, " +
                                      std::to_string(kMaxExtent) + "], got " +
                                      e.text);
      d.shape.push_back(e.value);
      if (static_cast<int>(d.shape.size()) > kMaxRank)
        throw CompileError(e.loc, "tensor rank exceeds " +
                                      std::to_string(kMaxRank));
      elems *= e.value;
      if (elems > kMaxElements)
        throw CompileError(e.loc, "tensor has too many elements");
    }
    expect(Tok::RBracket, "']'");
    return d;
  }

  Statement parse_statement() {
    Statement s;
    Token name = expect(Tok::Ident, "tensor name");
    s.lhs = name.text;
    s.loc = name.loc;
    expect(Tok::Equal, "'='");
    s.rhs = parse_expr();
    return s;
  }

  // expr := hadamard ('.' pairlist)*      -- contraction binds loosest
  ExprPtr parse_expr() {
    ExprPtr e = parse_hadamard();
    while (cur_.kind == Tok::Dot) {
      SourceLoc loc = cur_.loc;
      bump();
      auto c = std::make_unique<Expr>();
      c->kind = ExprKind::Contraction;
      c->loc = loc;
      c->lhs = std::move(e);
      c->pairs = parse_pairlist();
      e = std::move(c);
    }
    return e;
  }

  ExprPtr parse_hadamard() {
    ExprPtr e = parse_outer();
    while (cur_.kind == Tok::Star) {
      SourceLoc loc = cur_.loc;
      bump();
      auto m = std::make_unique<Expr>();
      m->kind = ExprKind::Elementwise;
      m->op = ElementwiseOp::Mul;
      m->loc = loc;
      m->lhs = std::move(e);
      m->rhs = parse_outer();
      e = std::move(m);
    }
    return e;
  }

  ExprPtr parse_outer() {
    ExprPtr e = parse_primary();
    while (cur_.kind == Tok::Hash) {
      SourceLoc loc = cur_.loc;
      bump();
      auto p = std::make_unique<Expr>();
      p->kind = ExprKind::OuterProduct;
      p->loc = loc;
      p->lhs = std::move(e);
      p->rhs = parse_primary();
      e = std::move(p);
    }
    return e;
  }

  ExprPtr parse_primary() {
    if (cur_.kind == Tok::Ident) {
      auto r = std::make_unique<Expr>();
      r->kind = ExprKind::Ref;
      r->name = cur_.text;
      r->loc = cur_.loc;
      bump();
      return r;
    }
    if (cur_.kind == Tok::LParen) {
      bump();
      ExprPtr e = parse_expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    throw CompileError(cur_.loc, std::string("expected tensor name or '(', "
                                             "found ") +
                                     tok_name(cur_.kind));
  }

  std::vector<std::pair<int, int>> parse_pairlist() {
    expect(Tok::LBracket, "'[' starting the contraction pair list");
    std::vector<std::pair<int, int>> pairs;
    while (cur_.kind == Tok::LBracket) {
      SourceLoc loc = cur_.loc;
      bump();
      Token a = expect(Tok::Int, "dimension number");
      Token b = expect(Tok::Int, "dimension number");
      expect(Tok::RBracket, "']'");
      if (a.value >= kMaxRank || b.value >= kMaxRank)
        throw CompileError(loc, "contraction dimension out of range");
      pairs.emplace_back(static_cast<int>(a.value), static_cast<int>(b.value));
      if (static_cast<int>(pairs.size()) > kMaxRank / 2)
        throw CompileError(loc, "too many contraction pairs");
    }
    if (pairs.empty())
      throw CompileError(cur_.loc,
                         std::string("expected contraction pair '[a b]', "
                                     "found ") +
                             tok_name(cur_.kind));
    expect(Tok::RBracket, "']' closing the contraction pair list");
    return pairs;
  }

  // Statement-order semantic checks: single assignment, assignment before
  // use for non-inputs, shape agreement. Shape validation itself lives in
  // infer_shape so the CLI and bindings get identical diagnostics.
  void check_semantics(const TensorProgram& prog) {
    std::set<std::string> assigned;
    for (const Statement& s : prog.statements) {
      const TensorDecl* d = prog.find_decl(s.lhs);
      if (!d)
        throw CompileError(s.loc, "assignment to undeclared tensor '" +
                                      s.lhs + "'");
      if (d->qual == Qualifier::Input)
        throw CompileError(s.loc, "input tensor '" + s.lhs +
                                      "' cannot be assigned");
      if (assigned.count(s.lhs))
        throw CompileError(s.loc, "tensor '" + s.lhs +
                                      "' assigned more than once");
      check_uses(*s.rhs, prog, assigned);
      Shape shape = infer_shape(*s.rhs, prog);
      if (shape != d->shape)
        throw CompileError(
            s.loc, "shape mismatch: '" + s.lhs + "' declared " +
                       shape_str(d->shape) + " but right-hand side has shape " +
                       shape_str(shape));
      assigned.insert(s.lhs);
    }
    for (const TensorDecl& d : prog.decls) {
      if (d.qual == Qualifier::Output && !assigned.count(d.name))
        throw CompileError(d.loc, "output tensor '" + d.name +
                                      "' is never assigned");
    }
  }

  void check_uses(const Expr& e, const TensorProgram& prog,
                  const std::set<std::string>& assigned) {
    switch (e.kind) {
      case ExprKind::Ref: {
        const TensorDecl* d = prog.find_decl(e.name);
        if (!d)
          throw CompileError(e.loc, "use of undeclared tensor '" + e.name +
                                        "'");
        if (d->qual != Qualifier::Input && !assigned.count(e.name))
          throw CompileError(e.loc, "tensor '" + e.name +
                                        "' is used before it is assigned");
        return;
      }
      case ExprKind::Contraction:
        check_uses(*e.lhs, prog, assigned);
        return;
      case ExprKind::OuterProduct:
      case ExprKind::Elementwise:
        check_uses(*e.lhs, prog, assigned);
        check_uses(*e.rhs, prog, assigned);
        return;
    }
  }

  static std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t d = 0; d < s.size(); ++d) {
      if (d) out += " ";
      out += std::to_string(s[d]);
    }
    return out + "]";
  }

  Lexer lexer_;
  Token cur_;
};

std::string shape_to_string(const Shape& s) {
  std::string out = "[";
  for (size_t d = 0; d < s.size(); ++d) {
    if (d) out += " ";
    out += std::to_string(s[d]);
  }
  return out + "]";
}

}  // namespace

TensorProgram parse_program(std::string_view source) {
  return Parser(source).parse();
}

Shape infer_shape(const Expr& expr, const TensorProgram& program) {
  switch (expr.kind) {
    case ExprKind::Ref: {
      const TensorDecl* d = program.find_decl(expr.name);
      if (!d)
        throw CompileError(expr.loc,
                           "use of undeclared tensor '" + expr.name + "'");
      return d->shape;
    }
    case ExprKind::OuterProduct: {
      Shape l = infer_shape(*expr.lhs, program);
      Shape r = infer_shape(*expr.rhs, program);
      if (static_cast<int>(l.size() + r.size()) > kMaxRank)
        throw CompileError(expr.loc, "product tensor rank exceeds " +
                                         std::to_string(kMaxRank));
      l.insert(l.end(), r.begin(), r.end());
      return l;
    }
    case ExprKind::Elementwise: {
      Shape l = infer_shape(*expr.lhs, program);
      Shape r = infer_shape(*expr.rhs, program);
      if (l != r)
        throw CompileError(expr.loc,
                           "elementwise product requires equal shapes, got " +
                               shape_to_string(l) + " and " +
                               shape_to_string(r));
      return l;
    }
    case ExprKind::Contraction: {
      Shape s = infer_shape(*expr.lhs, program);
      int rank = static_cast<int>(s.size());
      std::vector<bool> used(s.size(), false);
      for (auto [a, b] : expr.pairs) {
        if (a == b)
          throw CompileError(expr.loc, "contraction pair [" +
                                           std::to_string(a) + " " +
                                           std::to_string(b) +
                                           "] repeats a dimension");
        for (int dim : {a, b}) {
          if (dim < 0 || dim >= rank)
            throw CompileError(expr.loc,
                               "contraction dimension " + std::to_string(dim) +
                                   " out of range for rank " +
                                   std::to_string(rank) + " operand");
          if (used[static_cast<size_t>(dim)])
            throw CompileError(expr.loc, "contraction dimension " +
                                             std::to_string(dim) +
                                             " used more than once");
          used[static_cast<size_t>(dim)] = true;
        }
        if (s[static_cast<size_t>(a)] != s[static_cast<size_t>(b)])
          throw CompileError(
              expr.loc, "contracted dimensions " + std::to_string(a) + " and " +
                            std::to_string(b) + " have different extents (" +
                            std::to_string(s[static_cast<size_t>(a)]) + " vs " +
                            std::to_string(s[static_cast<size_t>(b)]) + ")");
      }
      Shape out;
      for (int d = 0; d < rank; ++d)
        if (!used[static_cast<size_t>(d)]) out.push_back(s[static_cast<size_t>(d)]);
      return out;
    }
  }
  throw InternalError("infer_shape: unknown expression kind");
}

namespace {

// Precedence levels for the printer: contraction loosest, then '*', then '#'.
int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Contraction: return 0;
    case ExprKind::Elementwise: return 1;
    case ExprKind::OuterProduct: return 2;
    case ExprKind::Ref: return 3;
  }
  return 3;
}

void print_expr(const Expr& e, int parent_prec, std::string& out) {
  int prec = precedence(e);
  bool paren = prec < parent_prec;
  if (paren) out += "(";
  switch (e.kind) {
    case ExprKind::Ref:
      out += e.name;
      break;
    case ExprKind::OuterProduct:
      print_expr(*e.lhs, prec, out);
      out += " # ";
      // Left-associative: the right child needs parens at equal precedence.
      print_expr(*e.rhs, prec + 1, out);
      break;
    case ExprKind::Elementwise:
      print_expr(*e.lhs, prec, out);
      out += " * ";
      print_expr(*e.rhs, prec + 1, out);
      break;
    case ExprKind::Contraction:
      print_expr(*e.lhs, prec, out);
      out += " . [";
      for (size_t p = 0; p < e.pairs.size(); ++p) {
        if (p) out += " ";
        out += "[" + std::to_string(e.pairs[p].first) + " " +
               std::to_string(e.pairs[p].second) + "]";
      }
      out += "]";
      break;
  }
  if (paren) out += ")";
}

}  // namespace

std::string print_program(const TensorProgram& program) {
  std::string out;
  for (const TensorDecl& d : program.decls) {
    out += "var ";
    switch (d.qual) {
      case Qualifier::Input: out += "input "; break;
      case Qualifier::Output: out += "output "; break;
      case Qualifier::Local: out += "local "; break;
    }
    out += d.name + " : [";
    for (size_t i = 0; i < d.shape.size(); ++i) {
      if (i) out += " ";
      out += std::to_string(d.shape[i]);
    }
    out += "]\n";
  }
  if (!program.decls.empty() && !program.statements.empty()) out += "\n";
  for (const Statement& s : program.statements) {
    out += s.lhs + " = ";
    print_expr(*s.rhs, 0, out);
    out += "\n";
  }
  return out;
}

bool equal_exprs(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Ref:
      return a.name == b.name;
    case ExprKind::OuterProduct:
      return equal_exprs(*a.lhs, *b.lhs) && equal_exprs(*a.rhs, *b.rhs);
    case ExprKind::Elementwise:
      return a.op == b.op && equal_exprs(*a.lhs, *b.lhs) &&
             equal_exprs(*a.rhs, *b.rhs);
    case ExprKind::Contraction:
      return a.pairs == b.pairs && equal_exprs(*a.lhs, *b.lhs);
  }
  return false;
}

bool equal_programs(const TensorProgram& a, const TensorProgram& b) {
  if (a.decls.size() != b.decls.size() ||
      a.statements.size() != b.statements.size())
    return false;
  for (size_t i = 0; i < a.decls.size(); ++i) {
    const TensorDecl& x = a.decls[i];
    const TensorDecl& y = b.decls[i];
    if (x.name != y.name || x.qual != y.qual || x.shape != y.shape)
      return false;
  }
  for (size_t i = 0; i < a.statements.size(); ++i) {
    if (a.statements[i].lhs != b.statements[i].lhs) return false;
    if (!equal_exprs(*a.statements[i].rhs, *b.statements[i].rhs)) return false;
  }
  return true;
}

ExprPtr clone_expr(const Expr& e) {
  auto out = std::make_unique<Expr>();
  out->kind = e.kind;
  out->loc = e.loc;
  out->name = e.name;
  out->op = e.op;
  out->pairs = e.pairs;
  if (e.lhs) out->lhs = clone_expr(*e.lhs);
  if (e.rhs) out->rhs = clone_expr(*e.rhs);
  return out;
}

}  // namespace helmflow
