// SPDX-License-Identifier: Apache-2.0
#ifndef HELMFLOW_AST_HPP
#define HELMFLOW_AST_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "helmflow/diagnostics.hpp"

namespace helmflow {

using Shape = std::vector<int64_t>;

enum class Qualifier { Input, Output, Local };

struct TensorDecl {
  std::string name;
  Qualifier qual = Qualifier::Local;
  Shape shape;  // empty = scalar, declared as []
  SourceLoc loc;
};

enum class ExprKind { Ref, OuterProduct, Elementwise, Contraction };

// The only elementwise operator in the language is '*' (Hadamard product);
// the enum keeps the seam where further operators would land.
enum class ElementwiseOp { Mul };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind = ExprKind::Ref;
  SourceLoc loc;

  // Ref
  std::string name;

  // OuterProduct / Elementwise
  ExprPtr lhs;
  ExprPtr rhs;
  ElementwiseOp op = ElementwiseOp::Mul;

  // Contraction: operand in `lhs`, dimension pairs over the operand's
  // (product-)dimensions, numbered from 0 left to right.
  std::vector<std::pair<int, int>> pairs;
};

struct Statement {
  std::string lhs;
  ExprPtr rhs;
  SourceLoc loc;
};

struct TensorProgram {
  std::vector<TensorDecl> decls;
  std::vector<Statement> statements;

  const TensorDecl* find_decl(const std::string& name) const {
    for (const TensorDecl& d : decls)
      if (d.name == name) return &d;
    return nullptr;
  }
};

// Parses and semantically checks a program. Throws CompileError carrying one
// positioned diagnostic on any malformed input; never crashes on arbitrary
// bytes.
TensorProgram parse_program(std::string_view source);

// Shape of an expression under the declared environment. Performs the same
// validation parse_program applies to statement right-hand sides.
Shape infer_shape(const Expr& expr, const TensorProgram& program);

// Canonical textual form. parse(print(parse(s))) is structurally identical
// to parse(s); the printer is the fixpoint witness for that property.
std::string print_program(const TensorProgram& program);

// Structural equality ignoring source locations.
bool equal_programs(const TensorProgram& a, const TensorProgram& b);
bool equal_exprs(const Expr& a, const Expr& b);

ExprPtr clone_expr(const Expr& e);

}  // namespace helmflow

#endif  // HELMFLOW_AST_HPP
