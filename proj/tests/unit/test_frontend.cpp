#include <string>

#include "doctest.h"
#include "helmflow/ast.hpp"
#include "helmflow/oracle.hpp"
#include "test_support.hpp"

using namespace helmflow;
using testsupport::contains;

namespace {

// Parses expecting rejection; checks the diagnostic is positioned and
// returns its message for content checks.
std::string reject(const std::string& source) {
  try {
    parse_program(source);
  } catch (const CompileError& e) {
    CHECK_MESSAGE(e.diag().loc.line >= 1,
                  "diagnostic has no position: ", e.what());
    CHECK(e.diag().loc.col >= 1);
    return e.what();
  }
  FAIL_CHECK("expected a CompileError for:\n", source);
  return {};
}

}  // namespace

TEST_SUITE_BEGIN("frontend");

TEST_CASE("canonical kernel parses") {
  TensorProgram p = parse_program(helmholtz_source(11));
  REQUIRE(p.decls.size() == 6);
  CHECK(p.decls[0].name == "S");
  CHECK(p.decls[0].qual == Qualifier::Input);
  CHECK(p.decls[0].shape == Shape{11, 11});
  CHECK(p.decls[1].name == "D");
  CHECK(p.decls[1].shape == Shape{11, 11, 11});
  CHECK(p.decls[2].name == "u");
  CHECK(p.decls[3].name == "v");
  CHECK(p.decls[3].qual == Qualifier::Output);
  CHECK(p.decls[4].name == "t");
  CHECK(p.decls[4].qual == Qualifier::Local);
  CHECK(p.decls[5].name == "r");

  REQUIRE(p.statements.size() == 3);
  CHECK(p.statements[0].lhs == "t");
  REQUIRE(p.statements[0].rhs->kind == ExprKind::Contraction);
  const std::vector<std::pair<int, int>> t_pairs{{1, 6}, {3, 7}, {5, 8}};
  CHECK(p.statements[0].rhs->pairs == t_pairs);
  CHECK(p.statements[1].lhs == "r");
  CHECK(p.statements[1].rhs->kind == ExprKind::Elementwise);
  CHECK(p.statements[2].lhs == "v");
  const std::vector<std::pair<int, int>> v_pairs{{0, 6}, {2, 7}, {4, 8}};
  CHECK(p.statements[2].rhs->pairs == v_pairs);
}

TEST_CASE("printer is a parse fixpoint") {
  const std::string sources[] = {
      helmholtz_source(3),
      "var input S : [4 4]\nvar output w : [4 4]\nw = S * S\n",
      "var input a : [4]\nvar input b : [4]\nvar output z : []\n"
      "z = a # b . [[0 1]]\n",
      "var input A : [4 4]\nvar input x : [4]\nvar input w : [4]\n"
      "var output y : [4]\ny = (A # x . [[1 2]]) * w\n",
  };
  for (const std::string& src : sources) {
    CAPTURE(src);
    TensorProgram once = parse_program(src);
    TensorProgram twice = parse_program(print_program(once));
    CHECK(equal_programs(once, twice));
  }
}

TEST_CASE("shape inference") {
  TensorProgram p = parse_program(
      "var input S : [3 3]\nvar input u : [3 3 3]\nvar output w : [3 3 3]\n"
      "w = S # u . [[0 2]]\n");
  CHECK(infer_shape(*p.statements[0].rhs, p) == Shape{3, 3, 3});

  TensorProgram q = parse_program(
      "var input a : [4]\nvar input b : [4]\nvar output z : []\n"
      "z = a # b . [[0 1]]\n");
  CHECK(infer_shape(*q.statements[0].rhs, q) == Shape{});
}

TEST_CASE("precedence: contraction binds weakest, then *, then #") {
  // a # b * c parses as (a # b) * c: the outer product binds tightest.
  TensorProgram p = parse_program(
      "var input a : [4]\nvar input b : [4]\nvar input c : [4 4]\n"
      "var output z : [4 4]\nz = a # b * c\n");
  REQUIRE(p.statements[0].rhs->kind == ExprKind::Elementwise);
  CHECK(p.statements[0].rhs->lhs->kind == ExprKind::OuterProduct);
  CHECK(infer_shape(*p.statements[0].rhs, p) == Shape{4, 4});

  // Contraction applies to the whole product expression.
  TensorProgram q = parse_program(
      "var input a : [4]\nvar input b : [4]\nvar output z : []\n"
      "z = a # b . [[0 1]]\n");
  CHECK(q.statements[0].rhs->kind == ExprKind::Contraction);
}

TEST_CASE("comments and blank lines are ignored") {
  TensorProgram p = parse_program(
      "// leading comment\n\nvar input a : [4] // trailing\n"
      "var output z : [4]\n\n// interlude\nz = a * a\n");
  CHECK(p.decls.size() == 2);
  CHECK(p.statements.size() == 1);
}

TEST_CASE("extent bounds") {
  // The limits themselves are accepted.
  parse_program("var input a : [1]\nvar output z : [1]\nz = a * a\n");
  parse_program(
      "var input a : [1048576]\nvar output z : [1048576]\nz = a * a\n");
  CHECK(contains(reject("var input a : [0]\nvar output z : [0]\nz = a * a\n"),
                 "extent must be in [1, 1048576]"));
  CHECK(contains(
      reject("var input a : [1048577]\nvar output z : [1048577]\nz = a * a\n"),
      "extent must be in [1, 1048576]"));
  CHECK(contains(reject("var input a : [99999999999999999999]\n"),
                 "integer literal too large"));
}

TEST_CASE("semantic rejections carry positions") {
  const std::string prologue =
      "var input a : [4]\nvar input b : [5]\nvar output z : [4]\n";
  CHECK(contains(reject(prologue + "z = a * q\n"),
                 "use of undeclared tensor 'q'"));
  CHECK(contains(reject(prologue + "q = a * a\n"),
                 "assignment to undeclared tensor 'q'"));
  CHECK(contains(reject(prologue + "a = a * a\nz = a * a\n"), "input"));
  CHECK(contains(reject(prologue + "z = a * a\nz = a * a\n"), "z"));
  CHECK(contains(reject(prologue + "z = a * b\n"),
                 "elementwise product requires equal shapes, got [4] and "
                 "[5]"));
  CHECK(contains(reject(prologue + "z = a # a . [[0 5]]\n"),
                 "contraction dimension 5 out of range for rank 2 operand"));
  CHECK(contains(reject(prologue + "z = a # a . [[0 0]]\n"),
                 "repeats a dimension"));
  CHECK(contains(reject(prologue + "z = a # a # a . [[0 1] [1 2]]\n"),
                 "used more than once"));
  CHECK(contains(
      reject(prologue + "z = a # b . [[0 1]]\n"),
      "contracted dimensions 0 and 1 have different extents (4 vs 5)"));
  CHECK(contains(reject("var input a : [4]\nvar input a : [4]\n"),
                 "tensor 'a' already declared"));
  CHECK(contains(reject("var input a : [4]\nvar output z : [4]\n"),
                 "output tensor 'z'"));
}

TEST_CASE("syntax rejections carry positions") {
  reject("var\n");
  reject("var input\n");
  reject("var input a\n");
  reject("var input a :\n");
  reject("var input a : [\n");
  reject("var input a : [4\n");
  reject("frobnicate\n");
  reject("var input a : [4]\nvar output z : [4]\nz =\n");
  reject("var input a : [4]\nvar output z : [4]\nz = a *\n");
  reject("var input a : [4]\nvar output z : [4]\nz = a . [[0]\n");
  reject("var input a : [4]\nvar output z : [4]\nz = (a\n");
  reject("\x01\x02\xff\n");
  reject("var input a : [4] extra\n");
}

TEST_CASE("error positions point at the offending token") {
  try {
    parse_program("var input a : [4]\nvar output z : [4]\nz = a * q\n");
    FAIL("expected rejection");
  } catch (const CompileError& e) {
    CHECK(e.diag().loc.line == 3);
    CHECK(e.diag().loc.col == 9);
    CHECK(contains(e.diag().render("k.cfd"), "k.cfd:3:9: "));
  }
}

TEST_SUITE_END();
