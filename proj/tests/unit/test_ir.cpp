#include <string>

#include "doctest.h"
#include "helmflow/ir.hpp"
#include "helmflow/oracle.hpp"
#include "helmflow/pipeline.hpp"
#include "test_support.hpp"

using namespace helmflow;

namespace {

LoweredProgram canonical(int64_t extent) {
  LoweredProgram lp = lower_program(parse_program(helmholtz_source(extent)));
  lp = inline_transients(lp);
  return decompose_contractions(lp);
}

}  // namespace

TEST_SUITE_BEGIN("ir");

TEST_CASE("canonical decomposition structure") {
  LoweredProgram lp = canonical(11);
  REQUIRE(lp.stmts.size() == 7);
  const char* names[] = {"t_s1", "t_s2", "t", "r", "v_s1", "v_s2", "v"};
  for (size_t i = 0; i < 7; ++i) {
    CAPTURE(i);
    CHECK(lp.stmts[i].lhs == names[i]);
    CHECK(lp.stmts[i].outer == Shape{11, 11, 11});
    if (lp.stmts[i].lhs == "r") {
      CHECK(lp.stmts[i].kind == StmtKind::Hadamard);
      CHECK(lp.stmts[i].inner.empty());
    } else {
      CHECK(lp.stmts[i].kind == StmtKind::ContractStage);
      CHECK(lp.stmts[i].inner == Shape{11});
    }
    REQUIRE(lp.stmts[i].operands.size() == 2);
    CHECK(lp.stmts[i].guards.empty());
  }
  CHECK(lp.stmts[0].operands[1].tensor == "u");
  CHECK(lp.stmts[1].operands[1].tensor == "t_s1");
  CHECK(lp.stmts[2].operands[1].tensor == "t_s2");
  CHECK(lp.stmts[3].operands[0].tensor == "D");
  CHECK(lp.stmts[3].operands[1].tensor == "t");
  CHECK(lp.stmts[6].operands[1].tensor == "v_s2");

  CHECK(lp.find_tensor("t_s1")->kind == TensorKind::Temp);
  CHECK(lp.find_tensor("t")->kind == TensorKind::Local);
  CHECK(lp.find_tensor("v")->kind == TensorKind::Output);
  CHECK(lp.find_tensor("S")->kind == TensorKind::Input);
  CHECK(lp.writer_of("S") == nullptr);
  CHECK(lp.writer_of("v") == &lp.stmts[6]);

  CHECK(lp.stmts[0].instance_count() == 11 * 11 * 11 * 11);
  CHECK(lp.stmts[3].instance_count() == 11 * 11 * 11);
}

TEST_CASE("direct multiply and add counts at extent 11") {
  FlopReport rep = count_flops(parse_program(helmholtz_source(11)));
  CHECK(rep.total.muls == 3544453);
  CHECK(rep.total.adds == 3540460);
  CHECK(rep.per_statement.at("t").muls == 1771561);
  CHECK(rep.per_statement.at("t").adds == 1770230);
  CHECK(rep.per_statement.at("r").muls == 1331);
  CHECK(rep.per_statement.at("r").adds == 0);
  CHECK(rep.per_statement.at("v").muls == 1771561);
  CHECK(rep.per_statement.at("v").adds == 1770230);
}

TEST_CASE("decomposed multiply and add counts at extent 11") {
  LoweredProgram lp = canonical(11);
  TensorEnv env = seeded_inputs(lp, 1);
  FlopReport rep;
  EvalOptions opts;
  opts.report = &rep;
  evaluate_statements(lp, env, opts);
  CHECK(rep.total.muls == 89177);
  CHECK(rep.total.adds == 79860);
  for (const char* stage : {"t_s1", "t_s2", "t", "v_s1", "v_s2", "v"}) {
    CAPTURE(stage);
    CHECK(rep.per_statement.at(stage).muls == 14641);
    CHECK(rep.per_statement.at(stage).adds == 13310);
  }
  CHECK(rep.per_statement.at("r").muls == 1331);
  // One contraction costs three single-reduction stages.
  const uint64_t per_contraction = rep.per_statement.at("t_s1").muls +
                                   rep.per_statement.at("t_s2").muls +
                                   rep.per_statement.at("t").muls;
  CHECK(per_contraction == 43923);
}

TEST_CASE("lowering, decomposition, and the direct evaluator agree") {
  for (int64_t extent : {2, 3, 5}) {
    CAPTURE(extent);
    TensorProgram prog = parse_program(helmholtz_source(extent));
    LoweredProgram lp = canonical(extent);
    TensorEnv env = seeded_inputs(lp, 7);

    TensorEnv direct = env;
    eval_program(prog, direct);
    TensorEnv staged = env;
    evaluate_statements(lp, staged);
    DenseTensor literal =
        inverse_helmholtz(env.at("S"), env.at("D"), env.at("u"));

    CHECK(rel_diff(direct.at("v"), staged.at("v")) <= 1e-12);
    CHECK(rel_diff(direct.at("v"), literal) <= 1e-12);
  }
}

TEST_CASE("reduction-free transients are inlined into their consumer") {
  TensorProgram prog = parse_program(
      "var input a : [5]\nvar input b : [5]\nvar output z : [5]\n"
      "z = (a * b) * a\n");
  LoweredProgram lowered = lower_program(prog);
  CHECK(lowered.stmts.size() == 2);
  LoweredProgram inlined = inline_transients(lowered);
  REQUIRE(inlined.stmts.size() == 1);
  CHECK(inlined.stmts[0].lhs == "z");
  CHECK(inlined.stmts[0].operands.size() == 3);
  for (const Stmt& s : inlined.stmts) CHECK(s.lhs.substr(0, 2) != "_t");

  TensorEnv env;
  env["a"] = random_tensor({5}, 1);
  env["b"] = random_tensor({5}, 2);
  TensorEnv direct = env;
  eval_program(prog, direct);
  evaluate_statements(inlined, env);
  CHECK(rel_diff(direct.at("z"), env.at("z")) == 0.0);
}

TEST_CASE("a contraction feeding an elementwise product is materialized") {
  TensorProgram prog = parse_program(
      "var input A : [4 4]\nvar input x : [4]\nvar input w : [4]\n"
      "var output y : [4]\ny = (A # x . [[1 2]]) * w\n");
  LoweredProgram lp = inline_transients(lower_program(prog));
  REQUIRE(lp.stmts.size() == 2);
  CHECK(lp.stmts[0].lhs == "_t0");
  CHECK(lp.stmts[0].kind == StmtKind::ContractStage);
  CHECK(lp.stmts[1].lhs == "y");
  CHECK(lp.find_tensor("_t0")->kind == TensorKind::Temp);

  lp = decompose_contractions(lp);
  TensorEnv env;
  env["A"] = random_tensor({4, 4}, 3);
  env["x"] = random_tensor({4}, 4);
  env["w"] = random_tensor({4}, 5);
  TensorEnv direct = env;
  eval_program(prog, direct);
  evaluate_statements(lp, env);
  CHECK(rel_diff(direct.at("y"), env.at("y")) <= 1e-15);
}

TEST_CASE("copy statements lower as Copy") {
  LoweredProgram lp = inline_transients(lower_program(parse_program(
      "var input a : [6]\nvar output z : [6]\nz = a\n")));
  REQUIRE(lp.stmts.size() == 1);
  CHECK(lp.stmts[0].kind == StmtKind::Copy);
  CHECK(lp.stmts[0].operands.size() == 1);
}

TEST_CASE("ir dump is versioned and stable") {
  std::string text = dump_ir(canonical(3));
  CHECK(text.rfind("# helmflow-ir v1\n", 0) == 0);
  testsupport::check_golden("helmholtz_e3.ir.txt", text);
}

TEST_CASE("transitive operand map reaches the inputs") {
  LoweredProgram lp = canonical(3);
  OperandMap om = transitive_operand_map(lp, "v");
  CHECK(om.outer == Shape{3, 3, 3});
  CHECK(om.inner.size() == 6);
  REQUIRE(om.entries.size() == 8);
  int s = 0, d = 0, u = 0;
  for (const Operand& e : om.entries) {
    if (e.tensor == "S") ++s;
    if (e.tensor == "D") ++d;
    if (e.tensor == "u") ++u;
  }
  CHECK(s == 6);
  CHECK(d == 1);
  CHECK(u == 1);

  OperandMap id = transitive_operand_map(lp, "S");
  CHECK(id.outer == Shape{3, 3});
  CHECK(id.inner.empty());
  REQUIRE(id.entries.size() == 1);
  CHECK(id.entries[0].tensor == "S");
  CHECK(id.entries[0].access == AffineMap::identity(2));
}

TEST_CASE("evaluation can record the exact read sets") {
  LoweredProgram lp = inline_transients(lower_program(parse_program(
      "var input a : [3]\nvar input b : [3]\nvar output z : [3]\n"
      "z = a * b\n")));
  TensorEnv env;
  env["a"] = random_tensor({3}, 1);
  env["b"] = random_tensor({3}, 2);
  std::map<int, std::set<std::pair<std::string, Tuple>>> reads;
  EvalOptions opts;
  opts.reads = &reads;
  evaluate_statements(lp, env, opts);
  REQUIRE(reads.size() == 1);
  const auto& set = reads.begin()->second;
  CHECK(set.size() == 6);
  CHECK(set.count({"a", Tuple{0}}) == 1);
  CHECK(set.count({"b", Tuple{2}}) == 1);
}

TEST_SUITE_END();
