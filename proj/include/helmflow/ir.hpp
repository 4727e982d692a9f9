// SPDX-License-Identifier: Apache-2.0
//
// Pseudo-SSA statement IR.  Each statement writes one tensor over a box of
// "outer" dims, optionally accumulating over a box of "inner" (reduction)
// dims.  Operand accesses are affine maps from (outer ++ inner) iteration
// vars into the operand tensor's index space.
//
// Event semantics used throughout scheduling and liveness:
//  - a statement instance exists at every (outer, inner) point;
//  - every operand is read at every instance point;
//  - the lhs element for an outer point is written once, at the
//    lexicographically last inner point of that outer point (the generated
//    code keeps the running sum in a register and stores it afterwards);
//  - every tensor element is written by at most one statement instance.
#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "helmflow/affine.hpp"
#include "helmflow/ast.hpp"
#include "helmflow/diagnostics.hpp"
#include "helmflow/oracle.hpp"

namespace helmflow {

enum class TensorKind { Input, Output, Local, Temp };

struct TensorInfo {
  std::string name;
  Shape shape;
  TensorKind kind = TensorKind::Local;

  // Interface tensors cross the accelerator boundary.
  bool interface() const {
    return kind == TensorKind::Input || kind == TensorKind::Output;
  }
  int64_t element_count() const {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
  }
};

enum class StmtKind {
  ContractStage,  // lhs[outer] = sum over inner of product(operands)
  Hadamard,       // lhs[outer] = product(operands), no reduction
  Copy,           // lhs[outer] = single operand
};

struct Operand {
  std::string tensor;
  AffineMap access;  // domain: outer ++ inner -> operand index space
};

struct Stmt {
  int id = 0;
  std::string lhs;
  StmtKind kind = StmtKind::ContractStage;
  Shape outer;
  Shape inner;
  std::vector<Operand> operands;
  std::vector<GuardCond> guards;  // over outer dims; all must hold

  int64_t instance_count() const {
    return box_size(outer) * std::max<int64_t>(1, box_size(inner));
  }
};

struct LoweredProgram {
  std::vector<TensorInfo> tensors;
  std::vector<Stmt> stmts;

  const TensorInfo* find_tensor(const std::string& name) const {
    for (const TensorInfo& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
  // First statement writing `name`, or nullptr for unwritten (input) tensors.
  const Stmt* writer_of(const std::string& name) const {
    for (const Stmt& s : stmts)
      if (s.lhs == name) return &s;
    return nullptr;
  }
};

// Lowers a checked source program: one statement per operator node, except
// that outer-product trees feeding a contraction (or standing alone) flatten
// into a single multi-operand stage.  Compiler-introduced values are
// materialized as fresh `_t<k>` temporaries.
LoweredProgram lower_program(const TensorProgram& program);

// Splits every multi-reduction contraction into a chain of single-reduction
// stages (rightmost reduction first), introducing `<lhs>_s<n>` stage
// temporaries.  The final stage writes the original lhs over its original
// outer space.
LoweredProgram decompose_contractions(const LoweredProgram& lp);

// Composes `_t*` temporaries that are written by a reduction-free statement
// and consumed by exactly one statement into their consumer, so transients
// are only materialized when an actual reduction requires it.
LoweredProgram inline_transients(const LoweredProgram& lp);

// The read footprint of one statement (or, transitively, of a tensor): for
// every leaf tensor an affine map from (outer ++ inner) vars to its index
// space.
struct OperandMap {
  Shape outer;
  Shape inner;
  std::vector<Operand> entries;
};

OperandMap stmt_operand_map(const Stmt& s);

// Expands the definition of `tensor` down to unwritten (input) tensors,
// accumulating every intermediate reduction as extra inner dims.  For an
// unwritten tensor this is the identity map over its own index space.
OperandMap transitive_operand_map(const LoweredProgram& lp,
                                  const std::string& tensor);

struct EvalOptions {
  // When set, records for each statement id the set of (tensor, index)
  // pairs it reads.
  std::map<int, std::set<std::pair<std::string, Tuple>>>* reads = nullptr;
  // When set, multiply/add counts are accumulated per lhs name and in total.
  FlopReport* report = nullptr;
};

// Dense reference execution of the statement list, in order.  `env` must
// hold every input tensor; written tensors are created (or accumulated into,
// for statements split by partitioning) as encountered.
void evaluate_statements(const LoweredProgram& lp, TensorEnv& env,
                         const EvalOptions& opts = {});

// Versioned textual form (stable across runs; used for golden tests and the
// `build` artifact).
std::string dump_ir(const LoweredProgram& lp);

}  // namespace helmflow
