// SPDX-License-Identifier: Apache-2.0
//
// Tensor-to-array memory materialization: affine layouts flatten each tensor
// into a 1-D array, and partition maps re-route array elements (splitting
// and/or merging arrays). The resulting model is extensional: every tensor
// element has exactly one (array, offset) home.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "helmflow/affine.hpp"
#include "helmflow/ir.hpp"

namespace helmflow {

// Affine map from a tensor's index tuple to a flat non-negative offset,
// injective on the tensor's domain. Surface form: `t[i,j,k]=t[121*i+11*j+k]`.
struct LayoutExpr {
  std::string tensor;
  std::vector<std::string> index_names;
  AffineExpr offset;  // arity = tensor rank
  int64_t size = 0;   // max offset over the domain, plus one

  std::string str() const;
};

// Row-major layout (innermost dimension stride 1).
LayoutExpr default_layout(const std::string& tensor, const Shape& shape);

// Parses and checks a `--layout` option against the declared tensors.
// Throws CompileError on syntax errors, unknown tensors, rank mismatch,
// negative offsets, or non-injectivity (reporting two colliding tuples).
LayoutExpr parse_layout_option(const std::string& text,
                               const LoweredProgram& lp);

// One clause of a partition relation: `src[v] -> dst[expr]` with an optional
// `if` guard over v (affine, optionally mod-reduced). First matching clause
// wins; elements matching no clause stay in their own array at the same
// offset.
struct PartitionClause {
  std::string src;
  std::string var;
  std::string dst;
  AffineExpr offset;               // arity 1
  std::vector<GuardCond> guards;   // arity-1 conditions; all must hold

  std::string str() const;
};

struct PartitionMap {
  std::vector<PartitionClause> clauses;
};

// Parses a `--partition` option: clauses separated by `;`.
PartitionMap parse_partition_option(const std::string& text);

struct ArraySpace {
  std::string id;
  int64_t size = 0;
  int width = 64;
  bool interface = false;
};

struct ElementRef {
  int array = -1;
  int64_t offset = 0;

  bool operator==(const ElementRef& o) const = default;
};

// Two tensor elements routed to the same (array, offset). Legal only when
// liveness later proves their live ranges disjoint.
struct AddressCollision {
  std::string tensor_a;
  Tuple index_a;
  std::string tensor_b;
  Tuple index_b;
  ElementRef home;
};

struct MemoryModel {
  std::vector<ArraySpace> arrays;
  std::map<std::string, Shape> shapes;                 // per tensor
  std::map<std::string, LayoutExpr> layouts;           // per tensor
  std::vector<PartitionClause> clauses;                // flattened, in order
  std::map<std::string, std::vector<ElementRef>> table;  // per tensor, by
                                                         // row-major index
  std::vector<AddressCollision> collisions;

  int array_index(const std::string& id) const;
  const ArraySpace& array(int idx) const { return arrays[static_cast<size_t>(idx)]; }
  // Home of a tensor element (tensor index tuple).
  ElementRef resolve(const std::string& tensor, const Tuple& idx) const;

  std::string dump() const;  // --dump-layouts text, versioned
};

// Builds the memory model: default layouts, overridden by `layout_opts`,
// then partition clauses applied to exhaustion per element. Throws
// CompileError on address collisions unless `allow_shared` is set (the
// collisions are then recorded for the liveness legality check), and always
// on partition cycles.
MemoryModel build_memory_model(const LoweredProgram& lp,
                               const std::vector<LayoutExpr>& layout_opts,
                               const std::vector<PartitionMap>& partitions,
                               bool allow_shared);

// Splits statements whose outer points route accesses into different
// partition classes, so each resulting statement touches one set of arrays.
// Splits are expressed as guards on outer dims; statements whose classes
// cannot be expressed that way are left whole (element routing still
// resolves through the model). The returned program's statement instances
// partition the original instance set exactly.
LoweredProgram split_statements(const LoweredProgram& lp,
                                const MemoryModel& mm);

}  // namespace helmflow
