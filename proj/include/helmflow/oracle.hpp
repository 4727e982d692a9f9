// SPDX-License-Identifier: Apache-2.0
#ifndef HELMFLOW_ORACLE_HPP
#define HELMFLOW_ORACLE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "helmflow/ast.hpp"

namespace helmflow {

// Row-major dense tensor. The reference evaluators work directly on these;
// no IR, schedule, or layout machinery is involved on this path.
struct DenseTensor {
  Shape shape;
  std::vector<double> data;

  DenseTensor() = default;
  explicit DenseTensor(Shape s);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int64_t offset(const std::vector<int64_t>& idx) const;
  double& at(const std::vector<int64_t>& idx) { return data[static_cast<size_t>(offset(idx))]; }
  double at(const std::vector<int64_t>& idx) const { return data[static_cast<size_t>(offset(idx))]; }
};

using TensorEnv = std::map<std::string, DenseTensor>;

// Operation counts. The multiply counter counts one multiply per accumulated
// reduction term (the innermost multiply-accumulate) and factors-1 per
// elementwise product; the add counter counts reduction accumulations.
struct FlopCounts {
  uint64_t muls = 0;
  uint64_t adds = 0;
};

struct FlopReport {
  FlopCounts total;
  std::map<std::string, FlopCounts> per_statement;  // keyed by lhs tensor
};

// Direct dense evaluation of the source program: statements in order, each
// expression evaluated element-by-element from its AST. Contractions sum
// over their reduced dimensions without materializing the product tensor.
// `env` must bind every input tensor; outputs and locals are added to it.
// Throws CompileError on missing/mis-shaped inputs.
void eval_program(const TensorProgram& program, TensorEnv& env,
                  FlopReport* report = nullptr);

// Operation counts of the direct evaluation (value-independent).
FlopReport count_flops(const TensorProgram& program);

// Literal implementation of the inverse Helmholtz operator:
//   t[i,j,k] = sum_{l,m,n} S[i,l] * S[j,m] * S[k,n] * u[l,m,n]   (transposed)
//   r = D . t                                                    (elementwise)
//   v[i,j,k] = sum_{l,m,n} S[l,i] * S[m,j] * S[n,k] * r[l,m,n]
// S is [n,n], D and u are [n,n,n] with n = p+1 for polynomial degree p.
// Written as plain nested loops; independent of eval_program.
DenseTensor inverse_helmholtz(const DenseTensor& S, const DenseTensor& D,
                              const DenseTensor& u, FlopReport* report = nullptr);

// Deterministic, platform-independent pseudo-random tensor in [-1, 1).
// Uses the mt19937_64 bit stream directly so results are bit-stable across
// standard libraries.
DenseTensor random_tensor(const Shape& shape, uint64_t seed);

// FNV-1a 64 over the little-endian bytes of the tensor data, as 16 hex chars.
std::string tensor_digest(const DenseTensor& t);

// max |a-b| normalized by the larger max-magnitude of the two operands
// (0 when both are identically zero). Shapes must match.
double rel_diff(const DenseTensor& a, const DenseTensor& b);

// The inverse Helmholtz kernel at a given extent, in source form. Extent 11
// is the shipped kernels/helmholtz.cfd.
std::string helmholtz_source(int64_t extent);

}  // namespace helmflow

#endif  // HELMFLOW_ORACLE_HPP
