// SPDX-License-Identifier: Apache-2.0
#ifndef HELMFLOW_AFFINE_HPP
#define HELMFLOW_AFFINE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace helmflow {

using Tuple = std::vector<int64_t>;

// Sum of coeff[d] * x[d] plus a constant, over a fixed-arity point.
struct AffineExpr {
  std::vector<int64_t> coeffs;
  int64_t constant = 0;

  static AffineExpr var(int dim, int arity) {
    AffineExpr e;
    e.coeffs.assign(static_cast<size_t>(arity), 0);
    e.coeffs[static_cast<size_t>(dim)] = 1;
    return e;
  }
  static AffineExpr constant_of(int64_t c, int arity) {
    AffineExpr e;
    e.coeffs.assign(static_cast<size_t>(arity), 0);
    e.constant = c;
    return e;
  }

  int arity() const { return static_cast<int>(coeffs.size()); }

  int64_t eval(const Tuple& point) const {
    int64_t v = constant;
    for (size_t d = 0; d < coeffs.size(); ++d) v += coeffs[d] * point[d];
    return v;
  }

  bool is_constant() const {
    for (int64_t c : coeffs)
      if (c != 0) return false;
    return true;
  }

  bool operator==(const AffineExpr& o) const = default;

  // Substitutes each input dimension with an expression over a new domain:
  // result(x) = this(exprs[0](x), ..., exprs[n-1](x)).
  AffineExpr substitute(const std::vector<AffineExpr>& exprs) const;

  // Renders as e.g. "121*i0 + 11*i1 + i2 + 4" using the given dim names.
  std::string str(const std::vector<std::string>& names) const;
};

// Affine function from points of `domain_rank` dims to a tuple of outputs.
struct AffineMap {
  int domain_rank = 0;
  std::vector<AffineExpr> outputs;

  static AffineMap identity(int rank) {
    AffineMap m;
    m.domain_rank = rank;
    for (int d = 0; d < rank; ++d) m.outputs.push_back(AffineExpr::var(d, rank));
    return m;
  }

  int output_rank() const { return static_cast<int>(outputs.size()); }

  Tuple apply(const Tuple& point) const {
    Tuple out;
    out.reserve(outputs.size());
    for (const AffineExpr& e : outputs) out.push_back(e.eval(point));
    return out;
  }

  // Composition: (this ∘ inner)(x) = this(inner(x)).
  AffineMap compose(const AffineMap& inner) const;

  bool operator==(const AffineMap& o) const = default;
};

// Comparison predicate used by statement guards, e.g. "expr % 11 <= 5".
// modulus == 0 means an ordinary affine comparison on expr itself.
enum class CmpOp { LT, LE, GT, GE, EQ, NE };

struct GuardCond {
  AffineExpr expr;
  int64_t modulus = 0;
  CmpOp op = CmpOp::LT;
  int64_t rhs = 0;

  bool holds(const Tuple& point) const {
    int64_t v = expr.eval(point);
    if (modulus != 0) {
      v %= modulus;
      if (v < 0) v += modulus;
    }
    switch (op) {
      case CmpOp::LT: return v < rhs;
      case CmpOp::LE: return v <= rhs;
      case CmpOp::GT: return v > rhs;
      case CmpOp::GE: return v >= rhs;
      case CmpOp::EQ: return v == rhs;
      case CmpOp::NE: return v != rhs;
    }
    return false;
  }

  bool operator==(const GuardCond& o) const = default;

  std::string str(const std::vector<std::string>& names) const;
};

// Lexicographic order on equal-length tuples.
int lex_compare(const Tuple& a, const Tuple& b);

// Iterates all points of a box [0,extents[0]) x ... in row-major order.
// Returns false (and leaves point at all-zero) when the box is empty.
// Usage: Tuple p = box_begin(extents); do { ... } while (box_next(extents, p));
Tuple box_begin(const std::vector<int64_t>& extents);
bool box_next(const std::vector<int64_t>& extents, Tuple& point);
int64_t box_size(const std::vector<int64_t>& extents);

// Deterministic dimension names: i, j, k, i3, i4, ... for outer dims and
// a, b, c, r3, r4, ... for reduction dims.
std::vector<std::string> outer_dim_names(int rank);
std::vector<std::string> inner_dim_names(int rank);

}  // namespace helmflow

#endif  // HELMFLOW_AFFINE_HPP
