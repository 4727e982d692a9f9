// SPDX-License-Identifier: Apache-2.0
#include "helmflow/affine.hpp"

#include "helmflow/diagnostics.hpp"

namespace helmflow {

AffineExpr AffineExpr::substitute(const std::vector<AffineExpr>& exprs) const {
  if (exprs.size() != coeffs.size())
    throw InternalError("affine substitute: arity mismatch");
  int arity = exprs.empty() ? 0 : exprs.front().arity();
  AffineExpr out = AffineExpr::constant_of(constant, arity);
  for (size_t d = 0; d < coeffs.size(); ++d) {
    if (coeffs[d] == 0) continue;
    for (size_t x = 0; x < out.coeffs.size(); ++x)
      out.coeffs[x] += coeffs[d] * exprs[d].coeffs[x];
    out.constant += coeffs[d] * exprs[d].constant;
  }
  return out;
}

std::string AffineExpr::str(const std::vector<std::string>& names) const {
  std::string out;
  for (size_t d = 0; d < coeffs.size(); ++d) {
    int64_t c = coeffs[d];
    if (c == 0) continue;
    if (!out.empty()) {
      out += c < 0 ? " - " : " + ";
      if (c < 0) c = -c;
    } else if (c < 0) {
      out += "-";
      c = -c;
    }
    if (c != 1) out += std::to_string(c) + "*";
    out += names[d];
  }
  if (constant != 0 || out.empty()) {
    if (out.empty()) {
      out = std::to_string(constant);
    } else {
      out += constant < 0 ? " - " : " + ";
      out += std::to_string(constant < 0 ? -constant : constant);
    }
  }
  return out;
}

AffineMap AffineMap::compose(const AffineMap& inner) const {
  if (inner.output_rank() != domain_rank)
    throw InternalError("affine compose: rank mismatch");
  AffineMap out;
  out.domain_rank = inner.domain_rank;
  out.outputs.reserve(outputs.size());
  for (const AffineExpr& e : outputs) out.outputs.push_back(e.substitute(inner.outputs));
  return out;
}

std::string GuardCond::str(const std::vector<std::string>& names) const {
  std::string out = expr.str(names);
  if (modulus != 0) out += " % " + std::to_string(modulus);
  switch (op) {
    case CmpOp::LT: out += " < "; break;
    case CmpOp::LE: out += " <= "; break;
    case CmpOp::GT: out += " > "; break;
    case CmpOp::GE: out += " >= "; break;
    case CmpOp::EQ: out += " == "; break;
    case CmpOp::NE: out += " != "; break;
  }
  out += std::to_string(rhs);
  return out;
}

int lex_compare(const Tuple& a, const Tuple& b) {
  if (a.size() != b.size()) throw InternalError("lex_compare: width mismatch");
  for (size_t d = 0; d < a.size(); ++d) {
    if (a[d] < b[d]) return -1;
    if (a[d] > b[d]) return 1;
  }
  return 0;
}

Tuple box_begin(const std::vector<int64_t>& extents) {
  return Tuple(extents.size(), 0);
}

bool box_next(const std::vector<int64_t>& extents, Tuple& point) {
  for (size_t d = extents.size(); d-- > 0;) {
    if (++point[d] < extents[d]) return true;
    point[d] = 0;
  }
  return false;
}

int64_t box_size(const std::vector<int64_t>& extents) {
  int64_t n = 1;
  for (int64_t e : extents) n *= e;
  return n;
}

static std::vector<std::string> dim_names(int rank, const char* base,
                                          const char* prefix) {
  std::vector<std::string> names;
  names.reserve(static_cast<size_t>(rank));
  for (int d = 0; d < rank; ++d) {
    if (d < 3)
      names.emplace_back(1, base[d]);
    else
      names.push_back(std::string(prefix) + std::to_string(d));
  }
  return names;
}

std::vector<std::string> outer_dim_names(int rank) {
  return dim_names(rank, "ijk", "i");
}

std::vector<std::string> inner_dim_names(int rank) {
  return dim_names(rank, "abc", "r");
}

}  // namespace helmflow
