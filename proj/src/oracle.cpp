// SPDX-License-Identifier: Apache-2.0
#include "helmflow/oracle.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "helmflow/affine.hpp"

namespace helmflow {

DenseTensor::DenseTensor(Shape s) : shape(std::move(s)) {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  data.assign(static_cast<size_t>(n), 0.0);
}

int64_t DenseTensor::offset(const std::vector<int64_t>& idx) const {
  int64_t off = 0;
  for (size_t d = 0; d < shape.size(); ++d) off = off * shape[d] + idx[d];
  return off;
}

namespace {

// Element of `expr` at `idx`, pulling named tensors from `env`. Contraction
// nodes recurse over their reduced dimensions; everything else is a direct
// elementwise combination. `fc` may be null.
double element_of(const Expr& expr, const std::vector<int64_t>& idx,
                  const TensorEnv& env, const TensorProgram& prog,
                  FlopCounts* fc) {
  switch (expr.kind) {
    case ExprKind::Ref:
      return env.at(expr.name).at(idx);
    case ExprKind::OuterProduct: {
      // Forming a product-tensor element is part of the reduction term; it
      // does not tick the multiply counter (see FlopCounts).
      Shape lshape = infer_shape(*expr.lhs, prog);
      std::vector<int64_t> li(idx.begin(), idx.begin() + static_cast<long>(lshape.size()));
      std::vector<int64_t> ri(idx.begin() + static_cast<long>(lshape.size()), idx.end());
      return element_of(*expr.lhs, li, env, prog, fc) *
             element_of(*expr.rhs, ri, env, prog, fc);
    }
    case ExprKind::Elementwise: {
      double v = element_of(*expr.lhs, idx, env, prog, fc) *
                 element_of(*expr.rhs, idx, env, prog, fc);
      if (fc) fc->muls += 1;
      return v;
    }
    case ExprKind::Contraction: {
      Shape operand_shape = infer_shape(*expr.lhs, prog);
      int rank = static_cast<int>(operand_shape.size());
      std::vector<bool> reduced(operand_shape.size(), false);
      for (auto [a, b] : expr.pairs) {
        reduced[static_cast<size_t>(a)] = true;
        reduced[static_cast<size_t>(b)] = true;
      }
      // Stitch the free dims from idx; sweep each pair with one variable.
      std::vector<int64_t> full(operand_shape.size(), 0);
      std::vector<size_t> free_dims;
      for (size_t d = 0; d < operand_shape.size(); ++d)
        if (!reduced[d]) free_dims.push_back(d);
      for (size_t f = 0; f < free_dims.size(); ++f) full[free_dims[f]] = idx[f];

      std::vector<int64_t> sweep_extents;
      sweep_extents.reserve(expr.pairs.size());
      for (auto [a, b] : expr.pairs) {
        (void)b;
        sweep_extents.push_back(operand_shape[static_cast<size_t>(a)]);
      }
      double acc = 0.0;
      bool first = true;
      Tuple sweep = box_begin(sweep_extents);
      do {
        for (size_t p = 0; p < expr.pairs.size(); ++p) {
          full[static_cast<size_t>(expr.pairs[p].first)] = sweep[p];
          full[static_cast<size_t>(expr.pairs[p].second)] = sweep[p];
        }
        acc += element_of(*expr.lhs, full, env, prog, fc);
        if (fc) {
          fc->muls += 1;
          if (!first) fc->adds += 1;
        }
        first = false;
      } while (box_next(sweep_extents, sweep));
      (void)rank;
      return acc;
    }
  }
  return 0.0;
}

}  // namespace

void eval_program(const TensorProgram& program, TensorEnv& env,
                  FlopReport* report) {
  for (const TensorDecl& d : program.decls) {
    if (d.qual != Qualifier::Input) continue;
    auto it = env.find(d.name);
    if (it == env.end())
      throw CompileError("missing input tensor '" + d.name + "'");
    if (it->second.shape != d.shape)
      throw CompileError("input tensor '" + d.name +
                         "' does not match its declared shape");
  }
  for (const Statement& s : program.statements) {
    const TensorDecl* d = program.find_decl(s.lhs);
    DenseTensor out(d->shape);
    FlopCounts fc;
    std::vector<int64_t> idx = box_begin(d->shape);
    size_t flat = 0;
    do {
      out.data[flat++] =
          element_of(*s.rhs, idx, env, program, report ? &fc : nullptr);
    } while (box_next(d->shape, idx));
    if (report) {
      report->per_statement[s.lhs] = fc;
      report->total.muls += fc.muls;
      report->total.adds += fc.adds;
    }
    env[s.lhs] = std::move(out);
  }
}

FlopReport count_flops(const TensorProgram& program) {
  TensorEnv env;
  for (const TensorDecl& d : program.decls)
    if (d.qual == Qualifier::Input) env[d.name] = DenseTensor(d.shape);
  FlopReport report;
  eval_program(program, env, &report);
  return report;
}

DenseTensor inverse_helmholtz(const DenseTensor& S, const DenseTensor& D,
                              const DenseTensor& u, FlopReport* report) {
  if (S.shape.size() != 2 || S.shape[0] != S.shape[1])
    throw CompileError("inverse_helmholtz: S must be square of rank 2");
  int64_t n = S.shape[0];
  Shape cube{n, n, n};
  if (D.shape != cube || u.shape != cube)
    throw CompileError("inverse_helmholtz: D and u must be [n,n,n]");

  auto s = [&](int64_t a, int64_t b) { return S.data[static_cast<size_t>(a * n + b)]; };
  auto cube_at = [&](const DenseTensor& t, int64_t a, int64_t b, int64_t c) {
    return t.data[static_cast<size_t>((a * n + b) * n + c)];
  };

  FlopCounts fc_t, fc_r, fc_v;

  DenseTensor t(cube);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int64_t l = 0; l < n; ++l)
          for (int64_t m = 0; m < n; ++m)
            for (int64_t q = 0; q < n; ++q) {
              acc += s(i, l) * s(j, m) * s(k, q) * cube_at(u, l, m, q);
              fc_t.muls += 1;
            }
        fc_t.adds += static_cast<uint64_t>(n * n * n - 1);
        t.at({i, j, k}) = acc;
      }

  DenseTensor r(cube);
  for (size_t x = 0; x < r.data.size(); ++x) {
    r.data[x] = D.data[x] * t.data[x];
    fc_r.muls += 1;
  }

  DenseTensor v(cube);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int64_t l = 0; l < n; ++l)
          for (int64_t m = 0; m < n; ++m)
            for (int64_t q = 0; q < n; ++q) {
              acc += s(l, i) * s(m, j) * s(q, k) * cube_at(r, l, m, q);
              fc_v.muls += 1;
            }
        fc_v.adds += static_cast<uint64_t>(n * n * n - 1);
        v.at({i, j, k}) = acc;
      }

  if (report) {
    report->per_statement["t"] = fc_t;
    report->per_statement["r"] = fc_r;
    report->per_statement["v"] = fc_v;
    for (const auto& fc : {fc_t, fc_r, fc_v}) {
      report->total.muls += fc.muls;
      report->total.adds += fc.adds;
    }
  }
  return v;
}

DenseTensor random_tensor(const Shape& shape, uint64_t seed) {
  DenseTensor t(shape);
  std::mt19937_64 gen(seed);
  for (double& x : t.data) {
    // 53 uniform mantissa bits -> [0,1) -> [-1,1); avoids the distribution
    // classes whose output is not pinned down by the standard.
    double u01 = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    x = 2.0 * u01 - 1.0;
  }
  return t;
}

std::string tensor_digest(const DenseTensor& t) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (double x : t.data) {
    uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double rel_diff(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape != b.shape)
    throw CompileError("rel_diff: shape mismatch");
  double max_abs = 0.0;
  double max_err = 0.0;
  for (size_t x = 0; x < a.data.size(); ++x) {
    max_abs = std::max({max_abs, std::fabs(a.data[x]), std::fabs(b.data[x])});
    max_err = std::max(max_err, std::fabs(a.data[x] - b.data[x]));
  }
  if (max_abs == 0.0) return 0.0;
  return max_err / max_abs;
}

std::string helmholtz_source(int64_t extent) {
  std::string n = std::to_string(extent);
  std::string cube = "[" + n + " " + n + " " + n + "]";
  std::string out;
  out += "// Inverse Helmholtz operator kernel (single element, extent " + n + ").\n";
  out += "\nvar input  S : [" + n + " " + n + "]\n";
  out += "var input  D : " + cube + "\n";
  out += "var input  u : " + cube + "\n";
  out += "var output v : " + cube + "\n";
  out += "\nvar local  t : " + cube + "\n";
  out += "var local  r : " + cube + "\n";
  out += "\nt = S # S # S # u . [[1 6] [3 7] [5 8]]\n";
  out += "r = D * t\n";
  out += "v = S # S # S # r . [[0 6] [2 7] [4 8]]\n";
  return out;
}

}  // namespace helmflow
