// SPDX-License-Identifier: Apache-2.0
#include "helmflow/ir.hpp"

#include <algorithm>
#include <functional>

namespace helmflow {
namespace {

TensorKind kind_of(Qualifier q) {
  switch (q) {
    case Qualifier::Input: return TensorKind::Input;
    case Qualifier::Output: return TensorKind::Output;
    case Qualifier::Local: return TensorKind::Local;
  }
  return TensorKind::Local;
}

// Collects the factor expressions of an outer-product tree, left to right.
void flatten_product(const Expr& e, std::vector<const Expr*>& factors) {
  if (e.kind == ExprKind::OuterProduct) {
    flatten_product(*e.lhs, factors);
    flatten_product(*e.rhs, factors);
  } else {
    factors.push_back(&e);
  }
}

class Lowerer {
 public:
  explicit Lowerer(const TensorProgram& prog) : prog_(prog) {
    for (const TensorDecl& d : prog.decls)
      out_.tensors.push_back({d.name, d.shape, kind_of(d.qual)});
  }

  LoweredProgram run() {
    for (const Statement& s : prog_.statements)
      lower_into(s.lhs, prog_.find_decl(s.lhs)->shape, *s.rhs);
    for (size_t i = 0; i < out_.stmts.size(); ++i)
      out_.stmts[i].id = static_cast<int>(i);
    return std::move(out_);
  }

 private:
  std::string fresh_temp(const Shape& shape) {
    std::string name;
    do {
      name = "_t" + std::to_string(temp_counter_++);
    } while (out_.find_tensor(name));
    out_.tensors.push_back({name, shape, TensorKind::Temp});
    return name;
  }

  // Returns the tensor holding the value of `e`, materializing a temp and
  // its defining statements when `e` is not a plain read.
  std::string lower_value(const Expr& e) {
    if (e.kind == ExprKind::Ref) return e.name;
    Shape shape = infer_shape(e, prog_);
    std::string name = fresh_temp(shape);
    lower_into(name, shape, e);
    return name;
  }

  void lower_into(const std::string& lhs, const Shape& lshape, const Expr& e) {
    switch (e.kind) {
      case ExprKind::Ref: {
        Stmt s;
        s.lhs = lhs;
        s.kind = StmtKind::Copy;
        s.outer = lshape;
        s.operands.push_back({e.name, AffineMap::identity(static_cast<int>(lshape.size()))});
        out_.stmts.push_back(std::move(s));
        return;
      }
      case ExprKind::Elementwise: {
        std::string a = lower_value(*e.lhs);
        std::string b = lower_value(*e.rhs);
        Stmt s;
        s.lhs = lhs;
        s.kind = StmtKind::Hadamard;
        s.outer = lshape;
        AffineMap id = AffineMap::identity(static_cast<int>(lshape.size()));
        s.operands.push_back({a, id});
        s.operands.push_back({b, id});
        out_.stmts.push_back(std::move(s));
        return;
      }
      case ExprKind::OuterProduct: {
        lower_product(lhs, lshape, e, /*pairs=*/{});
        return;
      }
      case ExprKind::Contraction: {
        lower_product(lhs, lshape, *e.lhs, e.pairs);
        return;
      }
    }
  }

  // Lowers `lhs = product(e) . pairs` (pairs may be empty for a bare outer
  // product) into a single ContractStage whose operands are the flattened
  // factors of the product tree.
  void lower_product(const std::string& lhs, const Shape& lshape, const Expr& e,
                     const std::vector<std::pair<int, int>>& pairs) {
    std::vector<const Expr*> factor_exprs;
    flatten_product(e, factor_exprs);

    std::vector<std::string> names;
    std::vector<Shape> shapes;
    for (const Expr* f : factor_exprs) {
      shapes.push_back(infer_shape(*f, prog_));
      names.push_back(lower_value(*f));
    }

    // Product dims numbered from 0 left to right; each contraction pair
    // becomes one reduction dim, remaining dims become outer dims in order.
    int rank = 0;
    for (const Shape& s : shapes) rank += static_cast<int>(s.size());
    std::vector<int> dim_to_inner(static_cast<size_t>(rank), -1);
    for (size_t p = 0; p < pairs.size(); ++p) {
      dim_to_inner[static_cast<size_t>(pairs[p].first)] = static_cast<int>(p);
      dim_to_inner[static_cast<size_t>(pairs[p].second)] = static_cast<int>(p);
    }
    std::vector<int> dim_to_outer(static_cast<size_t>(rank), -1);
    Stmt s;
    s.lhs = lhs;
    s.kind = StmtKind::ContractStage;
    {
      std::vector<int64_t> all_extents;
      for (const Shape& sh : shapes)
        all_extents.insert(all_extents.end(), sh.begin(), sh.end());
      int next_outer = 0;
      for (int d = 0; d < rank; ++d) {
        if (dim_to_inner[static_cast<size_t>(d)] >= 0) continue;
        dim_to_outer[static_cast<size_t>(d)] = next_outer++;
        s.outer.push_back(all_extents[static_cast<size_t>(d)]);
      }
      for (const auto& pr : pairs)
        s.inner.push_back(all_extents[static_cast<size_t>(pr.first)]);
    }
    if (s.outer != lshape)
      throw InternalError("lowering: contraction result shape mismatch");

    int arity = static_cast<int>(s.outer.size() + s.inner.size());
    int base = 0;
    for (size_t f = 0; f < names.size(); ++f) {
      AffineMap access;
      access.domain_rank = arity;
      for (size_t d = 0; d < shapes[f].size(); ++d) {
        int pd = base + static_cast<int>(d);
        int inner = dim_to_inner[static_cast<size_t>(pd)];
        int var = inner >= 0 ? static_cast<int>(s.outer.size()) + inner
                             : dim_to_outer[static_cast<size_t>(pd)];
        access.outputs.push_back(AffineExpr::var(var, arity));
      }
      s.operands.push_back({names[f], std::move(access)});
      base += static_cast<int>(shapes[f].size());
    }
    out_.stmts.push_back(std::move(s));
  }

  const TensorProgram& prog_;
  LoweredProgram out_;
  int temp_counter_ = 0;
};

// A factor dimension during decomposition, identified by the original
// statement's variable it carries (an outer var or a reduction var).
struct FacDim {
  bool inner = false;
  int var = 0;
};

struct Fac {
  std::string tensor;
  std::vector<FacDim> dims;
};

bool is_pure_var(const AffineExpr& e, int* var) {
  int found = -1;
  if (e.constant != 0) return false;
  for (size_t d = 0; d < e.coeffs.size(); ++d) {
    if (e.coeffs[d] == 0) continue;
    if (e.coeffs[d] != 1 || found >= 0) return false;
    found = static_cast<int>(d);
  }
  if (found < 0) return false;
  *var = found;
  return true;
}

}  // namespace

LoweredProgram lower_program(const TensorProgram& program) {
  return Lowerer(program).run();
}

LoweredProgram decompose_contractions(const LoweredProgram& lp) {
  LoweredProgram out;
  out.tensors = lp.tensors;

  for (const Stmt& s : lp.stmts) {
    if (s.kind != StmtKind::ContractStage || s.inner.size() <= 1) {
      out.stmts.push_back(s);
      continue;
    }
    if (!s.guards.empty())
      throw InternalError("decompose: unexpected guards before partitioning");

    int O = static_cast<int>(s.outer.size());
    std::vector<Fac> facs;
    for (const Operand& op : s.operands) {
      Fac f;
      f.tensor = op.tensor;
      for (const AffineExpr& e : op.access.outputs) {
        int var = 0;
        if (!is_pure_var(e, &var))
          throw InternalError("decompose: non-trivial access map");
        f.dims.push_back({var >= O, var >= O ? var - O : var});
      }
      facs.push_back(std::move(f));
    }

    std::vector<int> remaining;
    for (size_t r = 0; r < s.inner.size(); ++r)
      remaining.push_back(static_cast<int>(r));

    int stage_num = 0;
    while (remaining.size() > 1) {
      // The rightmost reduction: the one whose last occurrence in product-
      // dim order is furthest right.
      auto last_pos = [&](int var) {
        std::pair<int, int> pos{-1, -1};
        for (size_t fi = 0; fi < facs.size(); ++fi)
          for (size_t di = 0; di < facs[fi].dims.size(); ++di)
            if (facs[fi].dims[di].inner && facs[fi].dims[di].var == var)
              pos = {static_cast<int>(fi), static_cast<int>(di)};
        return pos;
      };
      int q = remaining.front();
      for (int v : remaining)
        if (last_pos(v) > last_pos(q)) q = v;

      std::vector<size_t> group;
      for (size_t fi = 0; fi < facs.size(); ++fi)
        for (const FacDim& d : facs[fi].dims)
          if (d.inner && d.var == q) {
            group.push_back(fi);
            break;
          }

      // The stage temporary carries every non-reduced dim of the group, in
      // product order.
      std::vector<FacDim> tdims;
      for (size_t fi : group)
        for (const FacDim& d : facs[fi].dims)
          if (!(d.inner && d.var == q)) tdims.push_back(d);

      std::string tname;
      do {
        tname = s.lhs + "_s" + std::to_string(++stage_num);
      } while (out.find_tensor(tname) || lp.find_tensor(tname));

      Stmt stage;
      stage.lhs = tname;
      stage.kind = StmtKind::ContractStage;
      for (const FacDim& d : tdims)
        stage.outer.push_back(d.inner ? s.inner[static_cast<size_t>(d.var)]
                                      : s.outer[static_cast<size_t>(d.var)]);
      stage.inner.push_back(s.inner[static_cast<size_t>(q)]);
      out.tensors.push_back({tname, stage.outer, TensorKind::Temp});

      int arity = static_cast<int>(tdims.size()) + 1;
      size_t tpos = 0;
      for (size_t fi : group) {
        AffineMap access;
        access.domain_rank = arity;
        for (const FacDim& d : facs[fi].dims) {
          if (d.inner && d.var == q) {
            access.outputs.push_back(AffineExpr::var(arity - 1, arity));
          } else {
            access.outputs.push_back(
                AffineExpr::var(static_cast<int>(tpos++), arity));
          }
        }
        stage.operands.push_back({facs[fi].tensor, std::move(access)});
      }
      out.stmts.push_back(std::move(stage));

      Fac merged;
      merged.tensor = tname;
      merged.dims = tdims;
      facs[group.front()] = std::move(merged);
      for (size_t g = group.size(); g-- > 1;)
        facs.erase(facs.begin() + static_cast<long>(group[g]));
      remaining.erase(std::find(remaining.begin(), remaining.end(), q));
    }

    // Final stage writes the original lhs over its original outer space.
    int r = remaining.front();
    Stmt fin;
    fin.lhs = s.lhs;
    fin.kind = StmtKind::ContractStage;
    fin.outer = s.outer;
    fin.inner.push_back(s.inner[static_cast<size_t>(r)]);
    int arity = O + 1;
    for (const Fac& f : facs) {
      AffineMap access;
      access.domain_rank = arity;
      for (const FacDim& d : f.dims)
        access.outputs.push_back(
            AffineExpr::var(d.inner ? O : d.var, arity));
      fin.operands.push_back({f.tensor, std::move(access)});
    }
    out.stmts.push_back(std::move(fin));
  }

  for (size_t i = 0; i < out.stmts.size(); ++i)
    out.stmts[i].id = static_cast<int>(i);
  return out;
}

LoweredProgram inline_transients(const LoweredProgram& lp) {
  LoweredProgram out = lp;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t ti = 0; ti < out.tensors.size(); ++ti) {
      const TensorInfo& info = out.tensors[ti];
      if (info.kind != TensorKind::Temp || info.name.rfind("_t", 0) != 0)
        continue;
      size_t writer_idx = out.stmts.size();
      std::vector<size_t> consumers;
      for (size_t si = 0; si < out.stmts.size(); ++si) {
        if (out.stmts[si].lhs == info.name) writer_idx = si;
        for (const Operand& op : out.stmts[si].operands)
          if (op.tensor == info.name) {
            consumers.push_back(si);
            break;
          }
      }
      if (writer_idx == out.stmts.size()) continue;
      const Stmt& writer = out.stmts[writer_idx];
      if (writer.kind == StmtKind::ContractStage) continue;  // sums stay
      if (consumers.size() != 1) continue;

      Stmt& c = out.stmts[consumers.front()];
      std::vector<Operand> replaced;
      for (const Operand& op : c.operands) {
        if (op.tensor != info.name) {
          replaced.push_back(op);
          continue;
        }
        for (const Operand& wop : writer.operands)
          replaced.push_back({wop.tensor, wop.access.compose(op.access)});
      }
      c.operands = std::move(replaced);
      if (c.kind == StmtKind::Copy && c.operands.size() > 1)
        c.kind = StmtKind::Hadamard;
      out.stmts.erase(out.stmts.begin() + static_cast<long>(writer_idx));
      out.tensors.erase(out.tensors.begin() + static_cast<long>(ti));
      changed = true;
      break;
    }
  }
  for (size_t i = 0; i < out.stmts.size(); ++i)
    out.stmts[i].id = static_cast<int>(i);
  return out;
}

OperandMap stmt_operand_map(const Stmt& s) {
  return {s.outer, s.inner, s.operands};
}

OperandMap transitive_operand_map(const LoweredProgram& lp,
                                  const std::string& tensor) {
  const TensorInfo* info = lp.find_tensor(tensor);
  if (!info) throw CompileError("unknown tensor '" + tensor + "'");
  const Stmt* writer = lp.writer_of(tensor);
  if (!writer) {
    OperandMap m;
    m.outer = info->shape;
    m.entries.push_back(
        {tensor, AffineMap::identity(static_cast<int>(info->shape.size()))});
    return m;
  }

  int O = static_cast<int>(writer->outer.size());
  std::vector<OperandMap> subs;
  subs.reserve(writer->operands.size());
  for (const Operand& op : writer->operands)
    subs.push_back(transitive_operand_map(lp, op.tensor));

  OperandMap m;
  m.outer = writer->outer;
  m.inner = writer->inner;
  for (const OperandMap& sub : subs)
    m.inner.insert(m.inner.end(), sub.inner.begin(), sub.inner.end());

  int total = O + static_cast<int>(m.inner.size());
  int innate = static_cast<int>(writer->inner.size());
  int block = O + innate;  // where the accumulated reduction dims start
  for (size_t oi = 0; oi < writer->operands.size(); ++oi) {
    const Operand& op = writer->operands[oi];
    const OperandMap& sub = subs[oi];
    int sub_inner = static_cast<int>(sub.inner.size());

    // Lift the operand access to the combined domain, then append identity
    // rows selecting this operand's private reduction block.
    AffineMap lifted;
    lifted.domain_rank = total;
    for (const AffineExpr& e : op.access.outputs) {
      AffineExpr ext = AffineExpr::constant_of(e.constant, total);
      for (size_t d = 0; d < e.coeffs.size(); ++d) ext.coeffs[d] = e.coeffs[d];
      lifted.outputs.push_back(std::move(ext));
    }
    for (int d = 0; d < sub_inner; ++d)
      lifted.outputs.push_back(AffineExpr::var(block + d, total));

    for (const auto& entry : sub.entries)
      m.entries.push_back({entry.tensor, entry.access.compose(lifted)});
    block += sub_inner;
  }
  return m;
}

void evaluate_statements(const LoweredProgram& lp, TensorEnv& env,
                         const EvalOptions& opts) {
  for (const TensorInfo& info : lp.tensors) {
    if (info.kind != TensorKind::Input) continue;
    auto it = env.find(info.name);
    if (it == env.end())
      throw CompileError("missing input tensor '" + info.name + "'");
    if (it->second.shape != info.shape)
      throw CompileError("input tensor '" + info.name +
                         "' does not match its declared shape");
  }

  for (const Stmt& s : lp.stmts) {
    if (!env.count(s.lhs)) env[s.lhs] = DenseTensor(lp.find_tensor(s.lhs)->shape);
    DenseTensor& out = env[s.lhs];
    FlopCounts fc;
    auto* reads =
        opts.reads ? &(*opts.reads)[s.id] : nullptr;

    Tuple outer = box_begin(s.outer);
    do {
      bool live = true;
      for (const GuardCond& g : s.guards)
        if (!g.holds(outer)) {
          live = false;
          break;
        }
      if (!live) continue;

      Tuple full = outer;
      full.resize(s.outer.size() + s.inner.size(), 0);
      auto read = [&](const Operand& op) {
        Tuple idx = op.access.apply(full);
        if (reads) reads->insert({op.tensor, idx});
        return env.at(op.tensor).at(idx);
      };

      switch (s.kind) {
        case StmtKind::Copy:
          out.at(outer) = read(s.operands.front());
          break;
        case StmtKind::Hadamard: {
          double v = read(s.operands.front());
          for (size_t o = 1; o < s.operands.size(); ++o) {
            v *= read(s.operands[o]);
            fc.muls += 1;
          }
          out.at(outer) = v;
          break;
        }
        case StmtKind::ContractStage: {
          // Reduction-free stages materialize an outer product; forming the
          // product element is not a counted multiply.
          double acc = 0.0;
          bool first = true;
          Tuple inner = box_begin(s.inner);
          do {
            for (size_t d = 0; d < s.inner.size(); ++d)
              full[s.outer.size() + d] = inner[d];
            double term = 1.0;
            for (const Operand& op : s.operands) term *= read(op);
            acc += term;
            if (!s.inner.empty()) fc.muls += 1;
            if (!first) fc.adds += 1;
            first = false;
          } while (box_next(s.inner, inner));
          out.at(outer) = acc;
          break;
        }
      }
    } while (box_next(s.outer, outer));

    if (opts.report) {
      FlopCounts& dst = opts.report->per_statement[s.lhs];
      dst.muls += fc.muls;
      dst.adds += fc.adds;
      opts.report->total.muls += fc.muls;
      opts.report->total.adds += fc.adds;
    }
  }
}

std::string dump_ir(const LoweredProgram& lp) {
  std::string out = "# helmflow-ir v1\n";
  for (const TensorInfo& t : lp.tensors) {
    out += "tensor " + t.name + " [";
    for (size_t d = 0; d < t.shape.size(); ++d) {
      if (d) out += " ";
      out += std::to_string(t.shape[d]);
    }
    out += "] ";
    switch (t.kind) {
      case TensorKind::Input: out += "input"; break;
      case TensorKind::Output: out += "output"; break;
      case TensorKind::Local: out += "local"; break;
      case TensorKind::Temp: out += "temp"; break;
    }
    out += "\n";
  }
  for (const Stmt& s : lp.stmts) {
    std::vector<std::string> names = outer_dim_names(static_cast<int>(s.outer.size()));
    std::vector<std::string> inner = inner_dim_names(static_cast<int>(s.inner.size()));
    names.insert(names.end(), inner.begin(), inner.end());

    out += "s" + std::to_string(s.id) + ": ";
    switch (s.kind) {
      case StmtKind::ContractStage: out += "contract "; break;
      case StmtKind::Hadamard: out += "hadamard "; break;
      case StmtKind::Copy: out += "copy "; break;
    }
    out += s.lhs;
    if (!s.inner.empty()) {
      out += " reduce [";
      for (size_t d = 0; d < s.inner.size(); ++d) {
        if (d) out += " ";
        out += inner[d] + ":" + std::to_string(s.inner[d]);
      }
      out += "]";
    }
    std::string domain;
    for (size_t d = 0; d < names.size(); ++d) {
      if (d) domain += ",";
      domain += names[d];
    }
    for (const Operand& op : s.operands) {
      out += " { " + s.lhs + "[" + domain + "] -> " + op.tensor + "[";
      for (size_t e = 0; e < op.access.outputs.size(); ++e) {
        if (e) out += ",";
        out += op.access.outputs[e].str(names);
      }
      out += "] }";
    }
    if (!s.guards.empty()) {
      out += " where ";
      std::vector<std::string> onames = outer_dim_names(static_cast<int>(s.outer.size()));
      for (size_t g = 0; g < s.guards.size(); ++g) {
        if (g) out += " and ";
        out += s.guards[g].str(onames);
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace helmflow
