// SPDX-License-Identifier: Apache-2.0
#include "helmflow/codegen.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "helmflow/diagnostics.hpp"

namespace helmflow {

namespace {

const std::set<std::string>& c_keywords() {
  static const std::set<std::string> kw = {
      "auto",     "break",    "case",     "char",   "const",    "continue",
      "default",  "do",       "double",   "else",   "enum",     "extern",
      "float",    "for",      "goto",     "if",     "inline",   "int",
      "long",     "register", "restrict", "return", "short",    "signed",
      "sizeof",   "static",   "struct",   "switch", "typedef",  "union",
      "unsigned", "void",     "volatile", "while",  "kernel"};
  return kw;
}

std::string fresh_name(std::string base, std::set<std::string>& used) {
  while (used.count(base) || c_keywords().count(base)) base += "_";
  used.insert(base);
  return base;
}

// How accesses to one tensor reach its storage. When partition routing is
// an exact match for the tensor's layout (the common case), a subscript is
// a single affine expression into the home array; otherwise each element
// is dispatched individually.
struct SubscriptPlan {
  bool affine = true;
  int array = 0;
  AffineExpr layout;  // affine case: index tuple -> home-array offset
  Shape shape;
  const std::vector<ElementRef>* table = nullptr;  // routed case
};

constexpr int64_t kMaxRoutedElements = 1024;

AffineExpr row_major_offset(const Shape& shape) {
  const int rank = static_cast<int>(shape.size());
  AffineExpr e = AffineExpr::constant_of(0, rank);
  int64_t stride = 1;
  for (int d = rank; d-- > 0;) {
    e.coeffs[static_cast<size_t>(d)] = stride;
    stride *= shape[static_cast<size_t>(d)];
  }
  return e;
}

SubscriptPlan plan_subscript(const MemoryModel& mm, const std::string& name) {
  SubscriptPlan plan;
  plan.shape = mm.shapes.at(name);
  plan.layout = mm.layouts.at(name).offset;
  plan.table = &mm.table.at(name);
  const std::vector<ElementRef>& refs = *plan.table;
  plan.array = refs.empty() ? 0 : refs.front().array;
  int64_t flat = 0;
  Tuple idx = box_begin(plan.shape);
  do {
    const ElementRef& ref = refs.at(static_cast<size_t>(flat));
    if (ref.array != plan.array || ref.offset != plan.layout.eval(idx)) {
      plan.affine = false;
      break;
    }
    ++flat;
  } while (box_next(plan.shape, idx));
  return plan;
}

// An access rendered as a C lvalue. Affine plans index the home array
// directly; routed plans dispatch on the row-major element index with a
// pointer-select chain, which stays assignable.
std::string subscript_text(const SubscriptPlan& plan, const AffineMap& access,
                           const std::vector<std::string>& names,
                           const std::vector<std::string>& params,
                           const std::string& tensor) {
  if (plan.affine) {
    AffineExpr off = plan.layout.substitute(access.outputs);
    return params[static_cast<size_t>(plan.array)] + "[" + off.str(names) +
           "]";
  }
  const int64_t count = box_size(plan.shape);
  if (count > kMaxRoutedElements)
    throw CompileError("tensor `" + tensor +
                       "` is partitioned too irregularly to inline in "
                       "generated code (" +
                       std::to_string(count) + " elements; limit " +
                       std::to_string(kMaxRoutedElements) + ")");
  AffineExpr flat = row_major_offset(plan.shape).substitute(access.outputs);
  const std::string key = "(" + flat.str(names) + ")";
  std::string out = "(*(";
  Tuple idx = box_begin(plan.shape);
  int64_t i = 0;
  do {
    const ElementRef& ref = plan.table->at(static_cast<size_t>(i));
    std::string leaf = "&" + params[static_cast<size_t>(ref.array)] + "[" +
                       std::to_string(ref.offset) + "]";
    if (i + 1 < count)
      out += key + " == " + std::to_string(i) + " ? " + leaf + " : ";
    else
      out += leaf;
    ++i;
  } while (box_next(plan.shape, idx));
  out += "))";
  return out;
}

std::string guard_text(const GuardCond& g, const std::vector<std::string>& names) {
  std::vector<std::string> sliced(names.begin(),
                                  names.begin() + g.expr.arity());
  std::string v = "(" + g.expr.str(sliced) + ")";
  if (g.modulus != 0)
    v = "((" + v + " % " + std::to_string(g.modulus) + " + " +
        std::to_string(g.modulus) + ") % " + std::to_string(g.modulus) + ")";
  const char* op = "";
  switch (g.op) {
    case CmpOp::LT: op = " < "; break;
    case CmpOp::LE: op = " <= "; break;
    case CmpOp::GT: op = " > "; break;
    case CmpOp::GE: op = " >= "; break;
    case CmpOp::EQ: op = " == "; break;
    case CmpOp::NE: op = " != "; break;
  }
  return v + op + std::to_string(g.rhs);
}

// Loop order of a group, recovered from its first member's tuple: loop
// depth d iterates statement dim perm[d].
std::vector<int> group_perm(const LoweredProgram& lp, const Schedule& sched,
                            const Schedule::Group& g) {
  const size_t m0 = g.members.front();
  const Stmt& s = lp.stmts.at(m0);
  const std::vector<AffineExpr>& tuple = sched.per_stmt.at(m0).tuple;
  std::vector<int> perm;
  for (size_t d = 0; d < s.outer.size(); ++d) {
    const AffineExpr& e = tuple.at(1 + d);
    int dim = -1;
    for (size_t c = 0; c < e.coeffs.size(); ++c) {
      if (e.coeffs[c] == 0) continue;
      if (e.coeffs[c] != 1 || dim != -1 || e.constant != 0)
        throw InternalError("group loop slot is not a plain iteration var");
      dim = static_cast<int>(c);
    }
    if (dim < 0 || dim >= static_cast<int>(s.outer.size()))
      throw InternalError("group loop slot does not name an outer dim");
    perm.push_back(dim);
  }
  return perm;
}

std::string indent_of(int level) { return std::string(2 * static_cast<size_t>(level), ' '); }

}  // namespace

const char* param_dir_name(ParamDir d) {
  switch (d) {
    case ParamDir::In: return "in";
    case ParamDir::Out: return "out";
    case ParamDir::InOut: return "inout";
    case ParamDir::Scratch: return "scratch";
  }
  return "scratch";
}

KernelInterface kernel_interface(const LoweredProgram& lp,
                                 const MemoryModel& mm) {
  std::vector<bool> has_in(mm.arrays.size(), false);
  std::vector<bool> has_out(mm.arrays.size(), false);
  for (const TensorInfo& t : lp.tensors) {
    if (!t.interface()) continue;
    for (const ElementRef& ref : mm.table.at(t.name)) {
      if (t.kind == TensorKind::Input) has_in[static_cast<size_t>(ref.array)] = true;
      if (t.kind == TensorKind::Output) has_out[static_cast<size_t>(ref.array)] = true;
    }
  }
  KernelInterface iface;
  std::set<std::string> used;
  for (size_t a = 0; a < mm.arrays.size(); ++a) {
    KernelParam p;
    p.name = fresh_name(mm.arrays[a].id, used);
    p.array = static_cast<int>(a);
    p.size = mm.arrays[a].size;
    if (has_in[a] && has_out[a]) p.dir = ParamDir::InOut;
    else if (has_in[a]) p.dir = ParamDir::In;
    else if (has_out[a]) p.dir = ParamDir::Out;
    else p.dir = ParamDir::Scratch;
    iface.params.push_back(std::move(p));
  }
  return iface;
}

std::string emit_c99(const LoweredProgram& lp, const Schedule& sched,
                     const MemoryModel& mm, const KernelInterface& iface) {
  std::vector<std::string> params(mm.arrays.size());
  std::set<std::string> used;
  for (const KernelParam& p : iface.params) {
    params[static_cast<size_t>(p.array)] = p.name;
    used.insert(p.name);
  }
  std::map<std::string, SubscriptPlan> plans;
  for (const auto& [name, shape] : mm.shapes)
    plans.emplace(name, plan_subscript(mm, name));

  std::ostringstream os;
  os << "/* helmflow-c99 v1 */\n";
  os << "/*";
  for (size_t i = 0; i < iface.params.size(); ++i)
    os << (i ? ", " : " ") << iface.params[i].name << ": "
       << param_dir_name(iface.params[i].dir);
  os << " */\n";
  os << "void kernel(";
  for (size_t i = 0; i < iface.params.size(); ++i)
    os << (i ? ", " : "") << "double* " << iface.params[i].name;
  os << ")\n{\n";

  for (size_t gi = 0; gi < sched.groups.size(); ++gi) {
    const Schedule::Group& g = sched.groups[gi];
    const std::vector<int> perm = group_perm(lp, sched, g);
    const Stmt& first = lp.stmts.at(g.members.front());
    const int rank = static_cast<int>(first.outer.size());

    std::vector<std::string> ovars;
    {
      std::set<std::string> scope = used;
      for (const std::string& base : outer_dim_names(rank))
        ovars.push_back(fresh_name(base, scope));
    }

    os << indent_of(1) << "/* g" << gi << ":";
    for (size_t m : g.members) os << " s" << lp.stmts.at(m).id;
    os << " */\n";
    for (int d = 0; d < rank; ++d) {
      const std::string& v = ovars[static_cast<size_t>(perm[static_cast<size_t>(d)])];
      os << indent_of(1 + d) << "for (long " << v << " = 0; " << v << " < "
         << g.loop_extents.at(static_cast<size_t>(d)) << "; " << v
         << "++) { /* g" << gi << "_d" << d << " */\n";
    }

    const int body = 1 + rank;
    for (size_t m : g.members) {
      const Stmt& s = lp.stmts.at(m);
      const int irank = static_cast<int>(s.inner.size());
      std::vector<std::string> names = ovars;
      {
        std::set<std::string> scope = used;
        for (const std::string& v : ovars) scope.insert(v);
        for (const std::string& base : inner_dim_names(irank))
          names.push_back(fresh_name(base, scope));
      }
      std::set<std::string> scope(names.begin(), names.end());
      for (const std::string& p : params) scope.insert(p);
      const std::string acc = fresh_name("acc", scope);

      os << indent_of(body) << "{ /* s" << s.id << ": " << s.lhs << " */\n";
      int level = body + 1;
      if (!s.guards.empty()) {
        os << indent_of(level) << "if (";
        for (size_t q = 0; q < s.guards.size(); ++q)
          os << (q ? " && " : "") << guard_text(s.guards[q], names);
        os << ") {\n";
        ++level;
      }

      std::string product;
      for (size_t o = 0; o < s.operands.size(); ++o) {
        if (o) product += " * ";
        product += subscript_text(plans.at(s.operands[o].tensor),
                                  s.operands[o].access, names, params,
                                  s.operands[o].tensor);
      }
      AffineMap lhs_access = AffineMap::identity(rank);
      std::string lhs = subscript_text(plans.at(s.lhs), lhs_access, ovars,
                                       params, s.lhs);

      if (irank == 0) {
        os << indent_of(level) << lhs << " = " << product << ";\n";
      } else {
        os << indent_of(level) << "double " << acc << " = 0.0;\n";
        for (int d = 0; d < irank; ++d) {
          const std::string& v = names[static_cast<size_t>(rank + d)];
          os << indent_of(level + d) << "for (long " << v << " = 0; " << v
             << " < " << s.inner.at(static_cast<size_t>(d)) << "; " << v
             << "++) { /* s" << s.id << "_inner";
          if (irank > 1) os << "_" << d;
          os << " */\n";
        }
        os << indent_of(level + irank) << acc << " += " << product << ";\n";
        for (int d = irank; d-- > 0;)
          os << indent_of(level + d) << "}\n";
        os << indent_of(level) << lhs << " = " << acc << ";\n";
      }

      if (!s.guards.empty()) {
        --level;
        os << indent_of(level) << "}\n";
      }
      os << indent_of(body) << "}\n";
    }

    for (int d = rank; d-- > 0;) os << indent_of(1 + d) << "}\n";
  }

  os << "}\n";
  return os.str();
}

namespace {

bool label_like(const std::string& tok) {
  if (tok.empty()) return false;
  for (char c : tok)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

// Trailing `/* label */` of a loop line, if any.
std::string line_label(const std::string& line) {
  size_t open = line.rfind("/* ");
  size_t close = line.rfind(" */");
  if (open == std::string::npos || close == std::string::npos ||
      close <= open + 3)
    return "";
  std::string tok = line.substr(open + 3, close - open - 3);
  if (!label_like(tok)) return "";
  if (line.find("for (") == std::string::npos) return "";
  return tok;
}

}  // namespace

std::string emit_hls_annotations(
    const std::string& c_text,
    const std::vector<std::pair<std::string, int64_t>>& unroll,
    const std::vector<std::string>& pipeline) {
  if (unroll.empty() && pipeline.empty()) return c_text;

  std::vector<std::string> lines;
  {
    std::string cur;
    for (char c : c_text) {
      cur += c;
      if (c == '\n') {
        lines.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
  }

  std::vector<std::string> ordered_labels;
  std::map<std::string, size_t> label_line;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string tok = line_label(lines[i]);
    if (tok.empty()) continue;
    ordered_labels.push_back(tok);
    label_line[tok] = i;
  }

  auto expand = [&](const std::string& label) {
    std::vector<std::string> out;
    if (label == "inner") {
      for (const std::string& l : ordered_labels)
        if (l.find("_inner") != std::string::npos) out.push_back(l);
      if (out.empty())
        throw CompileError("`inner` matches no loops in the generated code");
      return out;
    }
    if (!label_line.count(label)) {
      std::string avail;
      for (const std::string& l : ordered_labels) {
        if (!avail.empty()) avail += ", ";
        avail += l;
      }
      throw CompileError("unknown loop label `" + label + "`; available: " +
                         (avail.empty() ? "(none)" : avail) + ", inner");
    }
    return std::vector<std::string>{label};
  };

  std::map<size_t, int64_t> unroll_at;     // line -> factor (last wins)
  std::set<size_t> pipeline_at;
  for (const auto& [label, factor] : unroll) {
    if (factor < 1)
      throw CompileError("unroll factor must be at least 1, got " +
                         std::to_string(factor));
    for (const std::string& l : expand(label)) unroll_at[label_line[l]] = factor;
  }
  for (const std::string& label : pipeline)
    for (const std::string& l : expand(label)) pipeline_at.insert(label_line[l]);

  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    out += lines[i];
    auto u = unroll_at.find(i);
    const bool p = pipeline_at.count(i) != 0;
    if (u == unroll_at.end() && !p) continue;
    std::string indent = lines[i].substr(0, lines[i].find_first_not_of(' '));
    indent += "  ";
    if (u != unroll_at.end())
      out += indent + "#pragma HLS unroll factor=" + std::to_string(u->second) +
             "\n";
    if (p) out += indent + "#pragma HLS pipeline\n";
  }
  return out;
}

namespace {

struct InstanceRec {
  Tuple tuple;
  size_t stmt = 0;
  Tuple point;  // outer ++ inner
};

std::string tuple_csv(const Tuple& t) {
  std::string out;
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(t[i]);
  }
  return out;
}

}  // namespace

InterpResult interpret_schedule(const LoweredProgram& lp,
                                const Schedule& sched, const MemoryModel& mm,
                                const TensorEnv& env,
                                const InterpOptions& opts) {
  int64_t total = 0;
  for (const Stmt& s : lp.stmts) total += s.instance_count();
  if (total > opts.max_instances)
    throw CompileError("schedule analysis limit exceeded: " +
                       std::to_string(total) + " statement instances (limit " +
                       std::to_string(opts.max_instances) +
                       "); reduce the problem extents");

  std::vector<std::vector<double>> arrays(mm.arrays.size());
  for (size_t a = 0; a < mm.arrays.size(); ++a)
    arrays[a].assign(static_cast<size_t>(mm.arrays[a].size), 0.0);

  auto slot = [&](int array, int64_t offset, const char* what,
                  const std::string& ctx) -> double& {
    if (array < 0 || array >= static_cast<int>(arrays.size()) || offset < 0 ||
        offset >= static_cast<int64_t>(arrays[static_cast<size_t>(array)].size()))
      throw InternalError(std::string("generated access out of bounds: ") +
                          what + " array " +
                          (array >= 0 && array < static_cast<int>(mm.arrays.size())
                               ? "`" + mm.arrays[static_cast<size_t>(array)].id + "`"
                               : "#" + std::to_string(array)) +
                          " offset " + std::to_string(offset) + " at " + ctx);
    return arrays[static_cast<size_t>(array)][static_cast<size_t>(offset)];
  };

  // Host preload: route every input tensor element to its home.
  for (const TensorInfo& t : lp.tensors) {
    if (t.kind != TensorKind::Input) continue;
    auto it = env.find(t.name);
    if (it == env.end())
      throw CompileError("input tensor `" + t.name + "` is not bound");
    if (it->second.shape != t.shape)
      throw CompileError("input tensor `" + t.name +
                         "` has the wrong shape");
    const std::vector<ElementRef>& refs = mm.table.at(t.name);
    for (size_t i = 0; i < refs.size(); ++i)
      slot(refs[i].array, refs[i].offset, "preload of", t.name) =
          it->second.data[i];
  }

  std::vector<InstanceRec> recs;
  recs.reserve(static_cast<size_t>(total));
  for (size_t pos = 0; pos < lp.stmts.size(); ++pos) {
    const Stmt& s = lp.stmts[pos];
    Shape box = s.outer;
    box.insert(box.end(), s.inner.begin(), s.inner.end());
    Tuple point = box_begin(box);
    do {
      Tuple outer_pt(point.begin(),
                     point.begin() + static_cast<long>(s.outer.size()));
      bool ok = true;
      for (const GuardCond& g : s.guards)
        if (!g.holds(outer_pt)) { ok = false; break; }
      if (!ok) continue;
      recs.push_back({sched.apply(pos, point), pos, point});
    } while (box_next(box, point));
  }
  std::sort(recs.begin(), recs.end(),
            [](const InstanceRec& a, const InstanceRec& b) {
              return lex_compare(a.tuple, b.tuple) < 0;
            });

  // Per-operand lookup plans: access map plus the element routing table.
  struct OpPlan {
    const AffineMap* access = nullptr;
    const std::vector<ElementRef>* table = nullptr;
    Shape shape;
  };
  std::vector<std::vector<OpPlan>> op_plans(lp.stmts.size());
  std::vector<const std::vector<ElementRef>*> lhs_table(lp.stmts.size());
  std::vector<Shape> lhs_shape(lp.stmts.size());
  for (size_t pos = 0; pos < lp.stmts.size(); ++pos) {
    const Stmt& s = lp.stmts[pos];
    for (const Operand& o : s.operands)
      op_plans[pos].push_back(
          {&o.access, &mm.table.at(o.tensor), mm.shapes.at(o.tensor)});
    lhs_table[pos] = &mm.table.at(s.lhs);
    lhs_shape[pos] = mm.shapes.at(s.lhs);
  }

  auto flat_index = [](const Shape& shape, const Tuple& idx) {
    int64_t f = 0;
    for (size_t d = 0; d < shape.size(); ++d) f = f * shape[d] + idx[d];
    return f;
  };

  InterpResult result;
  std::string& trace = result.trace;
  std::map<std::pair<size_t, Tuple>, double> acc;

  for (const InstanceRec& rec : recs) {
    const Stmt& s = lp.stmts[rec.stmt];
    const std::string ctx = "instance [" + tuple_csv(rec.tuple) + "]";
    double product = 1.0;
    for (const OpPlan& op : op_plans[rec.stmt]) {
      Tuple idx = op.access->apply(rec.point);
      int64_t flat = flat_index(op.shape, idx);
      if (flat < 0 || flat >= static_cast<int64_t>(op.table->size()))
        throw InternalError("generated access out of bounds: read of a "
                            "tensor element outside its shape at " + ctx);
      const ElementRef& ref = (*op.table)[static_cast<size_t>(flat)];
      product *= slot(ref.array, ref.offset, "read at", ctx);
      if (opts.want_trace) {
        trace += tuple_csv(rec.tuple);
        trace += ";";
        trace += mm.arrays[static_cast<size_t>(ref.array)].id;
        trace += ";";
        trace += std::to_string(ref.offset);
        trace += ";R\n";
      }
    }

    const size_t orank = s.outer.size();
    bool last_inner = true;
    for (size_t d = 0; d < s.inner.size(); ++d)
      if (rec.point[orank + d] != s.inner[d] - 1) { last_inner = false; break; }

    double value = product;
    if (!s.inner.empty()) {
      Tuple outer_pt(rec.point.begin(),
                     rec.point.begin() + static_cast<long>(orank));
      auto key = std::make_pair(rec.stmt, std::move(outer_pt));
      double& sum = acc[key];
      sum += product;
      if (!last_inner) continue;
      value = sum;
      acc.erase(key);
    }

    Tuple outer_pt(rec.point.begin(),
                   rec.point.begin() + static_cast<long>(orank));
    int64_t flat = flat_index(lhs_shape[rec.stmt], outer_pt);
    const ElementRef& ref = (*lhs_table[rec.stmt])[static_cast<size_t>(flat)];
    slot(ref.array, ref.offset, "write at", ctx) = value;
    if (opts.want_trace) {
      trace += tuple_csv(rec.tuple);
      trace += ";";
      trace += mm.arrays[static_cast<size_t>(ref.array)].id;
      trace += ";";
      trace += std::to_string(ref.offset);
      trace += ";W\n";
    }
  }

  for (const TensorInfo& t : lp.tensors) {
    if (t.kind != TensorKind::Output) continue;
    DenseTensor out(t.shape);
    const std::vector<ElementRef>& refs = mm.table.at(t.name);
    for (size_t i = 0; i < refs.size(); ++i)
      out.data[i] = slot(refs[i].array, refs[i].offset, "readback of", t.name);
    result.outputs.emplace(t.name, std::move(out));
  }
  for (size_t a = 0; a < mm.arrays.size(); ++a)
    result.arrays.emplace(mm.arrays[a].id, std::move(arrays[a]));
  return result;
}

}  // namespace helmflow
