// SPDX-License-Identifier: Apache-2.0
#include "helmflow/memory.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace helmflow {
namespace {

// --- tiny affine-expression reader shared by layout and partition options --

struct OptCursor {
  const std::string& text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos;
    return true;
  }
  bool accept_str(const char* s) {
    skip_ws();
    size_t n = std::char_traits<char>::length(s);
    if (text.compare(pos, n, s) != 0) return false;
    pos += n;
    return true;
  }
  void expect(char c, const char* what) {
    if (!accept(c))
      throw CompileError("option '" + text + "': expected '" +
                         std::string(1, c) + "' " + what);
  }
  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_'))
      ++pos;
    if (pos == start ||
        std::isdigit(static_cast<unsigned char>(text[start])))
      throw CompileError("option '" + text + "': expected a name at column " +
                         std::to_string(start + 1));
    return text.substr(start, pos - start);
  }
  bool at_number() {
    char c = peek();
    return std::isdigit(static_cast<unsigned char>(c));
  }
  int64_t number() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[pos])))
      ++pos;
    if (pos == start)
      throw CompileError("option '" + text + "': expected a number at column " +
                         std::to_string(start + 1));
    int64_t v = 0;
    for (size_t p = start; p < pos; ++p) {
      v = v * 10 + (text[p] - '0');
      if (v > (int64_t(1) << 40))
        throw CompileError("option '" + text + "': number too large");
    }
    return v;
  }
};

// expr := ['-'] term (('+'|'-') term)* ; term := INT ['*' VAR] | VAR ['*' INT]
AffineExpr parse_affine_opt(OptCursor& c,
                            const std::vector<std::string>& vars) {
  auto var_index = [&](const std::string& name) {
    for (size_t v = 0; v < vars.size(); ++v)
      if (vars[v] == name) return static_cast<int>(v);
    throw CompileError("option '" + c.text + "': unknown index '" + name +
                       "'");
  };
  AffineExpr out = AffineExpr::constant_of(0, static_cast<int>(vars.size()));
  bool first = true;
  for (;;) {
    int64_t sign = 1;
    if (c.accept('-'))
      sign = -1;
    else if (c.accept('+'))
      sign = 1;
    else if (!first)
      break;
    first = false;

    if (c.at_number()) {
      int64_t k = sign * c.number();
      if (c.accept('*')) {
        out.coeffs[static_cast<size_t>(var_index(c.ident()))] += k;
      } else {
        out.constant += k;
      }
    } else {
      int v = var_index(c.ident());
      int64_t k = sign;
      if (c.accept('*')) k *= c.number();
      out.coeffs[static_cast<size_t>(v)] += k;
    }
    char n = c.peek();
    if (n != '+' && n != '-') break;
  }
  return out;
}

CmpOp parse_cmp(OptCursor& c) {
  if (c.accept_str("<=")) return CmpOp::LE;
  if (c.accept_str(">=")) return CmpOp::GE;
  if (c.accept_str("==")) return CmpOp::EQ;
  if (c.accept_str("!=")) return CmpOp::NE;
  if (c.accept('<')) return CmpOp::LT;
  if (c.accept('>')) return CmpOp::GT;
  throw CompileError("option '" + c.text + "': expected a comparison");
}

CmpOp negate_cmp(CmpOp op) {
  switch (op) {
    case CmpOp::LT: return CmpOp::GE;
    case CmpOp::LE: return CmpOp::GT;
    case CmpOp::GT: return CmpOp::LE;
    case CmpOp::GE: return CmpOp::LT;
    case CmpOp::EQ: return CmpOp::NE;
    case CmpOp::NE: return CmpOp::EQ;
  }
  return CmpOp::LT;
}

std::string tuple_str(const Tuple& t) {
  std::string out = "[";
  for (size_t d = 0; d < t.size(); ++d) {
    if (d) out += ",";
    out += std::to_string(t[d]);
  }
  return out + "]";
}

}  // namespace

std::string LayoutExpr::str() const {
  std::string idx;
  for (size_t d = 0; d < index_names.size(); ++d) {
    if (d) idx += ",";
    idx += index_names[d];
  }
  return tensor + "[" + idx + "] = " + tensor + "[" + offset.str(index_names) +
         "]";
}

LayoutExpr default_layout(const std::string& tensor, const Shape& shape) {
  LayoutExpr l;
  l.tensor = tensor;
  l.index_names = outer_dim_names(static_cast<int>(shape.size()));
  l.offset = AffineExpr::constant_of(0, static_cast<int>(shape.size()));
  int64_t stride = 1;
  for (size_t d = shape.size(); d-- > 0;) {
    l.offset.coeffs[d] = stride;
    stride *= shape[d];
  }
  l.size = stride;  // product of extents; max offset + 1 for row-major
  return l;
}

LayoutExpr parse_layout_option(const std::string& text,
                               const LoweredProgram& lp) {
  OptCursor c{text};
  LayoutExpr l;
  l.tensor = c.ident();
  c.expect('[', "after tensor name");
  l.index_names.push_back(c.ident());
  while (c.accept(',')) l.index_names.push_back(c.ident());
  c.expect(']', "after index list");
  c.expect('=', "between tensor and layout");
  std::string rhs = c.ident();
  if (rhs != l.tensor)
    throw CompileError("option '" + text + "': layout must map '" + l.tensor +
                       "' onto its own array, not '" + rhs + "'");
  c.expect('[', "before offset expression");
  l.offset = parse_affine_opt(c, l.index_names);
  c.expect(']', "after offset expression");
  if (!c.eof())
    throw CompileError("option '" + text + "': trailing characters");

  const TensorInfo* info = lp.find_tensor(l.tensor);
  if (!info)
    throw CompileError("option '" + text + "': unknown tensor '" + l.tensor +
                       "'");
  if (info->shape.size() != l.index_names.size())
    throw CompileError("option '" + text + "': tensor '" + l.tensor +
                       "' has rank " + std::to_string(info->shape.size()) +
                       ", layout names " + std::to_string(l.index_names.size()) +
                       " indices");

  // Injectivity and image bounds, by exhaustive enumeration.
  std::unordered_map<int64_t, Tuple> seen;
  int64_t max_offset = 0;
  Tuple p = box_begin(info->shape);
  do {
    int64_t off = l.offset.eval(p);
    if (off < 0)
      throw CompileError("option '" + text + "': negative offset " +
                         std::to_string(off) + " at " + tuple_str(p));
    auto [it, fresh] = seen.emplace(off, p);
    if (!fresh)
      throw CompileError("option '" + text + "': not injective: " +
                         tuple_str(it->second) + " and " + tuple_str(p) +
                         " both map to offset " + std::to_string(off));
    max_offset = std::max(max_offset, off);
  } while (box_next(info->shape, p));
  l.size = max_offset + 1;
  return l;
}

std::string PartitionClause::str() const {
  std::string out = src + "[" + var + "] -> " + dst + "[" +
                    offset.str({var}) + "]";
  for (size_t g = 0; g < guards.size(); ++g)
    out += (g == 0 ? " if " : " && ") + guards[g].str({var});
  return out;
}

PartitionMap parse_partition_option(const std::string& text) {
  PartitionMap map;
  OptCursor c{text};
  do {
    PartitionClause cl;
    cl.src = c.ident();
    c.expect('[', "after source array");
    cl.var = c.ident();
    c.expect(']', "after index variable");
    if (!c.accept_str("->"))
      throw CompileError("option '" + text + "': expected '->'");
    cl.dst = c.ident();
    c.expect('[', "after target array");
    cl.offset = parse_affine_opt(c, {cl.var});
    c.expect(']', "after target offset");
    if (c.accept_str("if")) {
      do {
        GuardCond g;
        g.expr = parse_affine_opt(c, {cl.var});
        if (c.accept('%')) g.modulus = c.number();
        g.op = parse_cmp(c);
        if (c.accept('-'))
          g.rhs = -c.number();
        else
          g.rhs = c.number();
        cl.guards.push_back(std::move(g));
      } while (c.accept_str("&&"));
    }
    map.clauses.push_back(std::move(cl));
  } while (c.accept(';'));
  if (!c.eof())
    throw CompileError("option '" + text + "': trailing characters");
  return map;
}

int MemoryModel::array_index(const std::string& id) const {
  for (size_t a = 0; a < arrays.size(); ++a)
    if (arrays[a].id == id) return static_cast<int>(a);
  return -1;
}

ElementRef MemoryModel::resolve(const std::string& tensor,
                                const Tuple& idx) const {
  auto sit = shapes.find(tensor);
  if (sit == shapes.end())
    throw InternalError("memory model: unknown tensor '" + tensor + "'");
  const Shape& shape = sit->second;
  int64_t flat = 0;
  for (size_t d = 0; d < shape.size(); ++d) flat = flat * shape[d] + idx[d];
  return table.at(tensor)[static_cast<size_t>(flat)];
}

std::string MemoryModel::dump() const {
  std::string out = "# helmflow-layouts v1\n";
  for (const auto& [name, l] : layouts) out += "layout " + l.str() + "\n";
  for (const PartitionClause& cl : clauses)
    out += "partition " + cl.str() + "\n";
  for (const ArraySpace& a : arrays) {
    out += "array " + a.id + " size " + std::to_string(a.size) + " width " +
           std::to_string(a.width);
    if (a.interface) out += " interface";
    out += "\n";
  }
  return out;
}

MemoryModel build_memory_model(const LoweredProgram& lp,
                               const std::vector<LayoutExpr>& layout_opts,
                               const std::vector<PartitionMap>& partitions,
                               bool allow_shared) {
  MemoryModel mm;
  for (const TensorInfo& t : lp.tensors) {
    mm.shapes[t.name] = t.shape;
    mm.layouts[t.name] = default_layout(t.name, t.shape);
  }
  std::vector<std::string> overridden;
  for (const LayoutExpr& l : layout_opts) {
    if (std::find(overridden.begin(), overridden.end(), l.tensor) !=
        overridden.end())
      throw CompileError("duplicate layout option for tensor '" + l.tensor +
                         "'");
    overridden.push_back(l.tensor);
    mm.layouts[l.tensor] = l;
  }
  for (const PartitionMap& p : partitions)
    mm.clauses.insert(mm.clauses.end(), p.clauses.begin(), p.clauses.end());

  // A clause can only fire on a program tensor or on an intermediate array
  // introduced by another clause; anything else is a dead rule (a typo).
  for (const PartitionClause& cl : mm.clauses) {
    bool reachable = lp.find_tensor(cl.src) != nullptr;
    for (const PartitionClause& other : mm.clauses)
      reachable = reachable || other.dst == cl.src;
    if (!reachable)
      throw CompileError("partition map names unknown tensor '" + cl.src +
                         "'");
  }

  auto get_array = [&](const std::string& id) {
    int idx = mm.array_index(id);
    if (idx >= 0) return idx;
    mm.arrays.push_back({id, 0, 64, false});
    return static_cast<int>(mm.arrays.size()) - 1;
  };

  // Interface tensors first so their arrays lead the node order.
  std::vector<const TensorInfo*> order;
  for (const TensorInfo& t : lp.tensors)
    if (t.interface()) order.push_back(&t);
  for (const TensorInfo& t : lp.tensors)
    if (!t.interface()) order.push_back(&t);

  std::unordered_map<int64_t, std::pair<std::string, int64_t>> occupied;
  for (const TensorInfo* t : order) {
    const LayoutExpr& l = mm.layouts.at(t->name);
    std::vector<ElementRef>& refs = mm.table[t->name];
    refs.resize(static_cast<size_t>(box_size(t->shape)));
    int64_t flat = 0;
    Tuple p = box_begin(t->shape);
    do {
      std::string arr = t->name;
      int64_t off = l.offset.eval(p);
      // Route through partition clauses to exhaustion (first match wins).
      int hops = 0;
      for (bool moved = true; moved;) {
        moved = false;
        for (const PartitionClause& cl : mm.clauses) {
          if (cl.src != arr) continue;
          bool match = true;
          for (const GuardCond& g : cl.guards)
            if (!g.holds({off})) {
              match = false;
              break;
            }
          if (!match) continue;
          arr = cl.dst;
          off = cl.offset.eval({off});
          moved = true;
          break;
        }
        if (moved && ++hops > 64)
          throw CompileError("partition map does not reach a fixpoint for " +
                             t->name + tuple_str(p) + " (cycle?)");
      }
      if (off < 0)
        throw CompileError("partition maps " + t->name + tuple_str(p) +
                           " to negative offset " + std::to_string(off));
      int ai = get_array(arr);
      mm.arrays[static_cast<size_t>(ai)].size =
          std::max(mm.arrays[static_cast<size_t>(ai)].size, off + 1);
      if (t->interface()) mm.arrays[static_cast<size_t>(ai)].interface = true;
      refs[static_cast<size_t>(flat)] = {ai, off};

      int64_t key = (static_cast<int64_t>(ai) << 40) | off;
      auto [it, fresh] = occupied.emplace(key, std::make_pair(t->name, flat));
      if (!fresh) {
        // Reconstruct the earlier occupant's index tuple for the report.
        const Shape& oshape = mm.shapes.at(it->second.first);
        Tuple oidx(oshape.size(), 0);
        int64_t rem = it->second.second;
        for (size_t d = oshape.size(); d-- > 0;) {
          oidx[d] = rem % oshape[d];
          rem /= oshape[d];
        }
        mm.collisions.push_back(
            {it->second.first, oidx, t->name, p, {ai, off}});
      }
      ++flat;
    } while (box_next(t->shape, p));
  }

  if (!mm.collisions.empty() && !allow_shared) {
    const AddressCollision& c = mm.collisions.front();
    throw CompileError(
        "partition map has no injective fixpoint: " + c.tensor_a +
        tuple_str(c.index_a) + " and " + c.tensor_b + tuple_str(c.index_b) +
        " both map to " + mm.arrays[static_cast<size_t>(c.home.array)].id +
        "[" + std::to_string(c.home.offset) +
        "] (pass --allow-shared-address-space to defer to the liveness "
        "legality check)");
  }
  return mm;
}

namespace {

// A statement access whose array-offset expression depends only on outer
// dims and whose tensor is subject to partition clauses.
struct SplitAccess {
  std::string tensor;
  AffineExpr offset;  // arity = |outer|
};

}  // namespace

LoweredProgram split_statements(const LoweredProgram& lp,
                                const MemoryModel& mm) {
  LoweredProgram out;
  out.tensors = lp.tensors;
  if (mm.clauses.empty()) {
    out.stmts = lp.stmts;
    return out;
  }

  auto is_partitioned = [&](const std::string& tensor) {
    for (const PartitionClause& cl : mm.clauses)
      if (cl.src == tensor) return true;
    return false;
  };
  auto clauses_of = [&](const std::string& tensor) {
    std::vector<const PartitionClause*> cls;
    for (const PartitionClause& cl : mm.clauses)
      if (cl.src == tensor) cls.push_back(&cl);
    return cls;
  };
  // First matching clause index for an offset, or -1 when none matches.
  auto choice_of = [](const std::vector<const PartitionClause*>& cls,
                      int64_t off) {
    for (size_t c = 0; c < cls.size(); ++c) {
      bool match = true;
      for (const GuardCond& g : cls[c]->guards)
        if (!g.holds({off})) {
          match = false;
          break;
        }
      if (match) return static_cast<int>(c);
    }
    return -1;
  };

  for (const Stmt& s : lp.stmts) {
    int O = static_cast<int>(s.outer.size());
    std::vector<SplitAccess> accesses;
    {
      if (is_partitioned(s.lhs))
        accesses.push_back({s.lhs, mm.layouts.at(s.lhs).offset});
      for (const Operand& op : s.operands) {
        if (!is_partitioned(op.tensor)) continue;
        AffineExpr full =
            mm.layouts.at(op.tensor).offset.substitute(op.access.outputs);
        bool outer_only = true;
        for (size_t d = static_cast<size_t>(O); d < full.coeffs.size(); ++d)
          if (full.coeffs[d] != 0) outer_only = false;
        if (!outer_only) continue;  // uniform across classes; no split basis
        full.coeffs.resize(static_cast<size_t>(O));
        accesses.push_back({op.tensor, std::move(full)});
      }
    }
    if (accesses.empty()) {
      out.stmts.push_back(s);
      continue;
    }

    // Group outer points by which clause serves each access.
    std::vector<std::vector<int>> signatures;  // first-appearance order
    std::vector<int> point_sig;
    {
      Tuple p = box_begin(s.outer);
      do {
        bool live = true;
        for (const GuardCond& g : s.guards)
          if (!g.holds(p)) live = false;
        if (!live) {
          point_sig.push_back(-1);
          continue;
        }
        std::vector<int> sig;
        for (const SplitAccess& a : accesses)
          sig.push_back(choice_of(clauses_of(a.tensor), a.offset.eval(p)));
        auto it = std::find(signatures.begin(), signatures.end(), sig);
        if (it == signatures.end()) {
          signatures.push_back(sig);
          point_sig.push_back(static_cast<int>(signatures.size()) - 1);
        } else {
          point_sig.push_back(
              static_cast<int>(it - signatures.begin()));
        }
      } while (box_next(s.outer, p));
    }
    if (signatures.size() <= 1) {
      out.stmts.push_back(s);
      continue;
    }

    // Synthesize guard sets, one statement per signature. A clause choice
    // contributes its own guards plus the negation of every earlier clause
    // (first-match semantics); -1 negates all clauses. Negation is only
    // expressible for single-guard clauses — otherwise keep the statement
    // whole (element routing stays correct either way).
    std::vector<Stmt> pieces;
    bool expressible = true;
    for (const std::vector<int>& sig : signatures) {
      Stmt piece = s;
      for (size_t a = 0; a < accesses.size() && expressible; ++a) {
        auto cls = clauses_of(accesses[a].tensor);
        int chosen = sig[a];
        int upto = chosen < 0 ? static_cast<int>(cls.size()) : chosen;
        for (int j = 0; j < upto && expressible; ++j) {
          if (cls[static_cast<size_t>(j)]->guards.size() > 1) {
            expressible = false;
            break;
          }
          for (GuardCond g : cls[static_cast<size_t>(j)]->guards) {
            g.expr = g.expr.substitute({accesses[a].offset});
            g.op = negate_cmp(g.op);
            piece.guards.push_back(std::move(g));
          }
        }
        if (chosen >= 0) {
          for (GuardCond g : cls[static_cast<size_t>(chosen)]->guards) {
            g.expr = g.expr.substitute({accesses[a].offset});
            piece.guards.push_back(std::move(g));
          }
        }
      }
      pieces.push_back(std::move(piece));
    }

    // Verify the synthesized guards reproduce the signature classes exactly.
    if (expressible) {
      size_t n = 0;
      Tuple p = box_begin(s.outer);
      do {
        int holds_at = -1;
        for (size_t c = 0; c < pieces.size(); ++c) {
          bool ok = true;
          for (const GuardCond& g : pieces[c].guards)
            if (!g.holds(p)) {
              ok = false;
              break;
            }
          if (ok) {
            if (holds_at >= 0) expressible = false;  // duplication
            holds_at = static_cast<int>(c);
          }
        }
        if (holds_at != point_sig[n]) expressible = false;  // loss/mismatch
        ++n;
      } while (expressible && box_next(s.outer, p));
    }

    if (!expressible) {
      out.stmts.push_back(s);
      continue;
    }
    for (Stmt& piece : pieces) out.stmts.push_back(std::move(piece));
  }

  for (size_t i = 0; i < out.stmts.size(); ++i)
    out.stmts[i].id = static_cast<int>(i);
  return out;
}

}  // namespace helmflow
