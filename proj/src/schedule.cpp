// SPDX-License-Identifier: Apache-2.0
#include "helmflow/schedule.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "helmflow/diagnostics.hpp"
#include "helmflow/liveness.hpp"

namespace helmflow {

namespace {

// Internal group description the schedule builder and the rescheduler share.
// `members` are statement positions in intra-group execution order; `perm`
// reorders the shared outer dimensions (loop slot d iterates dim perm[d]).
struct GroupState {
  std::vector<size_t> members;
  std::vector<int> perm;
};

Shape outer_of(const LoweredProgram& lp, const GroupState& g) {
  return lp.stmts.at(g.members.front()).outer;
}

Shape permuted_outer(const LoweredProgram& lp, const GroupState& g) {
  Shape base = outer_of(lp, g);
  Shape out(base.size());
  for (size_t d = 0; d < base.size(); ++d) out[d] = base[g.perm[d]];
  return out;
}

// A group occupies its shared outer dims plus one slot per inner dim of its
// widest member; this never exceeds the reference width since members share
// the outer box. Members separate inside the first inner slot via disjoint
// base offsets, so lexicographic tuple order equals the sequential
// per-member execution order code generation produces.
Schedule build_schedule(const LoweredProgram& lp,
                        const std::vector<GroupState>& groups, int width) {
  Schedule sched;
  sched.width = width;
  sched.per_stmt.resize(lp.stmts.size());
  const int dmax = width - 2;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    const GroupState& g = groups[gi];
    size_t max_inner = 0;
    for (size_t m : g.members)
      max_inner = std::max(max_inner, lp.stmts.at(m).inner.size());
    int64_t base = 0;
    for (size_t j = 0; j < g.members.size(); ++j) {
      const Stmt& s = lp.stmts.at(g.members[j]);
      const int arity = static_cast<int>(s.outer.size() + s.inner.size());
      std::vector<AffineExpr> tuple;
      tuple.reserve(static_cast<size_t>(width));
      tuple.push_back(
          AffineExpr::constant_of(static_cast<int64_t>(gi), arity));
      for (size_t d = 0; d < s.outer.size(); ++d)
        tuple.push_back(AffineExpr::var(g.perm[d], arity));
      for (size_t d = 0; d < max_inner; ++d) {
        if (d < s.inner.size()) {
          AffineExpr e =
              AffineExpr::var(static_cast<int>(s.outer.size() + d), arity);
          if (d == 0) e.constant += base;
          tuple.push_back(e);
        } else {
          tuple.push_back(AffineExpr::constant_of(d == 0 ? base : 0, arity));
        }
      }
      base += s.inner.empty() ? 1 : s.inner.front();
      while (static_cast<int>(tuple.size()) < 1 + dmax)
        tuple.push_back(AffineExpr::constant_of(0, arity));
      tuple.push_back(
          AffineExpr::constant_of(static_cast<int64_t>(j), arity));
      sched.per_stmt[g.members[j]] =
          StmtSchedule{s.id, std::move(tuple)};
    }
    Schedule::Group pub;
    pub.members = g.members;
    pub.loop_extents = permuted_outer(lp, g);
    sched.groups.push_back(std::move(pub));
  }
  return sched;
}

std::vector<GroupState> singleton_groups(const LoweredProgram& lp) {
  std::vector<GroupState> groups;
  groups.reserve(lp.stmts.size());
  for (size_t p = 0; p < lp.stmts.size(); ++p) {
    GroupState g;
    g.members = {p};
    g.perm.resize(lp.stmts[p].outer.size());
    std::iota(g.perm.begin(), g.perm.end(), 0);
    groups.push_back(std::move(g));
  }
  return groups;
}

int reference_width(const LoweredProgram& lp) {
  int dmax = 0;
  for (const Stmt& s : lp.stmts)
    dmax = std::max(dmax, static_cast<int>(s.outer.size() + s.inner.size()));
  return 1 + dmax + 1;
}

int64_t total_instances(const LoweredProgram& lp) {
  int64_t n = 0;
  for (const Stmt& s : lp.stmts) n += s.instance_count();
  return n;
}

void check_instance_budget(const LoweredProgram& lp, int64_t limit) {
  const int64_t n = total_instances(lp);
  if (n > limit) {
    throw CompileError("schedule analysis limit exceeded: " +
                       std::to_string(n) + " statement instances (limit " +
                       std::to_string(limit) +
                       "); reduce the problem extents");
  }
}

bool guards_hold(const Stmt& s, const Tuple& outer_pt) {
  for (const GuardCond& g : s.guards)
    if (!g.holds(outer_pt)) return false;
  return true;
}

std::string tuple_str(const Tuple& t) {
  std::string out = "[";
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(t[i]);
  }
  out += "]";
  return out;
}

int tensor_index(const LoweredProgram& lp, const std::string& name) {
  for (size_t i = 0; i < lp.tensors.size(); ++i)
    if (lp.tensors[i].name == name) return static_cast<int>(i);
  throw InternalError("unknown tensor in schedule analysis: " + name);
}

}  // namespace

// Deterministic total order used everywhere events are processed: schedule
// tuple first, reads before the write at the same tuple, then stable
// bookkeeping fields.
bool event_order_global(const AccessEvent& a, const AccessEvent& b) {
  int c = lex_compare(a.tuple, b.tuple);
  if (c != 0) return c < 0;
  if (a.write != b.write) return !a.write;
  if (a.stmt != b.stmt) return a.stmt < b.stmt;
  if (a.array != b.array) return a.array < b.array;
  return a.offset < b.offset;
}

bool event_order_element(const AccessEvent& a, const AccessEvent& b) {
  if (a.array != b.array) return a.array < b.array;
  if (a.offset != b.offset) return a.offset < b.offset;
  return event_order_global(a, b);
}

Tuple Schedule::apply(size_t stmt_pos, const Tuple& point) const {
  const StmtSchedule& ss = per_stmt.at(stmt_pos);
  Tuple out;
  out.reserve(ss.tuple.size());
  for (const AffineExpr& e : ss.tuple) out.push_back(e.eval(point));
  return out;
}

Schedule reference_schedule(const LoweredProgram& lp) {
  return build_schedule(lp, singleton_groups(lp), reference_width(lp));
}

std::string dump_schedule(const Schedule& sched, const LoweredProgram& lp) {
  std::ostringstream os;
  os << "# helmflow-schedule v1\n";
  for (size_t p = 0; p < lp.stmts.size(); ++p) {
    const Stmt& s = lp.stmts[p];
    std::vector<std::string> names = outer_dim_names(s.outer.size());
    std::vector<std::string> inner = inner_dim_names(s.inner.size());
    names.insert(names.end(), inner.begin(), inner.end());
    os << "s" << s.id << ": { " << s.lhs << "[";
    for (size_t d = 0; d < names.size(); ++d) {
      if (d) os << ",";
      os << names[d];
    }
    os << "] -> [";
    const StmtSchedule& ss = sched.per_stmt.at(p);
    for (size_t i = 0; i < ss.tuple.size(); ++i) {
      if (i) os << ", ";
      os << ss.tuple[i].str(names);
    }
    os << "] }\n";
  }
  return os.str();
}

namespace {

// Row-major flat index of an access, as one affine expression over the
// statement's combined (outer ++ inner) domain.
AffineExpr flatten_access(const Shape& shape, const AffineMap& access) {
  const int n = access.domain_rank;
  AffineExpr flat = AffineExpr::constant_of(0, n);
  int64_t stride = 1;
  for (size_t d = shape.size(); d-- > 0;) {
    const AffineExpr& e = access.outputs[d];
    for (size_t c = 0; c < flat.coeffs.size(); ++c)
      flat.coeffs[c] += stride * e.coeffs[c];
    flat.constant += stride * e.constant;
    stride *= shape[d];
  }
  return flat;
}

// Per-access resolution plan: one affine evaluation yields either the final
// array element (through the routing table) or the pre-partition layout
// offset.
struct AccessPlan {
  int tensor = 0;
  AffineExpr key;                            // over the combined domain
  const std::vector<ElementRef>* table = nullptr;  // null: pre-partition
};

AccessPlan plan_access(const LoweredProgram& lp, const MemoryModel& mm,
                       bool pre_partition, const std::string& name,
                       const AffineMap& access) {
  AccessPlan plan;
  plan.tensor = tensor_index(lp, name);
  if (pre_partition) {
    plan.key = mm.layouts.at(name).offset.substitute(access.outputs);
  } else {
    plan.key = flatten_access(mm.shapes.at(name), access);
    plan.table = &mm.table.at(name);
  }
  return plan;
}

void resolve_plan(const AccessPlan& plan, const Tuple& combined, int* array,
                  int64_t* offset) {
  const int64_t key = plan.key.eval(combined);
  if (plan.table) {
    const ElementRef& ref = (*plan.table)[static_cast<size_t>(key)];
    *array = ref.array;
    *offset = ref.offset;
  } else {
    *array = plan.tensor;
    *offset = key;
  }
}

}  // namespace

std::vector<AccessEvent> enumerate_events(const LoweredProgram& lp,
                                          const Schedule& sched,
                                          const MemoryModel& mm,
                                          const EventOptions& opts) {
  check_instance_budget(lp, opts.max_instances);

  std::vector<AccessEvent> events;
  events.reserve(static_cast<size_t>(total_instances(lp)) * 2);

  for (size_t p = 0; p < lp.stmts.size(); ++p) {
    const Stmt& s = lp.stmts[p];
    std::vector<AccessPlan> read_plans;
    read_plans.reserve(s.operands.size());
    const int arity = static_cast<int>(s.outer.size() + s.inner.size());
    for (const Operand& op : s.operands)
      read_plans.push_back(
          plan_access(lp, mm, opts.pre_partition, op.tensor, op.access));
    AffineMap lhs_access = AffineMap::identity(arity);
    lhs_access.outputs.resize(s.outer.size());  // lhs indexed by outer dims
    AccessPlan write_plan =
        plan_access(lp, mm, opts.pre_partition, s.lhs, lhs_access);

    Tuple combined(static_cast<size_t>(arity), 0);
    Tuple outer_pt = box_begin(s.outer);
    bool more_outer = true;
    while (more_outer) {
      if (guards_hold(s, outer_pt)) {
        std::copy(outer_pt.begin(), outer_pt.end(), combined.begin());
        Tuple inner_pt = box_begin(s.inner);
        bool more_inner = true;
        while (more_inner) {
          std::copy(inner_pt.begin(), inner_pt.end(),
                    combined.begin() + static_cast<long>(s.outer.size()));
          Tuple when = sched.apply(p, combined);
          for (const AccessPlan& plan : read_plans) {
            AccessEvent ev;
            ev.tuple = when;
            ev.stmt = static_cast<int>(p);
            ev.write = false;
            ev.tensor = plan.tensor;
            resolve_plan(plan, combined, &ev.array, &ev.offset);
            events.push_back(std::move(ev));
          }
          bool last_inner = true;
          for (size_t d = 0; d < s.inner.size(); ++d)
            if (inner_pt[d] != s.inner[d] - 1) {
              last_inner = false;
              break;
            }
          if (last_inner) {
            AccessEvent ev;
            ev.tuple = std::move(when);
            ev.stmt = static_cast<int>(p);
            ev.write = true;
            ev.tensor = write_plan.tensor;
            resolve_plan(write_plan, combined, &ev.array, &ev.offset);
            events.push_back(std::move(ev));
          }
          more_inner = box_next(s.inner, inner_pt);
        }
      }
      more_outer = box_next(s.outer, outer_pt);
    }
  }

  if (opts.with_virtuals) {
    int64_t max_ordinal = 0;
    for (const StmtSchedule& ss : sched.per_stmt) {
      if (ss.tuple.empty() || !ss.tuple.front().is_constant())
        throw InternalError("schedule tuple lacks a constant group ordinal");
      max_ordinal = std::max(max_ordinal, ss.tuple.front().constant);
    }
    Tuple first(static_cast<size_t>(sched.width), 0);
    first[0] = -1;
    Tuple last(static_cast<size_t>(sched.width), 0);
    last[0] = max_ordinal + 1;
    for (size_t t = 0; t < lp.tensors.size(); ++t) {
      const TensorInfo& info = lp.tensors[t];
      const bool is_input = info.kind == TensorKind::Input;
      const bool is_output = info.kind == TensorKind::Output;
      if (!is_input && !is_output) continue;
      AccessPlan plan = plan_access(
          lp, mm, opts.pre_partition, info.name,
          AffineMap::identity(static_cast<int>(info.shape.size())));
      Tuple idx = box_begin(info.shape);
      bool more = true;
      while (more) {
        AccessEvent ev;
        ev.tuple = is_input ? first : last;
        ev.stmt = is_input ? kVirtualFirst : kVirtualLast;
        ev.write = is_input;
        ev.tensor = plan.tensor;
        resolve_plan(plan, idx, &ev.array, &ev.offset);
        events.push_back(std::move(ev));
        more = box_next(info.shape, idx);
      }
    }
  }

  if (opts.sorted) std::sort(events.begin(), events.end(), event_order_global);
  return events;
}

void compute_dependences(const LoweredProgram& lp, const Schedule& sched,
                         const MemoryModel& mm, DependenceSet* raw,
                         DependenceSet* rar, const EventOptions& opts) {
  EventOptions ev_opts = opts;
  ev_opts.with_virtuals = false;
  ev_opts.sorted = false;  // re-keyed by element below
  std::vector<AccessEvent> events = enumerate_events(lp, sched, mm, ev_opts);
  std::sort(events.begin(), events.end(), event_order_element);

  if (raw) raw->pairs.clear();
  if (rar) rar->pairs.clear();

  size_t i = 0;
  while (i < events.size()) {
    size_t j = i;
    while (j < events.size() && events[j].array == events[i].array &&
           events[j].offset == events[i].offset)
      ++j;
    const AccessEvent* last_write = nullptr;
    const AccessEvent* last_read = nullptr;
    for (size_t k = i; k < j; ++k) {
      const AccessEvent& ev = events[k];
      if (ev.write) {
        last_write = &ev;
        last_read = nullptr;
        continue;
      }
      const TensorInfo& info = lp.tensors[static_cast<size_t>(ev.tensor)];
      if (!last_write && info.kind != TensorKind::Input) {
        throw CompileError(
            "element of `" + info.name + "` is read (statement s" +
            std::to_string(lp.stmts.at(static_cast<size_t>(ev.stmt)).id) +
            ", instance " + tuple_str(ev.tuple) +
            ") before any write; the value is undefined");
      }
      if (last_write && raw) {
        raw->pairs.push_back(DepPair{ev.array, ev.offset, last_write->tuple,
                                     ev.tuple, last_write->stmt, ev.stmt});
      }
      if (last_read && rar) {
        rar->pairs.push_back(DepPair{ev.array, ev.offset, last_read->tuple,
                                     ev.tuple, last_read->stmt, ev.stmt});
      }
      last_read = &ev;
    }
    i = j;
  }
}

ValidationReport validate_schedule(const LoweredProgram& lp,
                                   const Schedule& sched,
                                   const DependenceSet& raw) {
  ValidationReport report;
  auto add = [&](std::string v) {
    report.ok = false;
    if (report.violations.size() < 10)
      report.violations.push_back(std::move(v));
  };

  // Injectivity over all executing instances.
  std::vector<std::pair<Tuple, int>> instances;
  instances.reserve(static_cast<size_t>(total_instances(lp)));
  for (size_t p = 0; p < lp.stmts.size(); ++p) {
    const Stmt& s = lp.stmts[p];
    Tuple outer_pt = box_begin(s.outer);
    bool more_outer = true;
    while (more_outer) {
      if (guards_hold(s, outer_pt)) {
        Tuple inner_pt = box_begin(s.inner);
        bool more_inner = true;
        while (more_inner) {
          Tuple combined = outer_pt;
          combined.insert(combined.end(), inner_pt.begin(), inner_pt.end());
          instances.emplace_back(sched.apply(p, combined), s.id);
          more_inner = box_next(s.inner, inner_pt);
        }
      }
      more_outer = box_next(s.outer, outer_pt);
    }
  }
  std::sort(instances.begin(), instances.end(),
            [](const auto& a, const auto& b) {
              int c = lex_compare(a.first, b.first);
              if (c != 0) return c < 0;
              return a.second < b.second;
            });
  for (size_t k = 1; k < instances.size(); ++k) {
    if (lex_compare(instances[k - 1].first, instances[k].first) == 0) {
      add("schedule is not injective: instance tuple " +
          tuple_str(instances[k].first) + " is shared by s" +
          std::to_string(instances[k - 1].second) + " and s" +
          std::to_string(instances[k].second));
    }
  }

  for (const DepPair& p : raw.pairs) {
    if (lex_compare(p.from, p.to) >= 0) {
      add("raw dependence violated on array a" + std::to_string(p.array) +
          "[" + std::to_string(p.offset) + "]: write " + tuple_str(p.from) +
          " does not precede read " + tuple_str(p.to));
    }
  }
  return report;
}

Tuple raw_distance(const DepPair& p) {
  Tuple d(p.to.size());
  for (size_t i = 0; i < p.to.size(); ++i) d[i] = p.to[i] - p.from[i];
  return d;
}

namespace {

int64_t coincident_pairs(const Schedule& sched) {
  int64_t n = 0;
  for (const Schedule::Group& g : sched.groups) {
    const int64_t m = static_cast<int64_t>(g.members.size());
    n += m * (m - 1) / 2;
  }
  return n;
}

ScheduleScore score_from(const DependenceSet& raw, const Schedule& sched) {
  ScheduleScore score;
  score.max_raw.assign(static_cast<size_t>(sched.width), 0);
  for (const DepPair& p : raw.pairs) {
    Tuple d = raw_distance(p);
    if (lex_compare(d, score.max_raw) > 0) score.max_raw = std::move(d);
  }
  score.coincident = coincident_pairs(sched);
  return score;
}

}  // namespace

ScheduleScore score_schedule(const LoweredProgram& lp, const Schedule& sched,
                             const MemoryModel& mm) {
  EventOptions opts;
  opts.pre_partition = true;
  DependenceSet raw;
  compute_dependences(lp, sched, mm, &raw, nullptr, opts);
  return score_from(raw, sched);
}

namespace {

struct Candidate {
  std::vector<GroupState> groups;
  ScheduleScore score;
};

// Evaluate a grouping: returns false when the induced schedule is illegal
// (a violated RAW pair or a dependence-analysis error). Tuples from
// build_schedule are injective by construction — group ordinals are
// disjoint, members occupy disjoint first-inner-slot ranges, and trailing
// member ordinals break the remaining ties — so the exhaustive injectivity
// check is left to validate_schedule on final results.
bool try_candidate(const LoweredProgram& lp, const MemoryModel& mm, int width,
                   const std::vector<GroupState>& groups,
                   ScheduleScore* score) {
  Schedule sched = build_schedule(lp, groups, width);
  try {
    // Dataflow must be judged in each tensor's own address space: when
    // tensors share storage, the shared array's earlier writes would mask a
    // consumer running ahead of its true producer.
    EventOptions opts;
    opts.pre_partition = true;
    DependenceSet raw;
    compute_dependences(lp, sched, mm, &raw, nullptr, opts);
    for (const DepPair& p : raw.pairs)
      if (lex_compare(p.from, p.to) >= 0) return false;
    // Shared storage additionally requires the colliding values' lifetimes
    // to stay disjoint under the candidate order.
    check_shared_address_legality(lp, sched, mm);
    *score = score_from(raw, sched);
  } catch (const CompileError&) {
    return false;
  }
  return true;
}

std::vector<std::vector<int>> outer_permutations(size_t rank) {
  std::vector<std::vector<int>> perms;
  std::vector<int> p(rank);
  std::iota(p.begin(), p.end(), 0);
  if (rank <= 4) {
    do {
      perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  } else {
    perms.push_back(p);
    for (size_t d = 0; d + 1 < rank; ++d) {
      std::vector<int> q = perms.front();
      std::swap(q[d], q[d + 1]);
      perms.push_back(std::move(q));
    }
  }
  return perms;
}

}  // namespace

RescheduleResult reschedule(const LoweredProgram& lp, const Schedule& ref,
                            const MemoryModel& mm) {
  RescheduleResult result;
  const int width = ref.width;
  const ScheduleScore ref_score = score_schedule(lp, ref, mm);

  std::vector<GroupState> current = singleton_groups(lp);
  ScheduleScore current_score = ref_score;

  auto acceptable = [&](const ScheduleScore& s) {
    return lex_compare(s.max_raw, ref_score.max_raw) <= 0 &&
           s.better_than(current_score);
  };

  // Fusion pass: merge a later group into an earlier one when their outer
  // boxes match and the result scores better; repeats to a fixpoint.
  auto fusion_pass = [&]() {
    bool any = false;
    bool best_found = true;
    while (best_found) {
      best_found = false;
      Candidate best;
      for (size_t a = 0; a < current.size(); ++a) {
        for (size_t b = a + 1; b < current.size(); ++b) {
          // The merged group iterates under a's permutation, so the raw
          // (unpermuted) outer boxes must agree.
          if (outer_of(lp, current[a]) != outer_of(lp, current[b])) continue;
          std::vector<GroupState> trial = current;
          trial[a].members.insert(trial[a].members.end(),
                                  trial[b].members.begin(),
                                  trial[b].members.end());
          trial.erase(trial.begin() + static_cast<long>(b));
          ScheduleScore s;
          if (!try_candidate(lp, mm, width, trial, &s)) continue;
          if (!acceptable(s)) continue;
          if (!best_found || s.better_than(best.score)) {
            best_found = true;
            best.groups = std::move(trial);
            best.score = s;
          }
        }
      }
      if (best_found) {
        current = std::move(best.groups);
        current_score = best.score;
        any = true;
      }
    }
    return any;
  };

  // Interchange pass: per-group permutation of the shared outer loops.
  auto interchange_pass = [&]() {
    bool any = false;
    bool improved_perm = true;
    while (improved_perm) {
      improved_perm = false;
      for (size_t gi = 0; gi < current.size(); ++gi) {
        const size_t rank = outer_of(lp, current[gi]).size();
        if (rank < 2) continue;
        Candidate best;
        bool best_found_perm = false;
        for (const std::vector<int>& perm : outer_permutations(rank)) {
          if (perm == current[gi].perm) continue;
          std::vector<GroupState> trial = current;
          trial[gi].perm = perm;
          ScheduleScore s;
          if (!try_candidate(lp, mm, width, trial, &s)) continue;
          if (!acceptable(s)) continue;
          if (!best_found_perm || s.better_than(best.score)) {
            best_found_perm = true;
            best.groups = std::move(trial);
            best.score = s;
          }
        }
        if (best_found_perm) {
          current = std::move(best.groups);
          current_score = best.score;
          improved_perm = true;
          any = true;
        }
      }
    }
    return any;
  };

  // Interchange can unlock new fusions (and vice versa), so alternate until
  // a joint fixpoint; fusion_pass already ran to its own fixpoint, so only
  // an interchange change warrants another fusion sweep.
  fusion_pass();
  while (interchange_pass()) {
    if (!fusion_pass()) break;
  }

  if (current_score.better_than(ref_score)) {
    result.schedule = build_schedule(lp, current, width);
    result.improved = true;
  } else {
    result.schedule = ref;
    result.improved = false;
    result.warnings.push_back(
        "rescheduling found no improving schedule; keeping the reference "
        "schedule");
  }
  return result;
}

}  // namespace helmflow
