// SPDX-License-Identifier: Apache-2.0
//
// Schedules map statement instances (outer ++ inner points) into a common
// integer tuple space ordered lexicographically. Tuple layout: leading group
// ordinal, then loop slots, then a trailing intra-point ordinal; unused loop
// slots are padded with constants so every tuple has the same width.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "helmflow/affine.hpp"
#include "helmflow/ir.hpp"
#include "helmflow/memory.hpp"

namespace helmflow {

struct StmtSchedule {
  int stmt_id = 0;
  std::vector<AffineExpr> tuple;  // arity = |outer| + |inner| of the stmt
};

struct Schedule {
  int width = 0;
  std::vector<StmtSchedule> per_stmt;  // parallel to LoweredProgram::stmts

  // Loop-nest structure used by code generation: statements sharing a group
  // ordinal iterate a common loop nest over loop_extents (tuple slots
  // 1 .. loop_extents.size()).
  struct Group {
    std::vector<size_t> members;  // statement positions, trailing-ordinal order
    Shape loop_extents;
  };
  std::vector<Group> groups;

  Tuple apply(size_t stmt_pos, const Tuple& point) const;
};

// Program order, row-major per statement: [stmt, outer..., inner..., 0...].
Schedule reference_schedule(const LoweredProgram& lp);

// Versioned stable text, one map per statement.
std::string dump_schedule(const Schedule& sched, const LoweredProgram& lp);

// One array-element access of one statement instance. Virtual boundary
// statements (liveness only) use stmt = kVirtualFirst / kVirtualLast.
inline constexpr int kVirtualFirst = -1;
inline constexpr int kVirtualLast = -2;

struct AccessEvent {
  Tuple tuple;
  int stmt = 0;    // position in lp.stmts, or a virtual marker
  bool write = false;
  int tensor = 0;  // position in lp.tensors
  int array = 0;   // position in mm.arrays
  int64_t offset = 0;
};

struct EventOptions {
  bool with_virtuals = false;  // add `first` writes inputs / `last` reads outputs
  bool pre_partition = false;  // address by (tensor, layout offset) instead of
                               // the final array (for sharing legality checks)
  bool sorted = true;          // deliver in schedule order (reads first at a
                               // tuple); callers that re-key may opt out
  int64_t max_instances = 10'000'000;
};

// Deterministic total orders over events: global schedule order (reads sort
// before the write at the same tuple), and per-element order (array, offset,
// then global order) used for dependence and liveness walks.
bool event_order_global(const AccessEvent& a, const AccessEvent& b);
bool event_order_element(const AccessEvent& a, const AccessEvent& b);

// Every read/write of every executing instance (guards respected), in
// schedule order. Reads sort before the write at the same tuple.
std::vector<AccessEvent> enumerate_events(const LoweredProgram& lp,
                                          const Schedule& sched,
                                          const MemoryModel& mm,
                                          const EventOptions& opts = {});

struct DepPair {
  int array = 0;
  int64_t offset = 0;
  Tuple from, to;
  int from_stmt = 0, to_stmt = 0;
};

struct DependenceSet {
  std::vector<DepPair> pairs;
};

// Exact RAW (last write before each read) and RAR (consecutive reads of an
// unmodified element) relations on array elements. Virtual statements are
// not included. Throws CompileError when a non-input element is read before
// any write, or when the instance count exceeds opts.max_instances.
void compute_dependences(const LoweredProgram& lp, const Schedule& sched,
                         const MemoryModel& mm, DependenceSet* raw,
                         DependenceSet* rar, const EventOptions& opts = {});

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;  // at most 10 are kept
};

// Checks instance-tuple injectivity and that every RAW pair is strictly
// lexicographically ordered.
ValidationReport validate_schedule(const LoweredProgram& lp,
                                   const Schedule& sched,
                                   const DependenceSet& raw);

// A RAW pair's distance is the componentwise difference of its schedule
// tuples, ordered lexicographically: a leading nonzero at the group slot is
// a cross-nest dependence, leading zeros down to the inner slots mean the
// value is produced and consumed within one iteration of the shared loops.
Tuple raw_distance(const DepPair& p);

struct ScheduleScore {
  Tuple max_raw;            // lex-max RAW distance vector (zeros if no pairs)
  int64_t coincident = 0;   // unordered statement pairs sharing a fused group

  // Smaller max distance first, then more coincident placement.
  bool better_than(const ScheduleScore& o) const {
    int c = lex_compare(max_raw, o.max_raw);
    if (c != 0) return c < 0;
    return coincident > o.coincident;
  }
};

ScheduleScore score_schedule(const LoweredProgram& lp, const Schedule& sched,
                             const MemoryModel& mm);

struct RescheduleResult {
  Schedule schedule;
  bool improved = false;  // false: fell back to the reference schedule
  std::vector<std::string> warnings;
};

// Legality-checked loop fusion (identical outer boxes) and per-group outer
// loop interchange, greedily applied while the score improves and the
// maximum RAW distance does not exceed the reference's.
RescheduleResult reschedule(const LoweredProgram& lp, const Schedule& ref,
                            const MemoryModel& mm);

}  // namespace helmflow
