// SPDX-License-Identifier: Apache-2.0
//
// Element-exact liveness on schedule tuples. Every stored value's lifetime
// is the inclusive lexicographic interval from its write to its last read.
// Two virtual boundary statements participate: `first` writes every input
// element before all real instances, `last` reads every output element after
// them — so inputs are live from the start and outputs to the end. Virtual
// accesses never count toward ports or interface conflicts.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "helmflow/ir.hpp"
#include "helmflow/memory.hpp"
#include "helmflow/schedule.hpp"

namespace helmflow {

struct LiveInterval {
  Tuple start, end;  // inclusive on both ends
};

struct LivenessResult {
  // Per array (indexed like MemoryModel::arrays): one interval per stored
  // value, sorted by (start, end).
  std::vector<std::vector<LiveInterval>> live;
  // Per array: maximum same-type accesses within one statement instance.
  std::vector<int> read_ports;
  std::vector<int> write_ports;
  // Compatible array pairs (index_a < index_b, sorted). address_space:
  // lifetimes disjoint, so the arrays could share storage. memory_interface:
  // never subject to the same access type (read/read or write/write) at one
  // schedule point, so they could share a port; cross-type simultaneity is
  // allowed.
  std::vector<std::pair<int, int>> address_space;
  std::vector<std::pair<int, int>> memory_interface;
  std::vector<std::string> warnings;  // e.g. dead stores, one per tensor
};

LivenessResult analyze_liveness(const LoweredProgram& lp,
                                const Schedule& sched, const MemoryModel& mm);

// True when no interval of `a` overlaps an interval of `b`. Both lists must
// be sorted by (start, end).
bool intervals_disjoint(const std::vector<LiveInterval>& a,
                        const std::vector<LiveInterval>& b);

// Verifies every address collision recorded by the memory model: the two
// values routed to one element must have disjoint lifetimes under the final
// schedule (checked in each tensor's own pre-partition address space).
// Throws CompileError naming the first illegal pair.
void check_shared_address_legality(const LoweredProgram& lp,
                                   const Schedule& sched,
                                   const MemoryModel& mm);

// Deterministic artifacts.
std::string emit_metadata(const MemoryModel& mm, const LivenessResult& lv);
std::string emit_dot(const MemoryModel& mm, const LivenessResult& lv);

}  // namespace helmflow
