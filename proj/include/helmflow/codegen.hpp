// SPDX-License-Identifier: Apache-2.0
//
// C99 code generation and schedule interpretation. Both walk the same
// structures — the statement list, the schedule's fused groups, and the
// memory model's element routing — so the generated kernel and the
// interpreter agree access-for-access.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "helmflow/ir.hpp"
#include "helmflow/memory.hpp"
#include "helmflow/oracle.hpp"
#include "helmflow/schedule.hpp"

namespace helmflow {

// Host-visible direction of one kernel parameter (one memory array). When
// address sharing folds several tensors into one array, the direction is
// the union of the roles: the host writes it before launch if any input
// lives there and reads it after if any output does.
enum class ParamDir { In, Out, InOut, Scratch };

struct KernelParam {
  std::string name;  // C identifier (array id, de-conflicted with keywords)
  int array = 0;     // position in mm.arrays
  int64_t size = 0;  // elements
  ParamDir dir = ParamDir::Scratch;
};

struct KernelInterface {
  std::vector<KernelParam> params;  // mm.arrays order
};

KernelInterface kernel_interface(const LoweredProgram& lp,
                                 const MemoryModel& mm);

const char* param_dir_name(ParamDir d);

// Emits the complete translation unit: one `void kernel(double* ...)`
// whose loop nests realize the schedule. Every `for` line carries a label
// comment — `gG_dD` for the shared loops of group G, `sN_inner` (or
// `sN_inner_D` when a statement reduces over several dims) for reduction
// loops — that emit_hls_annotations keys on. Strict C99.
std::string emit_c99(const LoweredProgram& lp, const Schedule& sched,
                     const MemoryModel& mm, const KernelInterface& iface);

// Inserts `#pragma HLS unroll factor=N` / `#pragma HLS pipeline` lines
// after the named loops. The pseudo-label `inner` addresses every
// reduction loop. Unknown labels are errors; with no directives the text
// is returned unchanged, byte for byte.
std::string emit_hls_annotations(
    const std::string& c_text,
    const std::vector<std::pair<std::string, int64_t>>& unroll,
    const std::vector<std::string>& pipeline);

struct InterpOptions {
  bool want_trace = false;
  int64_t max_instances = 10'000'000;
};

struct InterpResult {
  // Final contents of every memory array, keyed by array id.
  std::map<std::string, std::vector<double>> arrays;
  // Output tensors gathered back through the element routing.
  TensorEnv outputs;
  // With want_trace: one line per access, `tuple;array;offset;R|W`,
  // in schedule order (reads of an instance before its write).
  std::string trace;
};

// Executes the statement instances in schedule-tuple order against the
// memory model: operand reads at every instance, accumulation per (stmt,
// outer) key, the store at the last inner point. `env` must bind every
// input tensor. Out-of-bounds array accesses are internal errors.
InterpResult interpret_schedule(const LoweredProgram& lp,
                                const Schedule& sched, const MemoryModel& mm,
                                const TensorEnv& env,
                                const InterpOptions& opts = {});

}  // namespace helmflow
