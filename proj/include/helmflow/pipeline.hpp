// SPDX-License-Identifier: Apache-2.0
//
// The compilation pipeline: frontend, lowering, memory materialization,
// scheduling, liveness, and artifact emission, in a fixed order. The CLI
// and the Python bindings are thin wrappers around run_pipeline.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "helmflow/ast.hpp"
#include "helmflow/codegen.hpp"
#include "helmflow/ir.hpp"
#include "helmflow/liveness.hpp"
#include "helmflow/memory.hpp"
#include "helmflow/oracle.hpp"
#include "helmflow/schedule.hpp"

namespace helmflow {

struct PipelineConfig {
  std::vector<std::string> layout_opts;     // raw --layout option texts
  std::vector<std::string> partition_opts;  // raw --partition option texts
  bool allow_shared = false;                // tolerate address collisions
  bool no_reschedule = false;               // keep the reference schedule
  bool verify = false;        // differential check against the reference
                              // evaluator on seeded random inputs
  bool want_trace = false;    // produce the access trace artifact
  uint64_t seed = 1;          // base seed; input i uses seed + i
  std::vector<std::pair<std::string, int64_t>> unroll;  // label -> factor
  std::vector<std::string> pipeline_labels;
};

struct PipelineResult {
  TensorProgram program;
  LoweredProgram lp;  // final statements (transients inlined, contractions
                      // decomposed, partition splits applied)
  MemoryModel mm;
  Schedule schedule;
  bool rescheduled = false;
  LivenessResult liveness;
  KernelInterface iface;
  std::vector<std::string> warnings;  // rescheduler + liveness
  double verify_max_rel_diff = 0.0;   // set when cfg.verify

  // Artifact texts, all deterministic for a given (source, config).
  std::string ir_text;
  std::string schedule_text;
  std::string layouts_text;
  std::string c_text;
  std::string metadata_json;
  std::string dot_text;
  std::string trace_text;  // only with cfg.want_trace
};

// Runs the full pipeline. Throws CompileError for any diagnosable problem,
// including a --verify mismatch beyond 1e-12 relative difference.
PipelineResult run_pipeline(const std::string& source,
                            const PipelineConfig& cfg = {});

// Deterministic random inputs: the i-th input tensor (declaration order)
// is drawn with seed `seed + i`.
TensorEnv seeded_inputs(const LoweredProgram& lp, uint64_t seed);

}  // namespace helmflow
