// SPDX-License-Identifier: Apache-2.0
#include "helmflow/pipeline.hpp"

#include <sstream>

#include "helmflow/diagnostics.hpp"

namespace helmflow {

TensorEnv seeded_inputs(const LoweredProgram& lp, uint64_t seed) {
  TensorEnv env;
  uint64_t i = 0;
  for (const TensorInfo& t : lp.tensors) {
    if (t.kind != TensorKind::Input) continue;
    env.emplace(t.name, random_tensor(t.shape, seed + i));
    ++i;
  }
  return env;
}

PipelineResult run_pipeline(const std::string& source,
                            const PipelineConfig& cfg) {
  PipelineResult r;
  r.program = parse_program(source);

  LoweredProgram lowered = lower_program(r.program);
  lowered = inline_transients(lowered);
  lowered = decompose_contractions(lowered);

  std::vector<LayoutExpr> layouts;
  for (const std::string& text : cfg.layout_opts)
    layouts.push_back(parse_layout_option(text, lowered));
  std::vector<PartitionMap> partitions;
  for (const std::string& text : cfg.partition_opts)
    partitions.push_back(parse_partition_option(text));

  r.mm = build_memory_model(lowered, layouts, partitions, cfg.allow_shared);
  r.lp = split_statements(lowered, r.mm);

  Schedule reference = reference_schedule(r.lp);
  if (cfg.no_reschedule) {
    r.schedule = std::move(reference);
  } else {
    RescheduleResult rr = reschedule(r.lp, reference, r.mm);
    r.schedule = std::move(rr.schedule);
    r.rescheduled = rr.improved;
    for (std::string& w : rr.warnings) r.warnings.push_back(std::move(w));
  }

  if (!r.mm.collisions.empty())
    check_shared_address_legality(r.lp, r.schedule, r.mm);

  r.liveness = analyze_liveness(r.lp, r.schedule, r.mm);
  for (const std::string& w : r.liveness.warnings) r.warnings.push_back(w);

  r.iface = kernel_interface(r.lp, r.mm);
  r.ir_text = dump_ir(r.lp);
  r.schedule_text = dump_schedule(r.schedule, r.lp);
  r.layouts_text = r.mm.dump();
  r.c_text = emit_hls_annotations(emit_c99(r.lp, r.schedule, r.mm, r.iface),
                                  cfg.unroll, cfg.pipeline_labels);
  r.metadata_json = emit_metadata(r.mm, r.liveness);
  r.dot_text = emit_dot(r.mm, r.liveness);

  if (cfg.verify || cfg.want_trace) {
    TensorEnv env = seeded_inputs(r.lp, cfg.seed);
    InterpOptions io;
    io.want_trace = cfg.want_trace;
    InterpResult interp = interpret_schedule(r.lp, r.schedule, r.mm, env, io);
    r.trace_text = std::move(interp.trace);
    if (cfg.verify) {
      TensorEnv oracle_env = env;
      eval_program(r.program, oracle_env);
      for (const TensorInfo& t : r.lp.tensors) {
        if (t.kind != TensorKind::Output) continue;
        double d = rel_diff(interp.outputs.at(t.name), oracle_env.at(t.name));
        r.verify_max_rel_diff = std::max(r.verify_max_rel_diff, d);
        if (d > 1e-12) {
          std::ostringstream os;
          os << "verification failed: output `" << t.name
             << "` differs from the reference evaluation (max relative "
                "difference "
             << d << ")";
          throw CompileError(os.str());
        }
      }
    }
  }
  return r;
}

}  // namespace helmflow
