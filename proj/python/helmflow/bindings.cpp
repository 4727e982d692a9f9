// SPDX-License-Identifier: Apache-2.0
//
// Python bindings over the pipeline, the reference oracle, and the planner.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "helmflow/codegen.hpp"
#include "helmflow/diagnostics.hpp"
#include "helmflow/oracle.hpp"
#include "helmflow/pipeline.hpp"
#include "helmflow/planner.hpp"

namespace py = pybind11;
using namespace helmflow;

namespace {

DenseTensor tensor_from_array(const py::array_t<double>& arr,
                              const char* name) {
  py::array_t<double, py::array::c_style | py::array::forcecast> a(arr);
  DenseTensor t;
  for (py::ssize_t d = 0; d < a.ndim(); ++d) t.shape.push_back(a.shape(d));
  t.data.assign(a.data(), a.data() + a.size());
  if (t.data.empty())
    throw CompileError(std::string("array `") + name + "` is empty");
  return t;
}

py::array_t<double> array_from_tensor(const DenseTensor& t) {
  py::array_t<double> out(t.shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "helmflow: tensor kernel compiler and system planner";

  py::register_exception<CompileError>(m, "CompileError");

  m.def(
      "compile",
      [](const std::string& source, std::vector<std::string> layouts,
         std::vector<std::string> partitions, bool allow_shared,
         bool no_reschedule, bool verify, bool trace, uint64_t seed,
         std::vector<std::pair<std::string, int64_t>> unroll,
         std::vector<std::string> pipeline) {
        PipelineConfig cfg;
        cfg.layout_opts = std::move(layouts);
        cfg.partition_opts = std::move(partitions);
        cfg.allow_shared = allow_shared;
        cfg.no_reschedule = no_reschedule;
        cfg.verify = verify;
        cfg.want_trace = trace;
        cfg.seed = seed;
        cfg.unroll = std::move(unroll);
        cfg.pipeline_labels = std::move(pipeline);
        PipelineResult r = run_pipeline(source, cfg);
        py::dict out;
        out["c"] = r.c_text;
        out["ir"] = r.ir_text;
        out["schedule"] = r.schedule_text;
        out["layouts"] = r.layouts_text;
        out["metadata"] = r.metadata_json;
        out["dot"] = r.dot_text;
        out["trace"] = r.trace_text;
        out["warnings"] = r.warnings;
        out["rescheduled"] = r.rescheduled;
        out["verify_max_rel_diff"] = r.verify_max_rel_diff;
        return out;
      },
      py::arg("source"), py::kw_only(),
      py::arg("layouts") = std::vector<std::string>{},
      py::arg("partitions") = std::vector<std::string>{},
      py::arg("allow_shared") = false, py::arg("no_reschedule") = false,
      py::arg("verify") = false, py::arg("trace") = false,
      py::arg("seed") = uint64_t{1},
      py::arg("unroll") = std::vector<std::pair<std::string, int64_t>>{},
      py::arg("pipeline") = std::vector<std::string>{},
      "Compile a tensor program and return its artifact texts.");

  m.def(
      "oracle_digest",
      [](int64_t extent, uint64_t seed) {
        if (extent < 1 || extent > (int64_t(1) << 20))
          throw CompileError("oracle extent out of range");
        DenseTensor S = random_tensor({extent, extent}, seed);
        DenseTensor D = random_tensor({extent, extent, extent}, seed + 1);
        DenseTensor u = random_tensor({extent, extent, extent}, seed + 2);
        return tensor_digest(inverse_helmholtz(S, D, u));
      },
      py::arg("extent"), py::arg("seed") = uint64_t{1},
      "Digest of the reference inverse-Helmholtz output on seeded inputs.");

  m.def(
      "inverse_helmholtz",
      [](const py::array_t<double>& S, const py::array_t<double>& D,
         const py::array_t<double>& u) {
        return array_from_tensor(inverse_helmholtz(tensor_from_array(S, "S"),
                                                   tensor_from_array(D, "D"),
                                                   tensor_from_array(u, "u")));
      },
      py::arg("S"), py::arg("D"), py::arg("u"),
      "Reference inverse Helmholtz operator (plain nested loops).");

  m.def(
      "count_flops",
      [](const std::string& source) {
        FlopReport rep = count_flops(parse_program(source));
        py::dict per;
        for (const auto& [name, counts] : rep.per_statement)
          per[py::str(name)] =
              py::make_tuple(counts.muls, counts.adds);
        py::dict out;
        out["muls"] = rep.total.muls;
        out["adds"] = rep.total.adds;
        out["per_statement"] = per;
        return out;
      },
      py::arg("source"),
      "Multiply/add counts of the direct (undecomposed) evaluation.");

  m.def(
      "plan",
      [](const std::string& board_text, const std::string& metadata,
         int64_t plm_brams, int64_t elements, bool no_sharing,
         const std::string& policy, int64_t k, int64_t m_, double cost_input,
         double cost_round, double cost_output) {
        BoardSpec board = parse_board_file(board_text, "<board>");
        PlanOptions opts;
        opts.elements = elements;
        opts.fixed_k = k;
        opts.fixed_m = m_;
        opts.cost_input = cost_input;
        opts.cost_round = cost_round;
        opts.cost_output = cost_output;
        if (policy == "auto") opts.policy = PlanPolicy::Auto;
        else if (policy == "k=m") opts.policy = PlanPolicy::KEqualsM;
        else throw CompileError("unknown policy `" + policy + "`");
        int64_t plm = plm_brams;
        if (plm < 0) {
          if (metadata.empty())
            throw CompileError("plan needs metadata text or plm_brams");
          std::vector<PlmArray> arrays;
          std::vector<std::pair<int, int>> pairs;
          footprint_inputs_from_metadata(metadata, "<metadata>", &arrays,
                                         &pairs);
          plm = estimate_memory_footprint(arrays,
                                          no_sharing ? nullptr : &pairs,
                                          board.plm)
                    .total_brams;
        }
        return format_plan(plan_system(board, board.kernel, plm, opts));
      },
      py::arg("board"), py::kw_only(), py::arg("metadata") = std::string{},
      py::arg("plm_brams") = int64_t{-1}, py::arg("elements") = int64_t{50000},
      py::arg("no_sharing") = false, py::arg("policy") = std::string{"auto"},
      py::arg("k") = int64_t{0}, py::arg("m") = int64_t{0},
      py::arg("cost_input") = 1.0, py::arg("cost_round") = 1.0,
      py::arg("cost_output") = 1.0,
      "Size a k-accelerator / m-memory system for a board description.");
}
