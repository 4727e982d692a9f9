// SPDX-License-Identifier: Apache-2.0
//
// The helmflow command-line driver: `build` compiles a tensor program and
// writes artifacts, `oracle` prints the reference digest of the built-in
// inverse Helmholtz kernel, `plan` sizes a k-accelerator / m-memory system
// for a board.
//
// Exit codes: 0 success; 1 compile/analysis diagnostics; 2 usage and
// configuration errors (bad flags, unreadable files, malformed option
// syntax), which are checked before any compilation starts.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "helmflow/codegen.hpp"
#include "helmflow/diagnostics.hpp"
#include "helmflow/oracle.hpp"
#include "helmflow/pipeline.hpp"
#include "helmflow/planner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiag = 1;
constexpr int kExitConfig = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write file: " + path);
  f << text;
  if (!f) throw ConfigError("cannot write file: " + path);
}

const std::vector<std::string> kEmitKinds = {"c",  "metadata", "dot",  "plan",
                                             "ir", "schedule", "trace"};

std::vector<std::string> parse_emit_list(const std::string& text) {
  std::vector<std::string> kinds;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    if (cur.empty()) continue;
    bool known = false;
    for (const std::string& k : kEmitKinds) known = known || (k == cur);
    if (!known)
      throw ConfigError("unknown --emit kind `" + cur +
                        "`; expected a comma list of: c, metadata, dot, "
                        "plan, ir, schedule, trace");
    kinds.push_back(cur);
  }
  if (kinds.empty()) throw ConfigError("--emit list is empty");
  return kinds;
}

std::pair<std::string, int64_t> parse_unroll_spec(const std::string& text) {
  size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size())
    throw ConfigError("bad --unroll spec `" + text +
                      "`; expected label=factor");
  std::string label = text.substr(0, eq);
  const std::string num = text.substr(eq + 1);
  for (char c : num)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ConfigError("bad --unroll factor in `" + text + "`");
  return {label, std::stoll(num)};
}

struct PlanInputs {
  std::string board_path;
  std::string hls_report_path;
  std::string metadata_path;
  int64_t plm_brams = -1;  // -1 = not given
  bool no_sharing = false;
  helmflow::PlanOptions opts;
};

// Resolves H and M and runs the planner. `lv_pairs`/`arrays` come from an
// in-process build when planning as part of `build --emit plan`.
std::string run_planner(const PlanInputs& in,
                        const std::vector<helmflow::PlmArray>* arrays,
                        const std::vector<std::pair<int, int>>* pairs) {
  helmflow::BoardSpec board =
      helmflow::parse_board_file(read_file(in.board_path), in.board_path);
  if (board.name.empty())
    board.name = std::filesystem::path(in.board_path).stem().string();
  helmflow::ResourceVector kernel = board.kernel;
  if (!in.hls_report_path.empty())
    kernel = helmflow::parse_hls_report(read_file(in.hls_report_path),
                                        in.hls_report_path);
  int64_t plm = in.plm_brams;
  if (plm < 0) {
    std::vector<helmflow::PlmArray> meta_arrays;
    std::vector<std::pair<int, int>> meta_pairs;
    if (arrays == nullptr) {
      helmflow::footprint_inputs_from_metadata(read_file(in.metadata_path),
                                               in.metadata_path, &meta_arrays,
                                               &meta_pairs);
      arrays = &meta_arrays;
      pairs = &meta_pairs;
    }
    helmflow::MemoryFootprint fp = helmflow::estimate_memory_footprint(
        *arrays, in.no_sharing ? nullptr : pairs, board.plm);
    plm = fp.total_brams;
  }
  return helmflow::format_plan(
      helmflow::plan_system(board, kernel, plm, in.opts));
}

int run_build(const std::string& src_path, const std::string& out_dir,
              const std::string& emit_text,
              const helmflow::PipelineConfig& cfg_in,
              const std::string& trace_path, bool dump_ir_flag,
              bool dump_schedule_flag, bool dump_layouts_flag,
              PlanInputs plan_in) {
  // Configuration stage: everything here exits 2 before compilation begins.
  std::vector<std::string> emit = parse_emit_list(emit_text);
  auto wants = [&](const char* kind) {
    for (const std::string& k : emit)
      if (k == kind) return true;
    return false;
  };
  if (wants("plan") && plan_in.board_path.empty())
    throw ConfigError("--emit plan requires --board");
  if (!plan_in.board_path.empty() && !std::filesystem::exists(plan_in.board_path))
    throw ConfigError("cannot read file: " + plan_in.board_path);
  std::string source = read_file(src_path);

  helmflow::PipelineConfig cfg = cfg_in;
  cfg.want_trace = cfg_in.want_trace || wants("trace") || !trace_path.empty();

  const std::string stem = std::filesystem::path(src_path).stem().string();
  helmflow::PipelineResult result = helmflow::run_pipeline(source, cfg);

  for (const std::string& w : result.warnings)
    std::cerr << "warning: " << w << "\n";
  if (cfg.verify)
    std::cout << "verify: ok (max relative difference "
              << result.verify_max_rel_diff << ")\n";

  if (dump_ir_flag) std::cout << result.ir_text;
  if (dump_schedule_flag) std::cout << result.schedule_text;
  if (dump_layouts_flag) std::cout << result.layouts_text;

  std::filesystem::create_directories(out_dir);
  auto emit_file = [&](const std::string& name, const std::string& text) {
    std::string path = (std::filesystem::path(out_dir) / name).string();
    write_file(path, text);
    std::cout << "wrote " << path << "\n";
  };
  for (const std::string& kind : emit) {
    if (kind == "c") emit_file(stem + ".c", result.c_text);
    else if (kind == "ir") emit_file(stem + ".ir.txt", result.ir_text);
    else if (kind == "schedule")
      emit_file(stem + ".schedule.txt", result.schedule_text);
    else if (kind == "metadata")
      emit_file(stem + ".metadata.json", result.metadata_json);
    else if (kind == "dot") emit_file(stem + ".dot", result.dot_text);
    else if (kind == "trace")
      emit_file(stem + ".trace.txt", result.trace_text);
    else if (kind == "plan") {
      std::vector<helmflow::PlmArray> arrays;
      for (const helmflow::ArraySpace& a : result.mm.arrays)
        arrays.push_back({a.id, a.size, a.width, a.interface});
      emit_file(stem + ".plan.txt",
                run_planner(plan_in, &arrays, &result.liveness.address_space));
    }
  }
  if (!trace_path.empty()) {
    write_file(trace_path, result.trace_text);
    std::cout << "wrote " << trace_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"helmflow: tensor kernel compiler and system planner"};
  app.require_subcommand(1);

  // ---- build ----
  CLI::App* build = app.add_subcommand("build", "compile a tensor program");
  std::string src_path, out_dir = ".", emit_text = "c,metadata";
  std::string trace_path;
  bool dump_ir_flag = false, dump_schedule_flag = false,
       dump_layouts_flag = false;
  helmflow::PipelineConfig cfg;
  std::vector<std::string> unroll_specs, pipeline_labels;
  PlanInputs plan_in;
  build->add_option("src", src_path, "tensor program source")->required();
  build->add_option("--out", out_dir, "artifact output directory");
  build->add_option("--emit", emit_text,
                    "comma list: c,metadata,dot,plan,ir,schedule,trace");
  build->add_option("--layout", cfg.layout_opts,
                    "layout override, e.g. 't[i,j]=t[8*j+i]'");
  build->add_option("--partition", cfg.partition_opts,
                    "partition map, clauses separated by ';'");
  build->add_flag("--allow-shared-address-space", cfg.allow_shared,
                  "permit layout collisions; legality is checked against "
                  "the final schedule");
  build->add_flag("--no-reschedule", cfg.no_reschedule,
                  "keep the reference schedule");
  build->add_flag("--verify", cfg.verify,
                  "differentially test the scheduled program against the "
                  "reference evaluator");
  build->add_option("--seed", cfg.seed, "base seed for --verify/--trace");
  build->add_option("--trace", trace_path, "write the access trace here");
  build->add_option("--unroll", unroll_specs,
                    "label=factor ('inner' = every reduction loop)");
  build->add_option("--pipeline", pipeline_labels, "loop label to pipeline");
  build->add_flag("--dump-ir", dump_ir_flag, "print the statement IR");
  build->add_flag("--dump-schedule", dump_schedule_flag,
                  "print the schedule");
  build->add_flag("--dump-layouts", dump_layouts_flag,
                  "print layouts and partition routing");
  build->add_option("--board", plan_in.board_path,
                    "board file (for --emit plan)");
  build->add_option("--elements", plan_in.opts.elements,
                    "workload element count (for --emit plan)");
  build->add_flag("--no-sharing", plan_in.no_sharing,
                  "cost memories without array sharing (for --emit plan)");

  // ---- oracle ----
  CLI::App* oracle = app.add_subcommand(
      "oracle", "reference digest of the built-in inverse Helmholtz kernel");
  int64_t opt_p = -1, opt_extent = -1;
  uint64_t oracle_seed = 1;
  oracle->add_option("--p", opt_p, "polynomial degree (extent = p + 1)");
  oracle->add_option("--extent", opt_extent, "tensor extent");
  oracle->add_option("--seed", oracle_seed, "base input seed");

  // ---- plan ----
  CLI::App* plan = app.add_subcommand("plan", "size a system for a board");
  PlanInputs pin;
  std::string policy_text = "auto";
  plan->add_option("--board", pin.board_path, "board file")->required();
  plan->add_option("--hls-report", pin.hls_report_path,
                   "synthesis report overriding the board's kernel cost");
  plan->add_option("--metadata", pin.metadata_path,
                   "metadata artifact to cost the memory footprint from");
  plan->add_option("--plm-bram", pin.plm_brams,
                   "memory footprint in BRAMs (skips --metadata)");
  plan->add_option("--elements", pin.opts.elements, "workload element count");
  plan->add_flag("--no-sharing", pin.no_sharing,
                 "cost memories without array sharing");
  plan->add_option("--policy", policy_text, "auto or k=m");
  plan->add_option("--k", pin.opts.fixed_k, "pin the accelerator count");
  plan->add_option("--m", pin.opts.fixed_m, "pin the memory count");
  plan->add_option("--cost-input", pin.opts.cost_input,
                   "host cost of one input transfer");
  plan->add_option("--cost-round", pin.opts.cost_round,
                   "host cost of one accelerator round");
  plan->add_option("--cost-output", pin.opts.cost_output,
                   "host cost of one output transfer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (build->parsed()) {
      for (const std::string& spec : unroll_specs)
        cfg.unroll.push_back(parse_unroll_spec(spec));
      cfg.pipeline_labels = pipeline_labels;
      return run_build(src_path, out_dir, emit_text, cfg, trace_path,
                       dump_ir_flag, dump_schedule_flag, dump_layouts_flag,
                       plan_in);
    }
    if (oracle->parsed()) {
      if ((opt_p < 0) == (opt_extent < 0))
        throw ConfigError("oracle needs exactly one of --p or --extent");
      int64_t extent = opt_extent >= 0 ? opt_extent : opt_p + 1;
      if (extent < 1 || extent > (int64_t(1) << 20))
        throw ConfigError("oracle extent out of range");
      helmflow::DenseTensor S =
          helmflow::random_tensor({extent, extent}, oracle_seed);
      helmflow::DenseTensor D =
          helmflow::random_tensor({extent, extent, extent}, oracle_seed + 1);
      helmflow::DenseTensor u =
          helmflow::random_tensor({extent, extent, extent}, oracle_seed + 2);
      helmflow::DenseTensor v = helmflow::inverse_helmholtz(S, D, u);
      std::cout << "extent: " << extent << "\n";
      std::cout << "seed: " << oracle_seed << "\n";
      std::cout << "digest v: " << helmflow::tensor_digest(v) << "\n";
      return kExitOk;
    }
    if (plan->parsed()) {
      if (pin.metadata_path.empty() == (pin.plm_brams < 0))
        throw ConfigError("plan needs exactly one of --metadata or --plm-bram");
      if (!pin.metadata_path.empty() &&
          !std::filesystem::exists(pin.metadata_path))
        throw ConfigError("cannot read file: " + pin.metadata_path);
      if (policy_text == "auto") {
        pin.opts.policy = helmflow::PlanPolicy::Auto;
      } else if (policy_text == "k=m") {
        pin.opts.policy = helmflow::PlanPolicy::KEqualsM;
        if (pin.opts.fixed_k != 0 || pin.opts.fixed_m != 0)
          throw ConfigError("--policy k=m cannot be combined with --k/--m");
      } else {
        throw ConfigError("unknown --policy `" + policy_text +
                          "`; expected auto or k=m");
      }
      std::cout << run_planner(pin, nullptr, nullptr);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const helmflow::CompileError& e) {
    if (e.diag().loc.line > 0 && build->parsed())
      std::cerr << "error: " << e.diag().render(src_path) << "\n";
    else
      std::cerr << "error: " << e.diag().message << "\n";
    return kExitDiag;
  } catch (const helmflow::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitDiag;
  }
  return kExitConfig;
}
