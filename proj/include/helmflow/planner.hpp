// SPDX-License-Identifier: Apache-2.0
//
// System-level planning: pack k accelerator instances and m private local
// memories (PLMs) onto a board, subject to H*k + M*m <= A componentwise,
// where H is one accelerator's resource vector, M is one PLM's BRAM demand,
// and A is the board's available resources. k and m are powers of two with
// m >= k; each accelerator serves batch = m/k memories round-robin.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace helmflow {

struct ResourceVector {
  int64_t lut = 0, ff = 0, dsp = 0, bram = 0;

  ResourceVector operator+(const ResourceVector& o) const {
    return {lut + o.lut, ff + o.ff, dsp + o.dsp, bram + o.bram};
  }
  ResourceVector operator-(const ResourceVector& o) const {
    return {lut - o.lut, ff - o.ff, dsp - o.dsp, bram - o.bram};
  }
  ResourceVector operator*(int64_t s) const {
    return {lut * s, ff * s, dsp * s, bram * s};
  }
  bool fits_in(const ResourceVector& cap) const {
    return lut <= cap.lut && ff <= cap.ff && dsp <= cap.dsp &&
           bram <= cap.bram;
  }
  bool operator==(const ResourceVector& o) const = default;

  std::string str() const;
};

// Names aligned with ResourceVector fields, in field order.
extern const char* const kResourceNames[4];
int64_t resource_get(const ResourceVector& v, int i);

// PLM cost model calibration (board file [plm] section).
struct PlmParams {
  int64_t bram_bits = 36864;            // usable bits per BRAM block
  int64_t interface_adapter_brams = 1;  // extra block for DMA-visible groups
  int64_t max_group_arrays = 2;         // arrays co-located per group
};

struct BoardSpec {
  std::string name;
  ResourceVector totals;
  ResourceVector reserved;
  PlmParams plm;
  ResourceVector kernel;  // default per-accelerator cost

  ResourceVector available() const { return totals - reserved; }
};

// Minimal board-file reader: `name = "..."` plus [totals]/[reserved]/[plm]/
// [kernel] sections of integer `key = value` lines; `#` comments. Unknown
// sections or keys are errors.
BoardSpec parse_board_file(const std::string& text,
                           const std::string& filename);

// Synthesis report reader: accepts `lut = 2314` or `LUT: 2314` lines,
// case-insensitive keys; other lines are ignored. All four resources must
// appear.
ResourceVector parse_hls_report(const std::string& text,
                                const std::string& filename);

// One array as the PLM cost model sees it.
struct PlmArray {
  std::string id;
  int64_t size = 0;  // elements
  int width = 64;    // bits per element
  bool interface = false;
};

struct FootprintGroup {
  std::vector<int> arrays;  // indices into the input array list
  int64_t brams = 0;
};

struct MemoryFootprint {
  std::vector<FootprintGroup> groups;
  int64_t total_brams = 0;
};

// BRAM demand of one PLM. A group's cost is ceil(largest member bits /
// bram_bits), plus the interface adapter when the group holds an interface
// array and spans more than one block. With `compatible` (address-space
// compatible pairs, each index_a < index_b), arrays share a group greedily:
// largest first, first fit, pairwise-compatible members only, at most
// max_group_arrays per group. Null `compatible` plans one array per group.
MemoryFootprint estimate_memory_footprint(
    const std::vector<PlmArray>& arrays,
    const std::vector<std::pair<int, int>>* compatible,
    const PlmParams& plm);

// Reads a metadata artifact (JSON) into the cost-model inputs.
void footprint_inputs_from_metadata(const std::string& json_text,
                                    const std::string& filename,
                                    std::vector<PlmArray>* arrays,
                                    std::vector<std::pair<int, int>>* pairs);

enum class PlanPolicy { Auto, KEqualsM };

struct PlanOptions {
  PlanPolicy policy = PlanPolicy::Auto;
  int64_t fixed_k = 0;  // 0 = free
  int64_t fixed_m = 0;  // 0 = free
  int64_t elements = 50'000;
  double cost_input = 1.0;
  double cost_round = 1.0;
  double cost_output = 1.0;
};

struct SystemPlan {
  std::string board;
  ResourceVector kernel;     // H
  int64_t plm_brams = 0;     // M.bram
  ResourceVector available;  // A
  std::string policy;

  int64_t k = 1, m = 1, batch = 1;
  ResourceVector demand;
  std::string binding;  // resource with the highest utilization
  double binding_util = 0.0;

  int64_t next_k = 0, next_m = 0;
  ResourceVector next_demand;
  bool next_feasible = false;
  std::string next_blocker;

  int64_t elements = 0;
  int64_t iterations = 0;  // ceil(elements / m)
  double cost_input = 1.0, cost_round = 1.0, cost_output = 1.0;
  double projected = 0.0;  // iterations * (m*c_in + batch*c_round + m*c_out)
  double baseline = 0.0;   // the k = m = 1 system
  double speedup = 1.0;
};

// Maximizes m, then k (Auto), over powers of two up to 1024 under the
// packing inequality; KEqualsM maximizes the common value; fixed_k/fixed_m
// pin one or both. Throws CompileError when no configuration fits, naming
// the blocking resource.
SystemPlan plan_system(const BoardSpec& board, const ResourceVector& kernel,
                       int64_t plm_brams, const PlanOptions& opts);

std::string format_plan(const SystemPlan& plan);

}  // namespace helmflow
