// SPDX-License-Identifier: Apache-2.0
#include "helmflow/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "helmflow/diagnostics.hpp"
#include "json.hpp"

namespace helmflow {

const char* const kResourceNames[4] = {"lut", "ff", "dsp", "bram"};

int64_t resource_get(const ResourceVector& v, int i) {
  switch (i) {
    case 0: return v.lut;
    case 1: return v.ff;
    case 2: return v.dsp;
    case 3: return v.bram;
    default: throw InternalError("resource index out of range");
  }
}

std::string ResourceVector::str() const {
  std::ostringstream os;
  os << "lut=" << lut << " ff=" << ff << " dsp=" << dsp << " bram=" << bram;
  return os.str();
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Strips a trailing `#` comment, respecting double quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

int64_t parse_int(const std::string& text, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE)
    throw CompileError(where + ": expected an integer, got `" + text + "`");
  return static_cast<int64_t>(v);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool set_resource(ResourceVector& v, const std::string& key, int64_t value) {
  if (key == "lut") v.lut = value;
  else if (key == "ff") v.ff = value;
  else if (key == "dsp") v.dsp = value;
  else if (key == "bram") v.bram = value;
  else return false;
  return true;
}

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

int64_t group_cost(const std::vector<PlmArray>& arrays,
                   const std::vector<int>& members, const PlmParams& plm) {
  int64_t max_bits = 0;
  bool interface = false;
  for (int idx : members) {
    const PlmArray& a = arrays[static_cast<size_t>(idx)];
    max_bits = std::max(max_bits, a.size * a.width);
    interface = interface || a.interface;
  }
  int64_t blocks = ceil_div(max_bits, plm.bram_bits);
  if (interface && blocks > 1) blocks += plm.interface_adapter_brams;
  return blocks;
}

bool is_pow2(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

BoardSpec parse_board_file(const std::string& text,
                           const std::string& filename) {
  BoardSpec board;
  std::istringstream in(text);
  std::string raw;
  std::string section;  // "" = top level
  int lineno = 0;
  bool have_totals = false;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    std::string where = filename + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw CompileError(where + ": malformed section header `" + line + "`");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "totals" && section != "reserved" && section != "plm" &&
          section != "kernel")
        throw CompileError(where + ": unknown section [" + section + "]");
      if (section == "totals") have_totals = true;
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw CompileError(where + ": expected `key = value`, got `" + line +
                         "`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      if (key == "name") {
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
          board.name = value.substr(1, value.size() - 2);
        else
          board.name = value;
      } else {
        throw CompileError(where + ": unknown key `" + key +
                           "` outside any section");
      }
      continue;
    }
    int64_t num = parse_int(value, where);
    bool known = false;
    if (section == "totals") known = set_resource(board.totals, key, num);
    else if (section == "reserved") known = set_resource(board.reserved, key, num);
    else if (section == "kernel") known = set_resource(board.kernel, key, num);
    else if (section == "plm") {
      known = true;
      if (key == "bram_bits") board.plm.bram_bits = num;
      else if (key == "interface_adapter_brams") board.plm.interface_adapter_brams = num;
      else if (key == "max_group_arrays") board.plm.max_group_arrays = num;
      else known = false;
    }
    if (!known)
      throw CompileError(where + ": unknown key `" + key + "` in section [" +
                         section + "]");
  }
  if (!have_totals)
    throw CompileError(filename + ": board file has no [totals] section");
  if (board.plm.bram_bits <= 0)
    throw CompileError(filename + ": plm.bram_bits must be positive");
  if (board.plm.max_group_arrays < 1)
    throw CompileError(filename + ": plm.max_group_arrays must be at least 1");
  for (int i = 0; i < 4; ++i) {
    if (resource_get(board.available(), i) < 0)
      throw CompileError(filename + ": reserved " + kResourceNames[i] +
                         " exceeds the board total");
  }
  return board;
}

ResourceVector parse_hls_report(const std::string& text,
                                const std::string& filename) {
  ResourceVector v;
  bool seen[4] = {false, false, false, false};
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    size_t sep = line.find_first_of("=:");
    if (sep == std::string::npos) continue;
    std::string key = lower(trim(line.substr(0, sep)));
    std::string value = trim(line.substr(sep + 1));
    int idx = -1;
    for (int i = 0; i < 4; ++i)
      if (key == kResourceNames[i]) idx = i;
    if (idx < 0) continue;
    int64_t num =
        parse_int(value, filename + ":" + std::to_string(lineno));
    set_resource(v, key, num);
    seen[idx] = true;
  }
  for (int i = 0; i < 4; ++i) {
    if (!seen[i])
      throw CompileError(filename + ": synthesis report is missing a value for " +
                         kResourceNames[i]);
  }
  return v;
}

MemoryFootprint estimate_memory_footprint(
    const std::vector<PlmArray>& arrays,
    const std::vector<std::pair<int, int>>* compatible,
    const PlmParams& plm) {
  MemoryFootprint fp;
  std::vector<int> order(arrays.size());
  std::iota(order.begin(), order.end(), 0);
  if (compatible != nullptr) {
    // Largest first; creation order breaks ties so the packing is stable.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return arrays[static_cast<size_t>(a)].size * arrays[static_cast<size_t>(a)].width >
             arrays[static_cast<size_t>(b)].size * arrays[static_cast<size_t>(b)].width;
    });
  }
  auto compat = [&](int a, int b) {
    if (compatible == nullptr) return false;
    std::pair<int, int> key = a < b ? std::make_pair(a, b)
                                    : std::make_pair(b, a);
    return std::find(compatible->begin(), compatible->end(), key) !=
           compatible->end();
  };
  for (int idx : order) {
    bool placed = false;
    for (FootprintGroup& g : fp.groups) {
      if (static_cast<int64_t>(g.arrays.size()) >= plm.max_group_arrays)
        continue;
      bool ok = true;
      for (int member : g.arrays)
        if (!compat(member, idx)) { ok = false; break; }
      if (!ok) continue;
      g.arrays.push_back(idx);
      placed = true;
      break;
    }
    if (!placed) fp.groups.push_back({{idx}, 0});
  }
  fp.total_brams = 0;
  for (FootprintGroup& g : fp.groups) {
    g.brams = group_cost(arrays, g.arrays, plm);
    fp.total_brams += g.brams;
  }
  return fp;
}

void footprint_inputs_from_metadata(const std::string& json_text,
                                    const std::string& filename,
                                    std::vector<PlmArray>* arrays,
                                    std::vector<std::pair<int, int>>* pairs) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CompileError(filename + ": metadata is not valid JSON: " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "helmflow-metadata")
      throw CompileError(filename + ": not a helmflow metadata file");
    if (doc.at("version").get<int>() != 1)
      throw CompileError(filename + ": unsupported metadata version");
    arrays->clear();
    pairs->clear();
    std::map<std::string, int> index_of;
    for (const auto& item : doc.at("arrays")) {
      PlmArray a;
      a.id = item.at("id").get<std::string>();
      a.size = item.at("size").get<int64_t>();
      a.width = item.at("width").get<int>();
      a.interface = item.at("interface").get<bool>();
      index_of[a.id] = static_cast<int>(arrays->size());
      arrays->push_back(std::move(a));
    }
    for (const auto& item : doc.at("compatibility").at("address_space")) {
      std::string a = item.at(0).get<std::string>();
      std::string b = item.at(1).get<std::string>();
      auto ia = index_of.find(a);
      auto ib = index_of.find(b);
      if (ia == index_of.end() || ib == index_of.end())
        throw CompileError(filename +
                           ": compatibility pair names an unknown array");
      int lo = std::min(ia->second, ib->second);
      int hi = std::max(ia->second, ib->second);
      pairs->emplace_back(lo, hi);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CompileError(filename + ": malformed metadata: " + e.what());
  }
}

namespace {

constexpr int64_t kMaxUnits = 1024;

ResourceVector demand_of(const ResourceVector& kernel, int64_t plm_brams,
                         int64_t k, int64_t m) {
  ResourceVector plm_vec{0, 0, 0, plm_brams};
  return kernel * k + plm_vec * m;
}

// First resource, in field order, whose demand exceeds the budget.
std::string blocker_of(const ResourceVector& demand,
                       const ResourceVector& avail) {
  for (int i = 0; i < 4; ++i)
    if (resource_get(demand, i) > resource_get(avail, i))
      return kResourceNames[i];
  return "";
}

}  // namespace

SystemPlan plan_system(const BoardSpec& board, const ResourceVector& kernel,
                       int64_t plm_brams, const PlanOptions& opts) {
  if (opts.elements < 1)
    throw CompileError("plan: the element count must be at least 1");
  if (opts.cost_input < 0 || opts.cost_round < 0 || opts.cost_output < 0)
    throw CompileError("plan: transfer costs must be non-negative");
  if (plm_brams < 0)
    throw CompileError("plan: the memory footprint must be non-negative");
  for (int64_t fixed : {opts.fixed_k, opts.fixed_m}) {
    if (fixed != 0 && (!is_pow2(fixed) || fixed > kMaxUnits))
      throw CompileError("plan: k and m must be powers of two up to " +
                         std::to_string(kMaxUnits));
  }
  if (opts.fixed_k != 0 && opts.fixed_m != 0 && opts.fixed_k > opts.fixed_m)
    throw CompileError("plan: k must not exceed m");

  const ResourceVector avail = board.available();
  auto feasible = [&](int64_t k, int64_t m) {
    return demand_of(kernel, plm_brams, k, m).fits_in(avail);
  };

  if (!feasible(1, 1)) {
    ResourceVector unit = demand_of(kernel, plm_brams, 1, 1);
    std::string blocker = blocker_of(unit, avail);
    std::ostringstream os;
    os << "plan: no feasible configuration: one accelerator with one memory "
       << "needs " << blocker << "=";
    for (int i = 0; i < 4; ++i)
      if (blocker == kResourceNames[i]) os << resource_get(unit, i);
    os << " but only ";
    for (int i = 0; i < 4; ++i)
      if (blocker == kResourceNames[i]) os << resource_get(avail, i);
    os << " is available on " << (board.name.empty() ? "the board" : board.name);
    throw CompileError(os.str());
  }

  int64_t best_k = 0, best_m = 0;
  auto consider = [&](int64_t k, int64_t m) {
    if (k > m || !feasible(k, m)) return;
    if (m > best_m || (m == best_m && k > best_k)) {
      best_k = k;
      best_m = m;
    }
  };
  std::string policy_name;
  if (opts.fixed_k != 0 && opts.fixed_m != 0) {
    policy_name = "explicit";
    consider(opts.fixed_k, opts.fixed_m);
    if (best_m == 0) {
      ResourceVector d = demand_of(kernel, plm_brams, opts.fixed_k, opts.fixed_m);
      throw CompileError("plan: k=" + std::to_string(opts.fixed_k) +
                         " m=" + std::to_string(opts.fixed_m) +
                         " does not fit: needs " + d.str() + ", available " +
                         avail.str());
    }
  } else if (opts.fixed_k != 0) {
    policy_name = "k=" + std::to_string(opts.fixed_k);
    for (int64_t m = opts.fixed_k; m <= kMaxUnits; m *= 2)
      consider(opts.fixed_k, m);
    if (best_m == 0)
      throw CompileError("plan: no feasible m for k=" +
                         std::to_string(opts.fixed_k));
  } else if (opts.fixed_m != 0) {
    policy_name = "m=" + std::to_string(opts.fixed_m);
    for (int64_t k = 1; k <= opts.fixed_m; k *= 2)
      consider(k, opts.fixed_m);
    if (best_m == 0)
      throw CompileError("plan: no feasible k for m=" +
                         std::to_string(opts.fixed_m));
  } else if (opts.policy == PlanPolicy::KEqualsM) {
    policy_name = "k=m";
    for (int64_t v = 1; v <= kMaxUnits; v *= 2) consider(v, v);
  } else {
    policy_name = "auto";
    for (int64_t m = 1; m <= kMaxUnits; m *= 2)
      for (int64_t k = 1; k <= m; k *= 2)
        consider(k, m);
  }
  if (best_m == 0) throw InternalError("plan: search found no configuration");
  if (!feasible(best_k, best_m))
    throw InternalError("plan: selected configuration does not fit");

  SystemPlan plan;
  plan.board = board.name;
  plan.kernel = kernel;
  plan.plm_brams = plm_brams;
  plan.available = avail;
  plan.policy = policy_name;
  plan.k = best_k;
  plan.m = best_m;
  plan.batch = best_m / best_k;
  plan.demand = demand_of(kernel, plm_brams, best_k, best_m);

  double best_util = -1.0;
  for (int i = 0; i < 4; ++i) {
    int64_t a = resource_get(avail, i);
    int64_t d = resource_get(plan.demand, i);
    double util = a > 0 ? 100.0 * static_cast<double>(d) / static_cast<double>(a)
                        : (d > 0 ? 1e9 : 0.0);
    if (util > best_util) {
      best_util = util;
      plan.binding = kResourceNames[i];
      plan.binding_util = util;
    }
  }

  plan.next_k = best_k * 2;
  plan.next_m = best_m * 2;
  plan.next_demand = demand_of(kernel, plm_brams, plan.next_k, plan.next_m);
  plan.next_feasible = plan.next_demand.fits_in(avail);
  plan.next_blocker =
      plan.next_feasible ? "" : blocker_of(plan.next_demand, avail);

  plan.elements = opts.elements;
  plan.iterations = ceil_div(opts.elements, plan.m);
  plan.cost_input = opts.cost_input;
  plan.cost_round = opts.cost_round;
  plan.cost_output = opts.cost_output;
  double per_iter = static_cast<double>(plan.m) * opts.cost_input +
                    static_cast<double>(plan.batch) * opts.cost_round +
                    static_cast<double>(plan.m) * opts.cost_output;
  plan.projected = static_cast<double>(plan.iterations) * per_iter;
  plan.baseline = static_cast<double>(opts.elements) *
                  (opts.cost_input + opts.cost_round + opts.cost_output);
  plan.speedup = plan.projected > 0 ? plan.baseline / plan.projected : 1.0;
  return plan;
}

namespace {

std::string pct(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << v << "%";
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << v;
  return os.str();
}

}  // namespace

std::string format_plan(const SystemPlan& plan) {
  std::ostringstream os;
  os << "# helmflow-plan v1\n";
  os << "board: " << (plan.board.empty() ? "(unnamed)" : plan.board) << "\n";
  os << "policy: " << plan.policy << "\n";
  os << "kernel: " << plan.kernel.str() << "\n";
  os << "plm: bram=" << plan.plm_brams << "\n";
  os << "k: " << plan.k << "\n";
  os << "m: " << plan.m << "\n";
  os << "batch: " << plan.batch << "\n";
  os << "demand: " << plan.demand.str() << "\n";
  os << "available: " << plan.available.str() << "\n";
  os << "utilization:";
  for (int i = 0; i < 4; ++i) {
    int64_t a = resource_get(plan.available, i);
    int64_t d = resource_get(plan.demand, i);
    double util = a > 0 ? 100.0 * static_cast<double>(d) / static_cast<double>(a)
                        : 0.0;
    os << " " << kResourceNames[i] << "=" << pct(util);
  }
  os << "\n";
  os << "binding: " << plan.binding << " (" << pct(plan.binding_util) << ")\n";
  if (plan.next_feasible) {
    os << "next: k=" << plan.next_k << " m=" << plan.next_m << " fits ("
       << plan.next_demand.str() << ")\n";
  } else {
    os << "next: k=" << plan.next_k << " m=" << plan.next_m << " needs "
       << plan.next_demand.str() << " -- exceeds " << plan.next_blocker
       << " (available ";
    for (int i = 0; i < 4; ++i)
      if (plan.next_blocker == kResourceNames[i])
        os << resource_get(plan.available, i);
    os << ")\n";
  }
  os << "elements: " << plan.elements << "\n";
  os << "iterations: " << plan.iterations << "\n";
  os << "host loop: " << plan.m << " inputs + " << plan.batch << " round"
     << (plan.batch == 1 ? "" : "s") << " + " << plan.m
     << " outputs per iteration\n";
  os << "projected: " << num(plan.projected) << " (baseline "
     << num(plan.baseline) << ", speedup " << num(plan.speedup) << "x)\n";
  // Round-robin topology: in round r, accelerator j serves memory j*batch+r.
  if (plan.k * plan.batch <= 64) {
    for (int64_t r = 0; r < plan.batch; ++r) {
      os << "round " << r << ":";
      for (int64_t j = 0; j < plan.k; ++j)
        os << " ACC" << j << "->PLM" << (j * plan.batch + r);
      os << "\n";
    }
  } else {
    os << "rounds: ACCj->PLM(j*" << plan.batch << "+r), r=0.."
       << (plan.batch - 1) << "\n";
  }
  return os.str();
}

}  // namespace helmflow
