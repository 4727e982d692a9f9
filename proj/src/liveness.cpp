// SPDX-License-Identifier: Apache-2.0
#include "helmflow/liveness.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "helmflow/diagnostics.hpp"

namespace helmflow {

namespace {

std::string tuple_str(const Tuple& t) {
  std::string out = "[";
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(t[i]);
  }
  out += "]";
  return out;
}

bool interval_before(const LiveInterval& a, const LiveInterval& b) {
  int c = lex_compare(a.start, b.start);
  if (c != 0) return c < 0;
  return lex_compare(a.end, b.end) < 0;
}

// Walks one element's events (already in schedule order) and appends one
// interval per stored value. Returns the tuple of a dead store if any.
struct ElementWalk {
  std::vector<LiveInterval>* out = nullptr;
  const AccessEvent* write = nullptr;
  const Tuple* last_access = nullptr;
  bool read_seen = false;
  const Tuple* dead_store = nullptr;
  bool dead_by_virtual_first = false;

  void flush() {
    if (!write) return;
    out->push_back(LiveInterval{write->tuple, *last_access});
    if (!read_seen && !dead_store) {
      // A value that is never read. Input preloads (virtual first) are
      // reported distinctly from real statement stores.
      dead_store = &write->tuple;
      dead_by_virtual_first = write->stmt == kVirtualFirst;
    }
  }

  void step(const AccessEvent& ev) {
    if (ev.write) {
      flush();
      write = &ev;
      last_access = &ev.tuple;
      read_seen = false;
    } else {
      last_access = &ev.tuple;
      read_seen = true;
    }
  }
};

}  // namespace

bool intervals_disjoint(const std::vector<LiveInterval>& a,
                        const std::vector<LiveInterval>& b) {
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (lex_compare(a[i].end, b[j].start) < 0) {
      ++i;
    } else if (lex_compare(b[j].end, a[i].start) < 0) {
      ++j;
    } else {
      return false;  // max(starts) <= min(ends): overlap
    }
  }
  return true;
}

LivenessResult analyze_liveness(const LoweredProgram& lp,
                                const Schedule& sched, const MemoryModel& mm) {
  EventOptions opts;
  opts.with_virtuals = true;
  opts.sorted = false;
  std::vector<AccessEvent> events = enumerate_events(lp, sched, mm, opts);
  std::sort(events.begin(), events.end(), event_order_element);

  LivenessResult lv;
  const size_t n_arrays = mm.arrays.size();
  lv.live.resize(n_arrays);
  lv.read_ports.assign(n_arrays, 0);
  lv.write_ports.assign(n_arrays, 0);

  // Lifetimes + dead stores, walking runs of one (array, offset).
  std::map<int, std::pair<Tuple, bool>> dead_by_tensor;
  size_t i = 0;
  while (i < events.size()) {
    size_t j = i;
    while (j < events.size() && events[j].array == events[i].array &&
           events[j].offset == events[i].offset)
      ++j;
    ElementWalk walk;
    walk.out = &lv.live[static_cast<size_t>(events[i].array)];
    for (size_t k = i; k < j; ++k) {
      const AccessEvent& ev = events[k];
      if (!ev.write && !walk.write) {
        const TensorInfo& info = lp.tensors[static_cast<size_t>(ev.tensor)];
        if (info.kind != TensorKind::Input) {
          throw CompileError(
              "element of `" + info.name + "` is read (instance " +
              tuple_str(ev.tuple) + ") before any write; the value is "
              "undefined");
        }
      }
      walk.step(ev);
    }
    walk.flush();
    if (walk.dead_store) {
      const int tensor = walk.write->tensor;
      if (!dead_by_tensor.count(tensor))
        dead_by_tensor[tensor] = {*walk.dead_store,
                                  walk.dead_by_virtual_first};
    }
    i = j;
  }
  for (auto& [tensor, info] : dead_by_tensor) {
    const std::string& name = lp.tensors[static_cast<size_t>(tensor)].name;
    if (info.second) {
      lv.warnings.push_back("input `" + name + "` has elements that are "
                            "never read");
    } else {
      lv.warnings.push_back("dead store: value of `" + name + "` written at " +
                            tuple_str(info.first) + " is never read");
    }
  }
  for (auto& per_array : lv.live)
    std::sort(per_array.begin(), per_array.end(), interval_before);

  // Port demands and interface conflicts from real instances only.
  events.erase(std::remove_if(events.begin(), events.end(),
                              [](const AccessEvent& e) { return e.stmt < 0; }),
               events.end());
  std::sort(events.begin(), events.end(), event_order_global);
  std::set<std::pair<int, int>> conflicts;
  std::map<int, std::pair<int, int>> touched;  // array -> (reads, writes)
  i = 0;
  while (i < events.size()) {
    size_t j = i;
    while (j < events.size() &&
           lex_compare(events[j].tuple, events[i].tuple) == 0)
      ++j;
    touched.clear();
    for (size_t k = i; k < j; ++k) {
      auto& rw = touched[events[k].array];
      (events[k].write ? rw.second : rw.first) += 1;
    }
    for (auto a = touched.begin(); a != touched.end(); ++a) {
      lv.read_ports[static_cast<size_t>(a->first)] =
          std::max(lv.read_ports[static_cast<size_t>(a->first)],
                   a->second.first);
      lv.write_ports[static_cast<size_t>(a->first)] =
          std::max(lv.write_ports[static_cast<size_t>(a->first)],
                   a->second.second);
      // Only same-type simultaneity blocks port sharing: a read of one
      // array and a write of another at the same point may coexist.
      for (auto b = std::next(a); b != touched.end(); ++b) {
        const bool both_read = a->second.first > 0 && b->second.first > 0;
        const bool both_write = a->second.second > 0 && b->second.second > 0;
        if (both_read || both_write)
          conflicts.insert({a->first, b->first});
      }
    }
    i = j;
  }

  for (size_t a = 0; a < n_arrays; ++a) {
    for (size_t b = a + 1; b < n_arrays; ++b) {
      if (intervals_disjoint(lv.live[a], lv.live[b]))
        lv.address_space.emplace_back(static_cast<int>(a),
                                      static_cast<int>(b));
      if (!conflicts.count({static_cast<int>(a), static_cast<int>(b)}))
        lv.memory_interface.emplace_back(static_cast<int>(a),
                                         static_cast<int>(b));
    }
  }
  return lv;
}

void check_shared_address_legality(const LoweredProgram& lp,
                                   const Schedule& sched,
                                   const MemoryModel& mm) {
  if (mm.collisions.empty()) return;

  EventOptions opts;
  opts.with_virtuals = true;
  opts.pre_partition = true;  // each tensor in its own address space
  opts.sorted = false;
  std::vector<AccessEvent> events = enumerate_events(lp, sched, mm, opts);
  std::sort(events.begin(), events.end(), event_order_element);

  // Per (tensor, layout offset): intervals of the values stored there.
  std::map<std::pair<int, int64_t>, std::vector<LiveInterval>> element_live;
  size_t i = 0;
  while (i < events.size()) {
    size_t j = i;
    while (j < events.size() && events[j].array == events[i].array &&
           events[j].offset == events[i].offset)
      ++j;
    auto& out = element_live[{events[i].array, events[i].offset}];
    ElementWalk walk;
    walk.out = &out;
    for (size_t k = i; k < j; ++k) walk.step(events[k]);
    walk.flush();
    std::sort(out.begin(), out.end(), interval_before);
    i = j;
  }

  auto tensor_pos = [&](const std::string& name) {
    for (size_t t = 0; t < lp.tensors.size(); ++t)
      if (lp.tensors[t].name == name) return static_cast<int>(t);
    throw InternalError("collision references unknown tensor: " + name);
  };
  static const std::vector<LiveInterval> kEmpty;
  auto live_of = [&](const std::string& name,
                     const Tuple& idx) -> const std::vector<LiveInterval>& {
    const int64_t off = mm.layouts.at(name).offset.eval(idx);
    auto it = element_live.find({tensor_pos(name), off});
    return it == element_live.end() ? kEmpty : it->second;
  };

  for (const AddressCollision& c : mm.collisions) {
    if (!intervals_disjoint(live_of(c.tensor_a, c.index_a),
                            live_of(c.tensor_b, c.index_b))) {
      throw CompileError(
          "shared address space is illegal here: `" + c.tensor_a +
          tuple_str(c.index_a) + "` and `" + c.tensor_b +
          tuple_str(c.index_b) + "` are mapped to one element but their "
          "lifetimes overlap under the final schedule");
    }
  }
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else {
      out += ch;
    }
  }
  return out;
}

void emit_pairs(std::ostringstream& os, const MemoryModel& mm,
                const std::vector<std::pair<int, int>>& pairs,
                const char* indent) {
  for (size_t i = 0; i < pairs.size(); ++i) {
    os << indent << "[\""
       << json_escape(mm.arrays[static_cast<size_t>(pairs[i].first)].id)
       << "\", \""
       << json_escape(mm.arrays[static_cast<size_t>(pairs[i].second)].id)
       << "\"]";
    if (i + 1 < pairs.size()) os << ",";
    os << "\n";
  }
}

}  // namespace

std::string emit_metadata(const MemoryModel& mm, const LivenessResult& lv) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"format\": \"helmflow-metadata\",\n";
  os << "  \"version\": 1,\n";
  os << "  \"arrays\": [\n";
  for (size_t a = 0; a < mm.arrays.size(); ++a) {
    const ArraySpace& arr = mm.arrays[a];
    os << "    {\"id\": \"" << json_escape(arr.id) << "\", \"size\": "
       << arr.size << ", \"width\": " << arr.width << ", \"interface\": "
       << (arr.interface ? "true" : "false") << ", \"read_ports\": "
       << lv.read_ports[a] << ", \"write_ports\": " << lv.write_ports[a]
       << "}";
    if (a + 1 < mm.arrays.size()) os << ",";
    os << "\n";
  }
  os << "  ],\n";
  os << "  \"compatibility\": {\n";
  os << "    \"address_space\": [\n";
  emit_pairs(os, mm, lv.address_space, "      ");
  os << "    ],\n";
  os << "    \"memory_interface\": [\n";
  emit_pairs(os, mm, lv.memory_interface, "      ");
  os << "    ]\n";
  os << "  }\n";
  os << "}\n";
  return os.str();
}

std::string emit_dot(const MemoryModel& mm, const LivenessResult& lv) {
  std::ostringstream os;
  os << "// helmflow-dot v1\n";
  os << "graph helmflow {\n";
  for (const ArraySpace& arr : mm.arrays) {
    os << "  \"" << arr.id << "\" [shape="
       << (arr.interface ? "box" : "ellipse") << ", label=\"" << arr.id
       << "\\n" << arr.size << " x " << arr.width << "b\"];\n";
  }
  for (const auto& [a, b] : lv.address_space) {
    os << "  \"" << mm.arrays[static_cast<size_t>(a)].id << "\" -- \""
       << mm.arrays[static_cast<size_t>(b)].id << "\";\n";
  }
  for (const auto& [a, b] : lv.memory_interface) {
    os << "  \"" << mm.arrays[static_cast<size_t>(a)].id << "\" -- \""
       << mm.arrays[static_cast<size_t>(b)].id << "\" [style=dashed];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace helmflow
