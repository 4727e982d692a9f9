#include <algorithm>
#include <set>
#include <string>
#include <utility>

#include "doctest.h"
#include "helmflow/liveness.hpp"
#include "helmflow/pipeline.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace helmflow;
using testsupport::contains;

namespace {

using NamePair = std::pair<std::string, std::string>;

std::set<NamePair> named(const std::vector<std::pair<int, int>>& pairs,
                         const MemoryModel& mm) {
  std::set<NamePair> out;
  for (auto [a, b] : pairs)
    out.insert({mm.arrays[static_cast<size_t>(a)].id,
                mm.arrays[static_cast<size_t>(b)].id});
  return out;
}

// Order the pair as the arrays appear in mm.arrays, matching analysis output.
std::set<NamePair> expect_pairs(const MemoryModel& mm,
                                std::initializer_list<NamePair> list) {
  std::set<NamePair> out;
  for (const NamePair& p : list) {
    int a = mm.array_index(p.first);
    int b = mm.array_index(p.second);
    REQUIRE(a >= 0);
    REQUIRE(b >= 0);
    if (a < b)
      out.insert(p);
    else
      out.insert({p.second, p.first});
  }
  return out;
}

const std::initializer_list<NamePair> kFusedAddressPairs = {
    {"D", "v"},      {"D", "v_s1"},   {"D", "v_s2"},   {"u", "v"},
    {"u", "t"},      {"u", "r"},      {"u", "t_s2"},   {"u", "v_s1"},
    {"u", "v_s2"},   {"v", "t"},      {"v", "r"},      {"v", "t_s1"},
    {"v", "t_s2"},   {"v", "v_s1"},   {"t", "t_s1"},   {"t", "v_s1"},
    {"t", "v_s2"},   {"r", "t_s1"},   {"r", "v_s2"},   {"t_s1", "v_s1"},
    {"t_s1", "v_s2"}, {"t_s2", "v_s1"}, {"t_s2", "v_s2"}};

// Same-type co-access happens only inside one statement instance: each
// contract stage reads its two operands together, the Hadamard reads D and t
// together. Every other pair may share a memory port.
const std::initializer_list<NamePair> kInterfaceConflicts = {
    {"S", "u"},    {"S", "t_s1"}, {"S", "t_s2"}, {"S", "r"},
    {"S", "v_s1"}, {"S", "v_s2"}, {"D", "t"}};

}  // namespace

TEST_SUITE_BEGIN("liveness");

TEST_CASE("compatibility pairs for the canonical kernel") {
  for (int64_t extent : {3, 11}) {
    CAPTURE(extent);
    PipelineResult res = run_pipeline(helmholtz_source(extent));
    CHECK(named(res.liveness.address_space, res.mm) ==
          expect_pairs(res.mm, kFusedAddressPairs));

    std::set<NamePair> conflicts = expect_pairs(res.mm, kInterfaceConflicts);
    std::set<NamePair> expected_interface;
    for (size_t a = 0; a < res.mm.arrays.size(); ++a)
      for (size_t b = a + 1; b < res.mm.arrays.size(); ++b) {
        NamePair p{res.mm.arrays[a].id, res.mm.arrays[b].id};
        if (!conflicts.count(p)) expected_interface.insert(p);
      }
    CHECK(expected_interface.size() == 38);
    CHECK(named(res.liveness.memory_interface, res.mm) == expected_interface);
  }
}

TEST_CASE("the reference schedule keeps one more compatible pair") {
  PipelineConfig cfg;
  cfg.no_reschedule = true;
  PipelineResult res = run_pipeline(helmholtz_source(11), cfg);
  std::set<NamePair> expected = expect_pairs(res.mm, kFusedAddressPairs);
  expected.insert({"r", "t_s2"});
  CHECK(named(res.liveness.address_space, res.mm) ==
        expect_pairs(res.mm, {
            {"D", "v"},      {"D", "v_s1"},    {"D", "v_s2"},
            {"u", "v"},      {"u", "t"},       {"u", "r"},
            {"u", "t_s2"},   {"u", "v_s1"},    {"u", "v_s2"},
            {"v", "t"},      {"v", "r"},       {"v", "t_s1"},
            {"v", "t_s2"},   {"v", "v_s1"},    {"t", "t_s1"},
            {"t", "v_s1"},   {"t", "v_s2"},    {"r", "t_s1"},
            {"r", "t_s2"},   {"r", "v_s2"},    {"t_s1", "v_s1"},
            {"t_s1", "v_s2"}, {"t_s2", "v_s1"}, {"t_s2", "v_s2"}}));
  CHECK(res.liveness.address_space.size() == 24);
}

TEST_CASE("port demands") {
  PipelineResult res = run_pipeline(helmholtz_source(11));
  auto port = [&](const char* id, const std::vector<int>& v) {
    return v[static_cast<size_t>(res.mm.array_index(id))];
  };
  for (const char* id : {"S", "D", "u", "t", "r", "t_s1", "t_s2", "v_s1",
                         "v_s2"})
    CHECK(port(id, res.liveness.read_ports) == 1);
  CHECK(port("v", res.liveness.read_ports) == 0);  // virtual reads excluded
  for (const char* id : {"S", "D", "u"})
    CHECK(port(id, res.liveness.write_ports) == 0);
  for (const char* id : {"v", "t", "r", "t_s1", "t_s2", "v_s1", "v_s2"})
    CHECK(port(id, res.liveness.write_ports) == 1);
}

TEST_CASE("reading one array twice in an instance needs two ports") {
  PipelineResult res =
      run_pipeline("var input S : [4 4]\nvar output w : [4 4]\nw = S * S\n");
  CHECK(res.liveness.read_ports[static_cast<size_t>(
            res.mm.array_index("S"))] == 2);
  // S is read while w is written at the same point: cross-type, so the pair
  // still may share a port but not an address space.
  CHECK(named(res.liveness.memory_interface, res.mm) ==
        std::set<NamePair>{{"S", "w"}});
  CHECK(res.liveness.address_space.empty());
}

TEST_CASE("dead stores and unread inputs are reported") {
  PipelineResult res = run_pipeline(
      "var input u : [3 3]\nvar output w : [3 3]\nvar local z : [3 3]\n"
      "z = u * u\nw = u * u\n");
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0] ==
        "dead store: value of `z` written at [0, 0, 0, 0] is never read");

  // A single-statement program also reports the reschedule fallback first.
  PipelineResult res2 = run_pipeline(
      "var input u : [4]\nvar input q : [4]\nvar output w : [4]\n"
      "w = q * q\n");
  REQUIRE(res2.warnings.size() == 2);
  CHECK(res2.warnings[0] ==
        "rescheduling found no improving schedule; keeping the reference "
        "schedule");
  CHECK(res2.warnings[1] == "input `u` has elements that are never read");
}

TEST_CASE("interval primitives") {
  auto iv = [](Tuple s, Tuple e) { return LiveInterval{s, e}; };
  std::vector<LiveInterval> a{iv({0, 0}, {1, 0})};
  std::vector<LiveInterval> b{iv({1, 1}, {2, 0})};
  CHECK(intervals_disjoint(a, b));
  // Inclusive ends: touching at one tuple overlaps.
  std::vector<LiveInterval> c{iv({1, 0}, {3, 0})};
  CHECK_FALSE(intervals_disjoint(a, c));
  CHECK(intervals_disjoint({}, a));
}

TEST_CASE("copy chains keep producer and consumer apart") {
  PipelineResult res = run_pipeline(
      "var input a : [4]\nvar output z : [4]\nz = a\n");
  // a's last read and z's write share each instance tuple, so their
  // lifetimes overlap and they may not share storage.
  CHECK(res.liveness.address_space.empty());
  const int a = res.mm.array_index("a");
  CHECK(res.liveness.live[static_cast<size_t>(a)].size() == 4);
}

TEST_CASE("legality check for shared address spaces") {
  // u's lifetime ends when t_s1 consumed it; t starts later: mergeable.
  PipelineConfig ok_cfg;
  ok_cfg.partition_opts = {"t[x] -> u[x]"};
  ok_cfg.allow_shared = true;
  ok_cfg.verify = true;
  PipelineResult ok = run_pipeline(helmholtz_source(3), ok_cfg);
  CHECK(ok.verify_max_rel_diff <= 1e-12);
  CHECK(ok.mm.resolve("t", {0, 0, 0}) ==
        ElementRef{ok.mm.array_index("u"), 0});
  CHECK_FALSE(ok.mm.collisions.empty());

  // S is read by every stage; overlaying u on S must be rejected.
  PipelineConfig bad_cfg;
  bad_cfg.partition_opts = {"S[x] -> u[x]"};
  bad_cfg.allow_shared = true;
  CHECK_THROWS_WITH_AS(run_pipeline(helmholtz_source(3), bad_cfg),
                       doctest::Contains("lifetimes overlap"), CompileError);
}

TEST_CASE("metadata artifact") {
  PipelineResult res = run_pipeline(helmholtz_source(3));
  nlohmann::json doc = nlohmann::json::parse(res.metadata_json);
  CHECK(doc.at("format") == "helmflow-metadata");
  CHECK(doc.at("version") == 1);
  REQUIRE(doc.at("arrays").size() == 10);
  CHECK(doc["arrays"][0].at("id") == "S");
  CHECK(doc["arrays"][0].at("size") == 9);
  CHECK(doc["arrays"][0].at("width") == 64);
  CHECK(doc["arrays"][0].at("interface") == true);
  CHECK(doc["arrays"][0].at("read_ports") == 1);
  CHECK(doc["arrays"][0].at("write_ports") == 0);

  // Pairs are named, not indexed.
  const auto& compat = doc.at("compatibility");
  bool found = false;
  for (const auto& pair : compat.at("address_space"))
    if (pair[0] == "u" && pair[1] == "t") found = true;
  CHECK(found);
  CHECK(compat.at("address_space").size() == 23);
  CHECK(compat.at("memory_interface").size() == 38);
}

TEST_CASE("dot artifact") {
  PipelineResult res = run_pipeline(helmholtz_source(3));
  CHECK(res.dot_text.rfind("// helmflow-dot v1\n", 0) == 0);
  CHECK(contains(res.dot_text, "graph"));
  CHECK(contains(res.dot_text, "S"));
  testsupport::check_golden("helmholtz_e3.dot", res.dot_text);
}

TEST_SUITE_END();
