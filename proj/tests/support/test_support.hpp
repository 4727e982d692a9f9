// Shared helpers for the doctest suites: file IO, golden-file comparison,
// temporary directories, and subprocess capture.
#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "doctest.h"

namespace testsupport {

inline std::optional<std::string> try_read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string read_file(const std::string& path) {
  auto text = try_read_file(path);
  REQUIRE_MESSAGE(text.has_value(), "cannot read ", path);
  return *text;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE_MESSAGE(out.good(), "cannot write ", path);
  out << text;
}

// Locate the first differing line of two texts, for readable golden failures.
inline std::string first_diff(const std::string& a, const std::string& b) {
  std::istringstream sa(a), sb(b);
  std::string la, lb;
  int line = 0;
  while (true) {
    ++line;
    const bool ga = static_cast<bool>(std::getline(sa, la));
    const bool gb = static_cast<bool>(std::getline(sb, lb));
    if (!ga && !gb) return "texts are equal";
    if (ga != gb || la != lb) {
      std::ostringstream os;
      os << "line " << line << ":\n  expected: "
         << (ga ? la : std::string("<end of file>"))
         << "\n  actual:   " << (gb ? lb : std::string("<end of file>"));
      return os.str();
    }
  }
}

// Compares `actual` against golden/<name>. Set HELMFLOW_UPDATE_GOLDEN=1 to
// rewrite the stored files from the current build.
inline void check_golden(const std::string& name, const std::string& actual) {
  const std::string path = std::string(HELMFLOW_GOLDEN_DIR) + "/" + name;
  if (std::getenv("HELMFLOW_UPDATE_GOLDEN")) {
    std::filesystem::create_directories(HELMFLOW_GOLDEN_DIR);
    write_file(path, actual);
  }
  auto expected = try_read_file(path);
  REQUIRE_MESSAGE(expected.has_value(), "missing golden file ", path,
                  " (run with HELMFLOW_UPDATE_GOLDEN=1 to create it)");
  const bool same = *expected == actual;
  CHECK_MESSAGE(same, name, ": ", first_diff(*expected, actual),
                "\n(regenerate with HELMFLOW_UPDATE_GOLDEN=1 if the change "
                "is intended)");
}

struct TempDir {
  std::string path;

  TempDir() {
    char tmpl[] = "/tmp/helmflow_test_XXXXXX";
    char* made = mkdtemp(tmpl);
    REQUIRE(made != nullptr);
    path = made;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return path + "/" + name; }
};

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

inline CommandResult run_command(const std::string& command) {
  CommandResult res;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

inline bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace testsupport
