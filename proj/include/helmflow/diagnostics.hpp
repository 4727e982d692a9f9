// SPDX-License-Identifier: Apache-2.0
#ifndef HELMFLOW_DIAGNOSTICS_HPP
#define HELMFLOW_DIAGNOSTICS_HPP

#include <stdexcept>
#include <string>

namespace helmflow {

// Source position, 1-based. line==0 means "no position" (errors that are not
// tied to a concrete source location, e.g. option parsing).
struct SourceLoc {
  int line = 0;
  int col = 0;
};

struct Diag {
  SourceLoc loc;
  std::string message;

  std::string render(const std::string& filename) const {
    if (loc.line <= 0) return filename + ": " + message;
    return filename + ":" + std::to_string(loc.line) + ":" +
           std::to_string(loc.col) + ": " + message;
  }
};

// Raised for any malformed user input: source programs, layout/partition
// options, board files. Rejection is total: every parser failure funnels into
// exactly one of these; nothing else escapes the frontends.
class CompileError : public std::runtime_error {
 public:
  explicit CompileError(Diag d)
      : std::runtime_error(d.message), diag_(std::move(d)) {}
  CompileError(SourceLoc loc, std::string message)
      : CompileError(Diag{loc, std::move(message)}) {}
  explicit CompileError(std::string message)
      : CompileError(Diag{SourceLoc{}, std::move(message)}) {}

  const Diag& diag() const { return diag_; }

 private:
  Diag diag_;
};

// Internal invariant violations (not user-facing input errors).
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& message)
      : std::logic_error(message) {}
};

}  // namespace helmflow

#endif  // HELMFLOW_DIAGNOSTICS_HPP
