#pragma once

#include <stdexcept>
#include <string>

namespace driftbench {

// Error codes for every failure the library signals. Each maps 1:1 onto a
// documented error condition of some operation.
enum class Errc {
  InsufficientCorpus,
  CorruptDocument,
  VocabMismatch,
  EmptyBatch,
  UnknownGroup,
  BadTarget,
  ShapeError,
  EmptySplit,
  NoLaterPhase,
  UndefinedFwt,
  BudgetUnmet,
  CorruptRun,
  BadFixture,
  BadMatrix,
  BadConfig,
  Precondition,
  Io,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace driftbench
