#include "driftbench/core/hash.h"

#include <cstdio>

#include "driftbench/core/error.h"

namespace driftbench {

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InsufficientCorpus: return "insufficient-corpus";
    case Errc::CorruptDocument: return "corrupt-document";
    case Errc::VocabMismatch: return "vocab-mismatch";
    case Errc::EmptyBatch: return "empty-batch";
    case Errc::UnknownGroup: return "unknown-group";
    case Errc::BadTarget: return "bad-target";
    case Errc::ShapeError: return "shape-error";
    case Errc::EmptySplit: return "empty-split";
    case Errc::NoLaterPhase: return "no-later-phase";
    case Errc::UndefinedFwt: return "undefined-fwt";
    case Errc::BudgetUnmet: return "budget-unmet";
    case Errc::CorruptRun: return "corrupt-run";
    case Errc::BadFixture: return "bad-fixture";
    case Errc::BadMatrix: return "bad-matrix";
    case Errc::BadConfig: return "bad-config";
    case Errc::Precondition: return "precondition";
    case Errc::Io: return "io-error";
  }
  return "unknown";
}

}  // namespace driftbench
