#include "driftbench/corpus/synthetic.h"

#include "driftbench/core/error.h"
#include "driftbench/core/rng.h"

namespace driftbench::corpus {

SyntheticKind synthetic_kind_from_name(const std::string& name) {
  if (name == "words") return SyntheticKind::Words;
  if (name == "code") return SyntheticKind::Code;
  if (name == "caps") return SyntheticKind::Caps;
  fail(Errc::BadConfig, "unknown synthetic kind " + name);
}

namespace {

// Markov-ish word generator over a restricted alphabet. Each family uses its
// own alphabet band so cross-family next-byte statistics barely overlap.
std::string words_doc(Rng& rng, int64_t target) {
  static const char* kSyllables[] = {"ba", "de", "fi", "go", "ka", "le", "mi",
                                     "na", "po", "ra", "se", "tu", "ve", "zo"};
  std::string out;
  while (static_cast<int64_t>(out.size()) < target) {
    const int words = 6 + static_cast<int>(rng.below(8));
    for (int w = 0; w < words; ++w) {
      const int syls = 1 + static_cast<int>(rng.below(3));
      for (int s = 0; s < syls; ++s) out += kSyllables[rng.below(14)];
      out += ' ';
    }
    out.back() = '.';
    out += ' ';
  }
  return out;
}

std::string code_doc(Rng& rng, int64_t target) {
  static const char* kIdents[] = {"qq", "ww", "xx", "yy", "zz", "uv", "wx", "xyz"};
  static const char* kOps[] = {" = ", " + ", " * ", " - "};
  std::string out;
  while (static_cast<int64_t>(out.size()) < target) {
    out += kIdents[rng.below(8)];
    out += '(';
    out += kIdents[rng.below(8)];
    out += ')';
    out += kOps[rng.below(4)];
    out += std::to_string(rng.below(100));
    out += ";\n";
    if (rng.below(5) == 0) {
      out += "{ ";
      out += kIdents[rng.below(8)];
      out += " }\n";
    }
  }
  return out;
}

std::string caps_doc(Rng& rng, int64_t target) {
  static const char* kBlocks[] = {"NORTH", "SOUTH", "EAST", "WEST", "ALPHA",
                                  "BRAVO", "DELTA", "ECHO",  "GOLF", "HOTEL"};
  std::string out;
  while (static_cast<int64_t>(out.size()) < target) {
    out += kBlocks[rng.below(10)];
    out += '-';
    out += std::to_string(100 + rng.below(900));
    out += (rng.below(4) == 0) ? '\n' : ' ';
  }
  return out;
}

}  // namespace

std::string synthetic_document(SyntheticKind kind, uint64_t seed) {
  Rng rng(seed);
  const int64_t target = 400 + static_cast<int64_t>(rng.below(800));
  switch (kind) {
    case SyntheticKind::Words: return words_doc(rng, target);
    case SyntheticKind::Code: return code_doc(rng, target);
    case SyntheticKind::Caps: return caps_doc(rng, target);
  }
  fail(Errc::BadConfig, "unreachable synthetic kind");
}

std::vector<std::string> synthetic_documents(SyntheticKind kind, int64_t target_chars,
                                             uint64_t seed) {
  std::vector<std::string> docs;
  int64_t total = 0;
  uint64_t i = 0;
  while (total < target_chars) {
    docs.push_back(synthetic_document(kind, derive_seed(seed, {i++})));
    total += static_cast<int64_t>(docs.back().size());
  }
  return docs;
}

}  // namespace driftbench::corpus
