#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace driftbench::corpus {

/// Three synthetic text families with deliberately disjoint byte statistics,
/// used by the desk-scale behavioral suite. Training on one family and then
/// another produces measurable forgetting in a byte-level model.
enum class SyntheticKind { Words, Code, Caps };

SyntheticKind synthetic_kind_from_name(const std::string& name);

/// One document of the given family, seeded. Length lands in roughly
/// [400, 1200] characters.
std::string synthetic_document(SyntheticKind kind, uint64_t seed);

/// Enough documents to cover at least `target_chars` characters.
std::vector<std::string> synthetic_documents(SyntheticKind kind, int64_t target_chars,
                                             uint64_t seed);

}  // namespace driftbench::corpus
