#include "driftbench/core/rng.h"

#include "driftbench/core/hash.h"

namespace driftbench {

uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags) {
  uint64_t h = fnv1a64(&base, sizeof(base));
  for (uint64_t t : tags) h = fnv1a64(&t, sizeof(t), h);
  return h;
}

uint64_t derive_seed(uint64_t base, const std::string& tag) {
  uint64_t h = fnv1a64(&base, sizeof(base));
  return fnv1a64(tag.data(), tag.size(), h);
}

}  // namespace driftbench
