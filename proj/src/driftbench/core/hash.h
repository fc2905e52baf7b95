#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace driftbench {

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xCBF29CE484222325ull);

/// Hex rendering of a 64-bit hash, used as the config hash embedded in
/// artifacts.
std::string hash_hex(uint64_t h);

}  // namespace driftbench
