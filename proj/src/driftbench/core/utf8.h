#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace driftbench {

/// Decodes UTF-8 into codepoints. Invalid byte sequences decode to U+FFFD one
/// byte at a time, so classification heuristics stay total on arbitrary model
/// output.
std::vector<uint32_t> utf8_decode(std::string_view text);

bool is_cjk(uint32_t cp);

}  // namespace driftbench
