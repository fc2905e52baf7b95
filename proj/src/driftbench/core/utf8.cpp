#include "driftbench/core/utf8.h"

namespace driftbench {

std::vector<uint32_t> utf8_decode(std::string_view text) {
  std::vector<uint32_t> out;
  out.reserve(text.size());
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    uint32_t cp = 0xFFFD;
    size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0 && i + 1 < n && (text[i + 1] & 0xC0) == 0x80) {
      cp = (static_cast<uint32_t>(b0 & 0x1F) << 6) | (text[i + 1] & 0x3F);
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0 && i + 2 < n && (text[i + 1] & 0xC0) == 0x80 &&
               (text[i + 2] & 0xC0) == 0x80) {
      cp = (static_cast<uint32_t>(b0 & 0x0F) << 12) |
           (static_cast<uint32_t>(text[i + 1] & 0x3F) << 6) | (text[i + 2] & 0x3F);
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0 && i + 3 < n && (text[i + 1] & 0xC0) == 0x80 &&
               (text[i + 2] & 0xC0) == 0x80 && (text[i + 3] & 0xC0) == 0x80) {
      cp = (static_cast<uint32_t>(b0 & 0x07) << 18) |
           (static_cast<uint32_t>(text[i + 1] & 0x3F) << 12) |
           (static_cast<uint32_t>(text[i + 2] & 0x3F) << 6) | (text[i + 3] & 0x3F);
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool is_cjk(uint32_t cp) {
  // Unified ideographs, extension A, compatibility block, CJK punctuation,
  // and fullwidth forms. Kana is excluded on purpose: the Chinese corpus is
  // zh-only.
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFF00 && cp <= 0xFFEF);
}

}  // namespace driftbench
