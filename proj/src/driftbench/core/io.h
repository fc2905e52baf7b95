#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace driftbench {

std::string read_text_file(const std::filesystem::path& path);

/// Atomic write: the content lands in a temp file first and is renamed into
/// place, so readers never observe a half-written artifact.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

void write_bytes_atomic(const std::filesystem::path& path, const void* data, size_t n);

std::vector<uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace driftbench
