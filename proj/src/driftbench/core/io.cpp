#include "driftbench/core/io.h"

#include <fstream>

#include "driftbench/core/error.h"

namespace driftbench {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::Io, "cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

void write_bytes_atomic(const fs::path& path, const void* data, size_t n) {
  fs::path tmp = path;
  tmp += ".tmp";
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), Errc::Io, "cannot open " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    require(out.good(), Errc::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text_file_atomic(const fs::path& path, const std::string& content) {
  write_bytes_atomic(path, content.data(), content.size());
}

std::vector<uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::Io, "cannot open " + path.string());
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

}  // namespace driftbench
