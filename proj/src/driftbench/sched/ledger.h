#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

namespace driftbench::sched {

/// Append-only JSONL event log. Every run event (phase boundaries, batch
/// provenance, checkpoints, eval rows) lands here; resume replays it to
/// rebuild run state.
class Ledger {
 public:
  explicit Ledger(std::filesystem::path path) : path_(std::move(path)) {}

  void append(const nlohmann::json& event);

  static std::vector<nlohmann::json> read_all(const std::filesystem::path& path);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace driftbench::sched
