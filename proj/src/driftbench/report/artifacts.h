#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/eval/emission.h"
#include "driftbench/metrics/ortho.h"
#include "driftbench/metrics/transfer.h"

namespace driftbench::report {

/// Canonical artifact names inside a run directory.
struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path config;
  std::filesystem::path ledger;
  std::filesystem::path checkpoints;
  std::filesystem::path matrix_json;
  std::filesystem::path matrix_tsv;
  std::filesystem::path transfer_json;
  std::filesystem::path transfer_txt;
  std::filesystem::path hellaswag_json;
  std::filesystem::path emissions_jsonl;
  std::filesystem::path grad_ortho_json;

  static RunPaths in(const std::filesystem::path& dir);
};

void write_matrix_json(const metrics::PplMatrix& m, const std::string& condition,
                       const std::string& config_hash, const std::filesystem::path& path);
struct MatrixArtifact {
  metrics::PplMatrix matrix;
  std::string condition;
  std::string config_hash;
};
MatrixArtifact read_matrix_json(const std::filesystem::path& path);

/// Plain TSV: header row "trained <tab> eval domains...", one row per phase
/// labeled by its trained domain. The format cmd-metrics accepts for
/// hand-entered matrices.
void write_matrix_tsv(const metrics::PplMatrix& m, const std::filesystem::path& path);
metrics::PplMatrix read_matrix_tsv(const std::filesystem::path& path);

/// Loads either .tsv or .json by extension. Throws BadMatrix on parse
/// failure.
metrics::PplMatrix read_matrix_any(const std::filesystem::path& path);

void write_hellaswag_json(const std::vector<std::pair<int, double>>& per_phase,
                          const std::string& config_hash, const std::filesystem::path& path);

void append_emissions(const std::vector<eval::EmissionRecord>& records,
                      const std::string& config_hash, uint64_t seed,
                      const std::filesystem::path& path);
std::vector<eval::EmissionRecord> read_emissions(const std::filesystem::path& path,
                                                 std::string* config_hash = nullptr);

void write_grad_ortho_json(const std::vector<std::pair<int, metrics::GradCosMatrix>>& per_phase,
                           const std::string& config_hash, const std::filesystem::path& path);
std::vector<std::pair<int, metrics::GradCosMatrix>> read_grad_ortho_json(
    const std::filesystem::path& path);

std::vector<std::pair<int, double>> read_hellaswag_json(const std::filesystem::path& path);

std::optional<std::string> artifact_config_hash(const std::filesystem::path& path);

}  // namespace driftbench::report
