#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "driftbench/model/tiny_transformer.h"

namespace driftbench::model {

/// Extra run-position state carried by a checkpoint so a killed run resumes at
/// the recorded token offset with identical arithmetic.
struct CheckpointMeta {
  std::string config_hash;
  int completed_phases = 0;
  int active_phase = 0;        // 0-based; == completed_phases while mid-phase
  int64_t phase_token_offset = 0;  // predicted-token offset inside the active phase
  int64_t phase_step = 0;          // optimizer steps taken inside the active phase
};

/// Writes the opaque tensor blob (`path`) and a portable JSON manifest
/// (`path` + ".json"): backbone id, group names, frozen set, step counter,
/// and the run-position metadata.
void save_checkpoint(TinyTransformer& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

/// Restores tensors, optimizer state, step counter, and frozen set into a
/// model constructed with the same architecture (and the same adapters
/// already attached). Throws CorruptRun on any mismatch.
CheckpointMeta load_checkpoint(TinyTransformer& model, const std::filesystem::path& path);

/// Reads only the manifest.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

}  // namespace driftbench::model
