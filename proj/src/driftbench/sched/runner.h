#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include "driftbench/corpus/token_stream.h"
#include "driftbench/metrics/ortho.h"
#include "driftbench/metrics/transfer.h"
#include "driftbench/model/tiny_transformer.h"
#include "driftbench/report/run_config.h"

namespace driftbench::sched {

/// Test hooks that simulate an interrupted process: stop cleanly after N
/// completed phases, or drop dead mid-phase after N optimizer steps (no final
/// checkpoint beyond whatever periodic checkpointing already wrote).
struct StopCondition {
  int max_phases = -1;
  int kill_after_phase_steps = -1;
  int kill_in_phase = -1;  // 0-based phase the step-kill applies to
};

struct RunOutcome {
  metrics::PplMatrix matrix;
  bool finished = false;
  int completed_phases = 0;
};

/// Drives one continual run end to end: per-phase method preparation, the
/// single-pass token budget, phase-boundary checkpoints, and the post-phase
/// evaluation battery. All state needed to resume lives in the run directory.
class Runner {
 public:
  explicit Runner(report::RunConfig cfg);

  /// Fresh run. The output directory must not already contain a ledger.
  RunOutcome run(const StopCondition& stop = {});

  /// Resumes from the run directory's ledger and latest checkpoint.
  /// A finished run is a no-op returning the final state. Throws CorruptRun
  /// on config-hash mutation or ledger/checkpoint mismatch.
  static RunOutcome resume(const std::filesystem::path& run_dir,
                           const StopCondition& stop = {});

  /// The model after run()/resume() (test access).
  model::TinyTransformer* model() { return model_.get(); }

 private:
  RunOutcome drive(const StopCondition& stop, int start_phase, int64_t start_offset,
                   int64_t start_step, metrics::PplMatrix matrix);
  void eval_after_phase(int phase_1based, metrics::PplMatrix& matrix);
  std::vector<double> eval_row() const;
  void run_probes(int phase_1based);
  double lr_at(int64_t step, int64_t total_steps) const;

  report::RunConfig cfg_;
  std::string config_hash_;
  std::unique_ptr<model::TinyTransformer> model_;
  std::map<std::string, corpus::TokenStream> streams_;
  std::vector<std::pair<int, double>> hellaswag_rows_;
  std::vector<std::pair<int, metrics::GradCosMatrix>> grad_rows_;
};

}  // namespace driftbench::sched
