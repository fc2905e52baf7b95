#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "driftbench/methods/method_policy.h"
#include "driftbench/sched/phase_plan.h"

namespace driftbench::report {

struct BackboneConfig {
  std::string id = "tiny-v1";
  int vocab = 257;
  int ctx = 64;
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 256;
  uint64_t init_seed = 1;
  /// Retrofit regime: checkpoint blob to load as the pretrained backbone.
  std::string init_checkpoint;
};

struct OptimizerConfig {
  double peak_lr = 3e-4;  // 5e-5 is the retrofit default, applied at load
  double warmup_frac = 0.01;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double grad_clip = 1.0;
  std::string schedule = "cosine";  // restarts every phase
};

struct EvalConfig {
  int64_t test_tokens = 50000;
  int64_t val_tokens = 50000;
  bool run_hellaswag = false;
  std::string hellaswag_path;
  int hellaswag_subset = 500;
  uint64_t hellaswag_seed = 0;
  bool run_emission = false;
  std::string emission_prompts_path;
  double emission_temperature = 0.7;
  double emission_top_p = 0.9;
  int emission_max_new_tokens = 50;
  bool run_grad_ortho = false;
  int grad_n_resample = 8;
  int grad_batch_windows = 8;
};

struct RunConfig {
  std::string condition_name = "desk_run";
  BackboneConfig backbone;
  std::string regime = "from_scratch";
  std::vector<sched::PhaseSpec> phases;
  std::vector<std::string> eval_domains;
  methods::MethodPolicy method;
  OptimizerConfig optimizer;
  EvalConfig eval;
  int batch_windows = 64;
  int checkpoint_every_steps = 0;  // 0 = phase boundaries only
  uint64_t eval_seed = 0;
  bool deterministic = true;
  std::string corpus_dir;
  std::string output_dir;

  sched::PhasePlan plan() const;
  void validate() const;

  /// Canonical serialization (stable key order) and the hash embedded into
  /// every artifact this run emits.
  std::string canonical_json() const;
  std::string hash() const;
};

RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

/// Environment overrides documented in the CLI reference:
/// DRIFTBENCH_OUTPUT_ROOT prefixes relative output dirs;
/// DRIFTBENCH_DETERMINISTIC ("0"/"1") overrides cfg.deterministic.
void apply_env_overrides(RunConfig& cfg);

}  // namespace driftbench::report
