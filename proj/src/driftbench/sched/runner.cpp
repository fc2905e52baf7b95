#include "driftbench/sched/runner.h"

#include <cmath>
#include <nlohmann/json.hpp>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"
#include "driftbench/eval/grad_ortho.h"
#include "driftbench/eval/hellaswag.h"
#include "driftbench/eval/perplexity.h"
#include "driftbench/metrics/ortho.h"
#include "driftbench/model/checkpoint.h"
#include "driftbench/report/artifacts.h"
#include "driftbench/report/render.h"
#include "driftbench/sched/ledger.h"

namespace driftbench::sched {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

model::TinyTransformerConfig backbone_config(const report::RunConfig& cfg) {
  model::TinyTransformerConfig mc;
  mc.backbone_id = cfg.backbone.id;
  mc.vocab = cfg.backbone.vocab;
  mc.ctx = cfg.backbone.ctx;
  mc.d_model = cfg.backbone.d_model;
  mc.n_heads = cfg.backbone.n_heads;
  mc.n_layers = cfg.backbone.n_layers;
  mc.d_ff = cfg.backbone.d_ff;
  mc.init_seed = cfg.backbone.init_seed;
  return mc;
}

void configure_optimizer(model::TinyTransformer& m, const report::OptimizerConfig& oc) {
  m.optimizer().beta1 = oc.beta1;
  m.optimizer().beta2 = oc.beta2;
  m.optimizer().eps = oc.eps;
  m.optimizer().weight_decay = oc.weight_decay;
  m.set_grad_clip(oc.grad_clip);
}

}  // namespace

Runner::Runner(report::RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  config_hash_ = cfg_.hash();
  model_ = std::make_unique<model::TinyTransformer>(backbone_config(cfg_));
  configure_optimizer(*model_, cfg_.optimizer);
  for (const auto& d : cfg_.eval_domains) {
    streams_.emplace(d, corpus::load_token_stream(fs::path(cfg_.corpus_dir) / (d + ".bin")));
  }
}

double Runner::lr_at(int64_t step, int64_t total_steps) const {
  // Cosine decay with linear warmup, restarted every phase. `step` is 0-based
  // within the phase.
  const double peak = cfg_.optimizer.peak_lr;
  if (total_steps <= 1) return peak;
  const int64_t warmup =
      std::max<int64_t>(1, static_cast<int64_t>(std::llround(
                               cfg_.optimizer.warmup_frac * static_cast<double>(total_steps))));
  if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (cfg_.optimizer.schedule == "constant") return peak;
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return 0.5 * peak * (1.0 + std::cos(M_PI * progress));
}

std::vector<double> Runner::eval_row() const {
  const auto n = cfg_.eval_domains.size();
  std::vector<double> row(n, 0.0);
  // Fan-out across domains is safe on the read-only model; results land in
  // indexed slots and merge in eval_domains order either way.
#pragma omp parallel for schedule(dynamic) if (!cfg_.deterministic)
  for (size_t i = 0; i < n; ++i) {
    const auto& stream = streams_.at(cfg_.eval_domains[i]);
    row[i] = eval::eval_ppl_cell(*model_, stream.test_span());
  }
  return row;
}

void Runner::run_probes(int phase_1based) {
  const auto paths = report::RunPaths::in(cfg_.output_dir);
  if (cfg_.eval.run_hellaswag && !cfg_.eval.hellaswag_path.empty()) {
    auto items = eval::load_hellaswag_items(cfg_.eval.hellaswag_path);
    items = eval::select_subset(std::move(items),
                                static_cast<size_t>(cfg_.eval.hellaswag_subset),
                                cfg_.eval.hellaswag_seed);
    hellaswag_rows_.emplace_back(phase_1based, eval::hellaswag_accuracy(*model_, items));
    report::write_hellaswag_json(hellaswag_rows_, config_hash_, paths.hellaswag_json);
  }
  if (cfg_.eval.run_emission && !cfg_.eval.emission_prompts_path.empty()) {
    const auto prompts = eval::load_prompt_set(cfg_.eval.emission_prompts_path);
    corpus::ByteTokenizer tok;
    model::SamplingConfig sc;
    sc.temperature = cfg_.eval.emission_temperature;
    sc.top_p = cfg_.eval.emission_top_p;
    sc.max_new_tokens = cfg_.eval.emission_max_new_tokens;
    sc.seed = cfg_.eval_seed;
    auto records = eval::emission_probe(*model_, tok, prompts, sc, phase_1based);
    eval::apply_manual_overrides(records, paths.root / "emission_overrides.json");
    report::append_emissions(records, config_hash_, cfg_.eval_seed, paths.emissions_jsonl);
  }
  if (cfg_.eval.run_grad_ortho) {
    eval::GradOrthoOptions go;
    go.n_resample = cfg_.eval.grad_n_resample;
    go.batch_windows = cfg_.eval.grad_batch_windows;
    go.seed = cfg_.eval_seed;
    const auto& frozen = model_->frozen();
    for (const auto& g : model_->group_names()) {
      if (!frozen.count(g)) go.subset.insert(g);
    }
    std::map<std::string, std::span<const uint32_t>> train;
    for (const auto& d : cfg_.eval_domains) train.emplace(d, streams_.at(d).train_span());
    grad_rows_.emplace_back(phase_1based, eval::grad_ortho_probe(*model_, train, phase_1based, go));
    report::write_grad_ortho_json(grad_rows_, config_hash_, paths.grad_ortho_json);
  }
}

void Runner::eval_after_phase(int phase_1based, metrics::PplMatrix& matrix) {
  const auto paths = report::RunPaths::in(cfg_.output_dir);
  Ledger ledger(paths.ledger);
  const auto row = eval_row();
  matrix.cells.push_back(row);
  matrix.phases.push_back(cfg_.phases[static_cast<size_t>(phase_1based - 1)].domain);

  json cells = json::object();
  for (size_t i = 0; i < cfg_.eval_domains.size(); ++i) cells[cfg_.eval_domains[i]] = row[i];
  ledger.append({{"event", "eval_row"}, {"phase", phase_1based}, {"cells", cells}});

  report::write_matrix_json(matrix, cfg_.condition_name, config_hash_, paths.matrix_json);
  report::write_matrix_tsv(matrix, paths.matrix_tsv);
  if (matrix.num_phases() >= 2) {
    report::write_transfer_report(matrix, cfg_.condition_name, config_hash_,
                                  paths.transfer_json, paths.transfer_txt);
  }
  run_probes(phase_1based);
}

RunOutcome Runner::run(const StopCondition& stop) {
  const auto paths = report::RunPaths::in(cfg_.output_dir);
  require(!fs::exists(paths.ledger), Errc::BadConfig,
          "output dir already holds a run (use resume): " + cfg_.output_dir);
  fs::create_directories(paths.root);
  fs::create_directories(paths.checkpoints);

  // config.json carries the canonical config plus its own hash; resume
  // recomputes and compares.
  json cfg_json = json::parse(cfg_.canonical_json());
  cfg_json["config_hash"] = config_hash_;
  write_text_file_atomic(paths.config, cfg_json.dump(2) + "\n");

  if (sched::regime_from_name(cfg_.regime) == Regime::Retrofit) {
    model::load_checkpoint(*model_, cfg_.backbone.init_checkpoint);
    model_->set_frozen({});
    model_->reset_optimizer_state();
  }

  Ledger ledger(paths.ledger);
  ledger.append({{"event", "run_start"},
                 {"config_hash", config_hash_},
                 {"condition", cfg_.condition_name},
                 {"deterministic", cfg_.deterministic}});

  metrics::PplMatrix matrix;
  matrix.eval_domains = cfg_.eval_domains;
  return drive(stop, 0, 0, 0, std::move(matrix));
}

RunOutcome Runner::drive(const StopCondition& stop, int start_phase, int64_t start_offset,
                         int64_t start_step, metrics::PplMatrix matrix) {
  const auto paths = report::RunPaths::in(cfg_.output_dir);
  Ledger ledger(paths.ledger);
  const int ctx = cfg_.backbone.ctx;
  const int64_t tokens_per_batch = static_cast<int64_t>(cfg_.batch_windows) * ctx;
  const int total_phases = static_cast<int>(cfg_.phases.size());

  int64_t phase_offset = start_offset;  // predicted tokens consumed this phase
  int64_t phase_step = start_step;

  for (int p = start_phase; p < total_phases; ++p) {
    if (stop.max_phases >= 0 && p >= stop.max_phases) {
      return RunOutcome{matrix, false, p};
    }
    const auto& phase = cfg_.phases[static_cast<size_t>(p)];
    const auto prep = methods::prepare_phase(*model_, cfg_.method, p + 1);

    if (phase_offset == 0 && phase_step == 0) {
      json groups = json::array();
      for (const auto& g : prep.trainable_groups) groups.push_back(g);
      ledger.append({{"event", "phase_start"},
                     {"phase", p + 1},
                     {"domain", phase.domain},
                     {"token_budget", phase.token_budget},
                     {"trainable_params", prep.trainable_params},
                     {"trainable_groups", groups}});
    }

    const auto& stream = streams_.at(phase.domain);
    const auto train = stream.train_span();
    const int64_t total_steps =
        (phase.token_budget + tokens_per_batch - 1) / tokens_per_batch;

    while (phase_offset < phase.token_budget) {
      // The replay-free check: every window of this batch must come from the
      // active phase domain's train split.
      const int64_t window_start = phase_offset;  // predicted-token offset == stream offset
      const int64_t stream_end =
          window_start + tokens_per_batch + 1;  // +1 boundary context token
      if (stream_end > static_cast<int64_t>(train.size())) {
        fail(Errc::BudgetUnmet,
             phase.domain + " train split exhausted after " + std::to_string(phase_offset) +
                 " of " + std::to_string(phase.token_budget) + " budget tokens");
      }
      std::vector<std::vector<uint32_t>> batch;
      batch.reserve(static_cast<size_t>(cfg_.batch_windows));
      for (int w = 0; w < cfg_.batch_windows; ++w) {
        const int64_t begin = window_start + static_cast<int64_t>(w) * ctx;
        batch.emplace_back(train.begin() + begin, train.begin() + begin + ctx + 1);
      }
      require(phase.domain == cfg_.phases[static_cast<size_t>(p)].domain, Errc::Precondition,
              "batch provenance violates the replay-free invariant");
      ledger.append({{"event", "batch"},
                     {"phase", p + 1},
                     {"step", phase_step},
                     {"domain", phase.domain},
                     {"stream_begin", window_start},
                     {"stream_end", stream_end},
                     {"windows", cfg_.batch_windows}});

      // The training step sees raw token windows only: no domain tag reaches
      // the model or the method (the task-free invariant is the signature).
      const double lr = lr_at(phase_step, total_steps);
      model_->train_batch(batch, lr);
      phase_offset += tokens_per_batch;
      ++phase_step;

      if (cfg_.checkpoint_every_steps > 0 && phase_step % cfg_.checkpoint_every_steps == 0 &&
          phase_offset < phase.token_budget) {
        const auto ck = paths.checkpoints /
                        ("phase" + std::to_string(p + 1) + "_step" + std::to_string(phase_step) +
                         ".ckpt");
        model::CheckpointMeta meta{config_hash_, p, p, phase_offset, phase_step};
        model::save_checkpoint(*model_, meta, ck);
        ledger.append({{"event", "checkpoint"},
                       {"phase", p + 1},
                       {"path", ck.string()},
                       {"phase_token_offset", phase_offset},
                       {"phase_step", phase_step}});
      }
      if (stop.kill_in_phase == p && stop.kill_after_phase_steps >= 0 &&
          phase_step >= stop.kill_after_phase_steps) {
        // Simulated kill: no checkpoint, no ledger close.
        return RunOutcome{matrix, false, p};
      }
    }

    ledger.append({{"event", "phase_end"},
                   {"phase", p + 1},
                   {"consumed_tokens", phase_offset},
                   {"steps", phase_step}});
    eval_after_phase(p + 1, matrix);

    const auto ck = paths.checkpoints / ("phase" + std::to_string(p + 1) + ".ckpt");
    model::CheckpointMeta meta{config_hash_, p + 1, p + 1, 0, 0};
    model::save_checkpoint(*model_, meta, ck);
    ledger.append({{"event", "checkpoint"},
                   {"phase", p + 1},
                   {"path", ck.string()},
                   {"phase_token_offset", 0},
                   {"phase_step", 0}});
    phase_offset = 0;
    phase_step = 0;
  }

  ledger.append({{"event", "run_end"}, {"completed_phases", total_phases}});
  return RunOutcome{matrix, true, total_phases};
}

RunOutcome Runner::resume(const fs::path& run_dir, const StopCondition& stop) {
  const auto paths = report::RunPaths::in(run_dir);
  require(fs::exists(paths.config) && fs::exists(paths.ledger), Errc::CorruptRun,
          "run dir lacks config.json or ledger.jsonl");

  // Config-hash guard: the stored hash must match a recomputation.
  json cfg_json = json::parse(read_text_file(paths.config));
  require(cfg_json.contains("config_hash"), Errc::CorruptRun, "config.json lacks config_hash");
  const std::string stored_hash = cfg_json["config_hash"].get<std::string>();
  auto cfg = report::run_config_from_json_text(cfg_json.dump());
  require(cfg.hash() == stored_hash, Errc::CorruptRun,
          "config hash mismatch: stored " + stored_hash + ", recomputed " + cfg.hash());

  Runner runner(cfg);

  // Replay the ledger: matrix rows for completed phases, latest checkpoint.
  const auto events = Ledger::read_all(paths.ledger);
  metrics::PplMatrix matrix;
  matrix.eval_domains = cfg.eval_domains;
  std::string last_checkpoint;
  bool run_ended = false;
  for (const auto& e : events) {
    const std::string kind = e.at("event").get<std::string>();
    if (kind == "eval_row") {
      const int phase = e.at("phase").get<int>();
      std::vector<double> row;
      for (const auto& d : cfg.eval_domains) row.push_back(e.at("cells").at(d).get<double>());
      matrix.cells.push_back(row);
      matrix.phases.push_back(cfg.phases[static_cast<size_t>(phase - 1)].domain);
    } else if (kind == "checkpoint") {
      last_checkpoint = e.at("path").get<std::string>();
    } else if (kind == "run_end") {
      run_ended = true;
    }
  }

  Ledger ledger(paths.ledger);
  if (run_ended) {
    // Resuming a finished run is a no-op returning the final state.
    return RunOutcome{matrix, true, static_cast<int>(cfg.phases.size())};
  }

  // Completed-phase probe rows reload from their artifacts so post-resume
  // writes keep the full history.
  if (fs::exists(paths.hellaswag_json)) {
    runner.hellaswag_rows_ = report::read_hellaswag_json(paths.hellaswag_json);
  }
  if (fs::exists(paths.grad_ortho_json)) {
    runner.grad_rows_ = report::read_grad_ortho_json(paths.grad_ortho_json);
  }

  int start_phase = 0;
  int64_t start_offset = 0, start_step = 0;
  if (!last_checkpoint.empty()) {
    if (runner.cfg_.method.kind == methods::MethodKind::LowRankAdapter ||
        runner.cfg_.method.kind == methods::MethodKind::FrozenAdapter) {
      // Adapters exist in any checkpoint taken at or after phase 1 prep.
      runner.model_->attach_low_rank_adapters(runner.cfg_.method.target_tensors,
                                              runner.cfg_.method.rank,
                                              runner.cfg_.method.adapter_scale);
    }
    const auto meta = model::load_checkpoint(*runner.model_, last_checkpoint);
    require(meta.config_hash == stored_hash, Errc::CorruptRun,
            "checkpoint belongs to another config");
    require(meta.completed_phases == static_cast<int>(matrix.cells.size()), Errc::CorruptRun,
            "ledger rows disagree with checkpoint phase count");
    start_phase = meta.active_phase;
    start_offset = meta.phase_token_offset;
    start_step = meta.phase_step;
  } else if (sched::regime_from_name(cfg.regime) == Regime::Retrofit) {
    model::load_checkpoint(*runner.model_, cfg.backbone.init_checkpoint);
    runner.model_->set_frozen({});
  }

  ledger.append({{"event", "resume"},
                 {"from_checkpoint", last_checkpoint},
                 {"start_phase", start_phase},
                 {"phase_token_offset", start_offset}});
  return runner.drive(stop, start_phase, start_offset, start_step, std::move(matrix));
}

}  // namespace driftbench::sched
