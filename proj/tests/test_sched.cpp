#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"
#include "driftbench/report/artifacts.h"
#include "driftbench/sched/ledger.h"
#include "driftbench/sched/phase_plan.h"
#include "driftbench/sched/runner.h"
#include "support/desk.h"

using namespace driftbench;
namespace fs = std::filesystem;

namespace {

struct TempTree {
  fs::path root;
  explicit TempTree(const std::string& tag)
      : root(fs::temp_directory_path() / ("driftbench_" + tag)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE("phase plan validation") {
  sched::PhasePlan plan;
  plan.phases = {{"a", 10}, {"a", 10}};
  plan.eval_domains = {"a"};
  CHECK_THROWS_AS(plan.validate(), Error);
  plan.phases = {{"a", 10}, {"b", 10}};
  plan.eval_domains = {"a"};  // b missing
  CHECK_THROWS_AS(plan.validate(), Error);
  plan.eval_domains = {"a", "b", "c"};  // eval-only c is fine
  CHECK_NOTHROW(plan.validate());
}

TEST_CASE("a full desk run: matrix shape, accounting, checkpoints, provenance") {
  TempTree tmp("sched_full");
  testing::make_synth_corpus(tmp.root / "corpus", 30000, 3000, 3000, 7);
  auto cfg = testing::desk_config(tmp.root / "corpus", tmp.root / "run", 2048);
  cfg.eval.test_tokens = 3000;
  cfg.eval.val_tokens = 3000;

  sched::Runner runner(cfg);
  const auto outcome = runner.run();
  CHECK(outcome.finished);
  CHECK(outcome.completed_phases == 3);
  CHECK(outcome.matrix.num_phases() == 3);
  CHECK(outcome.matrix.num_domains() == 3);
  outcome.matrix.validate();

  const auto paths = report::RunPaths::in(cfg.output_dir);
  CHECK(fs::exists(paths.matrix_json));
  CHECK(fs::exists(paths.matrix_tsv));
  CHECK(fs::exists(paths.transfer_json));
  CHECK(fs::exists(paths.checkpoints / "phase1.ckpt"));
  CHECK(fs::exists(paths.checkpoints / "phase3.ckpt"));

  // Ledger audit: per-phase consumed tokens land in [budget, budget + batch).
  const auto events = sched::Ledger::read_all(paths.ledger);
  const int64_t batch_tokens = static_cast<int64_t>(cfg.batch_windows) * cfg.backbone.ctx;
  int phase_ends = 0;
  std::string active_domain;
  for (const auto& e : events) {
    const auto kind = e.at("event").get<std::string>();
    if (kind == "phase_start") active_domain = e.at("domain").get<std::string>();
    if (kind == "batch") {
      // Replay-free: every batch of a phase draws from that phase's domain.
      CHECK(e.at("domain").get<std::string>() == active_domain);
    }
    if (kind == "phase_end") {
      ++phase_ends;
      const auto consumed = e.at("consumed_tokens").get<int64_t>();
      CHECK(consumed >= 2048);
      CHECK(consumed < 2048 + batch_tokens);
    }
  }
  CHECK(phase_ends == 3);

  // Task-free: the training step signature carries token windows and a
  // learning rate only; there is no overload taking a domain tag.
  static_assert(std::is_invocable_r_v<double, decltype(&model::LanguageModel::train_batch),
                                      model::LanguageModel&,
                                      const std::vector<std::vector<uint32_t>>&, double>);

  // The matrix column of the first trained domain should improve by phase 1
  // relative to an untrained model: diagonal sanity, alpha PPL well below the
  // 257-symbol uniform ceiling.
  CHECK(outcome.matrix.at(1, "alpha") < 100.0);
}

TEST_CASE("zero-budget phase appends an eval row without touching parameters") {
  TempTree tmp("sched_zero");
  testing::make_synth_corpus(tmp.root / "corpus", 20000, 3000, 3000, 9);
  auto cfg = testing::desk_config(tmp.root / "corpus", tmp.root / "run", 1024);
  cfg.phases[2].token_budget = 0;  // gamma becomes evaluation-only
  cfg.eval.test_tokens = 3000;

  sched::Runner runner(cfg);
  const auto outcome = runner.run();
  CHECK(outcome.finished);
  CHECK(outcome.matrix.num_phases() == 3);
  // Phase 3 trains nothing: rows 2 and 3 are identical.
  for (const auto& d : cfg.eval_domains) {
    CHECK(outcome.matrix.at(2, d) == outcome.matrix.at(3, d));
  }
}

TEST_CASE("two identical runs produce byte-identical artifacts") {
  TempTree tmp("sched_det");
  testing::make_synth_corpus(tmp.root / "corpus", 20000, 3000, 3000, 3);
  auto cfg1 = testing::desk_config(tmp.root / "corpus", tmp.root / "run1", 1024);
  auto cfg2 = testing::desk_config(tmp.root / "corpus", tmp.root / "run2", 1024);
  sched::Runner(cfg1).run();
  sched::Runner(cfg2).run();
  const auto a = read_text_file(fs::path(cfg1.output_dir) / "transfer_report.json");
  const auto b = read_text_file(fs::path(cfg2.output_dir) / "transfer_report.json");
  CHECK(a == b);
  const auto ma = read_text_file(fs::path(cfg1.output_dir) / "matrix.tsv");
  const auto mb = read_text_file(fs::path(cfg2.output_dir) / "matrix.tsv");
  CHECK(ma == mb);
}

TEST_CASE("clean stop after phase 2 resumes to the uninterrupted matrix") {
  TempTree tmp("sched_resume");
  testing::make_synth_corpus(tmp.root / "corpus", 20000, 3000, 3000, 5);

  auto cfg_full = testing::desk_config(tmp.root / "corpus", tmp.root / "full", 1024);
  const auto full = sched::Runner(cfg_full).run();

  auto cfg_cut = testing::desk_config(tmp.root / "corpus", tmp.root / "cut", 1024);
  sched::StopCondition stop;
  stop.max_phases = 2;
  const auto part = sched::Runner(cfg_cut).run(stop);
  CHECK_FALSE(part.finished);
  CHECK(part.completed_phases == 2);

  const auto resumed = sched::Runner::resume(cfg_cut.output_dir);
  CHECK(resumed.finished);
  REQUIRE(resumed.matrix.cells.size() == full.matrix.cells.size());
  for (size_t r = 0; r < full.matrix.cells.size(); ++r) {
    for (size_t c = 0; c < full.matrix.cells[r].size(); ++c) {
      CHECK(resumed.matrix.cells[r][c] == full.matrix.cells[r][c]);  // bit-for-bit
    }
  }

  // Resuming the finished run is a no-op returning the final state.
  const auto again = sched::Runner::resume(cfg_cut.output_dir);
  CHECK(again.finished);
  CHECK(again.matrix.cells == resumed.matrix.cells);
}

TEST_CASE("mid-phase kill resumes from the periodic checkpoint bit-for-bit") {
  TempTree tmp("sched_kill");
  testing::make_synth_corpus(tmp.root / "corpus", 20000, 3000, 3000, 11);

  auto cfg_full = testing::desk_config(tmp.root / "corpus", tmp.root / "full", 1536);
  cfg_full.checkpoint_every_steps = 2;
  const auto full = sched::Runner(cfg_full).run();

  auto cfg_cut = testing::desk_config(tmp.root / "corpus", tmp.root / "cut", 1536);
  cfg_cut.checkpoint_every_steps = 2;
  sched::StopCondition kill;
  kill.kill_in_phase = 1;          // die inside phase 2
  kill.kill_after_phase_steps = 3; // past the step-2 checkpoint, before phase end
  const auto dead = sched::Runner(cfg_cut).run(kill);
  CHECK_FALSE(dead.finished);

  const auto resumed = sched::Runner::resume(cfg_cut.output_dir);
  CHECK(resumed.finished);
  REQUIRE(resumed.matrix.cells.size() == full.matrix.cells.size());
  for (size_t r = 0; r < full.matrix.cells.size(); ++r) {
    CHECK(resumed.matrix.cells[r] == full.matrix.cells[r]);
  }
}

TEST_CASE("resume guards: mutated config and missing run dir") {
  TempTree tmp("sched_guard");
  testing::make_synth_corpus(tmp.root / "corpus", 20000, 3000, 3000, 13);
  auto cfg = testing::desk_config(tmp.root / "corpus", tmp.root / "run", 512);
  sched::StopCondition stop;
  stop.max_phases = 1;
  sched::Runner(cfg).run(stop);

  // Mutate a config field without refreshing the stored hash.
  const auto cfg_path = fs::path(cfg.output_dir) / "config.json";
  auto text = read_text_file(cfg_path);
  const auto pos = text.find("\"batch_windows\": 8");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 18, "\"batch_windows\": 9");
  write_text_file_atomic(cfg_path, text);
  CHECK_THROWS_AS((void)sched::Runner::resume(cfg.output_dir), Error);

  CHECK_THROWS_AS((void)sched::Runner::resume(tmp.root / "nowhere"), Error);
}

TEST_CASE("corpus exhaustion before the budget signals budget-unmet") {
  TempTree tmp("sched_exhaust");
  testing::make_synth_corpus(tmp.root / "corpus", 6000, 2000, 2000, 15);
  auto cfg = testing::desk_config(tmp.root / "corpus", tmp.root / "run", 1 << 20);
  cfg.eval.test_tokens = 2000;
  sched::Runner runner(cfg);
  try {
    runner.run();
    FAIL("expected budget-unmet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BudgetUnmet);
    CHECK(std::string(e.what()).find("budget") != std::string::npos);
  }
}

TEST_CASE("runs refuse to clobber an existing run directory") {
  TempTree tmp("sched_clobber");
  testing::make_synth_corpus(tmp.root / "corpus", 10000, 2000, 2000, 17);
  auto cfg = testing::desk_config(tmp.root / "corpus", tmp.root / "run", 256);
  sched::StopCondition stop;
  stop.max_phases = 1;
  sched::Runner(cfg).run(stop);
  sched::Runner second(cfg);
  CHECK_THROWS_AS((void)second.run(), Error);
}
