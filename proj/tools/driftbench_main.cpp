#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"
#include "driftbench/core/rng.h"
#include "driftbench/corpus/ingest.h"
#include "driftbench/corpus/synthetic.h"
#include "driftbench/eval/hellaswag.h"
#include "driftbench/fixtures/fixtures.h"
#include "driftbench/report/artifacts.h"
#include "driftbench/report/render.h"
#include "driftbench/report/run_config.h"
#include "driftbench/sched/runner.h"

namespace db = driftbench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct PrepareArgs {
  std::string out_dir;
  bool synthetic = false;
  int64_t tokens = 7'000'000;
  int64_t test_tokens = 50'000;
  int64_t val_tokens = 50'000;
  uint64_t seed = 7;
  std::string text_dir;
  std::string domain;
};

void write_desk_prompts(const std::vector<db::corpus::TokenStream*>& streams,
                        const fs::path& path) {
  db::corpus::ByteTokenizer tok;
  json doc;
  doc["version"] = "desk-prompts-v1";
  doc["domains"] = json::array();
  for (const auto* s : streams) {
    const auto val = s->val_span();
    json prompts = json::array();
    for (int i = 0; i < 3; ++i) {
      const size_t start = static_cast<size_t>(i) * 200;
      std::span<const uint32_t> slice = val.subspan(start, 48);
      prompts.push_back(tok.decode(slice));
    }
    doc["domains"].push_back({{"domain", s->domain}, {"prompts", prompts}});
  }
  db::write_text_file_atomic(path, doc.dump(2) + "\n");
}

int cmd_prepare(const PrepareArgs& args) {
  const fs::path out(args.out_dir);
  fs::create_directories(out);
  db::corpus::ByteTokenizer tok;
  db::corpus::IngestOptions opts;
  opts.test_tokens = args.test_tokens;
  opts.val_tokens = args.val_tokens;
  opts.target_tokens = args.tokens;

  if (args.synthetic) {
    // Three synthetic desk domains with deliberately disjoint statistics.
    const std::vector<std::pair<std::string, db::corpus::SyntheticKind>> domains = {
        {"alpha", db::corpus::SyntheticKind::Words},
        {"beta", db::corpus::SyntheticKind::Code},
        {"gamma", db::corpus::SyntheticKind::Caps},
    };
    std::vector<db::corpus::TokenStream> streams;
    for (size_t i = 0; i < domains.size(); ++i) {
      const auto& [name, kind] = domains[i];
      db::corpus::DomainSpec spec{name, "synthetic:" + name, std::nullopt, std::nullopt,
                                  std::nullopt};
      const auto docs = db::corpus::synthetic_documents(kind, args.tokens + args.tokens / 10,
                                                        db::derive_seed(args.seed, {i}));
      size_t next = 0;
      auto next_doc = [&](std::string& doc) {
        if (next >= docs.size()) return false;
        doc = docs[next++];
        return true;
      };
      auto stream = db::corpus::ingest_documents(spec, tok, next_doc, opts);
      db::corpus::save_token_stream(stream, out / (name + ".bin"));
      std::cout << name << ": " << stream.tokens.size() << " tokens, " << stream.doc_count
                << " docs\n";
      streams.push_back(std::move(stream));
    }
    // Desk evaluation assets derived from the same corpora.
    std::vector<std::pair<std::string, std::span<const uint32_t>>> vals;
    for (auto& s : streams) vals.emplace_back(s.domain, s.val_span());
    const auto items = db::eval::make_desk_items(vals, 500, 48, 16, args.seed);
    db::eval::save_hellaswag_items(items, out / "hellaswag_items.json");
    write_desk_prompts({&streams[0], &streams[1], &streams[2]}, out / "emission_prompts.json");
    std::cout << "wrote desk eval assets (hellaswag_items.json, emission_prompts.json)\n";
    return 0;
  }

  db::require(!args.text_dir.empty() && !args.domain.empty(), db::Errc::BadConfig,
              "plain-text mode needs --text-dir and --domain");
  const auto registry = db::corpus::paper_domain_registry();
  const auto* spec = registry.find(args.domain);
  db::corpus::DomainSpec desk_spec;
  if (spec == nullptr) {
    desk_spec = {args.domain, "text-dir:" + args.text_dir, std::nullopt, std::nullopt,
                 std::nullopt};
    spec = &desk_spec;
  }
  auto stream = db::corpus::ingest_text_dir(*spec, tok, args.text_dir, opts);
  db::corpus::save_token_stream(stream, out / (args.domain + ".bin"));
  std::cout << args.domain << ": " << stream.tokens.size() << " tokens, " << stream.doc_count
            << " docs (skips: short=" << stream.skips.too_short_chars
            << " long=" << stream.skips.too_long_chars
            << " few-tokens=" << stream.skips.too_few_tokens
            << " decode=" << stream.skips.decode_error << ")\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            int max_phases) {
  auto cfg = db::report::load_run_config(config_path);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    db::require(eq != std::string::npos, db::Errc::BadConfig,
                "override must be key=value: " + ov);
    const std::string key = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    if (key == "output_dir") cfg.output_dir = value;
    else if (key == "corpus_dir") cfg.corpus_dir = value;
    else if (key == "condition_name") cfg.condition_name = value;
    else if (key == "budget") {
      for (auto& p : cfg.phases) p.token_budget = std::stoll(value);
    } else if (key == "method") {
      cfg.method.kind = db::methods::method_kind_from_name(value);
    } else {
      db::fail(db::Errc::BadConfig, "unknown override key " + key);
    }
  }
  db::report::apply_env_overrides(cfg);
  db::sched::Runner runner(cfg);
  db::sched::StopCondition stop;
  stop.max_phases = max_phases;
  const auto outcome = runner.run(stop);
  std::cout << (outcome.finished ? "run finished: " : "run stopped: ")
            << outcome.completed_phases << " phase(s), artifacts in " << cfg.output_dir << "\n";
  return 0;
}

int cmd_resume(const std::string& run_dir) {
  const auto outcome = db::sched::Runner::resume(run_dir);
  std::cout << (outcome.finished ? "run finished: " : "run stopped: ")
            << outcome.completed_phases << " phase(s)\n";
  return 0;
}

int cmd_metrics(const std::string& matrix_path) {
  const auto m = db::report::read_matrix_any(matrix_path);
  std::cout << db::report::render_transfer_report(m);
  return 0;
}

int cmd_verify_fixtures(const std::string& dir) {
  const auto fixtures = db::fixtures::load_fixture_dir(dir);
  const auto results = db::fixtures::verify_all(fixtures);
  std::cout << db::fixtures::render_results(results);
  int failures = 0;
  for (const auto& r : results) failures += r.pass ? 0 : 1;
  std::cout << results.size() - static_cast<size_t>(failures) << "/" << results.size()
            << " fixtures pass\n";
  return failures == 0 ? 0 : 1;
}

int cmd_report(const std::string& run_dir, const std::string& compare, bool force) {
  db::report::ReportOptions opts;
  opts.force = force;
  if (!compare.empty()) opts.compare_dir = compare;
  db::report::render_run_report(run_dir, opts);
  std::cout << db::read_text_file(fs::path(run_dir) / "report.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual-pretraining testbed and measurement suite"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare-corpus",
                                     "tokenize per-domain corpora into flat token streams");
  prepare->add_option("--out", prep.out_dir, "corpus output directory")->required();
  prepare->add_flag("--synthetic", prep.synthetic, "generate the 3-domain synthetic desk corpus");
  prepare->add_option("--tokens", prep.tokens, "target tokens per domain");
  prepare->add_option("--test-tokens", prep.test_tokens, "held-out test split size");
  prepare->add_option("--val-tokens", prep.val_tokens, "held-out val split size");
  prepare->add_option("--seed", prep.seed, "generation seed");
  prepare->add_option("--text-dir", prep.text_dir, "plain-text document directory");
  prepare->add_option("--domain", prep.domain, "domain name for --text-dir mode");

  std::string run_config;
  std::vector<std::string> run_overrides;
  int run_max_phases = -1;
  auto* run = app.add_subcommand("run", "execute a continual run end to end");
  run->add_option("--config", run_config, "run config JSON")->required();
  run->add_option("--set", run_overrides, "override config fields (key=value)");
  run->add_option("--max-phases", run_max_phases, "stop cleanly after N phases");

  std::string resume_dir;
  auto* resume = app.add_subcommand("resume", "resume an interrupted run");
  resume->add_option("--run-dir", resume_dir, "run directory")->required();

  std::string matrix_path;
  auto* metrics_cmd = app.add_subcommand("metrics", "compute transfer metrics from a matrix file");
  metrics_cmd->add_option("--matrix", matrix_path, "matrix .tsv or .json")->required();

  std::string fixtures_dir = "assets/fixtures";
  auto* verify = app.add_subcommand("verify-fixtures",
                                    "recompute the published oracle fixtures");
  verify->add_option("--fixtures", fixtures_dir, "fixture directory");

  std::string report_dir, compare_dir;
  bool force = false;
  auto* report = app.add_subcommand("report", "render report + figure data from run artifacts");
  report->add_option("--run-dir", report_dir, "run directory")->required();
  report->add_option("--compare", compare_dir, "second run directory for side-by-side");
  report->add_flag("--force", force, "merge artifacts despite config-hash mismatch");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(prep);
    if (run->parsed()) return cmd_run(run_config, run_overrides, run_max_phases);
    if (resume->parsed()) return cmd_resume(resume_dir);
    if (metrics_cmd->parsed()) return cmd_metrics(matrix_path);
    if (verify->parsed()) return cmd_verify_fixtures(fixtures_dir);
    if (report->parsed()) return cmd_report(report_dir, compare_dir, force);
  } catch (const db::Error& e) {
    json err{{"error", db::errc_name(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err{{"error", "unexpected"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
