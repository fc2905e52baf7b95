#include "driftbench/report/run_config.h"

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "driftbench/core/error.h"
#include "driftbench/core/hash.h"
#include "driftbench/core/io.h"

namespace driftbench::report {

using nlohmann::json;

sched::PhasePlan RunConfig::plan() const {
  sched::PhasePlan p;
  p.phases = phases;
  p.regime = sched::regime_from_name(regime);
  p.eval_domains = eval_domains;
  return p;
}

void RunConfig::validate() const {
  plan().validate();
  method.validate();
  require(batch_windows >= 1, Errc::BadConfig, "batch_windows must be >= 1");
  require(!corpus_dir.empty(), Errc::BadConfig, "corpus_dir is required");
  require(!output_dir.empty(), Errc::BadConfig, "output_dir is required");
  if (sched::regime_from_name(regime) == sched::Regime::Retrofit) {
    require(!backbone.init_checkpoint.empty(), Errc::BadConfig,
            "retrofit regime needs backbone.init_checkpoint");
  }
}

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["condition_name"] = c.condition_name;
  j["backbone"] = {{"id", c.backbone.id},
                   {"vocab", c.backbone.vocab},
                   {"ctx", c.backbone.ctx},
                   {"d_model", c.backbone.d_model},
                   {"n_heads", c.backbone.n_heads},
                   {"n_layers", c.backbone.n_layers},
                   {"d_ff", c.backbone.d_ff},
                   {"init_seed", c.backbone.init_seed},
                   {"init_checkpoint", c.backbone.init_checkpoint}};
  j["regime"] = c.regime;
  j["phases"] = json::array();
  for (const auto& p : c.phases) {
    j["phases"].push_back({{"domain", p.domain}, {"token_budget", p.token_budget}});
  }
  j["eval_domains"] = c.eval_domains;
  j["method"] = {{"kind", methods::method_kind_name(c.method.kind)},
                 {"rank", c.method.rank},
                 {"adapter_scale", c.method.adapter_scale},
                 {"target_tensors", c.method.target_tensors},
                 {"phase1_full", c.method.phase1_full}};
  j["optimizer"] = {{"peak_lr", c.optimizer.peak_lr},
                    {"warmup_frac", c.optimizer.warmup_frac},
                    {"weight_decay", c.optimizer.weight_decay},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps},
                    {"grad_clip", c.optimizer.grad_clip},
                    {"schedule", c.optimizer.schedule}};
  j["eval"] = {{"test_tokens", c.eval.test_tokens},
               {"val_tokens", c.eval.val_tokens},
               {"run_hellaswag", c.eval.run_hellaswag},
               {"hellaswag_path", c.eval.hellaswag_path},
               {"hellaswag_subset", c.eval.hellaswag_subset},
               {"hellaswag_seed", c.eval.hellaswag_seed},
               {"run_emission", c.eval.run_emission},
               {"emission_prompts_path", c.eval.emission_prompts_path},
               {"emission_temperature", c.eval.emission_temperature},
               {"emission_top_p", c.eval.emission_top_p},
               {"emission_max_new_tokens", c.eval.emission_max_new_tokens},
               {"run_grad_ortho", c.eval.run_grad_ortho},
               {"grad_n_resample", c.eval.grad_n_resample},
               {"grad_batch_windows", c.eval.grad_batch_windows}};
  j["batch_windows"] = c.batch_windows;
  j["checkpoint_every_steps"] = c.checkpoint_every_steps;
  j["eval_seed"] = c.eval_seed;
  j["deterministic"] = c.deterministic;
  j["corpus_dir"] = c.corpus_dir;
  j["output_dir"] = c.output_dir;
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig from_json(const json& j) {
  RunConfig c;
  maybe(j, "condition_name", c.condition_name);
  if (j.contains("backbone")) {
    const auto& b = j["backbone"];
    maybe(b, "id", c.backbone.id);
    maybe(b, "vocab", c.backbone.vocab);
    maybe(b, "ctx", c.backbone.ctx);
    maybe(b, "d_model", c.backbone.d_model);
    maybe(b, "n_heads", c.backbone.n_heads);
    maybe(b, "n_layers", c.backbone.n_layers);
    maybe(b, "d_ff", c.backbone.d_ff);
    maybe(b, "init_seed", c.backbone.init_seed);
    maybe(b, "init_checkpoint", c.backbone.init_checkpoint);
  }
  maybe(j, "regime", c.regime);
  if (j.contains("phases")) {
    c.phases.clear();
    for (const auto& p : j["phases"]) {
      c.phases.push_back(
          {p.at("domain").get<std::string>(), p.at("token_budget").get<int64_t>()});
    }
  }
  maybe(j, "eval_domains", c.eval_domains);
  if (j.contains("method")) {
    const auto& m = j["method"];
    if (m.contains("kind")) {
      c.method.kind = methods::method_kind_from_name(m.at("kind").get<std::string>());
    }
    maybe(m, "rank", c.method.rank);
    maybe(m, "adapter_scale", c.method.adapter_scale);
    maybe(m, "target_tensors", c.method.target_tensors);
    maybe(m, "phase1_full", c.method.phase1_full);
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    maybe(o, "peak_lr", c.optimizer.peak_lr);
    maybe(o, "warmup_frac", c.optimizer.warmup_frac);
    maybe(o, "weight_decay", c.optimizer.weight_decay);
    maybe(o, "beta1", c.optimizer.beta1);
    maybe(o, "beta2", c.optimizer.beta2);
    maybe(o, "eps", c.optimizer.eps);
    maybe(o, "grad_clip", c.optimizer.grad_clip);
    maybe(o, "schedule", c.optimizer.schedule);
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    maybe(e, "test_tokens", c.eval.test_tokens);
    maybe(e, "val_tokens", c.eval.val_tokens);
    maybe(e, "run_hellaswag", c.eval.run_hellaswag);
    maybe(e, "hellaswag_path", c.eval.hellaswag_path);
    maybe(e, "hellaswag_subset", c.eval.hellaswag_subset);
    maybe(e, "hellaswag_seed", c.eval.hellaswag_seed);
    maybe(e, "run_emission", c.eval.run_emission);
    maybe(e, "emission_prompts_path", c.eval.emission_prompts_path);
    maybe(e, "emission_temperature", c.eval.emission_temperature);
    maybe(e, "emission_top_p", c.eval.emission_top_p);
    maybe(e, "emission_max_new_tokens", c.eval.emission_max_new_tokens);
    maybe(e, "run_grad_ortho", c.eval.run_grad_ortho);
    maybe(e, "grad_n_resample", c.eval.grad_n_resample);
    maybe(e, "grad_batch_windows", c.eval.grad_batch_windows);
  }
  maybe(j, "batch_windows", c.batch_windows);
  maybe(j, "checkpoint_every_steps", c.checkpoint_every_steps);
  maybe(j, "eval_seed", c.eval_seed);
  maybe(j, "deterministic", c.deterministic);
  maybe(j, "corpus_dir", c.corpus_dir);
  maybe(j, "output_dir", c.output_dir);
  return c;
}

}  // namespace

std::string RunConfig::canonical_json() const {
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  return to_json(*this).dump(2) + "\n";
}

std::string RunConfig::hash() const {
  const std::string text = canonical_json();
  return hash_hex(fnv1a64(text.data(), text.size()));
}

RunConfig run_config_from_json_text(const std::string& text) {
  return from_json(json::parse(text));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json_text(read_text_file(path));
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  write_text_file_atomic(path, cfg.canonical_json());
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* root = std::getenv("DRIFTBENCH_OUTPUT_ROOT")) {
    std::filesystem::path out(cfg.output_dir);
    if (out.is_relative()) cfg.output_dir = (std::filesystem::path(root) / out).string();
  }
  if (const char* det = std::getenv("DRIFTBENCH_DETERMINISTIC")) {
    cfg.deterministic = std::string(det) != "0";
  }
}

}  // namespace driftbench::report
