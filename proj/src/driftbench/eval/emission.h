#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "driftbench/corpus/token_stream.h"
#include "driftbench/model/language_model.h"

namespace driftbench::eval {

/// Emission types for probe continuations. Bleed labels mark the signature of
/// a trained domain surfacing in the continuation; the two coherent labels
/// cover prose-family and Chinese-prompt outputs.
enum class EmissionLabel {
  ProseCoherent,
  PythonBleed,
  MathBleed,
  ChineseBleed,
  JsBleed,
  CjkCoherent,
  Repetition,
  Gibberish,
};

const char* emission_label_name(EmissionLabel label);
EmissionLabel emission_label_from_name(const std::string& name);

/// Deterministic rule cascade:
///   1. CJK codepoint ratio > 0.3  -> CjkCoherent on a Chinese prompt,
///      ChineseBleed otherwise
///   2. code-signal score >= 4     -> PythonBleed / JsBleed by keyword family
///      (license boilerplate counts as code: it is a code-corpus artifact)
///   3. math-signal score >= 2     -> MathBleed
///   4. any word n-gram (3<=n<=8) repeated >= 5 times -> Repetition
///   5. word-validity ratio < 0.4  -> Gibberish
///   else ProseCoherent.
EmissionLabel classify_emission(const std::string& prompt_domain, const std::string& text);

// Signal scores exposed for tests and threshold audits.
double cjk_ratio(const std::string& text);
int code_signal_score(const std::string& text, int* python_hits, int* js_hits);
int math_signal_score(const std::string& text);
bool has_repeated_ngram(const std::string& text, int min_n = 3, int max_n = 8,
                        int min_repeats = 5);
double word_validity_ratio(const std::string& text);

struct EmissionRecord {
  std::string prompt_domain;
  std::string prompt_text;
  int phase = 0;
  int prompt_index = 0;
  std::string output_text;
  EmissionLabel label = EmissionLabel::ProseCoherent;
  std::string label_source = "auto";  // manual overrides win in aggregates
};

struct PromptSet {
  std::string version;
  // domain -> its fixed prompts (3 per domain).
  std::vector<std::pair<std::string, std::vector<std::string>>> prompts;
};

PromptSet load_prompt_set(const std::filesystem::path& path);

/// Runs every prompt through seeded sampling and attaches auto labels. The
/// per-prompt seed derives from cfg.seed, the phase, and the prompt position.
std::vector<EmissionRecord> emission_probe(const model::LanguageModel& m,
                                           const corpus::Tokenizer& tok, const PromptSet& prompts,
                                           model::SamplingConfig cfg, int phase);

/// Applies a manual-override sidecar (JSON list of {phase, domain,
/// prompt_index, label}) on top of auto labels.
void apply_manual_overrides(std::vector<EmissionRecord>& records,
                            const std::filesystem::path& sidecar);

}  // namespace driftbench::eval
