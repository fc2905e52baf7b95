#include "driftbench/model/language_model.h"

#include "driftbench/core/error.h"
#include "driftbench/model/sampling.h"

namespace driftbench::model {

NllResult LanguageModel::nll_on_window(std::span<const uint32_t> window) const {
  require(window.size() >= 2, Errc::Precondition, "window needs at least 2 tokens");
  const auto nll = position_nll(window);
  NllResult r;
  for (double v : nll) r.total_nll += v;
  r.token_count = static_cast<int64_t>(nll.size());
  return r;
}

std::vector<uint32_t> LanguageModel::generate(std::span<const uint32_t> prompt,
                                              const SamplingConfig& cfg) const {
  require(!prompt.empty(), Errc::Precondition, "empty prompt");
  require(cfg.max_new_tokens >= 1, Errc::Precondition, "max_new_tokens must be >= 1");
  Rng rng(cfg.seed);
  std::vector<uint32_t> context(prompt.begin(), prompt.end());
  std::vector<uint32_t> out;
  out.reserve(static_cast<size_t>(cfg.max_new_tokens));
  for (int step = 0; step < cfg.max_new_tokens; ++step) {
    std::span<const uint32_t> prefix(context);
    if (static_cast<int>(prefix.size()) > context_len()) {
      prefix = prefix.subspan(prefix.size() - static_cast<size_t>(context_len()));
    }
    const auto logits = next_token_logits(prefix);
    const uint32_t tok = sample_token(logits, cfg.temperature, cfg.top_p, rng);
    out.push_back(tok);
    if (tok == eos_id()) break;
    context.push_back(tok);
  }
  return out;
}

int64_t LanguageModel::group_param_count(const std::string& group) const {
  int64_t n = 0;
  bool seen = false;
  for (const auto& t : tensors()) {
    if (t.group == group) {
      n += t.size;
      seen = true;
    }
  }
  require(seen, Errc::UnknownGroup, group);
  return n;
}

int64_t LanguageModel::trainable_param_count() const {
  const auto& fr = frozen();
  int64_t n = 0;
  for (const auto& t : tensors()) {
    if (!fr.count(t.group)) n += t.size;
  }
  return n;
}

}  // namespace driftbench::model
