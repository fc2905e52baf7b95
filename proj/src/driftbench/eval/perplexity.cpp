#include "driftbench/eval/perplexity.h"

#include <cmath>
#include <vector>

#include "driftbench/core/error.h"

namespace driftbench::eval {

double eval_ppl(const model::LanguageModel& m, std::span<const uint32_t> split) {
  const int64_t ctx = m.context_len();
  const int64_t n = static_cast<int64_t>(split.size());
  require(n >= 2, Errc::EmptySplit, "split has no scorable position");

  // Window w covers tokens [w*ctx, w*ctx + ctx], predicting the last ctx of
  // them; a short tail still scores len-1 positions.
  std::vector<model::NllResult> per_window;
  for (int64_t start = 0; start + 1 < n; start += ctx) {
    const int64_t len = std::min(ctx + 1, n - start);
    per_window.push_back(m.nll_on_window(split.subspan(static_cast<size_t>(start),
                                                       static_cast<size_t>(len))));
  }

  double total_nll = 0.0;
  int64_t total_count = 0;
  for (const auto& r : per_window) {
    total_nll += r.total_nll;
    total_count += r.token_count;
  }
  require(total_count > 0, Errc::EmptySplit, "split has no scorable position");
  return std::exp(total_nll / static_cast<double>(total_count));
}

double eval_ppl_cell(const model::LanguageModel& m, std::span<const uint32_t> split) {
  return eval_ppl(m, split);
}

}  // namespace driftbench::eval
