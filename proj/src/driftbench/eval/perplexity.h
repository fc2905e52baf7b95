#pragma once

#include <cstdint>
#include <span>

#include "driftbench/model/language_model.h"

namespace driftbench::eval {

/// Held-out perplexity: the split is cut into consecutive non-overlapping
/// prediction windows of the model's context length (each window carries one
/// leading context-only token that is never scored), and
/// PPL = exp(sum NLL / sum scored tokens). Window results are reduced in
/// window-index order, so any evaluation-order fan-out yields the identical
/// value. Throws EmptySplit when no position is scorable.
double eval_ppl(const model::LanguageModel& m, std::span<const uint32_t> split);

/// One matrix cell: model x domain split.
double eval_ppl_cell(const model::LanguageModel& m, std::span<const uint32_t> split);

}  // namespace driftbench::eval
