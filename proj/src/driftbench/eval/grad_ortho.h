#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "driftbench/metrics/ortho.h"
#include "driftbench/model/language_model.h"

namespace driftbench::eval {

struct GradOrthoOptions {
  int n_resample = 8;
  int batch_windows = 8;
  std::set<std::string> subset;  // parameter groups probed
  uint64_t seed = 0;
};

/// Cross-domain gradient geometry: for every unordered domain pair,
/// n_resample independent batch pairs are drawn from the train splits and
/// |cos| is recorded per transformer layer block per resample. Layer blocks
/// come from the tensor metadata of the probed subset. Throws
/// InsufficientCorpus when a domain cannot fill one batch.
metrics::GradCosMatrix grad_ortho_probe(
    model::LanguageModel& m,
    const std::map<std::string, std::span<const uint32_t>>& domain_train, int phase,
    const GradOrthoOptions& opts);

/// |cos| between two equal-length vectors; 0 when either has zero norm.
double abs_cosine(std::span<const double> a, std::span<const double> b);

}  // namespace driftbench::eval
