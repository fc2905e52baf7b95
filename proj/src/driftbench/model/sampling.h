#pragma once

#include <cstdint>
#include <vector>

#include "driftbench/core/rng.h"
#include "driftbench/model/language_model.h"

namespace driftbench::model {

/// Temperature scaling, then nucleus truncation at top_p, then one seeded
/// categorical draw over the kept candidates in ascending-id order. With
/// top_p = 1 and temperature = 1 this reduces exactly to ancestral sampling
/// from the softmax with the same RNG stream (one uniform per token).
uint32_t sample_token(const std::vector<double>& logits, double temperature, double top_p,
                      Rng& rng);

}  // namespace driftbench::model
