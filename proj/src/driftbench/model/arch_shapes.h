#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace driftbench::model {

/// Analytic parameter accounting for reference backbone shapes. Used for the
/// trainable-parameter bookkeeping the method policies report; nothing here
/// instantiates weights.
struct ArchShape {
  std::string name;
  int64_t vocab = 0;
  int64_t ctx = 0;
  int64_t d_model = 0;
  int64_t n_layers = 0;
  int64_t d_ff = 0;
  bool tied_head = true;
  bool biases = true;

  /// Backbone parameter count (GPT-2-style blocks: fused qkv + output
  /// projection + 2-layer MLP + two LayerNorms, learned positions).
  int64_t param_count() const;

  /// Low-rank adapter parameters for rank-r pairs on each of
  /// `targets_per_block` square d_model projections in every block:
  /// r * (d_in + d_out) per targeted tensor.
  int64_t lora_param_count(int targets_per_block, int64_t rank) const;
};

ArchShape gpt2_small_shape();
ArchShape gpt2_medium_shape();

}  // namespace driftbench::model
