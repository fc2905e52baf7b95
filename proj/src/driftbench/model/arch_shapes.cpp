#include "driftbench/model/arch_shapes.h"

namespace driftbench::model {

int64_t ArchShape::param_count() const {
  const int64_t d = d_model;
  int64_t per_block = 0;
  per_block += d * (3 * d) + (biases ? 3 * d : 0);  // qkv
  per_block += d * d + (biases ? d : 0);            // attn out
  per_block += d * d_ff + (biases ? d_ff : 0);      // mlp up
  per_block += d_ff * d + (biases ? d : 0);         // mlp down
  per_block += 4 * d;                               // two LayerNorms
  int64_t total = n_layers * per_block;
  total += vocab * d;  // token embedding
  total += ctx * d;    // positions
  total += 2 * d;      // final LayerNorm
  if (!tied_head) total += vocab * d;
  return total;
}

int64_t ArchShape::lora_param_count(int targets_per_block, int64_t rank) const {
  return n_layers * targets_per_block * rank * (d_model + d_model);
}

ArchShape gpt2_small_shape() {
  return ArchShape{"gpt2-small", 50257, 1024, 768, 12, 3072, true, true};
}

ArchShape gpt2_medium_shape() {
  return ArchShape{"gpt2-medium", 50257, 1024, 1024, 24, 4096, true, true};
}

}  // namespace driftbench::model
