#pragma once

#include <memory>
#include <string>
#include <vector>

#include "driftbench/kernels/kernels.h"
#include "driftbench/model/language_model.h"

namespace driftbench::model {

struct TinyImpl;

struct TinyTransformerConfig {
  std::string backbone_id = "tiny-v1";
  int vocab = 257;
  int ctx = 64;
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 256;
  uint32_t eos = 256;
  uint64_t init_seed = 1;
  double init_std = 0.02;
};

/// Desk-scale decoder-only transformer trained from random init, in plain
/// double precision. Pre-LN blocks, learned positional embeddings, untied
/// output head, no biases outside LayerNorm. All compute is bit-deterministic
/// for any OpenMP thread count.
///
/// Parameter groups: "embed", "block0".."block{L-1}", "head", and
/// "adapter.block{i}" once low-rank adapters are attached.
class TinyTransformer : public LanguageModel {
 public:
  explicit TinyTransformer(const TinyTransformerConfig& cfg);
  ~TinyTransformer() override;

  TinyTransformer(const TinyTransformer&) = delete;
  TinyTransformer& operator=(const TinyTransformer&) = delete;

  // LanguageModel surface.
  std::string backbone_id() const override { return cfg_.backbone_id; }
  int vocab_size() const override { return cfg_.vocab; }
  int context_len() const override { return cfg_.ctx; }
  uint32_t eos_id() const override { return cfg_.eos; }
  std::vector<std::string> group_names() const override;
  std::vector<TensorInfo> tensors() const override;
  void set_frozen(const std::set<std::string>& groups) override;
  const std::set<std::string>& frozen() const override { return frozen_; }
  std::vector<double> position_nll(std::span<const uint32_t> window) const override;
  std::vector<double> next_token_logits(std::span<const uint32_t> prefix) const override;
  std::vector<double> grad_vector(const std::vector<std::vector<uint32_t>>& batch,
                                  const std::set<std::string>& subset) override;
  double train_batch(const std::vector<std::vector<uint32_t>>& batch, double lr) override;

  /// Attaches rank-r adapter factor pairs to the named attention projection
  /// tensors (e.g. {"attn.wq", "attn.wv"}) in every block. The second factor
  /// is zero-initialized so attachment preserves model outputs exactly.
  /// scale <= 0 selects the 1/r default. Throws BadTarget for unknown names;
  /// attaching twice is an error.
  void attach_low_rank_adapters(const std::vector<std::string>& target_tensors, int rank,
                                double scale = -1.0);
  bool adapters_attached() const { return adapters_attached_; }

  /// Gradient of (scale * mean loss); the test hook behind the gradient
  /// linearity property.
  std::vector<double> grad_vector_scaled(const std::vector<std::vector<uint32_t>>& batch,
                                         const std::set<std::string>& subset, double loss_scale);

  kernels::AdamwParams& optimizer() { return adamw_; }
  int64_t optimizer_step_count() const { return step_; }
  void set_grad_clip(double clip) { grad_clip_ = clip; }
  /// Zeroes Adam moments and the step counter (fresh optimizer over loaded
  /// weights, e.g. at the start of a retrofit run).
  void reset_optimizer_state();

  const TinyTransformerConfig& config() const { return cfg_; }

  /// FNV hash over a group's parameter bytes; the freeze tests' checksum.
  uint64_t group_checksum(const std::string& group) const;

  // Mutable views for checkpoint serialization.
  struct TensorView {
    std::string name;
    int layer;
    std::string group;
    std::vector<double>* w;
    std::vector<double>* adam_m;
    std::vector<double>* adam_v;
  };
  std::vector<TensorView> tensor_views();
  void set_optimizer_step_count(int64_t step) { step_ = step; }

 private:
  TinyTransformerConfig cfg_;
  std::set<std::string> frozen_;
  kernels::AdamwParams adamw_;
  double grad_clip_ = 1.0;
  int64_t step_ = 0;
  bool adapters_attached_ = false;
  std::unique_ptr<TinyImpl> impl_;
};

}  // namespace driftbench::model
