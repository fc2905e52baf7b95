#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace driftbench::model {

struct SamplingConfig {
  double temperature = 0.7;
  double top_p = 0.9;
  int max_new_tokens = 50;
  uint64_t seed = 0;
};

struct NllResult {
  double total_nll = 0.0;
  int64_t token_count = 0;
};

/// One named parameter tensor. `layer` orders tensors front-to-back through
/// the network (0 = embeddings); the canonical flattening order for gradient
/// vectors is lexicographic by (layer, name).
struct TensorInfo {
  std::string name;
  int layer = 0;
  std::string group;
  int64_t size = 0;
};

/// The abstract language-model surface the rest of the system consumes:
/// per-position NLL on token windows, gradient extraction over named
/// parameter groups, seeded sampling, and group freeze/unfreeze. Evaluation
/// entry points are const and safe on read-only snapshots; training and
/// gradient extraction require exclusive ownership.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::string backbone_id() const = 0;
  virtual int vocab_size() const = 0;
  virtual int context_len() const = 0;
  virtual uint32_t eos_id() const = 0;

  // -- parameter groups --------------------------------------------------
  virtual std::vector<std::string> group_names() const = 0;
  /// Tensor metadata in canonical (layer, name) order.
  virtual std::vector<TensorInfo> tensors() const = 0;
  /// Replaces the frozen set. Throws UnknownGroup for names outside
  /// group_names().
  virtual void set_frozen(const std::set<std::string>& groups) = 0;
  virtual const std::set<std::string>& frozen() const = 0;

  // -- evaluation ----------------------------------------------------------
  /// NLL of each predictable position: entry i is -log p(window[i+1] | prefix).
  /// Window length must be >= 2; ids must be < vocab_size (VocabMismatch).
  virtual std::vector<double> position_nll(std::span<const uint32_t> window) const = 0;

  /// Next-token logits given a prefix (at most context_len trailing tokens
  /// are consulted).
  virtual std::vector<double> next_token_logits(std::span<const uint32_t> prefix) const = 0;

  // -- gradients -----------------------------------------------------------
  /// Gradient of the mean next-token loss over the batch, restricted to the
  /// groups in `subset`, flattened in canonical tensor order. Throws
  /// EmptyBatch / UnknownGroup; a frozen group in `subset` is a precondition
  /// violation.
  virtual std::vector<double> grad_vector(const std::vector<std::vector<uint32_t>>& batch,
                                          const std::set<std::string>& subset) = 0;

  // -- training ------------------------------------------------------------
  /// One optimizer step on the mean next-token loss over the batch. Frozen
  /// groups are untouched, bit-for-bit. Returns the batch loss.
  virtual double train_batch(const std::vector<std::vector<uint32_t>>& batch, double lr) = 0;

  // -- derived helpers (implemented on top of the virtuals) -----------------
  NllResult nll_on_window(std::span<const uint32_t> window) const;
  std::vector<uint32_t> generate(std::span<const uint32_t> prompt,
                                 const SamplingConfig& cfg) const;
  int64_t group_param_count(const std::string& group) const;
  int64_t trainable_param_count() const;
};

}  // namespace driftbench::model
