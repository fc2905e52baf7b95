#pragma once

#include <set>
#include <string>
#include <vector>

#include "driftbench/model/tiny_transformer.h"

namespace driftbench::methods {

enum class MethodKind { FullFT, LowRankAdapter, FrozenAdapter, Control };

MethodKind method_kind_from_name(const std::string& name);
std::string method_kind_name(MethodKind kind);

/// A continual-learning method policy: which parameters train at which phase.
///
///  - FullFT          every group trainable at every phase
///  - LowRankAdapter  adapters attached once; only they train from phase 2
///                    (phase 1 per phase1_full)
///  - FrozenAdapter   retrofit stand-in: phase 1 trains backbone + adapters
///                    jointly, phases >= 2 freeze the backbone
///  - Control         phase 1 trains everything, later phases train nothing
struct MethodPolicy {
  MethodKind kind = MethodKind::FullFT;
  int rank = 4;
  double adapter_scale = -1.0;  // <= 0 selects 1/rank
  std::vector<std::string> target_tensors = {"attn.wq", "attn.wv"};
  bool phase1_full = true;

  void validate() const;
};

struct PreparedPhase {
  std::set<std::string> trainable_groups;
  int64_t trainable_params = 0;
};

/// Applies the policy's freeze/attach decisions for the given 1-based phase.
/// Adapter methods attach their factor pairs on the first call.
PreparedPhase prepare_phase(model::TinyTransformer& model, const MethodPolicy& policy,
                            int phase_index);

/// Analytic adapter parameter count: sum over targeted tensors of
/// rank * (d_in + d_out).
int64_t adapter_param_count(int n_layers, int n_targets_per_layer, int d_in, int d_out, int rank);

}  // namespace driftbench::methods
