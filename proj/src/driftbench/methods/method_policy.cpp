#include "driftbench/methods/method_policy.h"

#include <algorithm>

#include "driftbench/core/error.h"

namespace driftbench::methods {

MethodKind method_kind_from_name(const std::string& name) {
  if (name == "full_ft") return MethodKind::FullFT;
  if (name == "lora") return MethodKind::LowRankAdapter;
  if (name == "frozen_adapter") return MethodKind::FrozenAdapter;
  if (name == "control") return MethodKind::Control;
  fail(Errc::BadConfig, "unknown method kind " + name);
}

std::string method_kind_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::FullFT: return "full_ft";
    case MethodKind::LowRankAdapter: return "lora";
    case MethodKind::FrozenAdapter: return "frozen_adapter";
    case MethodKind::Control: return "control";
  }
  return "?";
}

void MethodPolicy::validate() const {
  if (kind == MethodKind::LowRankAdapter || kind == MethodKind::FrozenAdapter) {
    require(rank >= 1, Errc::BadConfig, "adapter rank must be >= 1");
    require(!target_tensors.empty(), Errc::BadConfig, "adapter method needs target tensors");
  }
}

namespace {

bool uses_adapters(MethodKind kind) {
  return kind == MethodKind::LowRankAdapter || kind == MethodKind::FrozenAdapter;
}

std::set<std::string> non_adapter_groups(const model::TinyTransformer& model) {
  std::set<std::string> out;
  for (const auto& g : model.group_names()) {
    if (!g.starts_with("adapter.")) out.insert(g);
  }
  return out;
}

std::set<std::string> all_groups(const model::TinyTransformer& model) {
  const auto names = model.group_names();
  return {names.begin(), names.end()};
}

}  // namespace

PreparedPhase prepare_phase(model::TinyTransformer& model, const MethodPolicy& policy,
                            int phase_index) {
  require(phase_index >= 1, Errc::Precondition, "phase index is 1-based");
  policy.validate();

  if (uses_adapters(policy.kind) && !model.adapters_attached()) {
    model.attach_low_rank_adapters(policy.target_tensors, policy.rank, policy.adapter_scale);
  }

  std::set<std::string> frozen;
  switch (policy.kind) {
    case MethodKind::FullFT:
      break;
    case MethodKind::LowRankAdapter:
      if (phase_index == 1 && policy.phase1_full) break;
      frozen = non_adapter_groups(model);
      break;
    case MethodKind::FrozenAdapter:
      if (phase_index == 1) break;
      frozen = non_adapter_groups(model);
      break;
    case MethodKind::Control:
      if (phase_index == 1) break;
      frozen = all_groups(model);
      break;
  }
  model.set_frozen(frozen);

  PreparedPhase out;
  for (const auto& g : model.group_names()) {
    if (!frozen.count(g)) out.trainable_groups.insert(g);
  }
  out.trainable_params = model.trainable_param_count();
  return out;
}

int64_t adapter_param_count(int n_layers, int n_targets_per_layer, int d_in, int d_out,
                            int rank) {
  return static_cast<int64_t>(n_layers) * n_targets_per_layer * rank *
         (static_cast<int64_t>(d_in) + d_out);
}

}  // namespace driftbench::methods
