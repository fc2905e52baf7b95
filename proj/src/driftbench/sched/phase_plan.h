#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace driftbench::sched {

struct PhaseSpec {
  std::string domain;
  int64_t token_budget = 0;
};

enum class Regime { FromScratch, Retrofit };

Regime regime_from_name(const std::string& name);
std::string regime_name(Regime r);

/// The continual sequence: ordered phases, the training regime, and the
/// (possibly larger) ordered evaluation-domain list.
struct PhasePlan {
  std::vector<PhaseSpec> phases;
  Regime regime = Regime::FromScratch;
  std::vector<std::string> eval_domains;

  /// No domain trains twice; every trained domain is evaluated; budgets are
  /// non-negative. Throws BadConfig.
  void validate() const;
};

}  // namespace driftbench::sched
