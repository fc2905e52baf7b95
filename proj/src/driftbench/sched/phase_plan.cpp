#include "driftbench/sched/phase_plan.h"

#include <algorithm>
#include <set>

#include "driftbench/core/error.h"

namespace driftbench::sched {

Regime regime_from_name(const std::string& name) {
  if (name == "from_scratch") return Regime::FromScratch;
  if (name == "retrofit") return Regime::Retrofit;
  fail(Errc::BadConfig, "unknown regime " + name);
}

std::string regime_name(Regime r) {
  return r == Regime::FromScratch ? "from_scratch" : "retrofit";
}

void PhasePlan::validate() const {
  require(!phases.empty(), Errc::BadConfig, "plan has no phases");
  std::set<std::string> seen;
  for (const auto& p : phases) {
    require(p.token_budget >= 0, Errc::BadConfig, "negative token budget");
    require(seen.insert(p.domain).second, Errc::BadConfig,
            "domain appears twice in phases: " + p.domain);
    require(std::find(eval_domains.begin(), eval_domains.end(), p.domain) != eval_domains.end(),
            Errc::BadConfig, "trained domain missing from eval_domains: " + p.domain);
  }
}

}  // namespace driftbench::sched
