#include "driftbench/model/sampling.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "driftbench/core/error.h"

namespace driftbench::model {

uint32_t sample_token(const std::vector<double>& logits, double temperature, double top_p,
                      Rng& rng) {
  require(temperature > 0.0, Errc::Precondition, "temperature must be > 0");
  require(top_p > 0.0 && top_p <= 1.0, Errc::Precondition, "top_p must be in (0,1]");
  const int v = static_cast<int>(logits.size());
  require(v > 0, Errc::Precondition, "empty logits");

  std::vector<double> probs(logits.size());
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double sum = 0.0;
  for (int i = 0; i < v; ++i) {
    probs[i] = std::exp((logits[i] - mx) / temperature);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;

  // Nucleus: the smallest prob-sorted prefix whose mass reaches top_p.
  // Ties sort by ascending id so the kept set is deterministic.
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  std::vector<char> kept(probs.size(), 0);
  double mass = 0.0;
  for (int idx : order) {
    kept[idx] = 1;
    mass += probs[idx];
    if (mass >= top_p) break;
  }

  // One uniform; walk candidates in id order so top_p = 1 matches a direct
  // categorical draw on the same stream.
  const double u = rng.uniform01() * mass;
  double cum = 0.0;
  int last_kept = 0;
  for (int i = 0; i < v; ++i) {
    if (!kept[i]) continue;
    cum += probs[i];
    last_kept = i;
    if (u < cum) return static_cast<uint32_t>(i);
  }
  return static_cast<uint32_t>(last_kept);
}

}  // namespace driftbench::model
