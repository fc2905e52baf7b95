#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace driftbench::metrics {

/// One gradient-cosine observation for an unordered domain pair, taken at a
/// given layer block and phase.
struct GradCosSample {
  std::string domain_a;
  std::string domain_b;
  int layer = 0;
  int phase = 0;
  double abs_cos = 0.0;  // in [0, 1]
};

/// Per-domain-pair |cos| aggregate with the raw samples underneath.
/// Self-pairs are excluded; rendered matrices show 0 on the diagonal.
class GradCosMatrix {
 public:
  explicit GradCosMatrix(std::vector<std::string> domains) : domains_(std::move(domains)) {}

  const std::vector<std::string>& domains() const { return domains_; }
  const std::vector<GradCosSample>& samples() const { return samples_; }

  void add_sample(GradCosSample s);
  void merge(const GradCosMatrix& other);

  /// Mean |cos| over all samples of the unordered pair {a, b}. Symmetric by
  /// construction (both orders read the same sample set).
  double mean_abs_cos(const std::string& a, const std::string& b) const;
  bool has_pair(const std::string& a, const std::string& b) const;

  /// Mean over every sample of every cross-domain pair.
  double overall_mean_abs_cos() const;

  std::vector<std::pair<std::string, std::string>> pairs_present() const;

 private:
  std::vector<std::string> domains_;
  std::vector<GradCosSample> samples_;
};

/// A pair-mean-only matrix (e.g. a published lower triangle) can be loaded as
/// one sample per pair.
GradCosMatrix grad_matrix_from_pair_means(
    const std::vector<std::string>& domains,
    const std::vector<std::tuple<std::string, std::string, double>>& pair_means);

enum class L2Mode { Global, PerPair };

/// L2-orthogonal fraction sqrt(1 - mean|cos|^2). Global mode applies the
/// formula to the overall mean; per-pair mode averages the per-pair fractions.
double l2_orth_fraction(const GradCosMatrix& g, L2Mode mode);

enum class OrthLevel { Pair, Sample };

/// Fraction of pair means (or raw samples) strictly below `thr`.
double orth_at_threshold(const GradCosMatrix& g, double thr, OrthLevel level);

}  // namespace driftbench::metrics
