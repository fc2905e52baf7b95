#include "driftbench/metrics/ortho.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "driftbench/core/error.h"

namespace driftbench::metrics {

namespace {

std::pair<std::string, std::string> canon(const std::string& a, const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

void GradCosMatrix::add_sample(GradCosSample s) {
  require(s.domain_a != s.domain_b, Errc::Precondition, "self-pair sample");
  require(s.abs_cos >= 0.0 && s.abs_cos <= 1.0, Errc::Precondition, "abs_cos out of [0,1]");
  auto [a, b] = canon(s.domain_a, s.domain_b);
  s.domain_a = a;
  s.domain_b = b;
  samples_.push_back(std::move(s));
}

void GradCosMatrix::merge(const GradCosMatrix& other) {
  for (const auto& s : other.samples_) add_sample(s);
}

double GradCosMatrix::mean_abs_cos(const std::string& a, const std::string& b) const {
  auto key = canon(a, b);
  double sum = 0.0;
  int n = 0;
  for (const auto& s : samples_) {
    if (s.domain_a == key.first && s.domain_b == key.second) {
      sum += s.abs_cos;
      ++n;
    }
  }
  require(n > 0, Errc::Precondition, "no samples for pair " + a + "/" + b);
  return sum / n;
}

bool GradCosMatrix::has_pair(const std::string& a, const std::string& b) const {
  auto key = canon(a, b);
  for (const auto& s : samples_) {
    if (s.domain_a == key.first && s.domain_b == key.second) return true;
  }
  return false;
}

double GradCosMatrix::overall_mean_abs_cos() const {
  require(!samples_.empty(), Errc::Precondition, "empty grad-cos matrix");
  double sum = 0.0;
  for (const auto& s : samples_) sum += s.abs_cos;
  return sum / static_cast<double>(samples_.size());
}

std::vector<std::pair<std::string, std::string>> GradCosMatrix::pairs_present() const {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& s : samples_) keys.insert({s.domain_a, s.domain_b});
  return {keys.begin(), keys.end()};
}

GradCosMatrix grad_matrix_from_pair_means(
    const std::vector<std::string>& domains,
    const std::vector<std::tuple<std::string, std::string, double>>& pair_means) {
  GradCosMatrix g(domains);
  for (const auto& [a, b, v] : pair_means) {
    g.add_sample(GradCosSample{a, b, 0, 0, v});
  }
  return g;
}

double l2_orth_fraction(const GradCosMatrix& g, L2Mode mode) {
  if (mode == L2Mode::Global) {
    const double m = g.overall_mean_abs_cos();
    return std::sqrt(1.0 - m * m);
  }
  const auto pairs = g.pairs_present();
  require(!pairs.empty(), Errc::Precondition, "empty grad-cos matrix");
  double sum = 0.0;
  for (const auto& [a, b] : pairs) {
    const double m = g.mean_abs_cos(a, b);
    sum += std::sqrt(1.0 - m * m);
  }
  return sum / static_cast<double>(pairs.size());
}

double orth_at_threshold(const GradCosMatrix& g, double thr, OrthLevel level) {
  require(thr > 0.0 && thr <= 1.0, Errc::Precondition, "threshold must be in (0,1]");
  // thr == 1 is vacuous: every |cos| counts.
  const auto counts = [thr](double v) { return thr >= 1.0 || v < thr; };
  if (level == OrthLevel::Sample) {
    const auto& ss = g.samples();
    require(!ss.empty(), Errc::Precondition, "empty grad-cos matrix");
    int64_t below = 0;
    for (const auto& s : ss) below += counts(s.abs_cos) ? 1 : 0;
    return static_cast<double>(below) / static_cast<double>(ss.size());
  }
  const auto pairs = g.pairs_present();
  require(!pairs.empty(), Errc::Precondition, "empty grad-cos matrix");
  int64_t below = 0;
  for (const auto& [a, b] : pairs) below += counts(g.mean_abs_cos(a, b)) ? 1 : 0;
  return static_cast<double>(below) / static_cast<double>(pairs.size());
}

}  // namespace driftbench::metrics
