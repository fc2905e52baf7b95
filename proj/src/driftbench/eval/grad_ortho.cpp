#include "driftbench/eval/grad_ortho.h"

#include <cmath>

#include "driftbench/core/error.h"
#include "driftbench/core/rng.h"
#include "driftbench/kernels/kernels.h"

namespace driftbench::eval {

double abs_cosine(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::ShapeError, "cosine over mismatched lengths");
  const auto n = static_cast<int64_t>(a.size());
  const double num = kernels::dot(a.data(), b.data(), n);
  const double na = std::sqrt(kernels::l2_norm_sq(a.data(), n));
  const double nb = std::sqrt(kernels::l2_norm_sq(b.data(), n));
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = std::fabs(num / (na * nb));
  return c > 1.0 ? 1.0 : c;
}

namespace {

// Seeded batch of fixed-length windows drawn at random offsets.
std::vector<std::vector<uint32_t>> sample_batch(std::span<const uint32_t> train, int windows,
                                                int window_len, Rng& rng) {
  require(static_cast<int64_t>(train.size()) >= window_len, Errc::InsufficientCorpus,
          "train split shorter than one window");
  std::vector<std::vector<uint32_t>> batch;
  const uint64_t max_start = train.size() - static_cast<size_t>(window_len);
  for (int w = 0; w < windows; ++w) {
    const size_t start = static_cast<size_t>(rng.below(max_start + 1));
    batch.emplace_back(train.begin() + static_cast<ptrdiff_t>(start),
                       train.begin() + static_cast<ptrdiff_t>(start) + window_len);
  }
  return batch;
}

// Layer-block slicing of the flat gradient: contiguous runs of canonical
// tensors in the subset sharing one layer index.
struct LayerSlice {
  int layer;
  size_t begin;
  size_t end;
};

std::vector<LayerSlice> layer_slices(const model::LanguageModel& m,
                                     const std::set<std::string>& subset) {
  std::vector<LayerSlice> slices;
  size_t offset = 0;
  for (const auto& t : m.tensors()) {
    if (!subset.count(t.group)) continue;
    const size_t end = offset + static_cast<size_t>(t.size);
    if (!slices.empty() && slices.back().layer == t.layer) {
      slices.back().end = end;
    } else {
      slices.push_back(LayerSlice{t.layer, offset, end});
    }
    offset = end;
  }
  return slices;
}

}  // namespace

metrics::GradCosMatrix grad_ortho_probe(
    model::LanguageModel& m,
    const std::map<std::string, std::span<const uint32_t>>& domain_train, int phase,
    const GradOrthoOptions& opts) {
  require(opts.n_resample >= 1, Errc::Precondition, "n_resample must be >= 1");
  require(!opts.subset.empty(), Errc::Precondition, "empty probe subset");

  std::vector<std::string> domains;
  for (const auto& [d, span] : domain_train) {
    require(span.size() >= 2, Errc::InsufficientCorpus, "domain " + d + " has no train data");
    domains.push_back(d);
  }
  metrics::GradCosMatrix out(domains);
  const auto slices = layer_slices(m, opts.subset);
  require(!slices.empty(), Errc::Precondition, "subset selects no tensors");
  const int window_len = m.context_len() + 1;

  for (size_t i = 0; i < domains.size(); ++i) {
    for (size_t j = i + 1; j < domains.size(); ++j) {
      for (int r = 0; r < opts.n_resample; ++r) {
        Rng rng_a(derive_seed(opts.seed, {static_cast<uint64_t>(phase), i, j,
                                          static_cast<uint64_t>(r), 0}));
        Rng rng_b(derive_seed(opts.seed, {static_cast<uint64_t>(phase), i, j,
                                          static_cast<uint64_t>(r), 1}));
        const auto batch_a = sample_batch(domain_train.at(domains[i]), opts.batch_windows,
                                          window_len, rng_a);
        const auto batch_b = sample_batch(domain_train.at(domains[j]), opts.batch_windows,
                                          window_len, rng_b);
        const auto grad_a = m.grad_vector(batch_a, opts.subset);
        const auto grad_b = m.grad_vector(batch_b, opts.subset);
        for (const auto& s : slices) {
          const double c = abs_cosine(
              std::span<const double>(grad_a.data() + s.begin, s.end - s.begin),
              std::span<const double>(grad_b.data() + s.begin, s.end - s.begin));
          out.add_sample(metrics::GradCosSample{domains[i], domains[j], s.layer, phase, c});
        }
      }
    }
  }
  return out;
}

}  // namespace driftbench::eval
