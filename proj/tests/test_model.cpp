#include <doctest.h>

#include <cmath>

#include "driftbench/core/error.h"
#include "driftbench/core/rng.h"
#include "driftbench/model/checkpoint.h"
#include "driftbench/model/sampling.h"
#include "driftbench/model/tiny_transformer.h"
#include "support/stub_models.h"

using namespace driftbench;
using model::SamplingConfig;
using model::TinyTransformer;
using model::TinyTransformerConfig;

namespace {

TinyTransformerConfig small_cfg(uint64_t seed = 1) {
  TinyTransformerConfig cfg;
  cfg.vocab = 31;
  cfg.ctx = 16;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_layers = 2;
  cfg.d_ff = 32;
  cfg.eos = 30;
  cfg.init_seed = seed;
  return cfg;
}

std::vector<uint32_t> random_window(int len, int vocab, uint64_t seed) {
  Rng rng(seed);
  std::vector<uint32_t> w;
  for (int i = 0; i < len; ++i) w.push_back(static_cast<uint32_t>(rng.below(vocab)));
  return w;
}

}  // namespace

TEST_CASE("nll_on_window: uniform model gives n*ln(V)") {
  auto m = testing::uniform_model(17);
  const auto w = random_window(9, 17, 3);
  const auto r = m.nll_on_window(w);
  CHECK(r.token_count == 8);
  CHECK(r.total_nll == doctest::Approx(8.0 * std::log(17.0)).epsilon(1e-12));
}

TEST_CASE("nll_on_window: hand-built 2-symbol bigram on a 5-token window") {
  // P(0|0)=0.9 P(1|0)=0.1; P(0|1)=0.4 P(1|1)=0.6
  auto m = testing::bigram_model({{0.9, 0.1}, {0.4, 0.6}});
  const std::vector<uint32_t> w = {0, 1, 1, 0, 0};
  const auto r = m.nll_on_window(w);
  const double expect =
      -std::log(0.1) - std::log(0.6) - std::log(0.4) - std::log(0.9);
  CHECK(r.total_nll == doctest::Approx(expect).epsilon(1e-12));
  CHECK(r.token_count == 4);
}

TEST_CASE("nll_on_window rejects length-1 windows and foreign ids") {
  auto m = testing::uniform_model(8);
  const std::vector<uint32_t> one = {3};
  CHECK_THROWS_AS((void)m.nll_on_window(one), Error);
  const std::vector<uint32_t> foreign = {3, 9};
  CHECK_THROWS_AS((void)m.nll_on_window(foreign), Error);

  TinyTransformer t(small_cfg());
  const std::vector<uint32_t> big = {5, static_cast<uint32_t>(t.vocab_size())};
  CHECK_THROWS_AS((void)t.nll_on_window(big), Error);
}

TEST_CASE("transformer gradients agree with central finite differences") {
  auto cfg = small_cfg();
  cfg.n_layers = 1;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.vocab = 11;
  TinyTransformer m(cfg);
  const std::vector<std::vector<uint32_t>> batch = {random_window(9, cfg.vocab, 41),
                                                    random_window(7, cfg.vocab, 42)};
  std::set<std::string> all_groups;
  for (const auto& g : m.group_names()) all_groups.insert(g);
  const auto grad = m.grad_vector(batch, all_groups);

  // Mean loss over the batch, recomputed from position_nll.
  auto mean_loss = [&]() {
    double total = 0.0;
    int64_t count = 0;
    for (const auto& w : batch) {
      const auto nll = m.position_nll(w);
      for (double v : nll) total += v;
      count += static_cast<int64_t>(nll.size());
    }
    return total / static_cast<double>(count);
  };

  // Probe a scattering of parameters across tensors via the checkpoint views.
  auto views = m.tensor_views();
  size_t flat_base = 0;
  int probes = 0;
  const double h = 1e-5;
  for (auto& tv : views) {
    const size_t probe = tv.w->size() / 2;
    const double saved = (*tv.w)[probe];
    (*tv.w)[probe] = saved + h;
    const double up = mean_loss();
    (*tv.w)[probe] = saved - h;
    const double down = mean_loss();
    (*tv.w)[probe] = saved;
    const double fd = (up - down) / (2 * h);
    const double analytic = grad[flat_base + probe];
    if (std::fabs(fd) > 1e-7) {
      CHECK(analytic == doctest::Approx(fd).epsilon(1e-4));
      ++probes;
    }
    flat_base += tv.w->size();
  }
  CHECK(probes >= 8);
}

TEST_CASE("grad_vector: determinism, subset concatenation, linearity") {
  TinyTransformer m(small_cfg());
  const std::vector<std::vector<uint32_t>> batch = {random_window(17, 31, 7),
                                                    random_window(17, 31, 8)};
  std::set<std::string> all_groups;
  for (const auto& g : m.group_names()) all_groups.insert(g);

  // Same batch twice: identical bit-for-bit.
  const auto g1 = m.grad_vector(batch, all_groups);
  const auto g2 = m.grad_vector(batch, all_groups);
  CHECK(g1 == g2);

  // Union of per-group calls equals the all-group concatenation. The
  // canonical tensor order interleaves groups by layer, so splice per-tensor.
  std::vector<double> spliced(g1.size());
  for (const auto& group : m.group_names()) {
    const auto gg = m.grad_vector(batch, {group});
    size_t src = 0, dst = 0;
    for (const auto& t : m.tensors()) {
      if (t.group == group) {
        std::copy(gg.begin() + static_cast<ptrdiff_t>(src),
                  gg.begin() + static_cast<ptrdiff_t>(src + t.size),
                  spliced.begin() + static_cast<ptrdiff_t>(dst));
        src += static_cast<size_t>(t.size);
      }
      dst += static_cast<size_t>(t.size);
    }
  }
  CHECK(spliced == g1);

  // grad(alpha * L) == alpha * grad(L) exactly (backward is linear and the
  // scale multiplies the same intermediate).
  const auto g3 = m.grad_vector_scaled(batch, all_groups, 2.0);
  for (size_t i = 0; i < g1.size(); ++i) CHECK(g3[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));

  CHECK_THROWS_AS((void)m.grad_vector({}, all_groups), Error);
  CHECK_THROWS_AS((void)m.grad_vector(batch, {"nonsense"}), Error);
  m.set_frozen({"embed"});
  CHECK_THROWS_AS((void)m.grad_vector(batch, {"embed"}), Error);
}

TEST_CASE("generate: degenerate distribution repeats its token") {
  auto m = testing::delta_model(9, [](std::span<const uint32_t>) { return 4u; }, 64, 0);
  SamplingConfig cfg;
  cfg.max_new_tokens = 12;
  cfg.seed = 99;
  const std::vector<uint32_t> prompt = {1};
  const auto out = m.generate(prompt, cfg);
  CHECK(out.size() == 12);
  for (uint32_t id : out) CHECK(id == 4);
}

TEST_CASE("generate: same seed, same output; early EOS stop") {
  TinyTransformer m(small_cfg());
  SamplingConfig cfg;
  cfg.max_new_tokens = 20;
  cfg.seed = 5;
  const auto prompt = random_window(4, 31, 10);
  CHECK(m.generate(prompt, cfg) == m.generate(prompt, cfg));
  // A different stream almost surely differs somewhere over 20 draws.
  SamplingConfig other = cfg;
  other.seed = 6;
  CHECK(m.generate(prompt, other) != m.generate(prompt, cfg));

  auto eos_model = testing::delta_model(9, [](std::span<const uint32_t>) { return 2u; }, 64, 2);
  const auto out = eos_model.generate(prompt, SamplingConfig{1.0, 1.0, 50, 1});
  CHECK(out.size() == 1);  // stops on EOS immediately
  CHECK(out[0] == 2);
}

TEST_CASE("generate: top_p=1, temperature=1 replays the raw categorical stream") {
  TinyTransformer m(small_cfg(3));
  const auto prompt = random_window(3, 31, 77);
  SamplingConfig cfg;
  cfg.temperature = 1.0;
  cfg.top_p = 1.0;
  cfg.max_new_tokens = 16;
  cfg.seed = 1234;
  const auto sampled = m.generate(prompt, cfg);

  // Direct ancestral draws with the same RNG stream, no nucleus machinery.
  Rng rng(cfg.seed);
  std::vector<uint32_t> ctx(prompt.begin(), prompt.end());
  std::vector<uint32_t> expect;
  for (int step = 0; step < cfg.max_new_tokens; ++step) {
    auto logits = m.next_token_logits(ctx);
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double sum = 0.0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      sum += l;
    }
    const double u = rng.uniform01() * sum / sum;  // u in [0,1)
    double cum = 0.0;
    uint32_t pick = static_cast<uint32_t>(logits.size() - 1);
    for (size_t i = 0; i < logits.size(); ++i) {
      cum += logits[i] / sum;
      if (u < cum) {
        pick = static_cast<uint32_t>(i);
        break;
      }
    }
    expect.push_back(pick);
    if (pick == m.eos_id()) break;
    ctx.push_back(pick);
  }
  CHECK(sampled == expect);
}

TEST_CASE("set_frozen semantics and checksums") {
  TinyTransformer m(small_cfg());
  CHECK_THROWS_AS(m.set_frozen({"no-such-group"}), Error);

  const std::vector<std::vector<uint32_t>> batch = {random_window(17, 31, 50)};

  // Freeze all: a training step changes nothing.
  std::set<std::string> all_groups;
  for (const auto& g : m.group_names()) all_groups.insert(g);
  std::vector<uint64_t> sums_before;
  for (const auto& g : m.group_names()) sums_before.push_back(m.group_checksum(g));
  m.set_frozen(all_groups);
  m.train_batch(batch, 1e-3);
  std::vector<uint64_t> sums_after;
  for (const auto& g : m.group_names()) sums_after.push_back(m.group_checksum(g));
  CHECK(sums_before == sums_after);

  // Freeze none: parameters move.
  m.set_frozen({});
  m.train_batch(batch, 1e-3);
  bool any_changed = false;
  const auto names = m.group_names();
  for (size_t i = 0; i < names.size(); ++i) {
    if (m.group_checksum(names[i]) != sums_after[i]) any_changed = true;
  }
  CHECK(any_changed);

  // Freeze the backbone, train adapters: backbone checksums hold over many
  // steps, adapter checksums move.
  m.attach_low_rank_adapters({"attn.wq", "attn.wv"}, 2);
  std::set<std::string> backbone;
  for (const auto& g : m.group_names()) {
    if (!g.starts_with("adapter.")) backbone.insert(g);
  }
  m.set_frozen(backbone);
  std::vector<uint64_t> backbone_sums;
  for (const auto& g : backbone) backbone_sums.push_back(m.group_checksum(g));
  const auto adapter_sum_before = m.group_checksum("adapter.block0");
  for (int i = 0; i < 10; ++i) m.train_batch(batch, 1e-3);
  size_t idx = 0;
  for (const auto& g : backbone) CHECK(m.group_checksum(g) == backbone_sums[idx++]);
  CHECK(m.group_checksum("adapter.block0") != adapter_sum_before);
}

TEST_CASE("ppl is invariant to evaluation order of the chunked split") {
  // Covered at the eval layer too; here: two identical models score a split
  // chunked front-to-back vs a second pass over the same chunks, summed in
  // canonical order.
  TinyTransformer m(small_cfg());
  const auto split = random_window(300, 31, 123);
  const int ctx = m.context_len();
  std::vector<model::NllResult> forward_order, reverse_fill(20);
  int count = 0;
  for (int64_t start = 0; start + 1 < static_cast<int64_t>(split.size()); start += ctx) {
    const int64_t len = std::min<int64_t>(ctx + 1, static_cast<int64_t>(split.size()) - start);
    forward_order.push_back(m.nll_on_window(
        std::span<const uint32_t>(split).subspan(static_cast<size_t>(start),
                                                 static_cast<size_t>(len))));
    ++count;
  }
  reverse_fill.resize(static_cast<size_t>(count));
  for (int i = count - 1; i >= 0; --i) {
    const int64_t start = static_cast<int64_t>(i) * ctx;
    const int64_t len = std::min<int64_t>(ctx + 1, static_cast<int64_t>(split.size()) - start);
    reverse_fill[static_cast<size_t>(i)] = m.nll_on_window(
        std::span<const uint32_t>(split).subspan(static_cast<size_t>(start),
                                                 static_cast<size_t>(len)));
  }
  double a = 0.0, b = 0.0;
  int64_t ca = 0, cb = 0;
  for (const auto& r : forward_order) {
    a += r.total_nll;
    ca += r.token_count;
  }
  for (const auto& r : reverse_fill) {
    b += r.total_nll;
    cb += r.token_count;
  }
  CHECK(std::exp(a / ca) == std::exp(b / cb));
}

TEST_CASE("checkpoint round-trip restores training bit-for-bit") {
  auto cfg = small_cfg();
  TinyTransformer a(cfg);
  const std::vector<std::vector<uint32_t>> batch = {random_window(17, 31, 60),
                                                    random_window(17, 31, 61)};
  for (int i = 0; i < 5; ++i) a.train_batch(batch, 3e-4);

  const auto dir = std::filesystem::temp_directory_path() / "driftbench_ckpt_test";
  std::filesystem::create_directories(dir);
  model::CheckpointMeta meta{"cafebabe", 1, 1, 128, 2};
  model::save_checkpoint(a, meta, dir / "a.ckpt");

  TinyTransformer b(small_cfg(99));  // different init, same architecture
  const auto restored = model::load_checkpoint(b, dir / "a.ckpt");
  CHECK(restored.config_hash == "cafebabe");
  CHECK(restored.phase_token_offset == 128);
  CHECK(b.optimizer_step_count() == a.optimizer_step_count());

  // Continue training both: trajectories identical.
  for (int i = 0; i < 3; ++i) {
    const double la = a.train_batch(batch, 1e-4);
    const double lb = b.train_batch(batch, 1e-4);
    CHECK(la == lb);
  }
  for (const auto& g : a.group_names()) CHECK(a.group_checksum(g) == b.group_checksum(g));

  // Architecture mismatch is a corrupt run.
  auto bigger = small_cfg();
  bigger.n_layers = 3;
  TinyTransformer c(bigger);
  CHECK_THROWS_AS((void)model::load_checkpoint(c, dir / "a.ckpt"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sampling: nucleus keeps the smallest mass-covering prefix") {
  // Probs 0.5 / 0.3 / 0.2, top_p 0.6: the kept set is {0, 1}; id 2 is never
  // drawn.
  std::vector<double> logits = {std::log(0.5), std::log(0.3), std::log(0.2)};
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const uint32_t id = model::sample_token(logits, 1.0, 0.6, rng);
    CHECK(id <= 1);
  }
  // temperature must be positive, top_p in (0,1].
  Rng r2(1);
  CHECK_THROWS_AS((void)model::sample_token(logits, 0.0, 0.9, r2), Error);
  CHECK_THROWS_AS((void)model::sample_token(logits, 1.0, 0.0, r2), Error);
}
