#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "driftbench/core/error.h"
#include "driftbench/core/rng.h"
#include "driftbench/eval/emission.h"
#include "driftbench/eval/grad_ortho.h"
#include "driftbench/eval/hellaswag.h"
#include "driftbench/eval/perplexity.h"
#include "driftbench/model/tiny_transformer.h"
#include "support/emission_samples.h"
#include "support/stub_models.h"

using namespace driftbench;
using eval::EmissionLabel;
using eval::HellaSwagItem;

namespace {

std::vector<uint32_t> random_ids(int len, int vocab, uint64_t seed) {
  Rng rng(seed);
  std::vector<uint32_t> w;
  for (int i = 0; i < len; ++i) w.push_back(static_cast<uint32_t>(rng.below(vocab)));
  return w;
}

}  // namespace

// ---------------------------------------------------------------- perplexity

TEST_CASE("ppl of the uniform model is the vocabulary size") {
  auto m = testing::uniform_model(23, 8);
  const auto split = random_ids(100, 23, 1);
  CHECK(eval::eval_ppl_cell(m, split) == doctest::Approx(23.0).epsilon(1e-12));
}

TEST_CASE("ppl of a hand bigram model matches hand enumeration") {
  auto m = testing::bigram_model({{0.7, 0.3}, {0.2, 0.8}}, 4);  // ctx 4 forces chunking
  const std::vector<uint32_t> split = {0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0};
  // Windows of ctx+1=5 with stride 4: every position after the first in each
  // window is scored; the boundary token repeats as context only.
  double total = 0.0;
  int64_t count = 0;
  const std::vector<std::vector<double>> p = {{0.7, 0.3}, {0.2, 0.8}};
  for (size_t start = 0; start + 1 < split.size(); start += 4) {
    const size_t len = std::min<size_t>(5, split.size() - start);
    for (size_t i = 1; i < len; ++i) {
      total += -std::log(p[split[start + i - 1]][split[start + i]]);
      ++count;
    }
  }
  const double expect = std::exp(total / static_cast<double>(count));
  CHECK(eval::eval_ppl_cell(m, split) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("ppl rejects empty splits and is order-independent across domains") {
  auto m = testing::uniform_model(5);
  const std::vector<uint32_t> one = {2};
  CHECK_THROWS_AS((void)eval::eval_ppl(m, one), Error);

  // Evaluating domain splits in any order yields identical cells.
  const auto a = random_ids(64, 5, 2);
  const auto b = random_ids(64, 5, 3);
  const double pa1 = eval::eval_ppl_cell(m, a);
  const double pb1 = eval::eval_ppl_cell(m, b);
  const double pb2 = eval::eval_ppl_cell(m, b);
  const double pa2 = eval::eval_ppl_cell(m, a);
  CHECK(pa1 == pa2);
  CHECK(pb1 == pb2);
}

// ----------------------------------------------------------------- hellaswag

namespace {

// Delta model that deterministically continues with `gold` after the context,
// regardless of earlier ids: the next token is always ending[pos] of the gold
// sequence when the prefix tail matches, else token 0. Simpler: probability 1
// on whatever the gold ending says next, keyed by prefix length.
HellaSwagItem make_item(const std::vector<uint32_t>& ctx,
                        const std::array<std::vector<uint32_t>, 4>& endings, int gold) {
  HellaSwagItem item;
  item.context = ctx;
  item.endings = endings;
  item.gold = gold;
  return item;
}

}  // namespace

TEST_CASE("hellaswag: delta model on gold endings scores ~0 and picks gold") {
  const std::vector<uint32_t> ctx = {1, 2, 3};
  const std::array<std::vector<uint32_t>, 4> endings = {
      std::vector<uint32_t>{4, 5}, {5, 6}, {6, 7}, {7, 4}};
  const auto item = make_item(ctx, endings, 2);

  // The model puts probability ~1 on the gold ending's next token given the
  // running prefix; any other continuation is improbable.
  auto next_of = [&](std::span<const uint32_t> prefix) -> uint32_t {
    const size_t pos = prefix.size();  // tokens predicted so far
    if (pos >= ctx.size() && pos - ctx.size() < endings[1].size()) {
      return endings[1][pos - ctx.size()];
    }
    return 0;
  };
  auto m = testing::delta_model(9, next_of);
  const auto score = eval::hellaswag_score(m, item);
  CHECK(score.pick == 2);
  CHECK(score.scores[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(score.scores[0] > 1.0);
}

TEST_CASE("hellaswag: four identical endings tie and break to index 1") {
  const std::vector<uint32_t> ctx = {1, 2};
  const std::vector<uint32_t> same = {3, 4, 5};
  const auto item = make_item(ctx, {same, same, same, same}, 3);
  auto m = testing::uniform_model(9);
  const auto score = eval::hellaswag_score(m, item);
  CHECK(score.pick == 1);
  for (int i = 1; i < 4; ++i) CHECK(score.scores[0] == score.scores[static_cast<size_t>(i)]);
}

TEST_CASE("hellaswag: ending-only scoring excludes context tokens") {
  // Bigram stub: the conditional of each token depends only on the previous
  // token, so changing early context must not move any ending score.
  auto m = testing::bigram_model({{0.6, 0.2, 0.2}, {0.1, 0.8, 0.1}, {0.3, 0.3, 0.4}});
  const std::array<std::vector<uint32_t>, 4> endings = {
      std::vector<uint32_t>{0, 1}, {1, 2}, {2, 0}, {1, 1}};
  const auto item_a = make_item({0, 1, 2}, endings, 1);
  const auto item_b = make_item({2, 0, 2}, endings, 1);  // same last context token
  const auto sa = eval::hellaswag_score(m, item_a);
  const auto sb = eval::hellaswag_score(m, item_b);
  for (int i = 0; i < 4; ++i) {
    CHECK(sa.scores[static_cast<size_t>(i)] == sb.scores[static_cast<size_t>(i)]);
  }

  // Hand oracle on a 3-token ending: mean of the three conditional NLLs.
  const auto item_c = make_item({0}, {std::vector<uint32_t>{1, 2, 0}, {0, 0, 0}, {1, 1, 1},
                                      {2, 2, 2}}, 1);
  const auto sc = eval::hellaswag_score(m, item_c);
  const double hand = -(std::log(0.2) + std::log(0.1) + std::log(0.3)) / 3.0;
  CHECK(sc.scores[0] == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("hellaswag accuracy: delta and adversarial constructions") {
  // 20 items over a shared vocabulary; gold endings are made the likely
  // continuations by a per-position delta model.
  Rng rng(4);
  std::vector<HellaSwagItem> items;
  for (int i = 0; i < 20; ++i) {
    HellaSwagItem item;
    item.context = random_ids(5, 7, 100 + i);
    for (auto& e : item.endings) e = random_ids(3, 7, rng.next_u64());
    item.gold = 1 + static_cast<int>(rng.below(4));
    items.push_back(item);
  }
  // Score items one at a time with a model locked to that item's gold ending.
  int correct = 0;
  for (const auto& item : items) {
    const auto& gold = item.endings[static_cast<size_t>(item.gold - 1)];
    auto next_of = [&](std::span<const uint32_t> prefix) -> uint32_t {
      const size_t pos = prefix.size();
      if (pos >= item.context.size() && pos - item.context.size() < gold.size()) {
        return gold[pos - item.context.size()];
      }
      return 0;
    };
    auto m = testing::delta_model(7, next_of);
    if (eval::hellaswag_score(m, item).pick == item.gold) ++correct;
  }
  CHECK(correct == 20);
}

TEST_CASE("hellaswag: uniform model lands within binomial 3 sigma of 0.25") {
  // All scores tie, picks collapse to index 1, so accuracy is the fraction of
  // gold == 1 over the seeded item set: Binomial(500, 0.25).
  Rng rng(0xD00D);
  std::vector<HellaSwagItem> items;
  for (int i = 0; i < 500; ++i) {
    HellaSwagItem item;
    item.context = random_ids(4, 11, rng.next_u64());
    for (auto& e : item.endings) e = random_ids(4, 11, rng.next_u64());
    item.gold = 1 + static_cast<int>(rng.below(4));
    items.push_back(item);
  }
  auto m = testing::uniform_model(11);
  const double acc = eval::hellaswag_accuracy(m, items);
  const double sigma = std::sqrt(0.25 * 0.75 / 500.0);
  CHECK(acc > 0.25 - 3 * sigma);
  CHECK(acc < 0.25 + 3 * sigma);
}

TEST_CASE("hellaswag subset selection is a fixed seeded shuffle") {
  std::vector<HellaSwagItem> items;
  for (int i = 0; i < 40; ++i) {
    HellaSwagItem item;
    item.context = {static_cast<uint32_t>(i), 1};
    for (auto& e : item.endings) e = {2, 3};
    item.gold = 1;
    items.push_back(item);
  }
  const auto s1 = eval::select_subset(items, 10, 0);
  const auto s2 = eval::select_subset(items, 10, 0);
  REQUIRE(s1.size() == 10);
  for (size_t i = 0; i < 10; ++i) CHECK(s1[i].context == s2[i].context);
  const auto s3 = eval::select_subset(items, 10, 1);
  bool same = true;
  for (size_t i = 0; i < 10; ++i) same = same && s1[i].context == s3[i].context;
  CHECK_FALSE(same);
}

TEST_CASE("hellaswag items round-trip through JSON") {
  std::vector<HellaSwagItem> items(2);
  items[0].context = {1, 2, 3};
  items[0].endings = {std::vector<uint32_t>{4}, {5}, {6}, {7}};
  items[0].gold = 2;
  items[1].context = {9, 8};
  items[1].endings = {std::vector<uint32_t>{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  items[1].gold = 4;
  const auto path = std::filesystem::temp_directory_path() / "driftbench_hs_items.json";
  eval::save_hellaswag_items(items, path);
  const auto loaded = eval::load_hellaswag_items(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].context == items[0].context);
  CHECK(loaded[1].gold == 4);
  std::filesystem::remove(path);
}

// ------------------------------------------------------------------ emission

TEST_CASE("emission classifier reproduces every verbatim showcase label") {
  for (const auto& sample : testing::showcase_samples()) {
    INFO(sample.name);
    CHECK(eval::classify_emission(sample.prompt_domain, sample.text) == sample.expected);
  }
}

TEST_CASE("emission classifier core rules") {
  // Code keyword example straight from the probe battery.
  CHECK(eval::classify_emission("Prose", "from collections import defaultdict; def f(x): "
                                         "return x") == EmissionLabel::PythonBleed);
  // CJK codepoint ratio rule, both prompt sides.
  const std::string cjk = "这是一个中文句子，包含很多汉字。";
  CHECK(eval::classify_emission("Prose", cjk) == EmissionLabel::ChineseBleed);
  CHECK(eval::classify_emission("Chinese", cjk) == EmissionLabel::CjkCoherent);
  // JavaScript keyword family.
  CHECK(eval::classify_emission("Prose",
                                "const app = require('express'); let x = 1; function run() { "
                                "console.log(x); } module.exports = app;") ==
        EmissionLabel::JsBleed);
  // Math bleed via equation density.
  CHECK(eval::classify_emission("Prose",
                                "We have $$x^2$$ and \\frac{a}{b} plus \\sum_i x_i dollars") ==
        EmissionLabel::MathBleed);
  // Constructed repetition: one 4-gram repeated five times.
  std::string rep;
  for (int i = 0; i < 5; ++i) rep += "alpha beta gamma delta ";
  CHECK(eval::classify_emission("Prose", rep) == EmissionLabel::Repetition);
  // Gibberish: high non-word character entropy, no code/CJK signals.
  CHECK(eval::classify_emission("Prose", "xq9#k zz@7w p!!r 8 qqv 0x3 zk kqx wv9 9qq jx0") ==
        EmissionLabel::Gibberish);
  // Plain English sentences stay coherent.
  CHECK(eval::classify_emission("Prose", "The quiet library smelled of old paper and rain.") ==
        EmissionLabel::ProseCoherent);
  // Determinism: same text, same label.
  for (int i = 0; i < 3; ++i) {
    CHECK(eval::classify_emission("Prose", rep) == EmissionLabel::Repetition);
  }
  CHECK_THROWS_AS((void)eval::classify_emission("Prose", ""), Error);
}

TEST_CASE("emission probe runs the fixed prompt grid with seeded sampling") {
  const auto prompt_path = std::filesystem::path(DRIFTBENCH_ASSETS_DIR) / "prompts" /
                           "emission_prompts_v1.json";
  const auto prompts = eval::load_prompt_set(prompt_path);
  CHECK(prompts.prompts.size() == 6);
  for (const auto& [domain, texts] : prompts.prompts) CHECK(texts.size() == 3);

  model::TinyTransformerConfig cfg;
  cfg.vocab = 257;
  cfg.ctx = 32;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_layers = 1;
  cfg.d_ff = 32;
  cfg.eos = 256;
  model::TinyTransformer m(cfg);
  corpus::ByteTokenizer tok;
  model::SamplingConfig sc;
  sc.max_new_tokens = 8;
  const auto records = eval::emission_probe(m, tok, prompts, sc, 2);
  CHECK(records.size() == 18);
  for (const auto& r : records) {
    CHECK(r.phase == 2);
    CHECK(r.label_source == "auto");
    CHECK_FALSE(r.output_text.empty());
  }
  // Re-running reproduces the same outputs (seeded draws per prompt).
  const auto again = eval::emission_probe(m, tok, prompts, sc, 2);
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].output_text == again[i].output_text);
  }
}

TEST_CASE("manual override sidecar wins over auto labels") {
  std::vector<eval::EmissionRecord> records(1);
  records[0].prompt_domain = "Prose";
  records[0].phase = 3;
  records[0].prompt_index = 1;
  records[0].label = EmissionLabel::ProseCoherent;
  records[0].label_source = "auto";
  const auto sidecar = std::filesystem::temp_directory_path() / "driftbench_overrides.json";
  write_text_file_atomic(sidecar,
                         "{\"overrides\":[{\"phase\":3,\"domain\":\"Prose\","
                         "\"prompt_index\":1,\"label\":\"GIBBERISH\"}]}\n");
  eval::apply_manual_overrides(records, sidecar);
  CHECK(records[0].label == EmissionLabel::Gibberish);
  CHECK(records[0].label_source == "manual");
  std::filesystem::remove(sidecar);
}

// ---------------------------------------------------------------- grad ortho

TEST_CASE("abs_cosine stub cases: identical, orthogonal, 45 degrees") {
  const std::vector<double> e1 = {1.0, 0.0};
  const std::vector<double> e2 = {0.0, 1.0};
  const std::vector<double> diag = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
  CHECK(eval::abs_cosine(e1, e1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval::abs_cosine(e1, e2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eval::abs_cosine(diag, e1) == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(std::fabs(eval::abs_cosine(diag, e1) - 0.70710678) < 1e-6);
  const std::vector<double> zero = {0.0, 0.0};
  CHECK(eval::abs_cosine(zero, e1) == 0.0);
}

TEST_CASE("grad_ortho_probe: identical domain data gives |cos| = 1 per layer") {
  model::TinyTransformerConfig cfg;
  cfg.vocab = 17;
  cfg.ctx = 8;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_layers = 2;
  cfg.d_ff = 16;
  cfg.eos = 16;
  model::TinyTransformer m(cfg);

  const auto data = random_ids(200, 17, 9);
  std::map<std::string, std::span<const uint32_t>> domains;
  domains.emplace("a", std::span<const uint32_t>(data));
  domains.emplace("b", std::span<const uint32_t>(data));  // same stream

  eval::GradOrthoOptions opts;
  opts.n_resample = 2;
  opts.batch_windows = 2;
  opts.seed = 3;
  for (const auto& g : m.group_names()) opts.subset.insert(g);
  // Identical streams and identical seeds per side would differ; force the
  // same batches by seeding both sides the same way through a shared stream.
  // The probe derives per-side seeds, so instead check symmetry + range here
  // and the exact |cos|=1 case through grad_vector directly.
  const auto gm = eval::grad_ortho_probe(m, domains, 1, opts);
  for (const auto& s : gm.samples()) {
    CHECK(s.abs_cos >= 0.0);
    CHECK(s.abs_cos <= 1.0);
  }
  CHECK(gm.mean_abs_cos("a", "b") == gm.mean_abs_cos("b", "a"));

  // Identical batches: gradients are bit-identical, so |cos| is exactly 1.
  std::set<std::string> subset;
  for (const auto& g : m.group_names()) subset.insert(g);
  std::vector<std::vector<uint32_t>> batch = {random_ids(9, 17, 21), random_ids(9, 17, 22)};
  const auto ga = m.grad_vector(batch, subset);
  const auto gb = m.grad_vector(batch, subset);
  CHECK(eval::abs_cosine(ga, gb) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grad_ortho_probe produces one sample per pair, layer, resample") {
  model::TinyTransformerConfig cfg;
  cfg.vocab = 17;
  cfg.ctx = 8;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_layers = 2;
  cfg.d_ff = 16;
  cfg.eos = 16;
  model::TinyTransformer m(cfg);
  const auto da = random_ids(200, 17, 30);
  const auto db = random_ids(200, 17, 31);
  const auto dc = random_ids(200, 17, 32);
  std::map<std::string, std::span<const uint32_t>> domains;
  domains.emplace("a", std::span<const uint32_t>(da));
  domains.emplace("b", std::span<const uint32_t>(db));
  domains.emplace("c", std::span<const uint32_t>(dc));
  eval::GradOrthoOptions opts;
  opts.n_resample = 3;
  opts.batch_windows = 2;
  for (const auto& g : m.group_names()) opts.subset.insert(g);
  const auto gm = eval::grad_ortho_probe(m, domains, 2, opts);
  // Layer blocks: embed(0), block0(1), block1(2), head(3) -> 4 slices.
  CHECK(gm.samples().size() == 3u * 3u * 4u);
  CHECK(gm.pairs_present().size() == 3);
  for (const auto& s : gm.samples()) CHECK(s.phase == 2);

  // Too-small corpus signals insufficient data.
  const auto tiny = random_ids(4, 17, 33);
  std::map<std::string, std::span<const uint32_t>> bad;
  bad.emplace("a", std::span<const uint32_t>(da));
  bad.emplace("b", std::span<const uint32_t>(tiny));
  CHECK_THROWS_AS((void)eval::grad_ortho_probe(m, bad, 1, opts), Error);
}
