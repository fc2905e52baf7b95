#include "driftbench/model/tiny_transformer.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "driftbench/core/error.h"
#include "driftbench/core/hash.h"
#include "driftbench/core/rng.h"
#include "driftbench/kernels/kernels.h"

namespace driftbench::model {

namespace k = driftbench::kernels;

namespace {

struct Tensor {
  std::string name;
  int layer = 0;
  std::string group;
  int rows = 0;
  int cols = 0;
  std::vector<double> w, g, m, v;

  int64_t size() const { return static_cast<int64_t>(w.size()); }
};

struct Adapter {
  Tensor* a = nullptr;  // in x rank
  Tensor* b = nullptr;  // rank x out
  double scale = 0.0;
  int rank = 0;

  bool attached() const { return a != nullptr; }
};

struct Block {
  Tensor* ln1_g;
  Tensor* ln1_b;
  Tensor* wq;
  Tensor* wk;
  Tensor* wv;
  Tensor* wo;
  Tensor* ln2_g;
  Tensor* ln2_b;
  Tensor* w1;
  Tensor* w2;
  Adapter ad_q, ad_k, ad_v, ad_o;
};

struct LayerCache {
  std::vector<double> x_in;  // T x d block input
  std::vector<double> ln1_out, ln1_mean, ln1_rstd;
  std::vector<double> q, kk, vv;  // T x d
  std::vector<double> probs;      // h x T x T causal softmax rows
  std::vector<double> concat;     // T x d pre-Wo
  std::vector<double> resid1;     // T x d
  std::vector<double> ln2_out, ln2_mean, ln2_rstd;
  std::vector<double> ff1, gelu_out;   // T x dff
  std::vector<double> aq, ak, av, ao;  // T x rank adapter mid-products
};

struct Cache {
  int T = 0;
  std::vector<uint32_t> ids;
  std::vector<double> x0;  // T x d
  std::vector<LayerCache> layers;
  std::vector<double> final_in;  // last block output, input of the final LN
  std::vector<double> lnf_out, lnf_mean, lnf_rstd;
  std::vector<double> logits;  // T x vocab
};

void linear_fwd(const Tensor& w, const Adapter& ad, const double* x, double* y, int T, int d_in,
                int d_out, std::vector<double>* mid) {
  k::matmul(x, w.w.data(), y, T, d_in, d_out);
  if (ad.attached()) {
    mid->assign(static_cast<size_t>(T) * ad.rank, 0.0);
    k::matmul(x, ad.a->w.data(), mid->data(), T, d_in, ad.rank);
    std::vector<double> delta(static_cast<size_t>(T) * d_out);
    k::matmul(mid->data(), ad.b->w.data(), delta.data(), T, ad.rank, d_out);
    k::scale_inplace(delta.data(), ad.scale, static_cast<int64_t>(delta.size()));
    k::add_inplace(y, delta.data(), static_cast<int64_t>(delta.size()));
  }
}

// Accumulates weight (and adapter) grads and adds the input gradient into
// dx_accum.
void linear_bwd(Tensor& w, Adapter& ad, const double* x, const std::vector<double>& mid,
                const double* dy, double* dx_accum, int T, int d_in, int d_out) {
  k::matmul_dw(x, dy, w.g.data(), T, d_in, d_out);
  std::vector<double> dx_tmp(static_cast<size_t>(T) * d_in);
  k::matmul_dx(dy, w.w.data(), dx_tmp.data(), T, d_in, d_out);
  k::add_inplace(dx_accum, dx_tmp.data(), static_cast<int64_t>(dx_tmp.size()));
  if (ad.attached()) {
    const int r = ad.rank;
    std::vector<double> dmid(static_cast<size_t>(T) * r);
    k::matmul_dx(dy, ad.b->w.data(), dmid.data(), T, r, d_out);
    k::scale_inplace(dmid.data(), ad.scale, static_cast<int64_t>(dmid.size()));
    std::vector<double> scaled_mid(mid);
    k::scale_inplace(scaled_mid.data(), ad.scale, static_cast<int64_t>(scaled_mid.size()));
    k::matmul_dw(scaled_mid.data(), dy, ad.b->g.data(), T, r, d_out);
    k::matmul_dw(x, dmid.data(), ad.a->g.data(), T, d_in, r);
    k::matmul_dx(dmid.data(), ad.a->w.data(), dx_tmp.data(), T, d_in, r);
    k::add_inplace(dx_accum, dx_tmp.data(), static_cast<int64_t>(static_cast<size_t>(T) * d_in));
  }
}

void check_ids(std::span<const uint32_t> ids, int vocab) {
  for (uint32_t id : ids) {
    require(id < static_cast<uint32_t>(vocab), Errc::VocabMismatch,
            "token id " + std::to_string(id) + " >= vocab " + std::to_string(vocab));
  }
}

void attention_fwd(const TinyTransformerConfig& cfg, LayerCache& lc, int T) {
  const int d = cfg.d_model;
  const int h = cfg.n_heads;
  const int dh = d / h;
  const double rsqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  lc.probs.assign(static_cast<size_t>(h) * T * T, 0.0);
  lc.concat.assign(static_cast<size_t>(T) * d, 0.0);
#pragma omp parallel for collapse(2) schedule(static) if (T > 1)
  for (int head = 0; head < h; ++head) {
    for (int i = 0; i < T; ++i) {
      const double* qi = lc.q.data() + static_cast<int64_t>(i) * d + head * dh;
      double* prow = lc.probs.data() + (static_cast<int64_t>(head) * T + i) * T;
      double mx = -1e300;
      for (int j = 0; j <= i; ++j) {
        const double* kj = lc.kk.data() + static_cast<int64_t>(j) * d + head * dh;
        double s = 0.0;
        for (int a = 0; a < dh; ++a) s += qi[a] * kj[a];
        s *= rsqrt_dh;
        prow[j] = s;
        mx = s > mx ? s : mx;
      }
      double sum = 0.0;
      for (int j = 0; j <= i; ++j) {
        prow[j] = std::exp(prow[j] - mx);
        sum += prow[j];
      }
      const double inv = 1.0 / sum;
      double* crow = lc.concat.data() + static_cast<int64_t>(i) * d + head * dh;
      for (int j = 0; j <= i; ++j) {
        prow[j] *= inv;
        const double* vj = lc.vv.data() + static_cast<int64_t>(j) * d + head * dh;
        const double p = prow[j];
        for (int a = 0; a < dh; ++a) crow[a] += p * vj[a];
      }
    }
  }
}

void attention_bwd(const TinyTransformerConfig& cfg, const LayerCache& lc, const double* dconcat,
                   double* dq, double* dk, double* dv, int T) {
  const int d = cfg.d_model;
  const int h = cfg.n_heads;
  const int dh = d / h;
  const double rsqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  // Per-head output slices of dq/dk/dv are disjoint, so heads parallelize.
#pragma omp parallel for schedule(static) if (h > 1)
  for (int head = 0; head < h; ++head) {
    std::vector<double> dprow(static_cast<size_t>(T));
    for (int i = 0; i < T; ++i) {
      const double* prow = lc.probs.data() + (static_cast<int64_t>(head) * T + i) * T;
      const double* dci = dconcat + static_cast<int64_t>(i) * d + head * dh;
      double inner = 0.0;
      for (int j = 0; j <= i; ++j) {
        const double* vj = lc.vv.data() + static_cast<int64_t>(j) * d + head * dh;
        double dp = 0.0;
        for (int a = 0; a < dh; ++a) dp += dci[a] * vj[a];
        dprow[static_cast<size_t>(j)] = dp;
        inner += prow[j] * dp;
        double* dvj = dv + static_cast<int64_t>(j) * d + head * dh;
        const double p = prow[j];
        for (int a = 0; a < dh; ++a) dvj[a] += p * dci[a];
      }
      double* dqi = dq + static_cast<int64_t>(i) * d + head * dh;
      const double* qi = lc.q.data() + static_cast<int64_t>(i) * d + head * dh;
      for (int j = 0; j <= i; ++j) {
        const double ds = prow[j] * (dprow[static_cast<size_t>(j)] - inner) * rsqrt_dh;
        const double* kj = lc.kk.data() + static_cast<int64_t>(j) * d + head * dh;
        double* dkj = dk + static_cast<int64_t>(j) * d + head * dh;
        for (int a = 0; a < dh; ++a) {
          dqi[a] += ds * kj[a];
          dkj[a] += ds * qi[a];
        }
      }
    }
  }
}

}  // namespace

struct TinyImpl {
  std::vector<std::unique_ptr<Tensor>> store;
  Tensor* tok_emb = nullptr;
  Tensor* pos_emb = nullptr;
  Tensor* lnf_g = nullptr;
  Tensor* lnf_b = nullptr;
  Tensor* head = nullptr;
  std::vector<Block> blocks;

  Tensor* add(const std::string& name, int layer, const std::string& group, int rows, int cols) {
    auto t = std::make_unique<Tensor>();
    t->name = name;
    t->layer = layer;
    t->group = group;
    t->rows = rows;
    t->cols = cols;
    t->w.assign(static_cast<size_t>(rows) * cols, 0.0);
    t->g.assign(t->w.size(), 0.0);
    t->m.assign(t->w.size(), 0.0);
    t->v.assign(t->w.size(), 0.0);
    store.push_back(std::move(t));
    return store.back().get();
  }

  // Canonical flattening order: (layer, name).
  void sort_canonical() {
    std::sort(store.begin(), store.end(), [](const auto& a, const auto& b) {
      if (a->layer != b->layer) return a->layer < b->layer;
      return a->name < b->name;
    });
  }

  void init_weights(uint64_t seed, double std) {
    for (auto& t : store) {
      Rng rng(derive_seed(seed, std::to_string(t->layer) + ":" + t->name));
      const bool is_ln_gain = t->name.ends_with("gamma");
      const bool is_ln_bias = t->name.ends_with("beta");
      for (double& x : t->w) {
        if (is_ln_gain) {
          x = 1.0;
        } else if (is_ln_bias) {
          x = 0.0;
        } else {
          x = std * rng.normal();
        }
      }
    }
  }

  void forward(const TinyTransformerConfig& cfg, std::span<const uint32_t> ids, Cache& c) {
    const int T = static_cast<int>(ids.size());
    const int d = cfg.d_model;
    c.T = T;
    c.ids.assign(ids.begin(), ids.end());
    c.x0.assign(static_cast<size_t>(T) * d, 0.0);
    for (int i = 0; i < T; ++i) {
      const double* te =
          tok_emb->w.data() + static_cast<int64_t>(ids[static_cast<size_t>(i)]) * d;
      const double* pe = pos_emb->w.data() + static_cast<int64_t>(i) * d;
      double* row = c.x0.data() + static_cast<int64_t>(i) * d;
      for (int a = 0; a < d; ++a) row[a] = te[a] + pe[a];
    }

    c.layers.assign(static_cast<size_t>(cfg.n_layers), LayerCache{});
    std::vector<double> cur = c.x0;
    for (int li = 0; li < cfg.n_layers; ++li) {
      Block& b = blocks[static_cast<size_t>(li)];
      LayerCache& lc = c.layers[static_cast<size_t>(li)];
      lc.x_in = std::move(cur);
      lc.ln1_out.assign(static_cast<size_t>(T) * d, 0.0);
      lc.ln1_mean.assign(static_cast<size_t>(T), 0.0);
      lc.ln1_rstd.assign(static_cast<size_t>(T), 0.0);
      k::layernorm_fwd(lc.x_in.data(), b.ln1_g->w.data(), b.ln1_b->w.data(), lc.ln1_out.data(),
                       lc.ln1_mean.data(), lc.ln1_rstd.data(), T, d);
      lc.q.assign(static_cast<size_t>(T) * d, 0.0);
      lc.kk.assign(static_cast<size_t>(T) * d, 0.0);
      lc.vv.assign(static_cast<size_t>(T) * d, 0.0);
      linear_fwd(*b.wq, b.ad_q, lc.ln1_out.data(), lc.q.data(), T, d, d, &lc.aq);
      linear_fwd(*b.wk, b.ad_k, lc.ln1_out.data(), lc.kk.data(), T, d, d, &lc.ak);
      linear_fwd(*b.wv, b.ad_v, lc.ln1_out.data(), lc.vv.data(), T, d, d, &lc.av);
      attention_fwd(cfg, lc, T);
      std::vector<double> attn_out(static_cast<size_t>(T) * d, 0.0);
      linear_fwd(*b.wo, b.ad_o, lc.concat.data(), attn_out.data(), T, d, d, &lc.ao);
      lc.resid1.resize(static_cast<size_t>(T) * d);
      for (size_t idx = 0; idx < lc.resid1.size(); ++idx) {
        lc.resid1[idx] = lc.x_in[idx] + attn_out[idx];
      }
      lc.ln2_out.assign(static_cast<size_t>(T) * d, 0.0);
      lc.ln2_mean.assign(static_cast<size_t>(T), 0.0);
      lc.ln2_rstd.assign(static_cast<size_t>(T), 0.0);
      k::layernorm_fwd(lc.resid1.data(), b.ln2_g->w.data(), b.ln2_b->w.data(), lc.ln2_out.data(),
                       lc.ln2_mean.data(), lc.ln2_rstd.data(), T, d);
      lc.ff1.assign(static_cast<size_t>(T) * cfg.d_ff, 0.0);
      k::matmul(lc.ln2_out.data(), b.w1->w.data(), lc.ff1.data(), T, d, cfg.d_ff);
      lc.gelu_out.assign(static_cast<size_t>(T) * cfg.d_ff, 0.0);
      k::gelu_fwd(lc.ff1.data(), lc.gelu_out.data(), static_cast<int64_t>(lc.ff1.size()));
      std::vector<double> ff2(static_cast<size_t>(T) * d, 0.0);
      k::matmul(lc.gelu_out.data(), b.w2->w.data(), ff2.data(), T, cfg.d_ff, d);
      cur.resize(static_cast<size_t>(T) * d);
      for (size_t idx = 0; idx < cur.size(); ++idx) cur[idx] = lc.resid1[idx] + ff2[idx];
    }

    c.final_in = std::move(cur);
    c.lnf_out.assign(static_cast<size_t>(T) * d, 0.0);
    c.lnf_mean.assign(static_cast<size_t>(T), 0.0);
    c.lnf_rstd.assign(static_cast<size_t>(T), 0.0);
    k::layernorm_fwd(c.final_in.data(), lnf_g->w.data(), lnf_b->w.data(), c.lnf_out.data(),
                     c.lnf_mean.data(), c.lnf_rstd.data(), T, d);
    c.logits.assign(static_cast<size_t>(T) * cfg.vocab, 0.0);
    k::matmul(c.lnf_out.data(), head->w.data(), c.logits.data(), T, d, cfg.vocab);
  }

  // Accumulates parameter gradients for loss scaled by inv_total; returns the
  // unscaled summed NLL over the window.
  double backward(const TinyTransformerConfig& cfg, Cache& c, std::span<const uint32_t> targets,
                  double inv_total) {
    const int T = c.T;
    const int d = cfg.d_model;
    const int V = cfg.vocab;

    double loss = 0.0;
    std::vector<double> dlogits(static_cast<size_t>(T) * V, 0.0);
    for (int i = 0; i < T; ++i) {
      const double* lrow = c.logits.data() + static_cast<int64_t>(i) * V;
      double* drow = dlogits.data() + static_cast<int64_t>(i) * V;
      double mx = lrow[0];
      for (int j = 1; j < V; ++j) mx = lrow[j] > mx ? lrow[j] : mx;
      double sum = 0.0;
      for (int j = 0; j < V; ++j) sum += std::exp(lrow[j] - mx);
      const double logsum = std::log(sum) + mx;
      const uint32_t tgt = targets[static_cast<size_t>(i)];
      loss += logsum - lrow[tgt];
      const double inv = 1.0 / sum;
      for (int j = 0; j < V; ++j) drow[j] = std::exp(lrow[j] - mx) * inv * inv_total;
      drow[tgt] -= inv_total;
    }

    std::vector<double> dlnf(static_cast<size_t>(T) * d, 0.0);
    k::matmul_dw(c.lnf_out.data(), dlogits.data(), head->g.data(), T, d, V);
    k::matmul_dx(dlogits.data(), head->w.data(), dlnf.data(), T, d, V);
    std::vector<double> dx(static_cast<size_t>(T) * d, 0.0);
    k::layernorm_bwd(dlnf.data(), c.final_in.data(), lnf_g->w.data(), c.lnf_mean.data(),
                     c.lnf_rstd.data(), dx.data(), lnf_g->g.data(), lnf_b->g.data(), T, d);

    for (int li = cfg.n_layers - 1; li >= 0; --li) {
      Block& b = blocks[static_cast<size_t>(li)];
      LayerCache& lc = c.layers[static_cast<size_t>(li)];

      // dx is the gradient at the block output x2 = resid1 + ff2.
      std::vector<double> dgelu(static_cast<size_t>(T) * cfg.d_ff, 0.0);
      k::matmul_dw(lc.gelu_out.data(), dx.data(), b.w2->g.data(), T, cfg.d_ff, d);
      k::matmul_dx(dx.data(), b.w2->w.data(), dgelu.data(), T, cfg.d_ff, d);
      std::vector<double> dff1(static_cast<size_t>(T) * cfg.d_ff, 0.0);
      k::gelu_bwd(lc.ff1.data(), dgelu.data(), dff1.data(), static_cast<int64_t>(dff1.size()));
      std::vector<double> dln2(static_cast<size_t>(T) * d, 0.0);
      k::matmul_dw(lc.ln2_out.data(), dff1.data(), b.w1->g.data(), T, d, cfg.d_ff);
      k::matmul_dx(dff1.data(), b.w1->w.data(), dln2.data(), T, d, cfg.d_ff);
      std::vector<double> dresid1(dx);
      k::layernorm_bwd(dln2.data(), lc.resid1.data(), b.ln2_g->w.data(), lc.ln2_mean.data(),
                       lc.ln2_rstd.data(), dresid1.data(), b.ln2_g->g.data(), b.ln2_b->g.data(),
                       T, d);

      // dresid1 is the gradient at resid1 = x_in + attn_out.
      std::vector<double> dconcat(static_cast<size_t>(T) * d, 0.0);
      linear_bwd(*b.wo, b.ad_o, lc.concat.data(), lc.ao, dresid1.data(), dconcat.data(), T, d, d);
      std::vector<double> dq(static_cast<size_t>(T) * d, 0.0);
      std::vector<double> dk(static_cast<size_t>(T) * d, 0.0);
      std::vector<double> dv(static_cast<size_t>(T) * d, 0.0);
      attention_bwd(cfg, lc, dconcat.data(), dq.data(), dk.data(), dv.data(), T);
      std::vector<double> dln1(static_cast<size_t>(T) * d, 0.0);
      linear_bwd(*b.wq, b.ad_q, lc.ln1_out.data(), lc.aq, dq.data(), dln1.data(), T, d, d);
      linear_bwd(*b.wk, b.ad_k, lc.ln1_out.data(), lc.ak, dk.data(), dln1.data(), T, d, d);
      linear_bwd(*b.wv, b.ad_v, lc.ln1_out.data(), lc.av, dv.data(), dln1.data(), T, d, d);
      std::vector<double> dx_in(dresid1);
      k::layernorm_bwd(dln1.data(), lc.x_in.data(), b.ln1_g->w.data(), lc.ln1_mean.data(),
                       lc.ln1_rstd.data(), dx_in.data(), b.ln1_g->g.data(), b.ln1_b->g.data(), T,
                       d);
      dx = std::move(dx_in);
    }

    for (int i = 0; i < T; ++i) {
      const double* drow = dx.data() + static_cast<int64_t>(i) * d;
      double* te = tok_emb->g.data() + static_cast<int64_t>(c.ids[static_cast<size_t>(i)]) * d;
      double* pe = pos_emb->g.data() + static_cast<int64_t>(i) * d;
      for (int a = 0; a < d; ++a) {
        te[a] += drow[a];
        pe[a] += drow[a];
      }
    }
    return loss;
  }
};

TinyTransformer::TinyTransformer(const TinyTransformerConfig& cfg)
    : cfg_(cfg), impl_(std::make_unique<TinyImpl>()) {
  require(cfg.d_model % cfg.n_heads == 0, Errc::BadConfig, "d_model % n_heads != 0");
  require(cfg.vocab > 1 && cfg.ctx >= 2 && cfg.n_layers >= 1, Errc::BadConfig,
          "degenerate transformer shape");
  auto& im = *impl_;
  const int d = cfg.d_model;
  im.tok_emb = im.add("tok_emb", 0, "embed", cfg.vocab, d);
  im.pos_emb = im.add("pos_emb", 0, "embed", cfg.ctx, d);
  im.blocks.resize(static_cast<size_t>(cfg.n_layers));
  for (int i = 0; i < cfg.n_layers; ++i) {
    const int layer = i + 1;
    const std::string group = "block" + std::to_string(i);
    Block& b = im.blocks[static_cast<size_t>(i)];
    b.ln1_g = im.add("ln1.gamma", layer, group, 1, d);
    b.ln1_b = im.add("ln1.beta", layer, group, 1, d);
    b.wq = im.add("attn.wq", layer, group, d, d);
    b.wk = im.add("attn.wk", layer, group, d, d);
    b.wv = im.add("attn.wv", layer, group, d, d);
    b.wo = im.add("attn.wo", layer, group, d, d);
    b.ln2_g = im.add("ln2.gamma", layer, group, 1, d);
    b.ln2_b = im.add("ln2.beta", layer, group, 1, d);
    b.w1 = im.add("mlp.w1", layer, group, d, cfg.d_ff);
    b.w2 = im.add("mlp.w2", layer, group, cfg.d_ff, d);
  }
  const int head_layer = cfg.n_layers + 1;
  im.lnf_g = im.add("lnf.gamma", head_layer, "head", 1, d);
  im.lnf_b = im.add("lnf.beta", head_layer, "head", 1, d);
  im.head = im.add("head.w", head_layer, "head", d, cfg.vocab);
  im.sort_canonical();
  im.init_weights(cfg.init_seed, cfg.init_std);
}

TinyTransformer::~TinyTransformer() = default;

std::vector<std::string> TinyTransformer::group_names() const {
  std::vector<std::string> names;
  for (const auto& t : impl_->store) {
    if (std::find(names.begin(), names.end(), t->group) == names.end()) {
      names.push_back(t->group);
    }
  }
  return names;
}

std::vector<TensorInfo> TinyTransformer::tensors() const {
  std::vector<TensorInfo> out;
  out.reserve(impl_->store.size());
  for (const auto& t : impl_->store) {
    out.push_back(TensorInfo{t->name, t->layer, t->group, t->size()});
  }
  return out;
}

void TinyTransformer::set_frozen(const std::set<std::string>& groups) {
  const auto names = group_names();
  for (const auto& g : groups) {
    require(std::find(names.begin(), names.end(), g) != names.end(), Errc::UnknownGroup, g);
  }
  frozen_ = groups;
}

void TinyTransformer::attach_low_rank_adapters(const std::vector<std::string>& target_tensors,
                                               int rank, double scale) {
  require(!adapters_attached_, Errc::BadTarget, "adapters already attached");
  require(rank >= 1, Errc::BadConfig, "adapter rank must be >= 1");
  require(!target_tensors.empty(), Errc::BadTarget, "empty adapter target list");
  const double s = scale > 0.0 ? scale : 1.0 / rank;
  auto& im = *impl_;
  const int d = cfg_.d_model;
  for (int i = 0; i < cfg_.n_layers; ++i) {
    Block& b = im.blocks[static_cast<size_t>(i)];
    const int layer = i + 1;
    const std::string group = "adapter.block" + std::to_string(i);
    for (const auto& target : target_tensors) {
      Adapter* ad = nullptr;
      if (target == "attn.wq") ad = &b.ad_q;
      else if (target == "attn.wk") ad = &b.ad_k;
      else if (target == "attn.wv") ad = &b.ad_v;
      else if (target == "attn.wo") ad = &b.ad_o;
      else fail(Errc::BadTarget, "no adapter slot for tensor " + target);
      ad->a = im.add(target + ".lora_a", layer, group, d, rank);
      ad->b = im.add(target + ".lora_b", layer, group, rank, d);
      ad->scale = s;
      ad->rank = rank;
      Rng rng(derive_seed(cfg_.init_seed, "adapter:" + std::to_string(layer) + ":" + target));
      for (double& x : ad->a->w) x = cfg_.init_std * rng.normal();
      // lora_b stays zero: attachment is behavior-preserving at init.
    }
  }
  im.sort_canonical();
  adapters_attached_ = true;
}

std::vector<double> TinyTransformer::position_nll(std::span<const uint32_t> window) const {
  require(window.size() >= 2, Errc::Precondition, "window needs at least 2 tokens");
  require(static_cast<int>(window.size()) - 1 <= cfg_.ctx, Errc::Precondition,
          "window longer than context+1");
  check_ids(window, cfg_.vocab);
  Cache c;
  impl_->forward(cfg_, window.subspan(0, window.size() - 1), c);
  const int T = c.T;
  const int V = cfg_.vocab;
  std::vector<double> out(static_cast<size_t>(T), 0.0);
  for (int i = 0; i < T; ++i) {
    const double* lrow = c.logits.data() + static_cast<int64_t>(i) * V;
    double mx = lrow[0];
    for (int j = 1; j < V; ++j) mx = lrow[j] > mx ? lrow[j] : mx;
    double sum = 0.0;
    for (int j = 0; j < V; ++j) sum += std::exp(lrow[j] - mx);
    out[static_cast<size_t>(i)] = std::log(sum) + mx - lrow[window[static_cast<size_t>(i) + 1]];
  }
  return out;
}

std::vector<double> TinyTransformer::next_token_logits(std::span<const uint32_t> prefix) const {
  require(!prefix.empty(), Errc::Precondition, "empty prefix");
  check_ids(prefix, cfg_.vocab);
  auto tail = prefix;
  if (static_cast<int>(tail.size()) > cfg_.ctx) {
    tail = tail.subspan(tail.size() - static_cast<size_t>(cfg_.ctx));
  }
  Cache c;
  impl_->forward(cfg_, tail, c);
  const int V = cfg_.vocab;
  const double* last = c.logits.data() + static_cast<int64_t>(c.T - 1) * V;
  return {last, last + V};
}

std::vector<double> TinyTransformer::grad_vector_scaled(
    const std::vector<std::vector<uint32_t>>& batch, const std::set<std::string>& subset,
    double loss_scale) {
  require(!batch.empty(), Errc::EmptyBatch, "grad_vector over empty batch");
  require(!subset.empty(), Errc::Precondition, "empty group subset");
  const auto names = group_names();
  for (const auto& g : subset) {
    require(std::find(names.begin(), names.end(), g) != names.end(), Errc::UnknownGroup, g);
    require(!frozen_.count(g), Errc::Precondition, "group " + g + " is frozen");
  }

  for (auto& t : impl_->store) k::zero(t->g.data(), t->size());
  int64_t total = 0;
  for (const auto& w : batch) {
    require(w.size() >= 2, Errc::Precondition, "window needs at least 2 tokens");
    total += static_cast<int64_t>(w.size()) - 1;
  }
  const double inv_total = loss_scale / static_cast<double>(total);
  for (const auto& w : batch) {
    check_ids(w, cfg_.vocab);
    Cache c;
    std::span<const uint32_t> ws(w);
    impl_->forward(cfg_, ws.subspan(0, ws.size() - 1), c);
    impl_->backward(cfg_, c, ws.subspan(1), inv_total);
  }

  std::vector<double> out;
  for (const auto& t : impl_->store) {  // canonical order
    if (!subset.count(t->group)) continue;
    out.insert(out.end(), t->g.begin(), t->g.end());
  }
  return out;
}

std::vector<double> TinyTransformer::grad_vector(const std::vector<std::vector<uint32_t>>& batch,
                                                 const std::set<std::string>& subset) {
  return grad_vector_scaled(batch, subset, 1.0);
}

double TinyTransformer::train_batch(const std::vector<std::vector<uint32_t>>& batch, double lr) {
  require(!batch.empty(), Errc::EmptyBatch, "train_batch over empty batch");
  for (auto& t : impl_->store) k::zero(t->g.data(), t->size());

  int64_t total = 0;
  for (const auto& w : batch) {
    require(w.size() >= 2, Errc::Precondition, "window needs at least 2 tokens");
    total += static_cast<int64_t>(w.size()) - 1;
  }
  const double inv_total = 1.0 / static_cast<double>(total);
  double loss = 0.0;
  for (const auto& w : batch) {
    check_ids(w, cfg_.vocab);
    Cache c;
    std::span<const uint32_t> ws(w);
    impl_->forward(cfg_, ws.subspan(0, ws.size() - 1), c);
    loss += impl_->backward(cfg_, c, ws.subspan(1), inv_total);
  }
  loss *= inv_total;

  // Global-norm clip over the trainable gradient, canonical order.
  double norm_sq = 0.0;
  for (const auto& t : impl_->store) {
    if (frozen_.count(t->group)) continue;
    norm_sq += k::l2_norm_sq(t->g.data(), t->size());
  }
  const double norm = std::sqrt(norm_sq);
  const double clip = grad_clip_;
  if (clip > 0.0 && norm > clip) {
    const double s = clip / norm;
    for (const auto& t : impl_->store) {
      if (frozen_.count(t->group)) continue;
      k::scale_inplace(t->g.data(), s, t->size());
    }
  }

  ++step_;
  kernels::AdamwParams hp = adamw_;
  hp.lr = lr;
  for (const auto& t : impl_->store) {
    if (frozen_.count(t->group)) continue;
    k::adamw_step(t->w.data(), t->g.data(), t->m.data(), t->v.data(), t->size(), hp, step_);
  }
  return loss;
}

void TinyTransformer::reset_optimizer_state() {
  for (auto& t : impl_->store) {
    k::zero(t->m.data(), t->size());
    k::zero(t->v.data(), t->size());
  }
  step_ = 0;
}

uint64_t TinyTransformer::group_checksum(const std::string& group) const {
  uint64_t h = 0xCBF29CE484222325ull;
  bool seen = false;
  for (const auto& t : impl_->store) {
    if (t->group != group) continue;
    seen = true;
    h = fnv1a64(t->w.data(), t->w.size() * sizeof(double), h);
  }
  require(seen, Errc::UnknownGroup, group);
  return h;
}

std::vector<TinyTransformer::TensorView> TinyTransformer::tensor_views() {
  std::vector<TensorView> out;
  out.reserve(impl_->store.size());
  for (auto& t : impl_->store) {
    out.push_back(TensorView{t->name, t->layer, t->group, &t->w, &t->m, &t->v});
  }
  return out;
}

}  // namespace driftbench::model
