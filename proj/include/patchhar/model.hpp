#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchhar/error.hpp"
#include "patchhar/mat.hpp"
#include "patchhar/rng.hpp"

namespace patchhar {

// Patch-tokenized transformer over one tri-axial window. A window of
// patch_len * patch_count samples becomes patch_count tokens of size
// 3 * patch_len, projected to dim and run through pre-norm encoder layers.
struct ModelConfig {
  int patch_len = 5;
  int patch_count = 10;
  int dim = 128;
  int layers = 4;
  int heads = 8;
  int ffn_dim = 256;  // conventionally 2 * dim
  int classes = 19;
  double dropout = 0.1;           // attention-output and FFN-output dropout
  double stochastic_depth = 0.05;  // per-residual-branch drop probability

  int window_len() const { return patch_len * patch_count; }
  int patch_dim() const { return 3 * patch_len; }

  void validate() const {
    if (patch_len < 1 || patch_count < 1 || dim < 1 || layers < 1 || heads < 1 || ffn_dim < 1 ||
        classes < 2)
      throw std::invalid_argument("model config: all dimensions must be positive, classes >= 2");
    if (dim % heads != 0)
      throw std::invalid_argument("model config: dim must be divisible by heads");
    if (dropout < 0 || dropout >= 1)
      throw std::invalid_argument("model config: dropout outside [0, 1)");
    if (stochastic_depth < 0 || stochastic_depth >= 1)
      throw std::invalid_argument("model config: stochastic depth outside [0, 1)");
  }
};

template <typename T>
struct LayerParams {
  std::vector<T> ln1_gamma, ln1_beta;
  Mat<T> wq, wk, wv, wo;
  std::vector<T> bq, bk, bv, bo;
  std::vector<T> ln2_gamma, ln2_beta;
  Mat<T> ffn_w1;
  std::vector<T> ffn_b1;
  Mat<T> ffn_w2;
  std::vector<T> ffn_b2;
};

template <typename T>
struct ModelParams {
  Mat<T> proj_w;             // patch_dim x dim
  std::vector<T> proj_b;     // dim
  Mat<T> pos_table;          // patch_count x dim, fixed sinusoidal, not learned
  std::vector<LayerParams<T>> layers;
  std::vector<T> lnf_gamma, lnf_beta;
  Mat<T> head_w;             // dim x classes
  std::vector<T> head_b;     // classes
};

// Weight decay applies to projection matrices only, never to biases or
// normalization affines.
enum class ParamClass { Weight, Bias, Norm };

template <typename T>
struct TensorRef {
  std::string name;
  std::vector<T>* data;
  ParamClass cls;
};

template <typename T>
std::vector<TensorRef<T>> tensor_refs(ModelParams<T>& p) {
  std::vector<TensorRef<T>> refs;
  refs.push_back({"proj.w", &p.proj_w.v, ParamClass::Weight});
  refs.push_back({"proj.b", &p.proj_b, ParamClass::Bias});
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    LayerParams<T>& lp = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    refs.push_back({pre + "ln1.gamma", &lp.ln1_gamma, ParamClass::Norm});
    refs.push_back({pre + "ln1.beta", &lp.ln1_beta, ParamClass::Norm});
    refs.push_back({pre + "attn.wq", &lp.wq.v, ParamClass::Weight});
    refs.push_back({pre + "attn.bq", &lp.bq, ParamClass::Bias});
    refs.push_back({pre + "attn.wk", &lp.wk.v, ParamClass::Weight});
    refs.push_back({pre + "attn.bk", &lp.bk, ParamClass::Bias});
    refs.push_back({pre + "attn.wv", &lp.wv.v, ParamClass::Weight});
    refs.push_back({pre + "attn.bv", &lp.bv, ParamClass::Bias});
    refs.push_back({pre + "attn.wo", &lp.wo.v, ParamClass::Weight});
    refs.push_back({pre + "attn.bo", &lp.bo, ParamClass::Bias});
    refs.push_back({pre + "ln2.gamma", &lp.ln2_gamma, ParamClass::Norm});
    refs.push_back({pre + "ln2.beta", &lp.ln2_beta, ParamClass::Norm});
    refs.push_back({pre + "ffn.w1", &lp.ffn_w1.v, ParamClass::Weight});
    refs.push_back({pre + "ffn.b1", &lp.ffn_b1, ParamClass::Bias});
    refs.push_back({pre + "ffn.w2", &lp.ffn_w2.v, ParamClass::Weight});
    refs.push_back({pre + "ffn.b2", &lp.ffn_b2, ParamClass::Bias});
  }
  refs.push_back({"lnf.gamma", &p.lnf_gamma, ParamClass::Norm});
  refs.push_back({"lnf.beta", &p.lnf_beta, ParamClass::Norm});
  refs.push_back({"head.w", &p.head_w.v, ParamClass::Weight});
  refs.push_back({"head.b", &p.head_b, ParamClass::Bias});
  return refs;
}

template <typename T>
struct ConstTensorRef {
  std::string name;
  const std::vector<T>* data;
  ParamClass cls;
};

template <typename T>
std::vector<ConstTensorRef<T>> tensor_refs(const ModelParams<T>& p) {
  auto refs = tensor_refs(const_cast<ModelParams<T>&>(p));
  std::vector<ConstTensorRef<T>> out;
  out.reserve(refs.size());
  for (auto& r : refs) out.push_back({r.name, r.data, r.cls});
  return out;
}

// Learnable parameter total, by closed-form shape sum. Excludes the fixed
// position table.
inline std::int64_t param_count(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t d = cfg.dim, f = cfg.ffn_dim, c = cfg.classes;
  const std::int64_t pd = cfg.patch_dim();
  std::int64_t per_layer = 2 * d                 // ln1
                           + 4 * (d * d + d)     // q, k, v, o projections
                           + 2 * d               // ln2
                           + d * f + f           // ffn in
                           + f * d + d;          // ffn out
  return pd * d + d                              // patch projection
         + cfg.layers * per_layer                // encoder stack
         + 2 * d                                 // final norm
         + d * c + c;                            // head
}

// Interleaved sinusoidal position table: even columns sine, odd cosine, with
// the usual geometric frequency ladder.
template <typename T>
Mat<T> make_pos_table(int patch_count, int dim) {
  Mat<T> pos(patch_count, dim);
  for (int p = 0; p < patch_count; ++p) {
    for (int j = 0; j < dim; ++j) {
      const int pair = j / 2;
      const double omega = std::pow(10000.0, -2.0 * pair / dim);
      pos(p, j) = static_cast<T>(j % 2 == 0 ? std::sin(p * omega) : std::cos(p * omega));
    }
  }
  return pos;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams<T> p;
  auto eng = make_engine(mix_seed(seed, 0x1217u));
  std::normal_distribution<double> gauss(0.0, 0.02);
  auto trunc_normal_fill = [&](std::vector<T>& v) {
    for (T& x : v) {
      double z;
      do {
        z = gauss(eng);
      } while (std::abs(z) > 0.04);  // resample beyond two standard deviations
      x = static_cast<T>(z);
    }
  };
  auto weight = [&](Mat<T>& m, int r, int c) {
    m = Mat<T>(r, c);
    trunc_normal_fill(m.v);
  };
  auto zeros = [](std::vector<T>& v, int n) { v.assign(static_cast<std::size_t>(n), T(0)); };
  auto ones = [](std::vector<T>& v, int n) { v.assign(static_cast<std::size_t>(n), T(1)); };

  weight(p.proj_w, cfg.patch_dim(), cfg.dim);
  zeros(p.proj_b, cfg.dim);
  p.pos_table = make_pos_table<T>(cfg.patch_count, cfg.dim);
  p.layers.resize(static_cast<std::size_t>(cfg.layers));
  for (LayerParams<T>& lp : p.layers) {
    ones(lp.ln1_gamma, cfg.dim);
    zeros(lp.ln1_beta, cfg.dim);
    weight(lp.wq, cfg.dim, cfg.dim);
    weight(lp.wk, cfg.dim, cfg.dim);
    weight(lp.wv, cfg.dim, cfg.dim);
    weight(lp.wo, cfg.dim, cfg.dim);
    zeros(lp.bq, cfg.dim);
    zeros(lp.bk, cfg.dim);
    zeros(lp.bv, cfg.dim);
    zeros(lp.bo, cfg.dim);
    ones(lp.ln2_gamma, cfg.dim);
    zeros(lp.ln2_beta, cfg.dim);
    weight(lp.ffn_w1, cfg.dim, cfg.ffn_dim);
    zeros(lp.ffn_b1, cfg.ffn_dim);
    weight(lp.ffn_w2, cfg.ffn_dim, cfg.dim);
    zeros(lp.ffn_b2, cfg.dim);
  }
  ones(p.lnf_gamma, cfg.dim);
  zeros(p.lnf_beta, cfg.dim);
  weight(p.head_w, cfg.dim, cfg.classes);
  zeros(p.head_b, cfg.classes);
  return p;
}

template <typename T>
ModelParams<T> zeros_like(const ModelParams<T>& src) {
  ModelParams<T> out = src;
  for (auto& r : tensor_refs(out)) std::fill(r.data->begin(), r.data->end(), T(0));
  return out;
}

// Rearranges a (patch_len * patch_count) x 3 window into patch_count rows of
// axis-major patches: [x_0..x_{L-1}, y_0..y_{L-1}, z_0..z_{L-1}].
template <typename T>
Mat<T> patchify(const Mat<T>& a, int patch_len, int patch_count) {
  if (patch_len < 1 || patch_count < 1)
    throw std::invalid_argument("patchify: patch_len and patch_count must be positive");
  if (a.cols != 3 || a.rows != patch_len * patch_count)
    throw std::invalid_argument("patchify: expected a " +
                                std::to_string(patch_len * patch_count) + "x3 array");
  Mat<T> out(patch_count, 3 * patch_len);
  for (int p = 0; p < patch_count; ++p)
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < patch_len; ++i) out(p, k * patch_len + i) = a(p * patch_len + i, k);
  return out;
}

// Linear patch embedding plus fixed position table.
template <typename T>
Mat<T> embed(const Mat<T>& patches, const Mat<T>& w, const std::vector<T>& b,
             const Mat<T>& pos_table) {
  if (patches.cols != w.rows || static_cast<int>(b.size()) != w.cols ||
      pos_table.rows != patches.rows || pos_table.cols != w.cols)
    throw std::invalid_argument("embed: shape mismatch");
  Mat<T> tokens = matmul(patches, w);
  for (int p = 0; p < tokens.rows; ++p)
    for (int j = 0; j < tokens.cols; ++j) tokens(p, j) += b[j] + pos_table(p, j);
  return tokens;
}

inline constexpr double kLayerNormEps = 1e-5;

// Row-wise layer norm; keeps per-row mean and inverse stddev for the backward
// pass.
template <typename T>
void layer_norm(const Mat<T>& x, const std::vector<T>& gamma, const std::vector<T>& beta,
                Mat<T>& out, std::vector<T>& mean, std::vector<T>& istd) {
  const int d = x.cols;
  if (static_cast<int>(gamma.size()) != d || static_cast<int>(beta.size()) != d)
    throw std::invalid_argument("layer_norm: affine size mismatch");
  out = Mat<T>(x.rows, d);
  mean.assign(static_cast<std::size_t>(x.rows), T(0));
  istd.assign(static_cast<std::size_t>(x.rows), T(0));
  for (int r = 0; r < x.rows; ++r) {
    double m = 0;
    for (int j = 0; j < d; ++j) m += x(r, j);
    m /= d;
    double var = 0;
    for (int j = 0; j < d; ++j) {
      const double c = x(r, j) - m;
      var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    mean[r] = static_cast<T>(m);
    istd[r] = static_cast<T>(inv);
    for (int j = 0; j < d; ++j)
      out(r, j) = static_cast<T>(gamma[j] * ((x(r, j) - m) * inv) + beta[j]);
  }
}

template <typename T>
T gelu(T x) {
  return static_cast<T>(0.5 * static_cast<double>(x) *
                        (1.0 + std::erf(static_cast<double>(x) / std::sqrt(2.0))));
}

template <typename T>
T gelu_grad(T x) {
  const double xd = static_cast<double>(x);
  const double cdf = 0.5 * (1.0 + std::erf(xd / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * M_PI);
  return static_cast<T>(cdf + xd * pdf);
}

template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  if (!all_finite(logits)) throw NumericError("softmax: non-finite input");
  T m = logits[0];
  for (T x : logits) m = std::max(m, x);
  std::vector<T> out(logits.size());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = static_cast<T>(std::exp(static_cast<double>(logits[i] - m)));
    sum += static_cast<double>(out[i]);
  }
  for (T& x : out) x = static_cast<T>(static_cast<double>(x) / sum);
  return out;
}

// Per-batch residual-branch keep/drop decisions for one layer.
struct LayerNoise {
  bool drop_attn = false;
  bool drop_ffn = false;
};

template <typename T>
struct LayerCache {
  Mat<T> x_in;
  Mat<T> ln1_out;
  std::vector<T> ln1_mean, ln1_istd;
  Mat<T> q, k, v;
  std::vector<Mat<T>> attn;  // per head, row-stochastic patch x patch weights
  Mat<T> heads_concat;       // attention context before the output projection
  Mat<T> attn_proj;          // after the output projection, before dropout
  Mat<T> attn_drop;          // elementwise dropout factors (empty in eval)
  T attn_branch_scale = T(1);
  Mat<T> x_mid;
  Mat<T> ln2_out;
  std::vector<T> ln2_mean, ln2_istd;
  Mat<T> ffn_pre;     // before the activation
  Mat<T> ffn_hidden;  // after the activation
  Mat<T> ffn_out;     // after the second linear, before dropout
  Mat<T> ffn_drop;
  T ffn_branch_scale = T(1);
};

template <typename T>
struct ForwardCache {
  Mat<T> patches;
  Mat<T> tokens;
  std::vector<LayerCache<T>> layers;
  Mat<T> encoded;  // encoder stack output, input to the final norm
  Mat<T> lnf_out;
  std::vector<T> lnf_mean, lnf_istd;
  std::vector<T> pooled;
  std::vector<T> logits;

  // Largest activation magnitude across all cached intermediates.
  T max_activation() const {
    T best = T(0);
    auto upd_m = [&](const Mat<T>& m) { best = std::max(best, max_abs(m)); };
    upd_m(patches);
    upd_m(tokens);
    for (const LayerCache<T>& lc : layers) {
      upd_m(lc.ln1_out);
      upd_m(lc.q);
      upd_m(lc.k);
      upd_m(lc.v);
      upd_m(lc.heads_concat);
      upd_m(lc.attn_proj);
      upd_m(lc.x_mid);
      upd_m(lc.ln2_out);
      upd_m(lc.ffn_pre);
      upd_m(lc.ffn_hidden);
      upd_m(lc.ffn_out);
    }
    upd_m(encoded);
    upd_m(lnf_out);
    for (T x : pooled) best = std::max(best, static_cast<T>(std::abs(static_cast<double>(x))));
    for (T x : logits) best = std::max(best, static_cast<T>(std::abs(static_cast<double>(x))));
    return best;
  }
};

struct ForwardOptions {
  bool train = false;
  const std::vector<LayerNoise>* layer_noise = nullptr;  // required when train
  std::uint64_t dropout_seed = 0;                        // per-window substream
};

// Softmax attention over tokens, heads slicing contiguous column blocks.
// Returns the output projection result (dropout is the caller's business).
template <typename T>
Mat<T> multi_head_attention(const Mat<T>& xn, const LayerParams<T>& lp, const ModelConfig& cfg,
                            LayerCache<T>* lc) {
  const int P = xn.rows, d = cfg.dim, h = cfg.heads, dk = d / h;
  auto project = [&](const Mat<T>& w, const std::vector<T>& b) {
    Mat<T> m = matmul(xn, w);
    for (int r = 0; r < m.rows; ++r)
      for (int j = 0; j < d; ++j) m(r, j) += b[j];
    return m;
  };
  Mat<T> q = project(lp.wq, lp.bq);
  Mat<T> k = project(lp.wk, lp.bk);
  Mat<T> v = project(lp.wv, lp.bv);

  const T inv_sqrt_dk = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));
  Mat<T> concat(P, d);
  std::vector<Mat<T>> attn(static_cast<std::size_t>(h));
  for (int a = 0; a < h; ++a) {
    const int c0 = a * dk;
    Mat<T>& w = attn[a];
    w = Mat<T>(P, P);
    for (int i = 0; i < P; ++i) {
      std::vector<T> row(static_cast<std::size_t>(P));
      for (int j = 0; j < P; ++j) {
        T s = T(0);
        for (int e = 0; e < dk; ++e) s += q(i, c0 + e) * k(j, c0 + e);
        row[j] = s * inv_sqrt_dk;
      }
      std::vector<T> p = softmax(row);
      for (int j = 0; j < P; ++j) w(i, j) = p[j];
    }
    for (int i = 0; i < P; ++i) {
      for (int e = 0; e < dk; ++e) {
        T s = T(0);
        for (int j = 0; j < P; ++j) s += w(i, j) * v(j, c0 + e);
        concat(i, c0 + e) = s;
      }
    }
  }
  Mat<T> out = matmul(concat, lp.wo);
  for (int r = 0; r < P; ++r)
    for (int j = 0; j < d; ++j) out(r, j) += lp.bo[j];
  if (lc) {
    lc->q = std::move(q);
    lc->k = std::move(k);
    lc->v = std::move(v);
    lc->attn = std::move(attn);
    lc->heads_concat = concat;
    lc->attn_proj = out;
  }
  return out;
}

namespace detail {

template <typename T>
Mat<T> dropout_factors(int rows, int cols, double rate, std::mt19937_64& rng) {
  Mat<T> f(rows, cols, T(1));
  if (rate <= 0) return f;
  std::bernoulli_distribution drop(rate);
  const T keep_inv = static_cast<T>(1.0 / (1.0 - rate));
  for (T& x : f.v) x = drop(rng) ? T(0) : keep_inv;
  return f;
}

template <typename T>
Mat<T> hadamard(const Mat<T>& a, const Mat<T>& b) {
  Mat<T> out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
  return out;
}

}  // namespace detail

// One pre-norm encoder layer: x + Attn(LN(x)), then x + FFN(LN(x)). In train
// mode, dropout_rng supplies the dropout masks and `noise` carries this
// batch's stochastic-depth decisions; surviving branches are scaled by
// 1/(1 - p) so evaluation needs no correction.
template <typename T>
Mat<T> encoder_layer(const Mat<T>& x, const LayerParams<T>& lp, const ModelConfig& cfg,
                     bool train = false, LayerNoise noise = {},
                     std::mt19937_64* dropout_rng = nullptr, LayerCache<T>* lc = nullptr) {
  if (train && !dropout_rng)
    throw std::invalid_argument("encoder_layer: train mode needs a dropout engine");
  const int P = x.rows;
  LayerCache<T> local;
  LayerCache<T>* c = lc ? lc : &local;
  c->x_in = x;

  layer_norm(x, lp.ln1_gamma, lp.ln1_beta, c->ln1_out, c->ln1_mean, c->ln1_istd);
  Mat<T> attn_out = multi_head_attention(c->ln1_out, lp, cfg, c);

  const T sd_keep = static_cast<T>(1.0 / (1.0 - cfg.stochastic_depth));
  Mat<T> x_mid = x;
  if (train) {
    c->attn_drop = detail::dropout_factors<T>(P, cfg.dim, cfg.dropout, *dropout_rng);
    c->attn_branch_scale = noise.drop_attn ? T(0) : sd_keep;
    if (!noise.drop_attn) {
      Mat<T> branch = detail::hadamard(attn_out, c->attn_drop);
      scale_inplace(branch, c->attn_branch_scale);
      add_inplace(x_mid, branch);
    }
  } else {
    c->attn_branch_scale = T(1);
    add_inplace(x_mid, attn_out);
  }
  c->x_mid = x_mid;

  layer_norm(x_mid, lp.ln2_gamma, lp.ln2_beta, c->ln2_out, c->ln2_mean, c->ln2_istd);
  Mat<T> pre = matmul(c->ln2_out, lp.ffn_w1);
  for (int r = 0; r < P; ++r)
    for (int j = 0; j < cfg.ffn_dim; ++j) pre(r, j) += lp.ffn_b1[j];
  Mat<T> hidden(P, cfg.ffn_dim);
  for (std::size_t i = 0; i < pre.v.size(); ++i) hidden.v[i] = gelu(pre.v[i]);
  Mat<T> ffn_out = matmul(hidden, lp.ffn_w2);
  for (int r = 0; r < P; ++r)
    for (int j = 0; j < cfg.dim; ++j) ffn_out(r, j) += lp.ffn_b2[j];
  c->ffn_pre = std::move(pre);
  c->ffn_hidden = std::move(hidden);
  c->ffn_out = ffn_out;

  Mat<T> x_out = x_mid;
  if (train) {
    c->ffn_drop = detail::dropout_factors<T>(P, cfg.dim, cfg.dropout, *dropout_rng);
    c->ffn_branch_scale = noise.drop_ffn ? T(0) : sd_keep;
    if (!noise.drop_ffn) {
      Mat<T> branch = detail::hadamard(ffn_out, c->ffn_drop);
      scale_inplace(branch, c->ffn_branch_scale);
      add_inplace(x_out, branch);
    }
  } else {
    c->ffn_branch_scale = T(1);
    add_inplace(x_out, ffn_out);
  }
  return x_out;
}

// Full classifier forward over one normalized window. Any non-finite
// intermediate aborts with a diagnostic naming the stage.
template <typename T>
std::vector<T> forward(const Mat<T>& a, const ModelParams<T>& p, const ModelConfig& cfg,
                       ForwardCache<T>* cache = nullptr, const ForwardOptions& opt = {}) {
  cfg.validate();
  if (a.cols != 3 || a.rows != cfg.window_len())
    throw std::invalid_argument("forward: expected a " + std::to_string(cfg.window_len()) +
                                "x3 window");
  if (opt.train &&
      (!opt.layer_noise || static_cast<int>(opt.layer_noise->size()) != cfg.layers))
    throw std::invalid_argument("forward: train mode needs one LayerNoise per layer");

  ForwardCache<T> local;
  ForwardCache<T>* c = cache ? cache : &local;
  c->patches = patchify(a, cfg.patch_len, cfg.patch_count);
  c->tokens = embed(c->patches, p.proj_w, p.proj_b, p.pos_table);
  if (!all_finite(c->tokens)) throw NumericError("forward: non-finite output of embedding");

  std::mt19937_64 drop_rng(mix_seed(opt.dropout_seed, 0xD209u));
  c->layers.resize(p.layers.size());
  Mat<T> x = c->tokens;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    LayerNoise noise = opt.train ? (*opt.layer_noise)[l] : LayerNoise{};
    try {
      x = encoder_layer(x, p.layers[l], cfg, opt.train, noise, opt.train ? &drop_rng : nullptr,
                        &c->layers[l]);
    } catch (const NumericError& e) {
      throw NumericError("encoder layer " + std::to_string(l) + ": " + e.what());
    }
    if (!all_finite(x))
      throw NumericError("forward: non-finite output of encoder layer " + std::to_string(l));
  }
  c->encoded = x;
  layer_norm(x, p.lnf_gamma, p.lnf_beta, c->lnf_out, c->lnf_mean, c->lnf_istd);
  c->pooled.assign(static_cast<std::size_t>(cfg.dim), T(0));
  for (int r = 0; r < c->lnf_out.rows; ++r)
    for (int j = 0; j < cfg.dim; ++j) c->pooled[j] += c->lnf_out(r, j);
  for (T& x_j : c->pooled) x_j = static_cast<T>(x_j / static_cast<T>(cfg.patch_count));

  c->logits.assign(static_cast<std::size_t>(cfg.classes), T(0));
  for (int j = 0; j < cfg.dim; ++j) {
    const T pj = c->pooled[j];
    for (int cc = 0; cc < cfg.classes; ++cc) c->logits[cc] += pj * p.head_w(j, cc);
  }
  for (int cc = 0; cc < cfg.classes; ++cc) c->logits[cc] += p.head_b[cc];
  if (!all_finite(c->logits)) throw NumericError("forward: non-finite output of classifier head");
  return c->logits;
}

}  // namespace patchhar
