#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "patchhar/augment.hpp"
#include "patchhar/dataset.hpp"
#include "patchhar/ensemble.hpp"
#include "patchhar/error.hpp"
#include "patchhar/model.hpp"
#include "patchhar/normalize.hpp"
#include "patchhar/parallel.hpp"
#include "patchhar/rng.hpp"

namespace patchhar {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 512;
  double lr_max = 3e-4;
  double lr_min = 1e-6;
  double weight_decay = 0.01;  // applied to projection matrices only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double label_smoothing = 0.10;
  double clip_norm = 1.0;
  std::uint64_t seed = 42;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(lr_max > 0) || !(lr_min > 0) || lr_min > lr_max)
      throw std::invalid_argument("train config: need 0 < lr_min <= lr_max");
    if (weight_decay < 0) throw std::invalid_argument("train config: weight_decay must be >= 0");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
      throw std::invalid_argument("train config: betas outside [0, 1)");
    if (!(adam_eps > 0)) throw std::invalid_argument("train config: adam_eps must be positive");
    if (label_smoothing < 0 || label_smoothing >= 1)
      throw std::invalid_argument("train config: label smoothing outside [0, 1)");
    if (!(clip_norm > 0)) throw std::invalid_argument("train config: clip_norm must be positive");
  }
};

// Cosine decay from lr_max (first epoch) to lr_min (last epoch).
inline double cosine_lr(int epoch, const TrainConfig& tc) {
  if (epoch < 0 || epoch >= tc.epochs) throw std::invalid_argument("cosine_lr: epoch out of range");
  if (tc.epochs == 1) return tc.lr_max;
  const double progress = static_cast<double>(epoch) / (tc.epochs - 1);
  return tc.lr_min + 0.5 * (tc.lr_max - tc.lr_min) * (1.0 + std::cos(M_PI * progress));
}

// Inverse-sqrt-frequency class weights, normalized to mean 1 over the classes
// actually present. Absent classes get weight 0.
inline std::vector<double> class_weights(const std::vector<std::int64_t>& counts) {
  if (counts.empty()) throw std::invalid_argument("class_weights: no classes");
  std::vector<double> w(counts.size(), 0.0);
  double sum = 0;
  int present = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 0) throw std::invalid_argument("class_weights: negative count");
    if (counts[c] == 0) continue;
    w[c] = 1.0 / std::sqrt(static_cast<double>(counts[c]));
    sum += w[c];
    ++present;
  }
  if (present == 0) throw std::invalid_argument("class_weights: all counts are zero");
  const double scale = present / sum;
  for (double& x : w) x *= scale;
  return w;
}

template <typename T>
struct LossGrad {
  double loss = 0;
  std::vector<T> dlogits;
};

// Label-smoothed cross-entropy for one sample: target distribution
// eps/C everywhere plus (1 - eps) on the true class. Returns the weighted loss
// and d(loss)/d(logits) = weight * (softmax - target).
template <typename T>
LossGrad<T> smoothed_ce(const std::vector<T>& logits, int target, double eps, double weight) {
  const int C = static_cast<int>(logits.size());
  if (C < 2) throw std::invalid_argument("smoothed_ce: need at least two classes");
  if (target < 0 || target >= C) throw std::invalid_argument("smoothed_ce: target out of range");
  if (eps < 0 || eps >= 1) throw std::invalid_argument("smoothed_ce: smoothing outside [0, 1)");
  double m = static_cast<double>(logits[0]);
  for (T z : logits) m = std::max(m, static_cast<double>(z));
  double lse = 0;
  for (T z : logits) lse += std::exp(static_cast<double>(z) - m);
  lse = std::log(lse) + m;
  LossGrad<T> out;
  out.dlogits.resize(logits.size());
  const double off = eps / C;
  double loss = 0;
  for (int k = 0; k < C; ++k) {
    const double logp = static_cast<double>(logits[k]) - lse;
    const double q = off + (k == target ? 1.0 - eps : 0.0);
    loss -= q * logp;
    out.dlogits[k] = static_cast<T>(weight * (std::exp(logp) - q));
  }
  out.loss = weight * loss;
  return out;
}

// Row-wise layer norm backward. x is the forward input; mean/istd are the
// cached statistics. Accumulates the affine gradients and returns dx.
template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& x, const std::vector<T>& mean,
                           const std::vector<T>& istd, const std::vector<T>& gamma,
                           const Mat<T>& dy, std::vector<T>& dgamma, std::vector<T>& dbeta) {
  const int d = x.cols;
  Mat<T> dx(x.rows, d);
  for (int r = 0; r < x.rows; ++r) {
    const T mu = mean[r], inv = istd[r];
    double m1 = 0, m2 = 0;
    for (int j = 0; j < d; ++j) {
      const T xhat = (x(r, j) - mu) * inv;
      const T dxh = dy(r, j) * gamma[j];
      dgamma[j] += dy(r, j) * xhat;
      dbeta[j] += dy(r, j);
      m1 += static_cast<double>(dxh);
      m2 += static_cast<double>(dxh) * static_cast<double>(xhat);
    }
    m1 /= d;
    m2 /= d;
    for (int j = 0; j < d; ++j) {
      const T xhat = (x(r, j) - mu) * inv;
      const T dxh = dy(r, j) * gamma[j];
      dx(r, j) = static_cast<T>(inv * (dxh - static_cast<T>(m1) - xhat * static_cast<T>(m2)));
    }
  }
  return dx;
}

namespace detail {

// Applies the cached dropout factors and branch scale to the gradient flowing
// into a residual branch.
template <typename T>
Mat<T> branch_grad(const Mat<T>& upstream, const Mat<T>& drop_factors, T branch_scale) {
  Mat<T> g = upstream;
  scale_inplace(g, branch_scale);
  if (drop_factors.rows > 0) {
    for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] *= drop_factors.v[i];
  }
  return g;
}

}  // namespace detail

// Reverse-mode gradients for one window given d(loss)/d(logits). Walks the
// cached forward pass backwards and accumulates into `grads`.
template <typename T>
void backward_window(const ForwardCache<T>& c, const ModelParams<T>& p, const ModelConfig& cfg,
                     const std::vector<T>& dlogits, ModelParams<T>& grads) {
  const int P = cfg.patch_count, d = cfg.dim, h = cfg.heads, dk = d / h;

  // Classifier head and mean pool.
  std::vector<T> dpooled(static_cast<std::size_t>(d), T(0));
  for (int j = 0; j < d; ++j) {
    const T pj = c.pooled[j];
    T acc = T(0);
    for (int cc = 0; cc < cfg.classes; ++cc) {
      grads.head_w(j, cc) += pj * dlogits[cc];
      acc += p.head_w(j, cc) * dlogits[cc];
    }
    dpooled[j] = acc;
  }
  for (int cc = 0; cc < cfg.classes; ++cc) grads.head_b[cc] += dlogits[cc];

  Mat<T> dlnf(P, d);
  for (int r = 0; r < P; ++r)
    for (int j = 0; j < d; ++j) dlnf(r, j) = dpooled[j] / static_cast<T>(P);

  Mat<T> dx = layer_norm_backward(c.encoded, c.lnf_mean, c.lnf_istd, p.lnf_gamma, dlnf,
                                  grads.lnf_gamma, grads.lnf_beta);

  const T inv_sqrt_dk = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerCache<T>& lc = c.layers[static_cast<std::size_t>(l)];
    const LayerParams<T>& lp = p.layers[static_cast<std::size_t>(l)];
    LayerParams<T>& gl = grads.layers[static_cast<std::size_t>(l)];

    // FFN branch: x_out = x_mid + scale * drop(ffn_out).
    Mat<T> dffn_out = detail::branch_grad(dx, lc.ffn_drop, lc.ffn_branch_scale);
    add_inplace(gl.ffn_w2, matmul_tn(lc.ffn_hidden, dffn_out));
    {
      std::vector<T> cs = col_sums(dffn_out);
      for (int j = 0; j < d; ++j) gl.ffn_b2[j] += cs[j];
    }
    Mat<T> dhidden = matmul_nt(dffn_out, lp.ffn_w2);
    Mat<T> dpre = dhidden;
    for (std::size_t i = 0; i < dpre.v.size(); ++i) dpre.v[i] *= gelu_grad(lc.ffn_pre.v[i]);
    add_inplace(gl.ffn_w1, matmul_tn(lc.ln2_out, dpre));
    {
      std::vector<T> cs = col_sums(dpre);
      for (int j = 0; j < cfg.ffn_dim; ++j) gl.ffn_b1[j] += cs[j];
    }
    Mat<T> dln2 = matmul_nt(dpre, lp.ffn_w1);
    Mat<T> dx_mid = layer_norm_backward(lc.x_mid, lc.ln2_mean, lc.ln2_istd, lp.ln2_gamma, dln2,
                                        gl.ln2_gamma, gl.ln2_beta);
    add_inplace(dx_mid, dx);  // residual path

    // Attention branch: x_mid = x_in + scale * drop(attn_proj).
    Mat<T> dattn_proj = detail::branch_grad(dx_mid, lc.attn_drop, lc.attn_branch_scale);
    add_inplace(gl.wo, matmul_tn(lc.heads_concat, dattn_proj));
    {
      std::vector<T> cs = col_sums(dattn_proj);
      for (int j = 0; j < d; ++j) gl.bo[j] += cs[j];
    }
    Mat<T> dconcat = matmul_nt(dattn_proj, lp.wo);

    Mat<T> dq(P, d), dkm(P, d), dv(P, d);
    for (int a = 0; a < h; ++a) {
      const int c0 = a * dk;
      const Mat<T>& A = lc.attn[static_cast<std::size_t>(a)];
      // dV = A^T dO; dA = dO V^T.
      Mat<T> dA(P, P);
      for (int i = 0; i < P; ++i) {
        for (int j = 0; j < P; ++j) {
          T acc = T(0);
          for (int e = 0; e < dk; ++e) acc += dconcat(i, c0 + e) * lc.v(j, c0 + e);
          dA(i, j) = acc;
        }
      }
      for (int j = 0; j < P; ++j) {
        for (int e = 0; e < dk; ++e) {
          T acc = T(0);
          for (int i = 0; i < P; ++i) acc += A(i, j) * dconcat(i, c0 + e);
          dv(j, c0 + e) = acc;
        }
      }
      // Softmax rows: dS = A o (dA - rowsum(dA o A)).
      Mat<T> dS(P, P);
      for (int i = 0; i < P; ++i) {
        T dot = T(0);
        for (int j = 0; j < P; ++j) dot += dA(i, j) * A(i, j);
        for (int j = 0; j < P; ++j) dS(i, j) = A(i, j) * (dA(i, j) - dot);
      }
      for (int i = 0; i < P; ++i) {
        for (int e = 0; e < dk; ++e) {
          T accq = T(0);
          for (int j = 0; j < P; ++j) accq += dS(i, j) * lc.k(j, c0 + e);
          dq(i, c0 + e) = accq * inv_sqrt_dk;
        }
      }
      for (int j = 0; j < P; ++j) {
        for (int e = 0; e < dk; ++e) {
          T acck = T(0);
          for (int i = 0; i < P; ++i) acck += dS(i, j) * lc.q(i, c0 + e);
          dkm(j, c0 + e) = acck * inv_sqrt_dk;
        }
      }
    }

    add_inplace(gl.wq, matmul_tn(lc.ln1_out, dq));
    add_inplace(gl.wk, matmul_tn(lc.ln1_out, dkm));
    add_inplace(gl.wv, matmul_tn(lc.ln1_out, dv));
    {
      std::vector<T> cq = col_sums(dq), ck = col_sums(dkm), cv = col_sums(dv);
      for (int j = 0; j < d; ++j) {
        gl.bq[j] += cq[j];
        gl.bk[j] += ck[j];
        gl.bv[j] += cv[j];
      }
    }
    Mat<T> dln1 = matmul_nt(dq, lp.wq);
    add_inplace(dln1, matmul_nt(dkm, lp.wk));
    add_inplace(dln1, matmul_nt(dv, lp.wv));
    Mat<T> dx_in = layer_norm_backward(lc.x_in, lc.ln1_mean, lc.ln1_istd, lp.ln1_gamma, dln1,
                                       gl.ln1_gamma, gl.ln1_beta);
    add_inplace(dx_in, dx_mid);  // residual path
    dx = std::move(dx_in);
  }

  // Patch embedding. The position table is fixed, so the gradient stops at the
  // projection.
  add_inplace(grads.proj_w, matmul_tn(c.patches, dx));
  std::vector<T> cs = col_sums(dx);
  for (int j = 0; j < d; ++j) grads.proj_b[j] += cs[j];
}

template <typename T>
struct TrainExample {
  Mat<T> input;  // normalized (and possibly transformed) window
  int label = 0;
  double weight = 1.0;
  std::uint64_t dropout_seed = 0;
};

// Weighted mean smoothed cross-entropy over the batch plus accumulated
// parameter gradients. With threads > 1 the batch is split into contiguous
// chunks, each reduced locally and then combined in chunk order, so results
// are deterministic for a fixed thread count.
template <typename T>
double batch_backward(const std::vector<TrainExample<T>>& batch, const ModelParams<T>& params,
                      const ModelConfig& cfg, double label_smoothing,
                      const std::vector<LayerNoise>& layer_noise, bool train,
                      ModelParams<T>& grads, int threads = 1) {
  if (batch.empty()) throw std::invalid_argument("batch_backward: empty batch");
  for (auto& r : tensor_refs(grads)) std::fill(r.data->begin(), r.data->end(), T(0));

  const auto ranges = chunk_ranges(static_cast<int>(batch.size()), threads);
  std::vector<ModelParams<T>> locals;
  std::vector<double> losses(ranges.size(), 0.0);
  const bool chunked = ranges.size() > 1;
  if (chunked) locals.assign(ranges.size(), zeros_like(params));

  parallel_for(static_cast<int>(ranges.size()), static_cast<int>(ranges.size()), [&](int ci) {
    ModelParams<T>& target = chunked ? locals[static_cast<std::size_t>(ci)] : grads;
    double loss = 0;
    for (int i = ranges[static_cast<std::size_t>(ci)].first;
         i < ranges[static_cast<std::size_t>(ci)].second; ++i) {
      const TrainExample<T>& ex = batch[static_cast<std::size_t>(i)];
      ForwardCache<T> cache;
      ForwardOptions opt;
      opt.train = train;
      opt.layer_noise = &layer_noise;
      opt.dropout_seed = ex.dropout_seed;
      forward(ex.input, params, cfg, &cache, opt);
      LossGrad<T> lg = smoothed_ce(cache.logits, ex.label, label_smoothing, ex.weight);
      loss += lg.loss;
      backward_window(cache, params, cfg, lg.dlogits, target);
    }
    losses[static_cast<std::size_t>(ci)] = loss;
  });

  double total = 0;
  for (std::size_t ci = 0; ci < ranges.size(); ++ci) {
    total += losses[ci];
    if (chunked) {
      auto dst = tensor_refs(grads);
      auto src = tensor_refs(locals[ci]);
      for (std::size_t t = 0; t < dst.size(); ++t)
        for (std::size_t j = 0; j < dst[t].data->size(); ++j)
          (*dst[t].data)[j] += (*src[t].data)[j];
    }
  }

  const T inv_b = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  for (auto& r : tensor_refs(grads))
    for (T& x : *r.data) x *= inv_b;

  for (auto& r : tensor_refs(grads))
    if (!all_finite(*r.data)) throw NumericError("non-finite gradient in " + r.name);
  const double mean_loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(mean_loss)) throw NumericError("non-finite training loss");
  return mean_loss;
}

template <typename T>
double grad_norm(const ModelParams<T>& grads) {
  double sq = 0;
  for (auto& r : tensor_refs(grads))
    for (const T& x : *r.data) sq += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sq);
}

// Global-norm gradient clipping. Returns the pre-clip norm.
template <typename T>
double clip_gradients(ModelParams<T>& grads, double max_norm) {
  if (!(max_norm > 0)) throw std::invalid_argument("clip_gradients: max_norm must be positive");
  const double norm = grad_norm(grads);
  if (norm > max_norm) {
    const T s = static_cast<T>(max_norm / norm);
    for (auto& r : tensor_refs(grads))
      for (T& x : *r.data) x *= s;
  }
  return norm;
}

template <typename T>
struct AdamState {
  ModelParams<T> m, v;
  std::int64_t t = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ModelParams<T>& p) {
  return {zeros_like(p), zeros_like(p), 0};
}

// AdamW with decoupled weight decay; decay touches projection matrices only.
template <typename T>
void adamw_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& st, double lr,
                const TrainConfig& tc) {
  ++st.t;
  const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(st.t));
  auto pr = tensor_refs(params);
  auto gr = tensor_refs(const_cast<ModelParams<T>&>(grads));
  auto mr = tensor_refs(st.m);
  auto vr = tensor_refs(st.v);
  for (std::size_t i = 0; i < pr.size(); ++i) {
    const bool decay = pr[i].cls == ParamClass::Weight && tc.weight_decay > 0;
    std::vector<T>& theta = *pr[i].data;
    const std::vector<T>& g = *gr[i].data;
    std::vector<T>& m = *mr[i].data;
    std::vector<T>& v = *vr[i].data;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = static_cast<double>(g[j]);
      const double mj = tc.beta1 * static_cast<double>(m[j]) + (1.0 - tc.beta1) * gj;
      const double vj = tc.beta2 * static_cast<double>(v[j]) + (1.0 - tc.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      double upd = (mj / bc1) / (std::sqrt(vj / bc2) + tc.adam_eps);
      if (decay) upd += tc.weight_decay * static_cast<double>(theta[j]);
      theta[j] = static_cast<T>(static_cast<double>(theta[j]) - lr * upd);
    }
  }
}

// Plain argmax predictions of a single model (no temperature, no fusion).
template <typename T>
std::vector<int> argmax_predictions(const ModelParams<T>& params, const ModelConfig& cfg,
                                    const std::vector<Window>& windows, NormMode norm,
                                    const GlobalStats* stats, int threads = 1) {
  if (norm == NormMode::Global && !stats)
    throw std::invalid_argument("argmax_predictions: global normalization without stats");
  std::vector<int> out(windows.size(), 0);
  parallel_for(static_cast<int>(windows.size()), threads, [&](int i) {
    const Window& w = windows[static_cast<std::size_t>(i)];
    Mat<T> a = norm == NormMode::Global ? apply_global<T>(w, *stats) : apply_per_window<T>(w);
    std::vector<T> logits = forward(a, params, cfg);
    int best = 0;
    for (int c = 1; c < static_cast<int>(logits.size()); ++c)
      if (logits[c] > logits[best]) best = c;
    out[static_cast<std::size_t>(i)] = best;
  });
  return out;
}

struct EpochMetrics {
  int epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double val_macro_f1 = 0;
  // Drawn-transform tallies for the epoch: jitter, scale, rotate, dropout.
  std::array<std::int64_t, 4> aug_counts{0, 0, 0, 0};
};

inline void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& history) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << "epoch,lr,train_loss,val_macro_f1,aug_jitter,aug_scale,aug_rotate,aug_dropout\n";
  for (const EpochMetrics& m : history) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.8g,%.8g,%.6f,%lld,%lld,%lld,%lld\n", m.epoch, m.lr,
                  m.train_loss, m.val_macro_f1, static_cast<long long>(m.aug_counts[0]),
                  static_cast<long long>(m.aug_counts[1]),
                  static_cast<long long>(m.aug_counts[2]),
                  static_cast<long long>(m.aug_counts[3]));
    out << buf;
  }
}

struct TrainResult {
  ModelParams<float> final_params;
  ModelParams<float> best_params;  // highest validation macro-F1 (earliest on ties)
  int best_epoch = -1;
  double best_val_f1 = 0;
  std::vector<EpochMetrics> history;
  std::optional<GlobalStats> stats;  // fitted on the training split in global mode
  std::vector<double> weights;       // per-class loss weights actually used
};

namespace detail {

// Substream tags. Initialization deliberately ignores the stream tag so clean
// and robust models share their starting point; everything else is keyed by
// stream so the two runs consume independent randomness.
inline constexpr std::uint64_t kInitTag = 0x101;
inline constexpr std::uint64_t kShuffleTag = 0x102;
inline constexpr std::uint64_t kDepthTag = 0x103;
inline constexpr std::uint64_t kAugNoiseTag = 0x104;
inline constexpr std::uint64_t kDropTag = 0x105;

}  // namespace detail

// Trains one (sensor, stream) model on pre-segmented windows. The robust
// stream draws one transform per batch from the policy and applies it to every
// window in the batch after normalization; the clean stream never augments.
// Fully deterministic for a fixed (config, seed, thread count).
inline TrainResult train_fold(const std::vector<Window>& train_windows,
                              const std::vector<Window>& val_windows, const ModelConfig& mcfg,
                              const TrainConfig& tcfg, const AugPolicy& policy, StreamKind stream,
                              NormMode norm = NormMode::PerWindow, int threads = 1) {
  mcfg.validate();
  tcfg.validate();
  policy.validate();
  if (train_windows.empty()) throw std::invalid_argument("train_fold: no training windows");
  if (mcfg.window_len() != kWindowLen)
    throw std::invalid_argument("train_fold: patch_len * patch_count must equal " +
                                std::to_string(kWindowLen));
  {
    std::set<std::string> train_subjects, val_subjects;
    for (const Window& w : train_windows) train_subjects.insert(w.subject);
    for (const Window& w : val_windows) val_subjects.insert(w.subject);
    for (const std::string& s : val_subjects)
      if (train_subjects.count(s))
        throw std::invalid_argument("train_fold: subject '" + s +
                                    "' appears in both train and validation");
  }

  std::vector<std::int64_t> counts(static_cast<std::size_t>(mcfg.classes), 0);
  for (const Window& w : train_windows) {
    validate_window(w);
    if (!w.label) throw std::invalid_argument("train_fold: unlabeled training window '" + w.id + "'");
    if (*w.label >= mcfg.classes)
      throw std::invalid_argument("train_fold: label " + std::to_string(*w.label) +
                                  " exceeds configured class count");
    ++counts[static_cast<std::size_t>(*w.label)];
  }
  std::vector<int> val_truth;
  for (const Window& w : val_windows) {
    validate_window(w);
    if (!w.label)
      throw std::invalid_argument("train_fold: unlabeled validation window '" + w.id + "'");
    val_truth.push_back(*w.label);
  }

  TrainResult res;
  res.weights = class_weights(counts);
  if (norm == NormMode::Global) res.stats = fit_global(train_windows);
  const std::uint64_t stream_tag = stream == StreamKind::Clean ? 0 : 1;

  ModelParams<float> params = init_params<float>(mcfg, mix_seed(tcfg.seed, detail::kInitTag));
  AdamState<float> adam = make_adam_state(params);
  ModelParams<float> grads = zeros_like(params);

  const int n = static_cast<int>(train_windows.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::uint64_t global_batch = 0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, tcfg);
    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr;

    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    {
      auto eng = make_engine(mix_seed(tcfg.seed, detail::kShuffleTag, stream_tag,
                                      static_cast<std::uint64_t>(epoch)));
      std::shuffle(order.begin(), order.end(), eng);
    }

    double epoch_loss_sum = 0;
    for (int start = 0; start < n; start += tcfg.batch_size) {
      const int end = std::min(n, start + tcfg.batch_size);
      AugDraw adraw;
      const bool augment = stream == StreamKind::Robust;
      if (augment) {
        adraw = draw(policy, global_batch);
        ++em.aug_counts[static_cast<std::size_t>(adraw.kind)];
      }
      std::vector<LayerNoise> layer_noise(static_cast<std::size_t>(mcfg.layers));
      if (mcfg.stochastic_depth > 0) {
        auto eng = make_engine(mix_seed(tcfg.seed, detail::kDepthTag, stream_tag, global_batch));
        std::bernoulli_distribution drop(mcfg.stochastic_depth);
        for (LayerNoise& ln : layer_noise) {
          ln.drop_attn = drop(eng);
          ln.drop_ffn = drop(eng);
        }
      }

      std::vector<TrainExample<float>> batch;
      batch.reserve(static_cast<std::size_t>(end - start));
      for (int bi = start; bi < end; ++bi) {
        const Window& w = train_windows[static_cast<std::size_t>(order[bi])];
        TrainExample<float> ex;
        std::array<double, 3> axis_scale{1, 1, 1};
        if (norm == NormMode::Global) {
          ex.input = apply_global<float>(w, *res.stats);
          axis_scale = res.stats->sigma;
        } else {
          WindowStats ws;
          ex.input = apply_per_window<float>(w, 1e-6, &ws);
          axis_scale = ws.sigma;
        }
        if (augment) {
          auto aug_rng = make_engine(mix_seed(tcfg.seed, detail::kAugNoiseTag, stream_tag,
                                              global_batch, static_cast<std::uint64_t>(bi - start)));
          ex.input = apply(ex.input, adraw, aug_rng, axis_scale);
        }
        ex.label = *w.label;
        ex.weight = res.weights[static_cast<std::size_t>(*w.label)];
        ex.dropout_seed = mix_seed(tcfg.seed, detail::kDropTag, stream_tag, global_batch,
                                   static_cast<std::uint64_t>(bi - start));
        batch.push_back(std::move(ex));
      }

      double loss;
      try {
        loss = batch_backward(batch, params, mcfg, tcfg.label_smoothing, layer_noise, true, grads,
                              threads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(global_batch) + ": " + e.what());
      }
      clip_gradients(grads, tcfg.clip_norm);
      adamw_step(params, grads, adam, lr, tcfg);
      epoch_loss_sum += loss * (end - start);
      ++global_batch;
    }
    em.train_loss = epoch_loss_sum / n;

    if (!val_windows.empty()) {
      std::vector<int> pred = argmax_predictions(params, mcfg, val_windows, norm,
                                                 res.stats ? &*res.stats : nullptr, threads);
      em.val_macro_f1 = macro_f1(pred, val_truth, mcfg.classes);
      if (res.best_epoch < 0 || em.val_macro_f1 > res.best_val_f1) {
        res.best_epoch = epoch;
        res.best_val_f1 = em.val_macro_f1;
        res.best_params = params;
      }
    }
    res.history.push_back(em);
  }

  res.final_params = std::move(params);
  if (res.best_epoch < 0) {
    res.best_params = res.final_params;
    res.best_epoch = tcfg.epochs - 1;
  }
  return res;
}

}  // namespace patchhar
