#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>
#include <vector>

#include "patchhar/error.hpp"

namespace patchhar {

// A categorical distribution over classes; entries non-negative, summing to 1
// within a small tolerance.
using ProbVector = std::vector<double>;

inline bool is_prob_vector(const ProbVector& p, double tol = 1e-6) {
  if (p.empty()) return false;
  double sum = 0;
  for (double x : p) {
    if (!std::isfinite(x) || x < -tol) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Argmax with deterministic tie-breaking toward the lowest class index.
inline int argmax_class(const ProbVector& p) {
  if (p.empty()) throw std::invalid_argument("argmax_class: empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(p.size()); ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

// Softmax of logits / t, computed in log space.
inline ProbVector apply_temperature(const std::vector<double>& logits, double t) {
  if (logits.empty()) throw std::invalid_argument("apply_temperature: empty logits");
  if (!(t > 0)) throw std::invalid_argument("apply_temperature: temperature must be positive");
  for (double x : logits)
    if (!std::isfinite(x)) throw NumericError("apply_temperature: non-finite logit");
  double m = logits[0];
  for (double x : logits) m = std::max(m, x);
  ProbVector p(logits.size());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - m) / t);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

// Mean negative log-likelihood of the targets under softmax(logits / t).
inline double mean_nll(const std::vector<std::vector<double>>& logits,
                       const std::vector<int>& labels, double t) {
  if (logits.empty()) throw std::invalid_argument("mean_nll: no samples");
  if (logits.size() != labels.size())
    throw std::invalid_argument("mean_nll: logits/labels size mismatch");
  if (!(t > 0)) throw std::invalid_argument("mean_nll: temperature must be positive");
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& z = logits[i];
    if (labels[i] < 0 || labels[i] >= static_cast<int>(z.size()))
      throw std::invalid_argument("mean_nll: label outside logit range");
    double m = z[0];
    for (double x : z) m = std::max(m, x);
    double lse = 0;
    for (double x : z) lse += std::exp((x - m) / t);
    lse = std::log(lse) + m / t;
    total += lse - z[labels[i]] / t;
  }
  return total / static_cast<double>(logits.size());
}

// Expected calibration error over equal-width confidence bins on the winning
// probability: sum of |accuracy - mean confidence| weighted by bin occupancy.
inline double ece(const std::vector<ProbVector>& probs, const std::vector<int>& labels,
                  int bins = 15) {
  if (probs.empty()) throw std::invalid_argument("ece: no samples");
  if (probs.size() != labels.size()) throw std::invalid_argument("ece: probs/labels mismatch");
  if (bins < 1) throw std::invalid_argument("ece: need at least one bin");
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0);
  std::vector<double> acc_sum(static_cast<std::size_t>(bins), 0);
  std::vector<int> count(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!is_prob_vector(probs[i]))
      throw std::invalid_argument("ece: entry " + std::to_string(i) +
                                  " is not a probability vector");
    const int pred = argmax_class(probs[i]);
    const double conf = probs[i][pred];
    int b = static_cast<int>(conf * bins);
    b = std::min(b, bins - 1);
    conf_sum[b] += conf;
    acc_sum[b] += (pred == labels[i]) ? 1.0 : 0.0;
    ++count[b];
  }
  double e = 0;
  const double n = static_cast<double>(probs.size());
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    e += (count[b] / n) * std::abs(acc_sum[b] / count[b] - conf_sum[b] / count[b]);
  }
  return e;
}

struct CalibrationResult {
  double temperature = 1.0;
  double nll_pre = 0, nll_post = 0;
  double ece_pre = 0, ece_post = 0;
  int bins = 15;
  bool degenerate = false;  // fewer than two distinct labels; temperature forced to 1
};

inline constexpr double kTempSearchLo = 0.05;
inline constexpr double kTempSearchHi = 20.0;
inline constexpr double kTempSearchTol = 1e-4;

// One-dimensional golden-section minimization of validation NLL over the
// temperature. NLL is unimodal in the temperature, so golden section finds the
// global minimum; a final comparison against t = 1 guarantees the fit never
// reports a temperature worse than doing nothing.
inline CalibrationResult fit_temperature(const std::vector<std::vector<double>>& logits,
                                         const std::vector<int>& labels, int bins = 15) {
  if (logits.empty()) throw std::invalid_argument("fit_temperature: no samples");
  if (logits.size() != labels.size())
    throw std::invalid_argument("fit_temperature: logits/labels size mismatch");

  CalibrationResult res;
  res.bins = bins;
  res.nll_pre = mean_nll(logits, labels, 1.0);

  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    std::cerr << "fit_temperature: only one class present; keeping temperature 1\n";
    res.degenerate = true;
    res.temperature = 1.0;
  } else {
    auto f = [&](double t) { return mean_nll(logits, labels, t); };
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = kTempSearchLo, b = kTempSearchHi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > kTempSearchTol) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = f(d);
      }
    }
    double t_star = 0.5 * (a + b);
    if (f(t_star) > res.nll_pre) t_star = 1.0;
    res.temperature = t_star;
  }
  res.nll_post = mean_nll(logits, labels, res.temperature);

  std::vector<ProbVector> probs_pre, probs_post;
  probs_pre.reserve(logits.size());
  probs_post.reserve(logits.size());
  for (const auto& z : logits) {
    probs_pre.push_back(apply_temperature(z, 1.0));
    probs_post.push_back(apply_temperature(z, res.temperature));
  }
  res.ece_pre = ece(probs_pre, labels, bins);
  res.ece_post = ece(probs_post, labels, bins);
  return res;
}

}  // namespace patchhar
