#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "patchhar/mat.hpp"
#include "patchhar/rng.hpp"

namespace patchhar {

enum class AugKind { Jitter, Scale, Rotate, Dropout };

inline const char* to_string(AugKind k) {
  switch (k) {
    case AugKind::Jitter: return "jitter";
    case AugKind::Scale: return "scale";
    case AugKind::Rotate: return "rotate";
    case AugKind::Dropout: return "dropout";
  }
  throw std::logic_error("to_string: bad augmentation tag");
}

// Full-channel zeros an entire masked axis; span zeros the masked axes only
// over one contiguous run of samples.
enum class DropoutMode { FullChannel, Span };

// A transform pool: per-transform parameter ranges plus the master seed that
// makes every draw reproducible. One transform is drawn per batch, uniformly
// over the four tags.
struct AugPolicy {
  std::pair<double, double> jitter_sigma{0.01, 0.05};  // g units, pre-normalization
  std::pair<double, double> scale_range{0.8, 1.2};
  std::pair<double, double> rotation_deg{-15.0, 15.0};  // per Euler angle
  double p_drop = 0.20;                                 // per-axis mask probability
  DropoutMode dropout_mode = DropoutMode::FullChannel;
  std::pair<double, double> span_frac{0.2, 0.6};  // span mode: fraction of the window
  std::uint64_t seed = 42;
  std::string name = "pool-v1";

  void validate() const {
    auto ordered = [](const std::pair<double, double>& r) { return r.first <= r.second; };
    if (!ordered(jitter_sigma) || jitter_sigma.first < 0)
      throw std::invalid_argument("augment policy: bad jitter sigma range");
    if (!ordered(scale_range) || scale_range.first <= 0)
      throw std::invalid_argument("augment policy: bad scale range");
    if (!ordered(rotation_deg))
      throw std::invalid_argument("augment policy: bad rotation range");
    if (p_drop < 0 || p_drop > 1)
      throw std::invalid_argument("augment policy: p_drop outside [0, 1]");
    if (!ordered(span_frac) || span_frac.first < 0 || span_frac.second > 1)
      throw std::invalid_argument("augment policy: span fraction outside [0, 1]");
  }

  static AugPolicy pool_v1(std::uint64_t seed = 42) {
    AugPolicy p;
    p.seed = seed;
    return p;
  }

  // Second-stage pool: tighter jitter, scale biased above 1, and dropout that
  // blanks a contiguous 20-60% span instead of whole channels.
  static AugPolicy pool_v2(std::uint64_t seed = 42) {
    AugPolicy p;
    p.jitter_sigma = {0.02, 0.04};
    p.scale_range = {0.9, 1.2};
    p.dropout_mode = DropoutMode::Span;
    p.seed = seed;
    p.name = "pool-v2";
    return p;
  }

  static AugPolicy by_name(const std::string& name, std::uint64_t seed = 42) {
    if (name == "pool-v1") return pool_v1(seed);
    if (name == "pool-v2") return pool_v2(seed);
    throw std::invalid_argument("unknown augmentation pool '" + name +
                                "' (expected pool-v1 or pool-v2)");
  }
};

// One sampled transform. Only the fields of the drawn kind are meaningful; the
// rest stay at identity values.
struct AugDraw {
  AugKind kind = AugKind::Jitter;
  double sigma = 0;                          // jitter, raw units
  double scale = 1;                          // amplitude scale
  std::array<double, 3> angles_deg{0, 0, 0};  // yaw, pitch, roll
  std::array<bool, 3> masked_axes{false, false, false};
  DropoutMode dropout_mode = DropoutMode::FullChannel;
  double span_frac = 0;  // span dropout: fraction of the window covered
  double span_pos = 0;   // span dropout: unit-interval position of the span start
};

// Draws the batch's transform. Fully determined by (policy.seed, batch_index):
// re-running an epoch replays the identical augmentation schedule.
inline AugDraw draw(const AugPolicy& policy, std::uint64_t batch_index) {
  policy.validate();
  auto eng = make_engine(mix_seed(policy.seed, 0xA06Du, batch_index));
  AugDraw d;
  d.kind = static_cast<AugKind>(std::uniform_int_distribution<int>(0, 3)(eng));
  d.dropout_mode = policy.dropout_mode;
  switch (d.kind) {
    case AugKind::Jitter:
      d.sigma = std::uniform_real_distribution<double>(policy.jitter_sigma.first,
                                                       policy.jitter_sigma.second)(eng);
      break;
    case AugKind::Scale:
      d.scale = std::uniform_real_distribution<double>(policy.scale_range.first,
                                                       policy.scale_range.second)(eng);
      break;
    case AugKind::Rotate:
      for (int i = 0; i < 3; ++i)
        d.angles_deg[i] = std::uniform_real_distribution<double>(policy.rotation_deg.first,
                                                                 policy.rotation_deg.second)(eng);
      break;
    case AugKind::Dropout: {
      std::bernoulli_distribution mask(policy.p_drop);
      for (int k = 0; k < 3; ++k) d.masked_axes[k] = mask(eng);
      if (policy.dropout_mode == DropoutMode::Span) {
        d.span_frac = std::uniform_real_distribution<double>(policy.span_frac.first,
                                                             policy.span_frac.second)(eng);
        d.span_pos = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
      }
      break;
    }
  }
  return d;
}

namespace detail {

// Adds N(0, sigma_k^2) noise per element; noise is consumed in (t, axis) order
// so a given engine state always produces the same field.
template <typename T>
Mat<T> jitter_scaled(const Mat<T>& a, const std::array<double, 3>& sigma, std::mt19937_64& rng) {
  Mat<T> out = a;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < a.rows; ++t)
    for (int k = 0; k < 3; ++k) out(t, k) += static_cast<T>(sigma[k] * gauss(rng));
  return out;
}

}  // namespace detail

template <typename T>
Mat<T> jitter(const Mat<T>& a, double sigma, std::mt19937_64& rng) {
  if (a.cols != 3) throw std::invalid_argument("jitter: need an Nx3 array");
  if (sigma < 0) throw std::invalid_argument("jitter: sigma must be >= 0");
  if (sigma == 0) return a;
  return detail::jitter_scaled(a, {sigma, sigma, sigma}, rng);
}

template <typename T>
Mat<T> scale_amplitude(const Mat<T>& a, double s) {
  if (a.cols != 3) throw std::invalid_argument("scale_amplitude: need an Nx3 array");
  if (s <= 0) throw std::invalid_argument("scale_amplitude: factor must be positive");
  Mat<T> out = a;
  for (T& x : out.v) x = static_cast<T>(x * s);
  return out;
}

// 3x3 rotation from yaw-pitch-roll: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline std::array<std::array<double, 3>, 3> rotation_matrix(const std::array<double, 3>& deg) {
  const double rad = M_PI / 180.0;
  const double cy = std::cos(deg[0] * rad), sy = std::sin(deg[0] * rad);
  const double cp = std::cos(deg[1] * rad), sp = std::sin(deg[1] * rad);
  const double cr = std::cos(deg[2] * rad), sr = std::sin(deg[2] * rad);
  return {{{cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr},
           {sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr},
           {-sp, cp * sr, cp * cr}}};
}

template <typename T>
Mat<T> rotate(const Mat<T>& a, const std::array<double, 3>& angles_deg) {
  if (a.cols != 3) throw std::invalid_argument("rotate: need an Nx3 array");
  const auto R = rotation_matrix(angles_deg);
  Mat<T> out(a.rows, 3);
  for (int t = 0; t < a.rows; ++t)
    for (int k = 0; k < 3; ++k)
      out(t, k) = static_cast<T>(R[k][0] * static_cast<double>(a(t, 0)) +
                                 R[k][1] * static_cast<double>(a(t, 1)) +
                                 R[k][2] * static_cast<double>(a(t, 2)));
  return out;
}

template <typename T>
Mat<T> channel_dropout(const Mat<T>& a, const AugDraw& d) {
  if (a.cols != 3) throw std::invalid_argument("channel_dropout: need an Nx3 array");
  Mat<T> out = a;
  int t0 = 0, t1 = a.rows;
  if (d.dropout_mode == DropoutMode::Span) {
    const int span_len = static_cast<int>(std::lround(d.span_frac * a.rows));
    const int max_start = a.rows - span_len;
    t0 = std::min(static_cast<int>(d.span_pos * (max_start + 1)), max_start);
    t1 = t0 + span_len;
  }
  for (int k = 0; k < 3; ++k) {
    if (!d.masked_axes[k]) continue;
    for (int t = t0; t < t1; ++t) out(t, k) = T(0);
  }
  return out;
}

// Applies a drawn transform to one window. axis_scale carries the per-axis
// divisor the window was normalized by, so jitter amplitudes stated in raw
// units land at the right size in normalized space; pass unit scales when the
// array is still in raw units. rng is the per-window noise substream (only
// jitter consumes it).
template <typename T>
Mat<T> apply(const Mat<T>& a, const AugDraw& d, std::mt19937_64& rng,
             const std::array<double, 3>& axis_scale = {1.0, 1.0, 1.0}) {
  for (double s : axis_scale)
    if (!(s > 0)) throw std::invalid_argument("apply: axis scales must be positive");
  switch (d.kind) {
    case AugKind::Jitter: {
      if (d.sigma < 0) throw std::invalid_argument("apply: jitter sigma must be >= 0");
      if (d.sigma == 0) return a;
      return detail::jitter_scaled(
          a, {d.sigma / axis_scale[0], d.sigma / axis_scale[1], d.sigma / axis_scale[2]}, rng);
    }
    case AugKind::Scale:
      return scale_amplitude(a, d.scale);
    case AugKind::Rotate:
      return rotate(a, d.angles_deg);
    case AugKind::Dropout:
      return channel_dropout(a, d);
  }
  throw std::logic_error("apply: unknown transform tag");
}

}  // namespace patchhar
