#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchhar/dataset.hpp"
#include "patchhar/error.hpp"
#include "patchhar/mat.hpp"

namespace patchhar {

enum class NormMode { PerWindow, Global };

inline const char* to_string(NormMode m) {
  return m == NormMode::PerWindow ? "per-window" : "global";
}

inline NormMode norm_mode_from_string(const std::string& s) {
  if (s == "per-window") return NormMode::PerWindow;
  if (s == "global") return NormMode::Global;
  throw std::invalid_argument("unknown normalization mode '" + s +
                              "' (expected per-window or global)");
}

// Per-axis location/scale fitted over an entire training split. sigma already
// includes the epsilon floor: sigma_k = sqrt(var_k + epsilon), so it can never
// drop below sqrt(epsilon) even on a constant axis.
struct GlobalStats {
  std::array<double, 3> mu{0, 0, 0};
  std::array<double, 3> sigma{1, 1, 1};
  double epsilon = 1e-6;
  std::int64_t n_windows = 0;
};

inline GlobalStats fit_global(const std::vector<Window>& windows, double epsilon = 1e-6) {
  if (windows.empty()) throw std::invalid_argument("fit_global: no windows");
  if (epsilon <= 0) throw std::invalid_argument("fit_global: epsilon must be positive");
  std::array<double, 3> sum{0, 0, 0}, sumsq{0, 0, 0};
  std::int64_t n = 0;
  for (const Window& w : windows) {
    for (const Sample& s : w.samples) {
      const double v[3] = {s.x, s.y, s.z};
      for (int k = 0; k < 3; ++k) {
        sum[k] += v[k];
        sumsq[k] += v[k] * v[k];
      }
      ++n;
    }
  }
  GlobalStats st;
  st.epsilon = epsilon;
  st.n_windows = static_cast<std::int64_t>(windows.size());
  for (int k = 0; k < 3; ++k) {
    st.mu[k] = sum[k] / static_cast<double>(n);
    double var = sumsq[k] / static_cast<double>(n) - st.mu[k] * st.mu[k];
    if (var < 0) var = 0;  // guard against rounding on near-constant axes
    st.sigma[k] = std::sqrt(var + epsilon);
  }
  return st;
}

// Population (biased) per-axis moments of a single window.
struct WindowStats {
  std::array<double, 3> mu{0, 0, 0};
  std::array<double, 3> sigma{1, 1, 1};
};

inline WindowStats window_stats(const Mat<double>& a, double epsilon = 1e-6) {
  if (a.cols != 3 || a.rows < 1) throw std::invalid_argument("window_stats: need an Nx3 array");
  if (epsilon <= 0) throw std::invalid_argument("window_stats: epsilon must be positive");
  WindowStats st;
  for (int k = 0; k < 3; ++k) {
    double sum = 0, sumsq = 0;
    for (int t = 0; t < a.rows; ++t) {
      sum += a(t, k);
      sumsq += a(t, k) * a(t, k);
    }
    st.mu[k] = sum / a.rows;
    double var = sumsq / a.rows - st.mu[k] * st.mu[k];
    if (var < 0) var = 0;
    st.sigma[k] = std::sqrt(var + epsilon);
  }
  return st;
}

inline WindowStats window_stats(const Window& w, double epsilon = 1e-6) {
  return window_stats(window_to_mat(w), epsilon);
}

template <typename T>
Mat<T> apply_global(const Mat<double>& a, const GlobalStats& st) {
  if (a.cols != 3) throw std::invalid_argument("apply_global: need an Nx3 array");
  Mat<T> out(a.rows, 3);
  for (int t = 0; t < a.rows; ++t)
    for (int k = 0; k < 3; ++k)
      out(t, k) = static_cast<T>((a(t, k) - st.mu[k]) / st.sigma[k]);
  return out;
}

template <typename T>
Mat<T> apply_global(const Window& w, const GlobalStats& st) {
  return apply_global<T>(window_to_mat(w), st);
}

// Z-scores each axis against the window's own moments, removing per-session
// offset and scale. Returns the stats actually used through the out-param so
// downstream noise injection can be expressed in raw units.
template <typename T>
Mat<T> apply_per_window(const Mat<double>& a, double epsilon = 1e-6,
                        WindowStats* used_stats = nullptr) {
  WindowStats st = window_stats(a, epsilon);
  if (used_stats) *used_stats = st;
  Mat<T> out(a.rows, 3);
  for (int t = 0; t < a.rows; ++t)
    for (int k = 0; k < 3; ++k)
      out(t, k) = static_cast<T>((a(t, k) - st.mu[k]) / st.sigma[k]);
  return out;
}

template <typename T>
Mat<T> apply_per_window(const Window& w, double epsilon = 1e-6,
                        WindowStats* used_stats = nullptr) {
  return apply_per_window<T>(window_to_mat(w), epsilon, used_stats);
}

inline nlohmann::json global_stats_to_json(const GlobalStats& st) {
  return nlohmann::json{{"mu", st.mu},
                        {"sigma", st.sigma},
                        {"epsilon", st.epsilon},
                        {"n", st.n_windows}};
}

inline GlobalStats global_stats_from_json(const nlohmann::json& j) {
  GlobalStats st;
  try {
    auto mu = j.at("mu");
    auto sigma = j.at("sigma");
    if (!mu.is_array() || mu.size() != 3 || !sigma.is_array() || sigma.size() != 3)
      throw SchemaError("normalization stats: 'mu' and 'sigma' must have 3 entries");
    for (int k = 0; k < 3; ++k) {
      st.mu[k] = mu[k].get<double>();
      st.sigma[k] = sigma[k].get<double>();
    }
    st.epsilon = j.at("epsilon").get<double>();
    st.n_windows = j.at("n").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("normalization stats: ") + e.what());
  }
  if (st.epsilon <= 0) throw SchemaError("normalization stats: epsilon must be positive");
  for (int k = 0; k < 3; ++k)
    if (!(st.sigma[k] > 0) || !std::isfinite(st.sigma[k]) || !std::isfinite(st.mu[k]))
      throw SchemaError("normalization stats: non-finite or non-positive scale");
  return st;
}

inline void save_global_stats(const std::string& path, const GlobalStats& st) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << global_stats_to_json(st).dump(2) << '\n';
}

inline GlobalStats load_global_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("'") + path + "': " + e.what());
  }
  return global_stats_from_json(j);
}

}  // namespace patchhar
