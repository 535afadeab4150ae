#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchhar/error.hpp"
#include "patchhar/mat.hpp"
#include "patchhar/rng.hpp"

namespace patchhar {

inline constexpr int kWindowLen = 50;   // samples per window (2 s at 25 Hz)
inline constexpr int kNumClasses = 19;  // activity label range [0, 18]

enum class Sensor { LA, RA, LL, RL };

inline constexpr std::array<Sensor, 4> kAllSensors = {Sensor::LA, Sensor::RA, Sensor::LL,
                                                      Sensor::RL};

inline const char* to_string(Sensor s) {
  switch (s) {
    case Sensor::LA: return "LA";
    case Sensor::RA: return "RA";
    case Sensor::LL: return "LL";
    case Sensor::RL: return "RL";
  }
  throw std::logic_error("to_string: bad sensor enum");
}

inline Sensor sensor_from_string(const std::string& s) {
  for (Sensor k : kAllSensors)
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown sensor tag '" + s + "' (expected LA, RA, LL or RL)");
}

// Training stream identity: clean trains on normalized windows as-is, robust
// sees one randomly drawn transform per batch.
enum class StreamKind { Clean, Robust };

inline const char* to_string(StreamKind s) {
  return s == StreamKind::Clean ? "clean" : "robust";
}

inline StreamKind stream_from_string(const std::string& s) {
  if (s == "clean") return StreamKind::Clean;
  if (s == "robust") return StreamKind::Robust;
  throw std::invalid_argument("unknown stream tag '" + s + "' (expected clean or robust)");
}

struct Sample {
  double x = 0, y = 0, z = 0;
};

// One fixed-length tri-axial accelerometer window from a single sensor.
struct Window {
  std::string id;
  std::string subject;
  Sensor sensor = Sensor::LA;
  std::vector<Sample> samples;  // exactly kWindowLen entries
  std::optional<int> label;     // absent for unlabeled (test) windows
};

inline void validate_window(const Window& w) {
  if (static_cast<int>(w.samples.size()) != kWindowLen)
    throw SchemaError("window '" + w.id + "': expected " + std::to_string(kWindowLen) +
                      " samples, got " + std::to_string(w.samples.size()));
  if (w.label && (*w.label < 0 || *w.label >= kNumClasses))
    throw SchemaError("window '" + w.id + "': label " + std::to_string(*w.label) +
                      " outside [0, " + std::to_string(kNumClasses - 1) + "]");
  for (const Sample& s : w.samples)
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z))
      throw SchemaError("window '" + w.id + "': non-finite sample value");
}

inline Mat<double> window_to_mat(const Window& w) {
  Mat<double> m(static_cast<int>(w.samples.size()), 3);
  for (int t = 0; t < m.rows; ++t) {
    m(t, 0) = w.samples[t].x;
    m(t, 1) = w.samples[t].y;
    m(t, 2) = w.samples[t].z;
  }
  return m;
}

// A continuous per-sample-labeled recording, pre-segmentation.
struct Stream {
  std::string subject;
  Sensor sensor = Sensor::LA;
  std::vector<Sample> samples;
  std::vector<int> labels;  // one per sample
};

// Slices a recording into fixed-length windows at the given stride and labels
// each window by majority vote over its samples (ties go to the lowest class
// index). Recordings shorter than one window produce nothing.
inline std::vector<Window> segment(const Stream& s, int window_len = kWindowLen,
                                   int stride = kWindowLen) {
  if (window_len < 1 || stride < 1)
    throw std::invalid_argument("segment: window_len and stride must be positive");
  if (s.labels.size() != s.samples.size())
    throw SchemaError("segment: stream has " + std::to_string(s.samples.size()) +
                      " samples but " + std::to_string(s.labels.size()) + " labels");
  std::vector<Window> out;
  const int total = static_cast<int>(s.samples.size());
  if (total < window_len) return out;
  for (int off = 0; off + window_len <= total; off += stride) {
    Window w;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%s_%06d", s.subject.c_str(), to_string(s.sensor), off);
    w.id = buf;
    w.subject = s.subject;
    w.sensor = s.sensor;
    w.samples.assign(s.samples.begin() + off, s.samples.begin() + off + window_len);
    std::map<int, int> counts;
    for (int t = off; t < off + window_len; ++t) {
      if (s.labels[t] < 0 || s.labels[t] >= kNumClasses)
        throw SchemaError("segment: label " + std::to_string(s.labels[t]) + " outside [0, " +
                          std::to_string(kNumClasses - 1) + "]");
      ++counts[s.labels[t]];
    }
    int best = -1, best_count = 0;
    for (const auto& [cls, n] : counts) {
      if (n > best_count) {
        best = cls;
        best_count = n;
      }
    }
    w.label = best;
    out.push_back(std::move(w));
  }
  return out;
}

// One cross-validation fold: which subjects are held out and which train.
struct FoldSplit {
  int fold = 0;
  std::set<std::string> held_out;
  std::set<std::string> training;
};

// Subject-level k-fold assignment: shuffle once with the given seed, then deal
// subjects round-robin so fold sizes differ by at most one.
inline std::vector<FoldSplit> make_folds(const std::set<std::string>& subjects, int k,
                                         std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_folds: need at least 2 folds");
  if (static_cast<int>(subjects.size()) < k)
    throw std::invalid_argument("make_folds: more folds than subjects");
  std::vector<std::string> order(subjects.begin(), subjects.end());
  auto eng = make_engine(mix_seed(seed, 0xF01Du));
  std::shuffle(order.begin(), order.end(), eng);
  std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) folds[f].fold = f;
  for (std::size_t i = 0; i < order.size(); ++i)
    folds[i % static_cast<std::size_t>(k)].held_out.insert(order[i]);
  for (FoldSplit& f : folds)
    for (const std::string& s : subjects)
      if (!f.held_out.count(s)) f.training.insert(s);
  return folds;
}

namespace detail {

inline nlohmann::json parse_jsonl_line(const std::string& line, std::size_t lineno) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
  }
}

inline std::vector<Sample> samples_from_json(const nlohmann::json& arr, std::size_t lineno) {
  if (!arr.is_array())
    throw SchemaError("line " + std::to_string(lineno) + ": 'samples' must be an array");
  std::vector<Sample> out;
  out.reserve(arr.size());
  for (const auto& row : arr) {
    if (!row.is_array() || row.size() != 3 || !row[0].is_number() || !row[1].is_number() ||
        !row[2].is_number())
      throw SchemaError("line " + std::to_string(lineno) +
                        ": each sample must be a numeric [x, y, z] triple");
    out.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
  }
  return out;
}

inline nlohmann::json samples_to_json(const std::vector<Sample>& samples) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Sample& s : samples) arr.push_back({s.x, s.y, s.z});
  return arr;
}

template <typename Field>
const nlohmann::json& require_field(const nlohmann::json& j, const Field& name,
                                    std::size_t lineno) {
  auto it = j.find(name);
  if (it == j.end())
    throw SchemaError("line " + std::to_string(lineno) + ": missing field '" +
                      std::string(name) + "'");
  return *it;
}

}  // namespace detail

// Reads one window per JSON line. Unparseable text raises ParseError; parseable
// lines violating the window contract raise SchemaError. Both name the line.
inline std::vector<Window> read_windows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
  std::vector<Window> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_jsonl_line(line, lineno);
    Window w;
    try {
      w.id = detail::require_field(j, "id", lineno).get<std::string>();
      w.subject = detail::require_field(j, "subject", lineno).get<std::string>();
      w.sensor = sensor_from_string(detail::require_field(j, "sensor", lineno).get<std::string>());
      w.samples = detail::samples_from_json(detail::require_field(j, "samples", lineno), lineno);
      auto it = j.find("label");
      if (it != j.end() && !it->is_null()) {
        if (!it->is_number_integer())
          throw SchemaError("'label' must be an integer or null");
        w.label = it->get<int>();
      }
    } catch (const SchemaError& e) {
      std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw SchemaError("line " + std::to_string(lineno) + ": " + msg);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      validate_window(w);
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(w));
  }
  return out;
}

inline void write_windows(const std::string& path, const std::vector<Window>& windows) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  for (const Window& w : windows) {
    nlohmann::json j;
    j["id"] = w.id;
    j["subject"] = w.subject;
    j["sensor"] = to_string(w.sensor);
    j["samples"] = detail::samples_to_json(w.samples);
    j["label"] = w.label ? nlohmann::json(*w.label) : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
}

inline std::vector<Stream> read_streams(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
  std::vector<Stream> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_jsonl_line(line, lineno);
    Stream s;
    try {
      s.subject = detail::require_field(j, "subject", lineno).get<std::string>();
      s.sensor = sensor_from_string(detail::require_field(j, "sensor", lineno).get<std::string>());
      s.samples = detail::samples_from_json(detail::require_field(j, "samples", lineno), lineno);
      const auto& labels = detail::require_field(j, "labels", lineno);
      if (!labels.is_array())
        throw SchemaError("'labels' must be an array");
      for (const auto& l : labels) {
        if (!l.is_number_integer()) throw SchemaError("'labels' entries must be integers");
        s.labels.push_back(l.get<int>());
      }
    } catch (const SchemaError& e) {
      std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw SchemaError("line " + std::to_string(lineno) + ": " + msg);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (s.labels.size() != s.samples.size())
      throw SchemaError("line " + std::to_string(lineno) + ": " +
                        std::to_string(s.samples.size()) + " samples but " +
                        std::to_string(s.labels.size()) + " labels");
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_streams(const std::string& path, const std::vector<Stream>& streams) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  for (const Stream& s : streams) {
    nlohmann::json j;
    j["subject"] = s.subject;
    j["sensor"] = to_string(s.sensor);
    j["samples"] = detail::samples_to_json(s.samples);
    j["labels"] = s.labels;
    out << j.dump() << '\n';
  }
}

// Deterministic synthetic corpus for desk-scale experiments. Each class owns a
// per-axis bank of two sinusoids (frequencies in the human-motion band, 0.5 to
// 12 Hz); instances differ only by Gaussian sample noise. Setting noise = 0
// makes every instance of a class identical, so any sane classifier separates
// the classes perfectly. Windows generated for different sensors from the same
// seed share ids and subjects, which is what the fusion stage groups on.
inline std::vector<Window> synth_dataset(int n_classes, int n_per_class, double noise,
                                         std::uint64_t seed, Sensor sensor = Sensor::LA,
                                         int n_subjects = 8) {
  if (n_classes < 2 || n_classes > kNumClasses)
    throw std::invalid_argument("synth_dataset: n_classes must be in [2, " +
                                std::to_string(kNumClasses) + "]");
  if (n_per_class < 1) throw std::invalid_argument("synth_dataset: n_per_class must be >= 1");
  if (noise < 0) throw std::invalid_argument("synth_dataset: noise must be >= 0");
  if (n_subjects < 1) throw std::invalid_argument("synth_dataset: n_subjects must be >= 1");

  const auto sensor_idx = static_cast<std::uint64_t>(sensor);
  constexpr int kComponents = 2;
  struct Component {
    double freq, phase, amp;
  };

  std::vector<Window> out;
  out.reserve(static_cast<std::size_t>(n_classes) * n_per_class);
  for (int c = 0; c < n_classes; ++c) {
    std::array<std::array<Component, kComponents>, 3> bank;
    for (int axis = 0; axis < 3; ++axis) {
      auto eng = make_engine(mix_seed(seed, 0xBA5Eu, static_cast<std::uint64_t>(c),
                                      static_cast<std::uint64_t>(axis), sensor_idx));
      std::uniform_real_distribution<double> freq(0.5, 12.0);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
      std::uniform_real_distribution<double> amp(0.25, 0.85);
      for (int j = 0; j < kComponents; ++j) bank[axis][j] = {freq(eng), phase(eng), amp(eng)};
    }
    for (int i = 0; i < n_per_class; ++i) {
      Window w;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "c%02d_i%05d", c, i);
      w.id = buf;
      std::snprintf(buf, sizeof(buf), "s%02d", i % n_subjects);
      w.subject = buf;
      w.sensor = sensor;
      w.label = c;
      w.samples.resize(kWindowLen);
      auto eng = make_engine(mix_seed(seed, 0x7015Eu, static_cast<std::uint64_t>(c),
                                      static_cast<std::uint64_t>(i), sensor_idx));
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (int t = 0; t < kWindowLen; ++t) {
        for (int axis = 0; axis < 3; ++axis) {
          double v = 0;
          for (const Component& comp : bank[axis])
            v += comp.amp * std::sin(2.0 * M_PI * comp.freq * (t / 50.0) + comp.phase);
          if (noise > 0) v += noise * gauss(eng);
          (axis == 0 ? w.samples[t].x : axis == 1 ? w.samples[t].y : w.samples[t].z) = v;
        }
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace patchhar
