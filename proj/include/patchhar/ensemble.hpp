#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "patchhar/calibrate.hpp"
#include "patchhar/dataset.hpp"
#include "patchhar/error.hpp"
#include "patchhar/model.hpp"
#include "patchhar/normalize.hpp"
#include "patchhar/parallel.hpp"

namespace patchhar {

namespace detail {

inline void require_prob(const ProbVector& p, const char* who) {
  if (!is_prob_vector(p))
    throw std::invalid_argument(std::string(who) + ": input is not a probability vector");
}

}  // namespace detail

// Equal-weight average of the clean and robust posteriors.
inline ProbVector fuse_streams(const ProbVector& clean, const ProbVector& robust) {
  detail::require_prob(clean, "fuse_streams");
  detail::require_prob(robust, "fuse_streams");
  if (clean.size() != robust.size())
    throw std::invalid_argument("fuse_streams: class counts differ");
  ProbVector out(clean.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (clean[i] + robust[i]);
  return out;
}

// Uniform average over the active sensors. Every active sensor must be
// present; inactive entries in the map are ignored.
inline ProbVector fuse_sensors(const std::map<Sensor, ProbVector>& per_sensor,
                               const std::set<Sensor>& active) {
  if (active.empty()) throw std::invalid_argument("fuse_sensors: no active sensors");
  std::size_t classes = 0;
  for (Sensor s : active) {
    auto it = per_sensor.find(s);
    if (it == per_sensor.end())
      throw std::invalid_argument(std::string("fuse_sensors: active sensor ") + to_string(s) +
                                  " has no posterior");
    detail::require_prob(it->second, "fuse_sensors");
    if (classes == 0)
      classes = it->second.size();
    else if (it->second.size() != classes)
      throw std::invalid_argument("fuse_sensors: class counts differ across sensors");
  }
  ProbVector out(classes, 0.0);
  for (Sensor s : kAllSensors) {  // fixed iteration order keeps the sum deterministic
    if (!active.count(s)) continue;
    const ProbVector& p = per_sensor.at(s);
    for (std::size_t i = 0; i < classes; ++i) out[i] += p[i];
  }
  for (double& x : out) x /= static_cast<double>(active.size());
  return out;
}

// Macro-averaged F1 with the 0/0 -> 0 convention for empty precision, recall
// or F1 denominators. By default classes absent from both predictions and
// truth are excluded from the average; include_absent forces the average over
// all n_classes (each absent class contributing 0).
inline double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth,
                       int n_classes, bool include_absent = false) {
  if (pred.size() != truth.size()) throw std::invalid_argument("macro_f1: size mismatch");
  if (pred.empty()) throw std::invalid_argument("macro_f1: no samples");
  if (n_classes < 1) throw std::invalid_argument("macro_f1: need at least one class");
  std::vector<std::int64_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= n_classes || truth[i] < 0 || truth[i] >= n_classes)
      throw std::invalid_argument("macro_f1: label outside [0, n_classes)");
    if (pred[i] == truth[i]) {
      ++tp[pred[i]];
    } else {
      ++fp[pred[i]];
      ++fn[truth[i]];
    }
  }
  double sum = 0;
  int used = 0;
  for (int c = 0; c < n_classes; ++c) {
    const bool present = tp[c] + fp[c] + fn[c] > 0;
    if (!present && !include_absent) continue;
    const double prec = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
    const double rec = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fn[c]) : 0.0;
    const double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    sum += f1;
    ++used;
  }
  return used > 0 ? sum / used : 0.0;
}

struct EvalReport {
  int n_classes = 0;
  std::int64_t n_samples = 0;
  std::vector<std::vector<std::int64_t>> counts;  // counts[true][pred]
  std::vector<double> precision, recall, f1;
  double macro_f1 = 0;
  double accuracy = 0;
};

inline EvalReport confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                            int n_classes, bool include_absent = false) {
  EvalReport r;
  r.macro_f1 = macro_f1(pred, truth, n_classes, include_absent);  // validates inputs
  r.n_classes = n_classes;
  r.n_samples = static_cast<std::int64_t>(pred.size());
  r.counts.assign(n_classes, std::vector<std::int64_t>(n_classes, 0));
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++r.counts[truth[i]][pred[i]];
    if (pred[i] == truth[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  r.precision.assign(n_classes, 0);
  r.recall.assign(n_classes, 0);
  r.f1.assign(n_classes, 0);
  for (int c = 0; c < n_classes; ++c) {
    std::int64_t tp = r.counts[c][c], fn = 0, fp = 0;
    for (int j = 0; j < n_classes; ++j) {
      if (j == c) continue;
      fn += r.counts[c][j];
      fp += r.counts[j][c];
    }
    r.precision[c] = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    r.recall[c] = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    r.f1[c] = r.precision[c] + r.recall[c] > 0
                  ? 2.0 * r.precision[c] * r.recall[c] / (r.precision[c] + r.recall[c])
                  : 0.0;
  }
  return r;
}

inline nlohmann::json eval_report_to_json(const EvalReport& r) {
  return nlohmann::json{{"n_classes", r.n_classes}, {"n_samples", r.n_samples},
                        {"accuracy", r.accuracy},   {"macro_f1", r.macro_f1},
                        {"precision", r.precision}, {"recall", r.recall},
                        {"f1", r.f1},               {"confusion", r.counts}};
}

// Row-normalized confusion matrix in long form, one cell per line. Rows with
// no support emit zeros.
inline void write_heatmap_csv(const std::string& path, const EvalReport& r) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << "true_class,pred_class,normalized_value\n";
  for (int t = 0; t < r.n_classes; ++t) {
    std::int64_t row_total = 0;
    for (int p = 0; p < r.n_classes; ++p) row_total += r.counts[t][p];
    for (int p = 0; p < r.n_classes; ++p) {
      const double v = row_total > 0 ? static_cast<double>(r.counts[t][p]) / row_total : 0.0;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%d,%d,%.6f\n", t, p, v);
      out << buf;
    }
  }
}

// A loaded model ready for inference: parameters, architecture, the
// normalization it was trained with, and its calibrated temperature.
struct SensorModel {
  const ModelParams<float>* params = nullptr;
  const ModelConfig* cfg = nullptr;
  NormMode norm = NormMode::PerWindow;
  const GlobalStats* stats = nullptr;  // required when norm == Global
  double temperature = 1.0;
};

using ModelTable = std::map<std::pair<Sensor, StreamKind>, SensorModel>;

// Calibrated posterior of one model over one window.
inline ProbVector model_posterior(const SensorModel& m, const Window& w) {
  if (!m.params || !m.cfg) throw std::invalid_argument("model_posterior: empty model");
  Mat<float> a;
  if (m.norm == NormMode::Global) {
    if (!m.stats)
      throw std::invalid_argument("model_posterior: global normalization without stats");
    a = apply_global<float>(w, *m.stats);
  } else {
    a = apply_per_window<float>(w);
  }
  std::vector<float> logits = forward(a, *m.params, *m.cfg);
  std::vector<double> z(logits.begin(), logits.end());
  return apply_temperature(z, m.temperature);
}

struct Prediction {
  std::string id;
  int label = 0;
  ProbVector fused;
  std::optional<int> truth;  // carried through when the input windows are labeled
};

// Full inference pipeline: per-window model posteriors, stream averaging per
// sensor, then uniform fusion across whichever active sensors supplied a
// window for each id. Windows from inactive sensors are ignored; windows from
// active sensors with no loaded model are a routing error.
inline std::vector<Prediction> predict_labels(const std::vector<Window>& windows,
                                              const ModelTable& models,
                                              const std::set<Sensor>& active, int threads = 1) {
  if (active.empty()) throw std::invalid_argument("predict_labels: no active sensors");
  struct PerWindow {
    bool used = false;
    ProbVector prob;
  };
  std::vector<PerWindow> per_window(windows.size());
  std::vector<const Window*> todo;
  std::vector<std::size_t> todo_idx;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    if (!active.count(w.sensor)) continue;
    const bool has_clean = models.count({w.sensor, StreamKind::Clean}) > 0;
    const bool has_robust = models.count({w.sensor, StreamKind::Robust}) > 0;
    if (!has_clean && !has_robust)
      throw RoutingError(std::string("no model for sensor ") + to_string(w.sensor) +
                         " (window '" + w.id + "')");
    per_window[i].used = true;
    todo.push_back(&w);
    todo_idx.push_back(i);
  }

  parallel_for(static_cast<int>(todo.size()), threads, [&](int j) {
    const Window& w = *todo[static_cast<std::size_t>(j)];
    auto it_c = models.find({w.sensor, StreamKind::Clean});
    auto it_r = models.find({w.sensor, StreamKind::Robust});
    ProbVector p;
    if (it_c != models.end() && it_r != models.end())
      p = fuse_streams(model_posterior(it_c->second, w), model_posterior(it_r->second, w));
    else if (it_c != models.end())
      p = model_posterior(it_c->second, w);
    else
      p = model_posterior(it_r->second, w);
    per_window[todo_idx[static_cast<std::size_t>(j)]].prob = std::move(p);
  });

  // Group by id in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::map<Sensor, ProbVector>> by_id;
  std::map<std::string, std::optional<int>> truth;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!per_window[i].used) continue;
    const Window& w = windows[i];
    if (!by_id.count(w.id)) {
      order.push_back(w.id);
      truth[w.id] = w.label;
    } else if (w.label && truth[w.id] && *truth[w.id] != *w.label) {
      throw SchemaError("window id '" + w.id + "' has conflicting labels across sensors");
    } else if (w.label && !truth[w.id]) {
      truth[w.id] = w.label;
    }
    by_id[w.id][w.sensor] = std::move(per_window[i].prob);
  }

  std::vector<Prediction> out;
  out.reserve(order.size());
  for (const std::string& id : order) {
    const auto& per_sensor = by_id[id];
    std::set<Sensor> present;
    for (const auto& [s, p] : per_sensor) present.insert(s);
    Prediction pr;
    pr.id = id;
    pr.fused = fuse_sensors(per_sensor, present);
    pr.label = argmax_class(pr.fused);
    pr.truth = truth[id];
    out.push_back(std::move(pr));
  }
  return out;
}

inline void write_predictions_csv(const std::string& path,
                                  const std::vector<Prediction>& preds) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << "id,label\n";
  for (const Prediction& p : preds) out << p.id << ',' << p.label << '\n';
}

struct DropoutRow {
  std::optional<Sensor> dropped;  // nullopt = all four sensors active
  double macro_f1 = 0;
  double delta_pp = 0;  // change vs. the full ensemble, percentage points
};

// Leave-one-sensor-out robustness sweep on labeled windows: the full
// four-sensor ensemble, then each three-sensor subset.
inline std::vector<DropoutRow> sensor_dropout_sweep(const std::vector<Window>& windows,
                                                    const ModelTable& models, int n_classes,
                                                    int threads = 1) {
  auto run = [&](const std::set<Sensor>& active) {
    std::vector<Prediction> preds = predict_labels(windows, models, active, threads);
    if (preds.empty()) throw std::invalid_argument("sensor_dropout_sweep: no predictions");
    std::vector<int> pred, truth;
    for (const Prediction& p : preds) {
      if (!p.truth)
        throw std::invalid_argument("sensor_dropout_sweep: window '" + p.id + "' is unlabeled");
      pred.push_back(p.label);
      truth.push_back(*p.truth);
    }
    return macro_f1(pred, truth, n_classes);
  };

  const std::set<Sensor> all(kAllSensors.begin(), kAllSensors.end());
  std::vector<DropoutRow> rows;
  DropoutRow full;
  full.dropped = std::nullopt;
  full.macro_f1 = run(all);
  full.delta_pp = 0;
  rows.push_back(full);
  for (Sensor s : kAllSensors) {
    std::set<Sensor> active = all;
    active.erase(s);
    DropoutRow row;
    row.dropped = s;
    row.macro_f1 = run(active);
    row.delta_pp = (row.macro_f1 - full.macro_f1) * 100.0;
    rows.push_back(row);
  }
  return rows;
}

inline void write_dropout_csv(const std::string& path, const std::vector<DropoutRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << "dropped_sensor,macro_f1,delta_pp\n";
  for (const DropoutRow& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.2f\n",
                  r.dropped ? to_string(*r.dropped) : "none", r.macro_f1, r.delta_pp);
    out << buf;
  }
}

}  // namespace patchhar
