// Command-line driver for the full pipeline: synthetic data generation,
// per-sensor/per-stream training, temperature calibration, fused prediction,
// evaluation, sensor-dropout sweeps and an augmentation demo.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
// Every artifact gets a '<path>.meta.json' sidecar recording the command, the
// seed and an FNV-1a hash of the effective configuration.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "patchhar/augment.hpp"
#include "patchhar/calibrate.hpp"
#include "patchhar/checkpoint.hpp"
#include "patchhar/dataset.hpp"
#include "patchhar/ensemble.hpp"
#include "patchhar/error.hpp"
#include "patchhar/model.hpp"
#include "patchhar/normalize.hpp"
#include "patchhar/rng.hpp"
#include "patchhar/train.hpp"

namespace {

using namespace patchhar;

using ConfigMap = std::map<std::string, std::string>;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_sidecar(const std::string& artifact, const std::string& command, std::uint64_t seed,
                   const ConfigMap& cfg) {
  std::string canon;
  for (const auto& [k, v] : cfg) canon += k + "=" + v + "\n";
  char hash[32];
  std::snprintf(hash, sizeof(hash), "fnv1a64:%016" PRIx64, fnv1a64(canon));
  nlohmann::json j;
  j["schema"] = "patchhar.sidecar.v1";
  j["command"] = command;
  j["seed"] = seed;
  j["config_hash"] = hash;
  j["config"] = cfg;
  std::ofstream out(artifact + ".meta.json");
  if (!out) throw std::invalid_argument("cannot open '" + artifact + ".meta.json' for writing");
  out << j.dump(2) << '\n';
}

std::set<Sensor> parse_sensor_list(const std::string& csv) {
  std::set<Sensor> out;
  std::string token;
  std::stringstream ss(csv);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) out.insert(sensor_from_string(token));
  }
  if (out.empty()) throw std::invalid_argument("--sensors: empty sensor list");
  return out;
}

std::vector<Window> read_all_windows(const std::vector<std::string>& paths) {
  std::vector<Window> all;
  for (const std::string& p : paths) {
    auto w = read_windows(p);
    all.insert(all.end(), w.begin(), w.end());
  }
  return all;
}

// Loaded checkpoints plus the inference table built over them. The deque-like
// unique_ptr storage keeps SensorModel pointers stable.
struct LoadedModels {
  std::vector<std::unique_ptr<Checkpoint>> store;
  ModelTable table;
  int classes = 0;
};

LoadedModels load_models(const std::vector<std::string>& paths) {
  LoadedModels lm;
  for (const std::string& p : paths) {
    auto ck = std::make_unique<Checkpoint>(load_checkpoint(p));
    const auto key = std::make_pair(ck->sensor, ck->stream);
    if (lm.table.count(key))
      throw std::invalid_argument("duplicate checkpoint for sensor " +
                                  std::string(to_string(ck->sensor)) + ", stream " +
                                  to_string(ck->stream));
    if (lm.classes == 0)
      lm.classes = ck->cfg.classes;
    else if (ck->cfg.classes != lm.classes)
      throw std::invalid_argument("checkpoints disagree on the number of classes");
    lm.table[key] = ck->model_view();
    lm.store.push_back(std::move(ck));
  }
  if (lm.store.empty()) throw std::invalid_argument("no checkpoints given");
  return lm;
}

int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  int classes = 4;
  int per_class = 50;
  double noise = 0.05;
  int subjects = 8;
  std::uint64_t seed = 42;
  std::string out;
};

void run_synth(const SynthOpts& o) {
  std::filesystem::create_directories(o.out);
  ConfigMap cfg = {{"classes", std::to_string(o.classes)},
                   {"per_class", std::to_string(o.per_class)},
                   {"noise", fmt_double(o.noise)},
                   {"subjects", std::to_string(o.subjects)},
                   {"seed", std::to_string(o.seed)},
                   {"out", o.out}};
  for (Sensor s : kAllSensors) {
    auto windows = synth_dataset(o.classes, o.per_class, o.noise, o.seed, s, o.subjects);
    const std::string path = o.out + "/" + to_string(s) + ".jsonl";
    write_windows(path, windows);
    std::cout << "wrote " << path << " (" << windows.size() << " windows)\n";
  }
  write_sidecar(o.out + "/synth", "synth", o.seed, cfg);
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  std::string sensor;
  std::string stream;
  std::string pool = "pool-v1";
  std::string norm = "per-window";
  std::string val_data;
  double val_fraction = 0.0;
  std::string out;
  std::string metrics;
  int threads = default_threads();
  ModelConfig mcfg;
  TrainConfig tcfg;
};

ConfigMap train_config_map(const TrainOpts& o) {
  return {{"data", o.data},
          {"sensor", o.sensor},
          {"stream", o.stream},
          {"pool", o.pool},
          {"norm", o.norm},
          {"val_data", o.val_data},
          {"val_fraction", fmt_double(o.val_fraction)},
          {"out", o.out},
          {"metrics", o.metrics},
          {"patch_len", std::to_string(o.mcfg.patch_len)},
          {"patch_count", std::to_string(o.mcfg.patch_count)},
          {"dim", std::to_string(o.mcfg.dim)},
          {"layers", std::to_string(o.mcfg.layers)},
          {"heads", std::to_string(o.mcfg.heads)},
          {"ffn_dim", std::to_string(o.mcfg.ffn_dim)},
          {"classes", std::to_string(o.mcfg.classes)},
          {"dropout", fmt_double(o.mcfg.dropout)},
          {"stochastic_depth", fmt_double(o.mcfg.stochastic_depth)},
          {"epochs", std::to_string(o.tcfg.epochs)},
          {"batch_size", std::to_string(o.tcfg.batch_size)},
          {"lr_max", fmt_double(o.tcfg.lr_max)},
          {"lr_min", fmt_double(o.tcfg.lr_min)},
          {"weight_decay", fmt_double(o.tcfg.weight_decay)},
          {"label_smoothing", fmt_double(o.tcfg.label_smoothing)},
          {"clip_norm", fmt_double(o.tcfg.clip_norm)},
          {"seed", std::to_string(o.tcfg.seed)}};
}

void require_sensor_match(const std::vector<Window>& windows, Sensor sensor, const char* what) {
  for (const Window& w : windows)
    if (w.sensor != sensor)
      throw RoutingError(std::string(what) + " contains a window for sensor " +
                         to_string(w.sensor) + " ('" + w.id + "') but this run targets " +
                         to_string(sensor));
}

void run_train(const TrainOpts& o) {
  const Sensor sensor = sensor_from_string(o.sensor);
  const StreamKind stream = stream_from_string(o.stream);
  const NormMode norm = norm_mode_from_string(o.norm);
  AugPolicy policy = AugPolicy::by_name(o.pool, o.tcfg.seed);

  auto windows = read_all_windows({o.data});
  require_sensor_match(windows, sensor, "--data");

  std::vector<Window> train_set, val_set;
  if (!o.val_data.empty()) {
    train_set = windows;
    val_set = read_all_windows({o.val_data});
    require_sensor_match(val_set, sensor, "--val-data");
  } else if (o.val_fraction > 0) {
    if (o.val_fraction >= 1)
      throw std::invalid_argument("--val-fraction must be in [0, 1)");
    std::set<std::string> subjects;
    for (const Window& w : windows) subjects.insert(w.subject);
    const int k = std::max(2, static_cast<int>(std::lround(1.0 / o.val_fraction)));
    if (static_cast<int>(subjects.size()) < k)
      throw std::invalid_argument("--val-fraction needs at least " + std::to_string(k) +
                                  " subjects, got " + std::to_string(subjects.size()));
    auto folds = make_folds(subjects, k, o.tcfg.seed);
    const std::set<std::string> held(folds[0].held_out.begin(), folds[0].held_out.end());
    for (const Window& w : windows)
      (held.count(w.subject) ? val_set : train_set).push_back(w);
  } else {
    train_set = windows;
  }

  TrainResult res = train_fold(train_set, val_set, o.mcfg, o.tcfg, policy, stream, norm, o.threads);

  Checkpoint ck;
  ck.sensor = sensor;
  ck.stream = stream;
  ck.norm = norm;
  ck.stats = res.stats;
  ck.aug_pool = stream == StreamKind::Robust ? policy.name : "none";
  ck.seed = o.tcfg.seed;
  ck.cfg = o.mcfg;
  // Keep the validation-best weights when a validation split exists.
  ck.params = (!val_set.empty() && res.best_epoch >= 0) ? res.best_params : res.final_params;
  save_checkpoint(o.out, ck);

  const std::string metrics = o.metrics.empty() ? o.out + ".metrics.csv" : o.metrics;
  write_metrics_csv(metrics, res.history);
  write_sidecar(o.out, "train", o.tcfg.seed, train_config_map(o));

  std::cout << "trained " << to_string(sensor) << '/' << to_string(stream) << ": "
            << train_set.size() << " train windows, " << val_set.size() << " validation windows\n";
  char line[160];
  std::snprintf(line, sizeof(line), "final_train_loss %.6f\n", res.history.back().train_loss);
  std::cout << line;
  if (!val_set.empty() && res.best_epoch >= 0) {
    std::snprintf(line, sizeof(line), "best_val_macro_f1 %.4f (epoch %d)\n", res.best_val_f1,
                  res.best_epoch);
    std::cout << line;
  }
  std::cout << "wrote " << o.out << "\nwrote " << metrics << '\n';
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOpts {
  std::string checkpoint;
  std::string data;
  std::string out;
  int bins = 15;
  int threads = default_threads();
};

void run_calibrate(const CalibrateOpts& o) {
  Checkpoint ck = load_checkpoint(o.checkpoint);
  auto windows = read_all_windows({o.data});
  require_sensor_match(windows, ck.sensor, "--data");
  if (windows.empty()) throw std::invalid_argument("--data: no windows");

  std::vector<std::vector<double>> logits(windows.size());
  std::vector<int> labels(windows.size());
  const GlobalStats* stats = ck.stats ? &*ck.stats : nullptr;
  parallel_for(static_cast<int>(windows.size()), o.threads, [&](int i) {
    const Window& w = windows[static_cast<std::size_t>(i)];
    if (!w.label) throw SchemaError("window '" + w.id + "' has no label");
    Mat<float> a = ck.norm == NormMode::Global ? apply_global<float>(w, *stats)
                                               : apply_per_window<float>(w);
    std::vector<float> z = forward(a, ck.params, ck.cfg);
    logits[static_cast<std::size_t>(i)].assign(z.begin(), z.end());
    labels[static_cast<std::size_t>(i)] = *w.label;
  });

  CalibrationResult cal = fit_temperature(logits, labels, o.bins);
  ck.calibration = cal;
  const std::string out = o.out.empty() ? o.checkpoint : o.out;
  save_checkpoint(out, ck);
  write_sidecar(out, "calibrate", ck.seed,
                {{"checkpoint", o.checkpoint},
                 {"data", o.data},
                 {"out", out},
                 {"bins", std::to_string(o.bins)}});

  char line[160];
  std::snprintf(line, sizeof(line), "temperature %.4f%s\n", cal.temperature,
                cal.degenerate ? " (degenerate: single-class data)" : "");
  std::cout << line;
  std::snprintf(line, sizeof(line), "%-6s %10s %10s\n", "", "pre", "post");
  std::cout << line;
  std::snprintf(line, sizeof(line), "%-6s %10.4f %10.4f\n", "nll", cal.nll_pre, cal.nll_post);
  std::cout << line;
  std::snprintf(line, sizeof(line), "%-6s %10.4f %10.4f\n", "ece", cal.ece_pre, cal.ece_post);
  std::cout << line;
  std::cout << "wrote " << out << '\n';
}

// ---------------------------------------------------------------------------
// predict / evaluate / dropout

struct PredictOpts {
  std::vector<std::string> data;
  std::vector<std::string> checkpoints;
  std::string sensors = "LA,RA,LL,RL";
  std::string out;
  std::string report;
  std::string heatmap;
  int threads = default_threads();
};

ConfigMap predict_config_map(const PredictOpts& o, const char* command) {
  ConfigMap cfg = {{"sensors", o.sensors}, {"out", o.out}, {"command", command}};
  for (std::size_t i = 0; i < o.data.size(); ++i) cfg["data." + std::to_string(i)] = o.data[i];
  for (std::size_t i = 0; i < o.checkpoints.size(); ++i)
    cfg["checkpoint." + std::to_string(i)] = o.checkpoints[i];
  return cfg;
}

void run_predict(const PredictOpts& o) {
  LoadedModels lm = load_models(o.checkpoints);
  auto windows = read_all_windows(o.data);
  auto preds = predict_labels(windows, lm.table, parse_sensor_list(o.sensors), o.threads);
  write_predictions_csv(o.out, preds);
  write_sidecar(o.out, "predict", lm.store.front()->seed, predict_config_map(o, "predict"));
  std::cout << "wrote " << o.out << " (" << preds.size() << " predictions)\n";
}

void run_evaluate(const PredictOpts& o) {
  LoadedModels lm = load_models(o.checkpoints);
  auto windows = read_all_windows(o.data);
  auto preds = predict_labels(windows, lm.table, parse_sensor_list(o.sensors), o.threads);
  std::vector<int> pred, truth;
  for (const Prediction& p : preds) {
    if (!p.truth) throw SchemaError("window id '" + p.id + "' has no label; cannot evaluate");
    pred.push_back(p.label);
    truth.push_back(*p.truth);
  }
  EvalReport r = confusion(pred, truth, lm.classes);
  if (!o.report.empty()) {
    std::ofstream out(o.report);
    if (!out) throw std::invalid_argument("cannot open '" + o.report + "' for writing");
    out << eval_report_to_json(r).dump(2) << '\n';
    write_sidecar(o.report, "evaluate", lm.store.front()->seed,
                  predict_config_map(o, "evaluate"));
    std::cout << "wrote " << o.report << '\n';
  }
  if (!o.heatmap.empty()) {
    write_heatmap_csv(o.heatmap, r);
    std::cout << "wrote " << o.heatmap << '\n';
  }
  char line[32];
  std::snprintf(line, sizeof(line), "%.4f\n", r.macro_f1);
  std::cout << line;
}

void run_dropout(const PredictOpts& o) {
  LoadedModels lm = load_models(o.checkpoints);
  auto windows = read_all_windows(o.data);
  auto rows = sensor_dropout_sweep(windows, lm.table, lm.classes, o.threads);
  write_dropout_csv(o.out, rows);
  write_sidecar(o.out, "dropout", lm.store.front()->seed, predict_config_map(o, "dropout"));
  for (const DropoutRow& r : rows) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-6s macro_f1 %.4f delta %+.2f pp\n",
                  r.dropped ? to_string(*r.dropped) : "none", r.macro_f1, r.delta_pp);
    std::cout << line;
  }
  std::cout << "wrote " << o.out << '\n';
}

// ---------------------------------------------------------------------------
// augdemo

struct AugdemoOpts {
  std::string policy = "pool-v1";
  std::uint64_t seed = 42;
  std::string out;
};

void run_augdemo(const AugdemoOpts& o) {
  AugPolicy policy = AugPolicy::by_name(o.policy, o.seed);
  // A clean synthetic window to transform; noise-free so every panel shows the
  // operator's effect rather than sampling noise.
  auto windows = synth_dataset(2, 1, 0.0, o.seed);
  Mat<double> raw = window_to_mat(windows[0]);

  // First drawn parameterization of each transform kind from the policy.
  std::map<AugKind, AugDraw> draws;
  for (std::uint64_t b = 0; draws.size() < 4; ++b) {
    AugDraw d = draw(policy, b);
    draws.emplace(d.kind, d);
    if (b > 100000) throw std::logic_error("augdemo: transform pool never drew all four kinds");
  }
  std::mt19937_64 jitter_eng(mix_seed(o.seed, 0xDE30ull));
  Mat<double> jittered = apply(raw, draws.at(AugKind::Jitter), jitter_eng);
  Mat<double> scaled = apply(raw, draws.at(AugKind::Scale), jitter_eng);
  Mat<double> rotated = apply(raw, draws.at(AugKind::Rotate), jitter_eng);
  Mat<double> dropped = apply(raw, draws.at(AugKind::Dropout), jitter_eng);

  std::ofstream out(o.out);
  if (!out) throw std::invalid_argument("cannot open '" + o.out + "' for writing");
  out << "t,raw_x,jitter_x,scale_x,rotate_x,dropout_x\n";
  for (int t = 0; t < raw.rows; ++t) {
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", t, raw(t, 0),
                  jittered(t, 0), scaled(t, 0), rotated(t, 0), dropped(t, 0));
    out << line;
  }
  write_sidecar(o.out, "augdemo", o.seed,
                {{"policy", o.policy}, {"seed", std::to_string(o.seed)}, {"out", o.out}});
  std::cout << "wrote " << o.out << '\n';
}

// ---------------------------------------------------------------------------

void add_model_flags(CLI::App* cmd, ModelConfig& m) {
  cmd->add_option("--patch-len", m.patch_len, "samples per patch");
  cmd->add_option("--patch-count", m.patch_count, "patches per window");
  cmd->add_option("--dim", m.dim, "embedding width");
  cmd->add_option("--layers", m.layers, "encoder layers");
  cmd->add_option("--heads", m.heads, "attention heads");
  cmd->add_option("--ffn-dim", m.ffn_dim, "feed-forward width");
  cmd->add_option("--classes", m.classes, "number of classes");
  cmd->add_option("--dropout", m.dropout, "dropout rate");
  cmd->add_option("--stochastic-depth", m.stochastic_depth, "per-branch skip rate");
}

void add_train_flags(CLI::App* cmd, TrainConfig& t) {
  cmd->add_option("--epochs", t.epochs, "training epochs");
  cmd->add_option("--batch-size", t.batch_size, "windows per batch");
  cmd->add_option("--lr-max", t.lr_max, "peak learning rate");
  cmd->add_option("--lr-min", t.lr_min, "final learning rate");
  cmd->add_option("--weight-decay", t.weight_decay, "decoupled weight decay");
  cmd->add_option("--smoothing", t.label_smoothing, "label smoothing");
  cmd->add_option("--clip", t.clip_norm, "gradient clipping threshold");
  cmd->add_option("--seed", t.seed, "training seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-aware patch-transformer toolkit for wearable sensor classification"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "read options from an INI/TOML file; keys live in a [subcommand] section "
                 "and command-line flags take precedence");

  SynthOpts synth_opts;
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic windows for all four sensors");
  synth->add_option("--classes", synth_opts.classes, "number of classes");
  synth->add_option("--per-class", synth_opts.per_class, "windows per class per sensor");
  synth->add_option("--noise", synth_opts.noise, "additive noise level");
  synth->add_option("--subjects", synth_opts.subjects, "number of synthetic subjects");
  synth->add_option("--seed", synth_opts.seed, "generator seed");
  synth->add_option("--out", synth_opts.out, "output directory")->required();

  TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train one sensor/stream encoder");
  train->add_option("--data", train_opts.data, "training windows (JSONL)")->required();
  train->add_option("--sensor", train_opts.sensor, "sensor position (LA|RA|LL|RL)")->required();
  train->add_option("--stream", train_opts.stream, "training stream (clean|robust)")->required();
  train->add_option("--pool", train_opts.pool, "augmentation pool for the robust stream");
  train->add_option("--norm", train_opts.norm, "normalization mode (per-window|global)");
  train->add_option("--val-data", train_opts.val_data, "validation windows (JSONL)");
  train->add_option("--val-fraction", train_opts.val_fraction,
                    "subject fraction held out for validation");
  train->add_option("--out", train_opts.out, "checkpoint path")->required();
  train->add_option("--metrics", train_opts.metrics, "metrics CSV path (default <out>.metrics.csv)");
  train->add_option("--threads", train_opts.threads, "worker threads");
  add_model_flags(train, train_opts.mcfg);
  add_train_flags(train, train_opts.tcfg);

  CalibrateOpts cal_opts;
  CLI::App* calibrate = app.add_subcommand("calibrate", "fit a temperature on held-out windows");
  calibrate->add_option("--checkpoint", cal_opts.checkpoint, "checkpoint to calibrate")->required();
  calibrate->add_option("--data", cal_opts.data, "held-out labeled windows (JSONL)")->required();
  calibrate->add_option("--out", cal_opts.out, "output checkpoint (default: overwrite input)");
  calibrate->add_option("--bins", cal_opts.bins, "calibration-error bins");
  calibrate->add_option("--threads", cal_opts.threads, "worker threads");

  PredictOpts predict_opts;
  CLI::App* predict = app.add_subcommand("predict", "fused label predictions to CSV");
  predict->add_option("--data", predict_opts.data, "window files (JSONL)")->required();
  predict->add_option("--checkpoint", predict_opts.checkpoints, "model checkpoints")->required();
  predict->add_option("--sensors", predict_opts.sensors, "active sensors (comma-separated)");
  predict->add_option("--out", predict_opts.out, "predictions CSV")->required();
  predict->add_option("--threads", predict_opts.threads, "worker threads");

  PredictOpts eval_opts;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score labeled windows; prints macro-F1");
  evaluate->add_option("--data", eval_opts.data, "labeled window files (JSONL)")->required();
  evaluate->add_option("--checkpoint", eval_opts.checkpoints, "model checkpoints")->required();
  evaluate->add_option("--sensors", eval_opts.sensors, "active sensors (comma-separated)");
  evaluate->add_option("--report", eval_opts.report, "evaluation report JSON path");
  evaluate->add_option("--heatmap", eval_opts.heatmap, "row-normalized confusion CSV path");
  evaluate->add_option("--threads", eval_opts.threads, "worker threads");

  PredictOpts drop_opts;
  CLI::App* dropout = app.add_subcommand("dropout", "leave-one-sensor-out robustness sweep");
  dropout->add_option("--data", drop_opts.data, "labeled window files (JSONL)")->required();
  dropout->add_option("--checkpoint", drop_opts.checkpoints, "model checkpoints")->required();
  dropout->add_option("--out", drop_opts.out, "sweep CSV path")->required();
  dropout->add_option("--threads", drop_opts.threads, "worker threads");

  AugdemoOpts aug_opts;
  CLI::App* augdemo = app.add_subcommand("augdemo", "per-transform demo traces to CSV");
  augdemo->alias("augment-demo");
  augdemo->add_option("--policy", aug_opts.policy, "transform pool (pool-v1|pool-v2)");
  augdemo->add_option("--seed", aug_opts.seed, "draw seed");
  augdemo->add_option("--out", aug_opts.out, "demo CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse diagnostic
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) run_synth(synth_opts);
    if (train->parsed()) run_train(train_opts);
    if (calibrate->parsed()) run_calibrate(cal_opts);
    if (predict->parsed()) run_predict(predict_opts);
    if (evaluate->parsed()) run_evaluate(eval_opts);
    if (dropout->parsed()) run_dropout(drop_opts);
    if (augdemo->parsed()) run_augdemo(aug_opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
