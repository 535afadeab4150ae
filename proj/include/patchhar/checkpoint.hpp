#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchhar/calibrate.hpp"
#include "patchhar/dataset.hpp"
#include "patchhar/ensemble.hpp"
#include "patchhar/error.hpp"
#include "patchhar/model.hpp"
#include "patchhar/normalize.hpp"

namespace patchhar {

inline constexpr const char* kCheckpointSchema = "patchhar.checkpoint.v1";

// Everything needed to reproduce inference for one (sensor, stream) model:
// architecture, weights, the normalization recipe, the augmentation pool it
// was trained against, the training seed and the calibrated temperature.
struct Checkpoint {
  Sensor sensor = Sensor::LA;
  StreamKind stream = StreamKind::Clean;
  NormMode norm = NormMode::PerWindow;
  std::optional<GlobalStats> stats;
  std::string aug_pool = "none";  // transform pool the robust stream drew from
  std::uint64_t seed = 42;
  std::optional<CalibrationResult> calibration;
  ModelConfig cfg;
  ModelParams<float> params;

  SensorModel model_view() const {
    SensorModel m;
    m.params = &params;
    m.cfg = &cfg;
    m.norm = norm;
    m.stats = stats ? &*stats : nullptr;
    m.temperature = calibration ? calibration->temperature : 1.0;
    return m;
  }
};

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"patch_len", c.patch_len},
                        {"patch_count", c.patch_count},
                        {"dim", c.dim},
                        {"layers", c.layers},
                        {"heads", c.heads},
                        {"ffn_dim", c.ffn_dim},
                        {"classes", c.classes},
                        {"dropout", c.dropout},
                        {"stochastic_depth", c.stochastic_depth}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.patch_len = j.at("patch_len").get<int>();
    c.patch_count = j.at("patch_count").get<int>();
    c.dim = j.at("dim").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ffn_dim = j.at("ffn_dim").get<int>();
    c.classes = j.at("classes").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.stochastic_depth = j.at("stochastic_depth").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return c;
}

inline nlohmann::json calibration_to_json(const CalibrationResult& r) {
  return nlohmann::json{{"temperature", r.temperature}, {"nll_pre", r.nll_pre},
                        {"nll_post", r.nll_post},       {"ece_pre", r.ece_pre},
                        {"ece_post", r.ece_post},       {"bins", r.bins},
                        {"degenerate", r.degenerate}};
}

inline CalibrationResult calibration_from_json(const nlohmann::json& j) {
  CalibrationResult r;
  try {
    r.temperature = j.at("temperature").get<double>();
    r.nll_pre = j.at("nll_pre").get<double>();
    r.nll_post = j.at("nll_post").get<double>();
    r.ece_pre = j.at("ece_pre").get<double>();
    r.ece_post = j.at("ece_post").get<double>();
    r.bins = j.at("bins").get<int>();
    r.degenerate = j.at("degenerate").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("calibration record: ") + e.what());
  }
  if (!(r.temperature > 0)) throw SchemaError("calibration record: non-positive temperature");
  return r;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::json j;
  j["schema"] = kCheckpointSchema;
  j["sensor"] = to_string(ck.sensor);
  j["stream"] = to_string(ck.stream);
  j["norm_mode"] = to_string(ck.norm);
  j["global_stats"] = ck.stats ? global_stats_to_json(*ck.stats) : nlohmann::json(nullptr);
  j["aug_pool"] = ck.aug_pool;
  j["seed"] = ck.seed;
  j["calibration"] =
      ck.calibration ? calibration_to_json(*ck.calibration) : nlohmann::json(nullptr);
  j["model_config"] = model_config_to_json(ck.cfg);
  nlohmann::json tensors;
  for (const auto& r : tensor_refs(ck.params)) {
    // Floats promote to double exactly, so the JSON round-trip is bit-exact.
    tensors[r.name] = std::vector<double>(r.data->begin(), r.data->end());
  }
  j["params"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << j.dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("'") + path + "': " + e.what());
  }
  Checkpoint ck;
  try {
    if (j.at("schema").get<std::string>() != kCheckpointSchema)
      throw SchemaError("checkpoint '" + path + "': unsupported schema tag '" +
                        j.at("schema").get<std::string>() + "'");
    ck.sensor = sensor_from_string(j.at("sensor").get<std::string>());
    ck.stream = stream_from_string(j.at("stream").get<std::string>());
    ck.norm = norm_mode_from_string(j.at("norm_mode").get<std::string>());
    if (!j.at("global_stats").is_null())
      ck.stats = global_stats_from_json(j.at("global_stats"));
    ck.aug_pool = j.at("aug_pool").get<std::string>();
    ck.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("calibration").is_null())
      ck.calibration = calibration_from_json(j.at("calibration"));
    ck.cfg = model_config_from_json(j.at("model_config"));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint '" + path + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError("checkpoint '" + path + "': " + e.what());
  }
  if (ck.norm == NormMode::Global && !ck.stats)
    throw SchemaError("checkpoint '" + path + "': global normalization without stats");

  if (!j.contains("params") || !j["params"].is_object())
    throw SchemaError("checkpoint '" + path + "': missing tensor table");
  ck.params = init_params<float>(ck.cfg, 0);  // shapes only; data overwritten below
  const nlohmann::json& tensors = j["params"];
  try {
    for (auto& r : tensor_refs(ck.params)) {
      auto it = tensors.find(r.name);
      if (it == tensors.end())
        throw SchemaError("checkpoint '" + path + "': missing tensor '" + r.name + "'");
      if (!it->is_array() || it->size() != r.data->size())
        throw SchemaError("checkpoint '" + path + "': tensor '" + r.name + "' has " +
                          std::to_string(it->size()) + " values, expected " +
                          std::to_string(r.data->size()));
      for (std::size_t i = 0; i < r.data->size(); ++i) {
        const double v = (*it)[i].get<double>();
        const float f = static_cast<float>(v);  // may overflow to inf even for finite doubles
        if (!std::isfinite(v) || !std::isfinite(f))
          throw SchemaError("checkpoint '" + path + "': non-finite value in '" + r.name + "'");
        (*r.data)[i] = f;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint '" + path + "': " + e.what());
  }
  return ck;
}

}  // namespace patchhar
