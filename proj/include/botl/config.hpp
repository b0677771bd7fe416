#pragma once

// Experiment configuration: JSON in, validated structs out. Field paths are
// carried on every error so the CLI can point at the offending entry.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "botl/botl.hpp"
#include "botl/errors.hpp"
#include "botl/rng.hpp"
#include "botl/streams.hpp"

namespace botl::config {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::vector<streams::StreamConfig> streams;
  framework::FrameworkConfig framework;
  std::string output_dir = "out";
};

namespace detail {

using nlohmann::json;

inline cdd::DetectorKind parse_detector(const std::string& name) {
  if (name == "repro") return cdd::DetectorKind::repro;
  if (name == "adwin") return cdd::DetectorKind::adwin;
  if (name == "awpro") return cdd::DetectorKind::awpro;
  throw ConfigError("detector", "unknown detector '" + name + "'");
}

inline selection::Method parse_selector(const std::string& name) {
  if (name == "none") return selection::Method::none;
  if (name == "p_thresh") return selection::Method::p_thresh;
  if (name == "mi_thresh") return selection::Method::mi_thresh;
  if (name == "cs_thresh") return selection::Method::cs_thresh;
  if (name == "cs_clust") return selection::Method::cs_clust;
  throw ConfigError("selector", "unknown selector '" + name + "'");
}

inline framework::TransferPolicy parse_policy(const std::string& name) {
  if (name == "all") return framework::TransferPolicy::all;
  if (name == "clustered_reduced")
    return framework::TransferPolicy::clustered_reduced;
  throw ConfigError("transfer", "unknown transfer policy '" + name + "'");
}

inline streams::StreamConfig parse_stream(const json& j, const std::string& path) {
  streams::StreamConfig sc;
  const std::string kind = j.value("kind", "hyperplane");
  if (kind == "hyperplane") {
    sc.kind = streams::StreamKind::hyperplane;
  } else if (kind == "heating") {
    sc.kind = streams::StreamKind::heating;
  } else if (kind == "csv") {
    sc.kind = streams::StreamKind::csv;
  } else {
    throw ConfigError(path + ".kind", "unknown stream kind '" + kind + "'");
  }

  if (j.contains("variant")) {
    const std::string v = j.at("variant").get<std::string>();
    if (v == "A") sc.variant = streams::HyperplaneVariant::A;
    else if (v == "B") sc.variant = streams::HyperplaneVariant::B;
    else if (v == "C") sc.variant = streams::HyperplaneVariant::C;
    else if (v == "D") sc.variant = streams::HyperplaneVariant::D;
    else throw ConfigError(path + ".variant", "expected A, B, C or D");
  }
  if (j.contains("drift_mode")) {
    const std::string m = j.at("drift_mode").get<std::string>();
    if (m == "sudden") sc.drift_mode = streams::DriftMode::sudden;
    else if (m == "gradual") sc.drift_mode = streams::DriftMode::gradual;
    else throw ConfigError(path + ".drift_mode", "expected sudden or gradual");
  }
  sc.num_features = j.value("num_features", sc.num_features);
  sc.length = j.value("length", sc.length);
  sc.drifts = j.value("drifts", sc.drifts);
  sc.mixing_m = j.value("mixing_m", sc.mixing_m);
  if (sc.kind == streams::StreamKind::hyperplane &&
      sc.drift_mode == streams::DriftMode::gradual && sc.mixing_m == 0) {
    sc.mixing_m = streams::derived_mixing(sc.length, sc.drifts);
  }
  sc.seed = j.value("seed", sc.seed);
  sc.start_step = j.value("start_step", sc.start_step);
  sc.weather_seed = j.value("weather_seed", sc.weather_seed);
  sc.path = j.value("path", sc.path);
  if (j.contains("feature_columns"))
    sc.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
  sc.target_column = j.value("target_column", sc.target_column);
  if (j.contains("delimiter")) {
    const std::string d = j.at("delimiter").get<std::string>();
    if (d.size() != 1)
      throw ConfigError(path + ".delimiter", "must be a single character");
    sc.delimiter = d[0];
  }
  sc.scale_features = j.value("scale_features", sc.scale_features);
  sc.window_hint = j.value("window_hint", sc.window_hint);

  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + e.field, e.what());
  }
  if (sc.kind == streams::StreamKind::csv &&
      !std::filesystem::exists(sc.path)) {
    throw ConfigError(path + ".path", "file does not exist: " + sc.path);
  }
  return sc;
}

}  // namespace detail

inline ExperimentConfig parse(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (!j.contains("seed")) throw ConfigError("seed", "required");
  cfg.seed = j.at("seed").get<std::uint64_t>();

  cfg.framework.detector = detail::parse_detector(j.value("detector", "repro"));
  cfg.framework.selector = detail::parse_selector(j.value("selector", "none"));
  cfg.framework.policy = detail::parse_policy(j.value("transfer", "all"));

  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    cfg.framework.tau_perf = t.value("tau_perf", cfg.framework.tau_perf);
    cfg.framework.tau_mi = t.value("tau_mi", cfg.framework.tau_mi);
    cfg.framework.tau_cs = t.value("tau_cs", cfg.framework.tau_cs);
  }
  if (cfg.framework.tau_perf > 1.0)
    throw ConfigError("thresholds.tau_perf", "must be at most 1");
  if (cfg.framework.tau_mi < 0.0)
    throw ConfigError("thresholds.tau_mi", "must be non-negative");
  if (cfg.framework.tau_cs <= 0.0 || cfg.framework.tau_cs > 1.0)
    throw ConfigError("thresholds.tau_cs", "must be in (0, 1]");

  cfg.framework.scaling_k = j.value("scaling_k", cfg.framework.scaling_k);
  if (cfg.framework.scaling_k < 1)
    throw ConfigError("scaling_k", "must be at least 1");
  cfg.framework.max_clusters = j.value("max_clusters", cfg.framework.max_clusters);
  cfg.framework.mi_bins = j.value("mi_bins", cfg.framework.mi_bins);
  cfg.framework.meta_refit_stride =
      j.value("meta_refit_stride", cfg.framework.meta_refit_stride);
  if (cfg.framework.meta_refit_stride < 1)
    throw ConfigError("meta_refit_stride", "must be at least 1");

  if (j.contains("detector_params")) {
    const auto& d = j.at("detector_params");
    auto& dc = cfg.framework.detector_config;
    dc.window_capacity = d.value("window_capacity", 0);
    dc.drift_threshold = d.value("drift_threshold", dc.drift_threshold);
    dc.reuse_threshold = d.value("reuse_threshold", dc.reuse_threshold);
    dc.consecutive_required = d.value("consecutive", dc.consecutive_required);
    dc.min_fill = d.value("min_fill", dc.min_fill);
    dc.adwin_delta = d.value("adwin_delta", dc.adwin_delta);
    dc.ridge_lambda = d.value("ridge_lambda", dc.ridge_lambda);
    dc.pc_retention = d.value("pc_retention", dc.pc_retention);
  }

  cfg.output_dir = j.value("output_dir", cfg.output_dir);

  if (!j.contains("streams") || !j.at("streams").is_array() ||
      j.at("streams").empty())
    throw ConfigError("streams", "need a non-empty array");
  int index = 0;
  for (const auto& js : j.at("streams")) {
    streams::StreamConfig sc =
        detail::parse_stream(js, "streams[" + std::to_string(index) + "]");
    if (sc.seed == 0) sc.seed = derive_seed(cfg.seed, index);
    cfg.streams.push_back(std::move(sc));
    ++index;
  }
  return cfg;
}

inline ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("config", "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse(j);
}

// Re-apply a new global seed: stream seeds are re-derived for streams that
// did not pin one explicitly in the file.
inline void override_seed(ExperimentConfig& cfg, const nlohmann::json& original,
                          std::uint64_t seed) {
  cfg.seed = seed;
  const auto& arr = original.at("streams");
  for (std::size_t i = 0; i < cfg.streams.size(); ++i) {
    const auto& js = arr.at(i);
    if (!js.contains("seed") || js.at("seed").get<std::uint64_t>() == 0)
      cfg.streams[i].seed = derive_seed(seed, static_cast<int>(i));
  }
}

}  // namespace botl::config
