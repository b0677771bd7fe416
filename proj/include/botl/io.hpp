#pragma once

// Result serialisation: metrics.csv (one row per stream per window record),
// summary.json (per-stream Tables-style quantities with stable key order),
// transfers.csv (envelope log) and sweep.csv. Schemas are fixed; doubles are
// written with round-trip precision so identical runs produce identical bytes.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "botl/botl.hpp"
#include "botl/config.hpp"

namespace botl::io {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// JSON rejects infinities; pin the R^2 sentinel to the double range edge.
inline double json_safe(double v) {
  if (std::isnan(v)) return 0.0;
  if (std::isinf(v))
    return v > 0 ? std::numeric_limits<double>::max()
                 : std::numeric_limits<double>::lowest();
  return v;
}

inline std::string detector_name(cdd::DetectorKind kind) {
  switch (kind) {
    case cdd::DetectorKind::repro: return "repro";
    case cdd::DetectorKind::adwin: return "adwin";
    case cdd::DetectorKind::awpro: return "awpro";
  }
  return "?";
}

inline std::string selector_name(selection::Method method) {
  switch (method) {
    case selection::Method::none: return "none";
    case selection::Method::p_thresh: return "p_thresh";
    case selection::Method::mi_thresh: return "mi_thresh";
    case selection::Method::cs_thresh: return "cs_thresh";
    case selection::Method::cs_clust: return "cs_clust";
  }
  return "?";
}

inline std::string policy_name(framework::TransferPolicy policy) {
  return policy == framework::TransferPolicy::all ? "all" : "clustered_reduced";
}

inline void write_metrics_csv(const std::string& path,
                              const framework::ExperimentResult& result) {
  std::ofstream out(path);
  out << "stream,window_index,r2,pmcc2,rmse,active_models,metric_calcs,"
         "cdd_r2,cdd_pmcc2,cdd_rmse\n";
  for (const auto& stream : result.streams) {
    for (std::size_t i = 0; i < stream.series.size(); ++i) {
      const auto& rec = stream.series[i];
      const auto& cdd = stream.cdd_series[i];
      out << stream.stream_index << ',' << rec.window_index << ','
          << format_double(rec.r2) << ',' << format_double(rec.pmcc2) << ','
          << format_double(rec.rmse) << ',' << rec.active_models << ','
          << rec.metric_calcs << ',' << format_double(cdd.r2) << ','
          << format_double(cdd.pmcc2) << ',' << format_double(cdd.rmse) << '\n';
    }
  }
}

inline void write_transfers_csv(const std::string& path,
                                const framework::ExperimentResult& result) {
  std::ofstream out(path);
  out << "step,sequence,origin_stream,model_local_id,action\n";
  for (const auto& entry : result.transfers) {
    out << entry.step << ',' << entry.sequence << ',' << entry.origin_stream
        << ',' << entry.model_local_id << ','
        << (entry.sent ? "sent" : "suppressed") << '\n';
  }
}

inline nlohmann::ordered_json method_summary_json(
    const framework::MethodSummary& summary) {
  nlohmann::ordered_json j;
  j["r2"] = json_safe(summary.r2);
  j["pmcc2"] = json_safe(summary.pmcc2);
  j["rmse"] = json_safe(summary.rmse);
  j["mean_models"] = json_safe(summary.mean_selected);
  j["metric_calcs"] = summary.metric_calcs;
  return j;
}

inline nlohmann::ordered_json summary_json(
    const framework::ExperimentResult& result,
    const config::ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["detector"] = detector_name(cfg.framework.detector);
  j["selector"] = selector_name(cfg.framework.selector);
  j["transfer"] = policy_name(cfg.framework.policy);
  j["seed"] = cfg.seed;

  double total_r2 = 0.0, total_cdd_r2 = 0.0;
  long long total_calcs = 0;
  int total_sent = 0, total_suppressed = 0, total_drifts = 0;

  nlohmann::ordered_json streams = nlohmann::ordered_json::array();
  for (const auto& stream : result.streams) {
    const auto meta = framework::summarize(stream.series, stream.window_size);
    auto cdd = framework::summarize(stream.cdd_series, stream.window_size);
    cdd.metric_calcs = 0;

    nlohmann::ordered_json js;
    js["stream"] = stream.stream_index;
    js["instances"] = stream.instances;
    js["window_size"] = stream.window_size;
    js["drifts"] = stream.drifts;
    js["transfers_sent"] = stream.transfers_sent;
    js["transfers_received"] = stream.transfers_received;
    js["transfers_suppressed"] = stream.transfers_suppressed;
    js["registry_size"] = stream.registry_size;
    js["method"] = method_summary_json(meta);
    js["cdd"] = method_summary_json(cdd);
    streams.push_back(js);

    total_r2 += meta.r2;
    total_cdd_r2 += cdd.r2;
    total_calcs += stream.metric_calcs;
    total_sent += stream.transfers_sent;
    total_suppressed += stream.transfers_suppressed;
    total_drifts += stream.drifts;
  }
  j["streams"] = streams;

  const double n = static_cast<double>(result.streams.size());
  nlohmann::ordered_json totals;
  totals["mean_r2"] = json_safe(total_r2 / n);
  totals["mean_cdd_r2"] = json_safe(total_cdd_r2 / n);
  totals["metric_calcs"] = total_calcs;
  totals["transfers_sent"] = total_sent;
  totals["transfers_suppressed"] = total_suppressed;
  totals["drifts"] = total_drifts;
  j["totals"] = totals;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

struct SweepRow {
  double value = 0.0;
  std::string detector;
  double r2_delta = 0.0;
  double mean_models = 0.0;
};

inline void write_sweep_csv(const std::string& path,
                            const std::string& parameter,
                            const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  out << "parameter,value,detector,r2_delta,mean_models\n";
  for (const auto& row : rows) {
    out << parameter << ',' << format_double(row.value) << ',' << row.detector
        << ',' << format_double(row.r2_delta) << ','
        << format_double(row.mean_models) << '\n';
  }
}

// Runs one configured experiment and writes the three output files.
inline framework::ExperimentResult run_and_write(
    const config::ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  framework::ExperimentResult result =
      framework::run_framework(cfg.streams, cfg.framework);
  const std::filesystem::path dir(cfg.output_dir);
  write_metrics_csv((dir / "metrics.csv").string(), result);
  write_transfers_csv((dir / "transfers.csv").string(), result);
  write_text((dir / "summary.json").string(),
             summary_json(result, cfg).dump(2) + "\n");
  return result;
}

}  // namespace botl::io
