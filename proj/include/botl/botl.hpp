#pragma once

// Multi-stream orchestration: each stream runs a drift detector, a model
// registry, a selection strategy and an OLS meta-learner; stable local models
// are broadcast to the other streams. Streams advance in lock-step rounds and
// envelopes produced in one round are integrated by every peer at the start
// of its next step, which keeps runs reproducible. Evaluation is prequential:
// every instance is predicted before its target is revealed.

#include <Eigen/Dense>
#include <algorithm>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "botl/cdd.hpp"
#include "botl/regress.hpp"
#include "botl/registry.hpp"
#include "botl/selection.hpp"
#include "botl/streams.hpp"

namespace botl::framework {

enum class TransferPolicy { all, clustered_reduced };

struct TransferEnvelope {
  selection::BaseModel model;  // carries the reduced PCs alongside the weights
  long sequence = 0;
};

struct FrameworkConfig {
  cdd::DetectorKind detector = cdd::DetectorKind::repro;
  selection::Method selector = selection::Method::none;
  TransferPolicy policy = TransferPolicy::all;
  double tau_perf = 0.2;
  double tau_mi = 0.2;
  double tau_cs = 0.4;
  int scaling_k = 7;
  int max_clusters = 10;
  int mi_bins = 10;
  int meta_refit_stride = 1;
  cdd::DetectorConfig detector_config;  // window_capacity 0 = per-kind default
};

struct TransferLogEntry {
  long step = 0;
  long sequence = 0;
  int origin_stream = -1;
  int model_local_id = -1;
  bool sent = true;  // false = suppressed by the transfer reducer
};

struct StreamResult {
  int stream_index = 0;
  int window_size = 0;
  long instances = 0;
  std::vector<regress::MetricsRecord> series;      // meta-learner predictions
  std::vector<regress::MetricsRecord> cdd_series;  // detector-alone baseline
  int drifts = 0;
  int transfers_sent = 0;      // deliveries to peers
  int transfers_received = 0;
  int transfers_suppressed = 0;
  int registry_size = 0;
  long long metric_calcs = 0;
};

struct ExperimentResult {
  std::vector<StreamResult> streams;
  std::vector<TransferLogEntry> transfers;
};

// Mean of the Tables-style quantities over full evaluation windows.
struct MethodSummary {
  double r2 = 0.0;
  double pmcc2 = 0.0;
  double rmse = 0.0;
  double mean_selected = 0.0;
  long long metric_calcs = 0;
};

inline MethodSummary summarize(const std::vector<regress::MetricsRecord>& series,
                               int window_size) {
  MethodSummary summary;
  long count = 0;
  for (const auto& rec : series) {
    if (rec.window_index < window_size) continue;
    summary.r2 += rec.r2;
    summary.pmcc2 += rec.pmcc2;
    summary.rmse += rec.rmse;
    summary.mean_selected += rec.active_models;
    ++count;
  }
  if (count > 0) {
    summary.r2 /= count;
    summary.pmcc2 /= count;
    summary.rmse /= count;
    summary.mean_selected /= count;
  }
  if (!series.empty()) summary.metric_calcs = series.back().metric_calcs;
  return summary;
}

namespace detail {

// Trailing window of (prediction, target) pairs for prequential metrics.
class RollingEvaluator {
 public:
  explicit RollingEvaluator(int window) : window_(window) {}

  void push(double pred, double target) {
    rows_.emplace_back(pred, target);
    while (static_cast<int>(rows_.size()) > window_) rows_.pop_front();
  }

  regress::Metrics metrics() const {
    const int n = static_cast<int>(rows_.size());
    if (n == 0) return {};
    if (n == 1) {
      regress::Metrics m;
      m.rmse = std::abs(rows_[0].first - rows_[0].second);
      return m;
    }
    Eigen::VectorXd preds(n), targets(n);
    for (int i = 0; i < n; ++i) {
      preds(i) = rows_[i].first;
      targets(i) = rows_[i].second;
    }
    return regress::evaluate(preds, targets);
  }

 private:
  int window_;
  std::deque<std::pair<double, double>> rows_;
};

// Pre-transfer clustering state: distances among this stream's own stable
// models, and which of them have already been sent. Distances are copied
// from the registry cache whenever both endpoints are members, so reduced
// transfer does not recompute pair distances the stream already paid for.
class TransferReducer {
 public:
  TransferReducer(int scaling_k, int max_clusters,
                  selection::CalcCounter* counter)
      : scaling_k_(scaling_k), max_clusters_(max_clusters), counter_(counter) {}

  // Registers a new stable local model and decides whether to broadcast it.
  bool offer(const selection::BaseModel& model,
             const selection::ModelRegistry& registry) {
    const int n = static_cast<int>(members_.size());
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + 1, n + 1);
    grown.topLeftCorner(n, n) = distances_;
    for (int j = 0; j < n; ++j) {
      double d;
      if (const auto cached = registry.cached_distance(model.id, members_[j].id)) {
        d = *cached;
      } else {
        d = subspace::conceptual_distance(model.pcs, members_[j].pcs);
        if (counter_) counter_->add(1);
      }
      grown(n, j) = d;
      grown(j, n) = d;
    }
    distances_ = std::move(grown);
    members_.push_back({model.id, model.pcs});
    sent_.push_back(false);

    const auto assignment = clustering::stsc_cluster(
        subspace::build_affinity(distances_, scaling_k_), max_clusters_);
    const int my_cluster = assignment.labels[n];
    for (int j = 0; j < n; ++j) {
      if (assignment.labels[j] == my_cluster && sent_[j]) return false;
    }
    sent_[n] = true;
    return true;
  }

 private:
  struct Member {
    ModelId id;
    subspace::ReducedPcs pcs;
  };
  int scaling_k_;
  int max_clusters_;
  selection::CalcCounter* counter_;
  std::vector<Member> members_;
  std::vector<bool> sent_;
  Eigen::MatrixXd distances_;
};

}  // namespace detail

class StreamWorker {
 public:
  StreamWorker(int index, const streams::StreamConfig& stream_config,
               const FrameworkConfig& config)
      : index_(index),
        config_(config),
        window_size_(config.detector_config.window_capacity > 0
                         ? config.detector_config.window_capacity
                         : streams::default_window_size(stream_config.kind,
                                                        stream_config.window_hint)),
        detector_(config.detector, resolved_detector_config()),
        registry_(config.selector == selection::Method::cs_thresh ||
                      config.selector == selection::Method::cs_clust,
                  config.scaling_k, &counter_),
        reducer_(config.scaling_k, config.max_clusters, &counter_),
        meta_eval_(window_size_),
        cdd_eval_(window_size_),
        source_(streams::make_stream(stream_config)) {}

  int index() const { return index_; }
  int window_size() const { return window_size_; }
  const selection::ModelRegistry& registry() const { return registry_; }
  const cdd::DriftDetector& detector() const { return detector_; }

  void receive(const TransferEnvelope& envelope) {
    inbox_.push_back(envelope);
  }

  // Advances one instance. Newly stable local models the policy lets through
  // are appended to `outbox`. Returns false once the stream is exhausted.
  bool step(std::vector<TransferEnvelope>& outbox,
            std::vector<TransferLogEntry>& log, long& sequence,
            bool has_peers) {
    const std::optional<streams::Instance> instance = source_->next();
    if (!instance) return false;

    integrate_inbox();

    const Eigen::VectorXd& x = instance->features;
    const double y = instance->target;
    const double cdd_pred = detector_.predict(x);
    const double meta_pred = meta_ready_ ? meta_.predict(member_predictions(x))
                                         : cdd_pred;
    meta_eval_.push(meta_pred, y);
    cdd_eval_.push(cdd_pred, y);
    record_metrics();

    const cdd::StepResult res = detector_.step(x, y, instance_count_);
    if (res.drift) {
      ++result_.drifts;
      exclusions_.clear_on_drift();
      selection_dirty_ = true;
    }
    if (res.newly_stable >= 0)
      on_newly_stable(res.newly_stable, outbox, log, sequence, has_peers);

    if (selection_dirty_) reselect();
    if (refit_needed_ || instance_count_ % config_.meta_refit_stride == 0)
      refit_meta();

    ++instance_count_;
    return true;
  }

  StreamResult take_result() {
    result_.stream_index = index_;
    result_.window_size = window_size_;
    result_.instances = instance_count_;
    result_.registry_size = registry_.size();
    result_.metric_calcs = counter_.total;
    return std::move(result_);
  }

 private:
  cdd::DetectorConfig resolved_detector_config() const {
    cdd::DetectorConfig dc = config_.detector_config;
    dc.window_capacity = window_size_;
    return dc;
  }

  void integrate_inbox() {
    for (const TransferEnvelope& envelope : inbox_) {
      ++result_.transfers_received;
      add_to_registry(envelope.model);
    }
    inbox_.clear();
  }

  bool add_to_registry(const selection::BaseModel& model) {
    bool admitted;
    if (config_.selector == selection::Method::cs_thresh) {
      admitted = selection::cs_thresh_admit(registry_, model, config_.tau_cs);
    } else {
      registry_.add(model);
      admitted = true;
    }
    if (admitted) selection_dirty_ = true;
    return admitted;
  }

  void on_newly_stable(int local_id, std::vector<TransferEnvelope>& outbox,
                       std::vector<TransferLogEntry>& log, long& sequence,
                       bool has_peers) {
    const cdd::LocalModel& local = detector_.model(local_id);
    selection::BaseModel model;
    model.id = ModelId{index_, local_id};
    model.model = local.model;
    model.pcs = local.pcs;
    model.origin_stream = index_;
    model.origin_concept = local_id;
    model.stable = true;

    add_to_registry(model);
    if (!has_peers) return;

    bool send = true;
    if (config_.policy == TransferPolicy::clustered_reduced)
      send = reducer_.offer(model, registry_);

    TransferLogEntry entry;
    entry.step = instance_count_;
    entry.origin_stream = index_;
    entry.model_local_id = local_id;
    entry.sent = send;
    if (send) {
      entry.sequence = sequence++;
      outbox.push_back(TransferEnvelope{model, entry.sequence});
    } else {
      entry.sequence = -1;
      ++result_.transfers_suppressed;
    }
    log.push_back(entry);
  }

  const selection::BaseModel* current_base_model() {
    const int id = detector_.current_model_id();
    if (id < 0) return nullptr;
    const cdd::LocalModel& local = detector_.model(id);
    current_cache_.id = ModelId{index_, id};
    current_cache_.model = local.model;
    current_cache_.pcs = local.pcs;
    current_cache_.origin_stream = index_;
    current_cache_.origin_concept = id;
    current_cache_.stable = local.stable;
    return &current_cache_;
  }

  void reselect() {
    const selection::BaseModel* current = current_base_model();
    const WindowBuffer& window = detector_.window();
    selection::SelectionOutcome outcome;
    if (window.empty() && config_.selector != selection::Method::none) {
      selection_dirty_ = false;
      return;
    }
    switch (config_.selector) {
      case selection::Method::none: {
        for (const auto& m : registry_.models()) outcome.selected.push_back(m.id);
        if (current) outcome.selected.push_back(current->id);
        std::sort(outcome.selected.begin(), outcome.selected.end());
        outcome.selected.erase(
            std::unique(outcome.selected.begin(), outcome.selected.end()),
            outcome.selected.end());
        break;
      }
      case selection::Method::p_thresh:
        outcome = selection::p_thresh(registry_, window, config_.tau_perf,
                                      current, &counter_);
        break;
      case selection::Method::mi_thresh:
        outcome = selection::mi_thresh(registry_, window, config_.tau_mi,
                                       config_.tau_perf, current, &counter_,
                                       config_.mi_bins);
        break;
      case selection::Method::cs_thresh:
        outcome = selection::cs_thresh_select(registry_, window, config_.tau_perf,
                                              current, &counter_, exclusions_);
        break;
      case selection::Method::cs_clust:
        outcome = selection::cs_clust_select(registry_, window, current,
                                             &counter_, config_.max_clusters);
        break;
    }
    selected_ids_ = std::move(outcome.selected);
    selection_dirty_ = false;
    refit_needed_ = true;
  }

  void refit_meta() {
    const WindowBuffer& window = detector_.window();
    std::vector<regress::RidgeModel> members = resolve_members();
    if (members.empty() || window.empty()) {
      meta_ready_ = false;
      return;
    }
    const Eigen::MatrixXd features = window.feature_matrix();
    Eigen::MatrixXd preds(window.size(), members.size());
    for (std::size_t j = 0; j < members.size(); ++j)
      preds.col(j) = members[j].predict_rows(features);
    meta_ = regress::ols_meta_fit(preds, window.target_vector(), selected_ids_);
    members_ = std::move(members);
    meta_ready_ = true;
    refit_needed_ = false;
  }

  // Members are copied out of the registry: it may reallocate when models
  // arrive between refits.
  std::vector<regress::RidgeModel> resolve_members() {
    std::vector<regress::RidgeModel> members;
    members.reserve(selected_ids_.size());
    for (const ModelId& id : selected_ids_) {
      if (const selection::BaseModel* m = registry_.find(id)) {
        members.push_back(m->model);
      } else if (id.stream == index_) {
        members.push_back(detector_.model(id.local).model);
      }
    }
    return members;
  }

  Eigen::VectorXd member_predictions(const Eigen::VectorXd& x) const {
    Eigen::VectorXd preds(members_.size());
    for (std::size_t j = 0; j < members_.size(); ++j)
      preds(j) = members_[j].predict(x);
    return preds;
  }

  void record_metrics() {
    regress::MetricsRecord rec;
    const regress::Metrics m = meta_eval_.metrics();
    rec.r2 = m.r2;
    rec.pmcc2 = m.pmcc2;
    rec.rmse = m.rmse;
    rec.active_models = meta_ready_ ? static_cast<int>(members_.size()) : 1;
    rec.metric_calcs = counter_.total;
    rec.window_index = instance_count_;
    result_.series.push_back(rec);

    regress::MetricsRecord cdd_rec;
    const regress::Metrics c = cdd_eval_.metrics();
    cdd_rec.r2 = c.r2;
    cdd_rec.pmcc2 = c.pmcc2;
    cdd_rec.rmse = c.rmse;
    cdd_rec.active_models = 1;
    cdd_rec.metric_calcs = 0;
    cdd_rec.window_index = instance_count_;
    result_.cdd_series.push_back(cdd_rec);
  }

  int index_;
  FrameworkConfig config_;
  int window_size_;
  selection::CalcCounter counter_;
  cdd::DriftDetector detector_;
  selection::ModelRegistry registry_;
  detail::TransferReducer reducer_;
  detail::RollingEvaluator meta_eval_;
  detail::RollingEvaluator cdd_eval_;
  std::unique_ptr<streams::StreamSource> source_;

  std::vector<TransferEnvelope> inbox_;
  selection::ExclusionState exclusions_;
  selection::BaseModel current_cache_;
  std::vector<ModelId> selected_ids_;
  std::vector<regress::RidgeModel> members_;
  regress::MetaLearner meta_;
  bool meta_ready_ = false;
  bool selection_dirty_ = false;
  bool refit_needed_ = false;
  long instance_count_ = 0;
  StreamResult result_;
};

// Lock-step round-robin over all streams. Every stream uses the same detector
// kind; envelopes produced in a round reach every peer before its next step.
inline ExperimentResult run_framework(
    const std::vector<streams::StreamConfig>& stream_configs,
    const FrameworkConfig& config) {
  if (stream_configs.empty())
    throw ConfigError("streams", "at least one stream is required");

  std::vector<std::unique_ptr<StreamWorker>> workers;
  workers.reserve(stream_configs.size());
  for (std::size_t i = 0; i < stream_configs.size(); ++i)
    workers.push_back(std::make_unique<StreamWorker>(
        static_cast<int>(i), stream_configs[i], config));

  ExperimentResult result;
  const bool has_peers = workers.size() > 1;
  long sequence = 0;
  std::vector<bool> alive(workers.size(), true);
  bool any_alive = true;
  while (any_alive) {
    any_alive = false;
    std::vector<TransferEnvelope> outbox;
    for (std::size_t i = 0; i < workers.size(); ++i) {
      if (!alive[i]) continue;
      alive[i] = workers[i]->step(outbox, result.transfers, sequence, has_peers);
      any_alive = any_alive || alive[i];
    }
    for (const TransferEnvelope& envelope : outbox) {
      for (std::size_t i = 0; i < workers.size(); ++i) {
        if (static_cast<int>(i) == envelope.model.origin_stream) continue;
        workers[i]->receive(envelope);
      }
    }
  }

  for (auto& worker : workers) {
    StreamResult sr = worker->take_result();
    if (has_peers) {
      // Deliveries: each sent envelope reaches every peer once.
      int sent_events = 0;
      for (const auto& entry : result.transfers)
        if (entry.sent && entry.origin_stream == sr.stream_index) ++sent_events;
      sr.transfers_sent = sent_events * (static_cast<int>(workers.size()) - 1);
    }
    result.streams.push_back(std::move(sr));
  }
  return result;
}

}  // namespace botl::framework
