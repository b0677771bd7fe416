#pragma once

// Concept drift detectors. Each detector owns a sliding learning window and a
// history of ridge models learnt per concept. RePro monitors windowed R^2
// against a threshold and reuses historical models when concepts recur; the
// ADWIN detector monitors the distribution of absolute error and truncates
// the learning window at the estimated drift point; AWPro combines the two,
// reuse-first on the truncated window.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "botl/errors.hpp"
#include "botl/regress.hpp"
#include "botl/subspace.hpp"
#include "botl/window.hpp"

namespace botl::cdd {

enum class DetectorKind { repro, adwin, awpro };
enum class DetectorMode { learning, stable, drift_pending };

struct DetectorConfig {
  int window_capacity = 30;
  double drift_threshold = 0.5;   // R^2 below this counts toward a RePro drift
  double reuse_threshold = 0.6;   // historical model R^2 needed for reuse
  int consecutive_required = 3;   // low-R^2 steps before RePro declares drift
  int min_fill = 0;               // 0 = window_capacity / 2
  double adwin_delta = 0.002;
  double ridge_lambda = 1e-3;
  double pc_retention = 0.999;

  int effective_min_fill() const {
    return min_fill > 0 ? min_fill : std::max(2, window_capacity / 2);
  }
};

// Adaptive window over absolute errors. Shrinks only by dropping a prefix
// whenever two sub-windows have averages further apart than the Hoeffding
// bound allows at confidence delta.
class AdwinWindow {
 public:
  explicit AdwinWindow(double delta = 0.002) : delta_(delta) {}

  // Inserts one error and returns the number of elements dropped from the
  // front (0 means no cut).
  int insert(double error) {
    elements_.push_back(error);
    int dropped = 0;
    while (true) {
      const int cut = find_cut();
      if (cut <= 0) break;
      elements_.erase(elements_.begin(), elements_.begin() + cut);
      dropped += cut;
    }
    return dropped;
  }

  std::size_t size() const { return elements_.size(); }
  const std::deque<double>& elements() const { return elements_; }
  double delta() const { return delta_; }
  void clear() { elements_.clear(); }

 private:
  // Best violating split (prefix length), or 0 when the window is consistent.
  int find_cut() const {
    const int n = static_cast<int>(elements_.size());
    if (n < 2) return 0;
    std::vector<double> prefix(n + 1, 0.0);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + elements_[i];
    const double total = prefix[n];
    const double log_term = std::log(4.0 * n / delta_);

    int best = 0;
    double best_violation = 0.0;
    for (int k = 1; k < n; ++k) {
      const double mean0 = prefix[k] / k;
      const double mean1 = (total - prefix[k]) / (n - k);
      const double harmonic = static_cast<double>(k) * (n - k) / n;
      const double eps = std::sqrt(log_term / (2.0 * harmonic));
      const double violation = std::abs(mean0 - mean1) - eps;
      if (violation >= 0.0 && violation > best_violation) {
        best_violation = violation;
        best = k;
      }
    }
    return best;
  }

  std::deque<double> elements_;
  double delta_;
};

struct LocalModel {
  int local_id = -1;
  regress::RidgeModel model;
  subspace::ReducedPcs pcs;
  bool stable = false;
  long created_at = 0;
  long last_active = 0;
  int survival = 0;  // instances survived as current since last drift
};

struct StepResult {
  bool drift = false;
  bool reused = false;
  int current_model = -1;
  int boundary = -1;       // instances dropped by an ADWIN cut, -1 when none
  int newly_stable = -1;   // local id that just became transfer-eligible
};

class DriftDetector {
 public:
  DriftDetector(DetectorKind kind, DetectorConfig config)
      : kind_(kind),
        config_(config),
        window_(config.window_capacity),
        adwin_(config.adwin_delta) {}

  DetectorKind kind() const { return kind_; }
  DetectorMode mode() const { return mode_; }
  int current_model_id() const { return current_; }
  const WindowBuffer& window() const { return window_; }
  const std::vector<LocalModel>& models() const { return models_; }
  int drift_count() const { return drift_count_; }

  const LocalModel& model(int id) const {
    if (id < 0 || id >= static_cast<int>(models_.size()))
      throw UnknownModel("no local model " + std::to_string(id));
    return models_[id];
  }

  const std::map<std::pair<int, int>, int>& transition_counts() const {
    return transitions_;
  }

  // Prediction of the current model. While a post-cut window refills, the
  // superseded model keeps predicting; during initial cold start the running
  // target mean stands in.
  double predict(const Eigen::VectorXd& x) const {
    if (current_ >= 0) return models_[current_].model.predict(x);
    if (stale_model_ >= 0) return models_[stale_model_].model.predict(x);
    if (window_.empty()) return 0.0;
    return window_.target_vector().mean();
  }

  // Marks the model stable once it has survived a full window of post-drift
  // instances; returns the (possibly already set) flag.
  bool stabilize(int model_id) {
    if (model_id < 0 || model_id >= static_cast<int>(models_.size()))
      throw UnknownModel("no local model " + std::to_string(model_id));
    LocalModel& m = models_[model_id];
    if (!m.stable && m.survival >= config_.window_capacity) m.stable = true;
    return m.stable;
  }

  StepResult step(const Eigen::VectorXd& x, double y, long t) {
    StepResult result;
    const double error = current_ >= 0
                             ? std::abs(y - models_[current_].model.predict(x))
                             : 0.0;
    window_.push(x, y);

    if (current_ < 0) {
      // Cold start, or a pending drift whose window is still refilling.
      if (window_.size() >= config_.effective_min_fill()) {
        if (pending_drift_) {
          pending_drift_ = false;
          do_drift(pending_reuse_first_, t, result);
        } else {
          current_ = learn_model(t);
          mode_ = DetectorMode::stable;
        }
      } else {
        mode_ = DetectorMode::learning;
      }
      finish_step(result, t, result.drift);
      return result;
    }

    bool drift = false;
    bool reuse_first = false;
    switch (kind_) {
      case DetectorKind::repro: {
        const double r2 = window_r2(models_[current_].model);
        if (r2 < config_.drift_threshold) {
          ++low_streak_;
          mode_ = DetectorMode::drift_pending;
        } else {
          low_streak_ = 0;
          mode_ = DetectorMode::stable;
        }
        if (low_streak_ >= config_.consecutive_required) {
          drift = true;
          reuse_first = true;
          low_streak_ = 0;
        }
        break;
      }
      case DetectorKind::adwin:
      case DetectorKind::awpro: {
        const int dropped = adwin_.insert(error);
        if (dropped > 0) {
          result.boundary = dropped;
          window_.keep_last(std::min<int>(static_cast<int>(adwin_.size()),
                                          config_.window_capacity));
          drift = true;
          reuse_first = kind_ == DetectorKind::awpro;
          adwin_.clear();
        }
        break;
      }
    }

    if (drift) {
      if (window_.size() >= config_.effective_min_fill()) {
        do_drift(reuse_first, t, result);
      } else {
        // Not enough post-boundary data to learn from yet; the old model
        // keeps predicting while the window refills.
        mode_ = DetectorMode::learning;
        pending_drift_ = true;
        pending_reuse_first_ = reuse_first;
        const int old = current_;
        current_ = -1;
        stale_model_ = old;
      }
    }
    finish_step(result, t, drift);
    return result;
  }

 private:
  void finish_step(StepResult& result, long t, bool drifted) {
    if (current_ >= 0) {
      LocalModel& m = models_[current_];
      m.last_active = t;
      if (!drifted) {
        ++m.survival;
        if (!m.stable && m.survival >= config_.window_capacity) {
          m.stable = true;
          result.newly_stable = m.local_id;
        }
      }
    }
    result.current_model = current_ >= 0 ? current_ : stale_model_;
  }

  double window_r2(const regress::RidgeModel& model) const {
    const Eigen::VectorXd preds = model.predict_rows(window_.feature_matrix());
    return regress::evaluate(preds, window_.target_vector()).r2;
  }

  int learn_model(long t) {
    LocalModel m;
    m.local_id = static_cast<int>(models_.size());
    m.model = regress::ridge_fit(window_, config_.ridge_lambda);
    m.pcs = window_pcs();
    m.created_at = t;
    m.last_active = t;
    models_.push_back(std::move(m));
    return models_.back().local_id;
  }

  subspace::ReducedPcs window_pcs() const {
    const Eigen::MatrixXd joint =
        subspace::scale_columns_unit_range(window_.joint_matrix());
    try {
      return subspace::compute_reduced_pcs(joint, config_.pc_retention);
    } catch (const DegenerateWindow&) {
      return subspace::degenerate_pcs(static_cast<int>(joint.cols()),
                                      static_cast<int>(joint.rows()));
    }
  }

  void do_drift(bool reuse_first, long t, StepResult& result) {
    const int old = current_ >= 0 ? current_ : stale_model_;
    int next = -1;
    bool reused = false;

    if (reuse_first && models_.size() > 1) {
      // Reuse the best historical model above the threshold. Ties break on
      // how often this transition occurred before, then on recency, then on
      // the lower id.
      double best_r2 = -std::numeric_limits<double>::infinity();
      for (const LocalModel& m : models_) {
        if (m.local_id == old) continue;
        const double r2 = window_r2(m.model);
        if (r2 < config_.reuse_threshold) continue;
        if (next < 0 || better_candidate(r2, m, best_r2, models_[next], old)) {
          best_r2 = r2;
          next = m.local_id;
        }
      }
      reused = next >= 0;
    }
    if (next < 0) next = learn_model(t);

    if (old >= 0) ++transitions_[{old, next}];
    current_ = next;
    stale_model_ = -1;
    models_[current_].survival = 0;
    models_[current_].last_active = t;
    mode_ = DetectorMode::stable;
    ++drift_count_;
    result.drift = true;
    result.reused = reused;
  }

  bool better_candidate(double r2, const LocalModel& candidate, double best_r2,
                        const LocalModel& best, int from) const {
    if (r2 != best_r2) return r2 > best_r2;
    const int cand_count = transition_count(from, candidate.local_id);
    const int best_count = transition_count(from, best.local_id);
    if (cand_count != best_count) return cand_count > best_count;
    if (candidate.last_active != best.last_active)
      return candidate.last_active > best.last_active;
    return candidate.local_id < best.local_id;
  }

  int transition_count(int from, int to) const {
    const auto it = transitions_.find({from, to});
    return it == transitions_.end() ? 0 : it->second;
  }

  DetectorKind kind_;
  DetectorConfig config_;
  WindowBuffer window_;
  AdwinWindow adwin_;
  std::vector<LocalModel> models_;
  std::map<std::pair<int, int>, int> transitions_;
  DetectorMode mode_ = DetectorMode::learning;
  int current_ = -1;
  int stale_model_ = -1;  // keeps predicting while a post-cut window refills
  int low_streak_ = 0;
  bool pending_drift_ = false;
  bool pending_reuse_first_ = false;
  int drift_count_ = 0;
};

}  // namespace botl::cdd
