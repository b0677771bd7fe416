#pragma once

// Base-model selection strategies producing the subset M' used by the
// meta-learner: performance thresholding, mutual-information thresholding,
// concept-similarity thresholding (admission gate + cached relevancy pass),
// and parameterless conceptual clustering. The current local model is always
// a member of M'. Every relevancy (R^2) and diversity (MI) evaluation is
// charged to the calc counter; conceptual distances are charged on admission
// in the registry and never recomputed.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "botl/clustering.hpp"
#include "botl/registry.hpp"
#include "botl/window.hpp"

namespace botl::selection {

enum class Method { none, p_thresh, mi_thresh, cs_thresh, cs_clust };

struct SelectionOutcome {
  std::vector<ModelId> selected;  // sorted ascending by id
  long long calc_count = 0;       // metric calculations this invocation
  Method method = Method::none;
};

namespace detail {

inline double window_r2(const regress::RidgeModel& model,
                        const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& targets) {
  return regress::evaluate(model.predict_rows(features), targets).r2;
}

// Adds the always-included current model, sorts and dedupes.
inline void finalize(SelectionOutcome& outcome, const BaseModel* current) {
  if (current) outcome.selected.push_back(current->id);
  std::sort(outcome.selected.begin(), outcome.selected.end());
  outcome.selected.erase(
      std::unique(outcome.selected.begin(), outcome.selected.end()),
      outcome.selected.end());
}

}  // namespace detail

// Keep registry models whose window R^2 reaches tau_perf.
inline SelectionOutcome p_thresh(const ModelRegistry& registry,
                                 const WindowBuffer& window, double tau_perf,
                                 const BaseModel* current,
                                 CalcCounter* counter) {
  SelectionOutcome outcome;
  outcome.method = Method::p_thresh;
  const Eigen::MatrixXd features = window.feature_matrix();
  const Eigen::VectorXd targets = window.target_vector();
  for (const BaseModel& m : registry.models()) {
    if (detail::window_r2(m.model, features, targets) >= tau_perf)
      outcome.selected.push_back(m.id);
  }
  outcome.calc_count = registry.size();
  if (counter) counter->add(outcome.calc_count);
  detail::finalize(outcome, current);
  return outcome;
}

// Histogram mutual information between two prediction vectors, normalised by
// sqrt(H(a) H(b)) into [0,1]. Constant predictions carry no information and
// score 0.
inline double normalized_mi(const Eigen::VectorXd& preds_a,
                            const Eigen::VectorXd& preds_b, int bins = 10) {
  const int n = static_cast<int>(preds_a.size());
  if (n < 2 || preds_b.size() != n)
    throw LengthMismatch("normalized_mi needs equal lengths >= 2");

  const auto bin_of = [bins](double v, double lo, double hi) {
    if (hi <= lo) return 0;
    const int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
  };
  const double lo_a = preds_a.minCoeff(), hi_a = preds_a.maxCoeff();
  const double lo_b = preds_b.minCoeff(), hi_b = preds_b.maxCoeff();
  if (hi_a <= lo_a || hi_b <= lo_b) return 0.0;

  std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
  std::vector<std::vector<double>> joint(bins, std::vector<double>(bins, 0.0));
  const double w = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const int ba = bin_of(preds_a(i), lo_a, hi_a);
    const int bb = bin_of(preds_b(i), lo_b, hi_b);
    pa[ba] += w;
    pb[bb] += w;
    joint[ba][bb] += w;
  }

  double h_a = 0.0, h_b = 0.0, mi = 0.0;
  for (int i = 0; i < bins; ++i) {
    if (pa[i] > 0.0) h_a -= pa[i] * std::log(pa[i]);
    if (pb[i] > 0.0) h_b -= pb[i] * std::log(pb[i]);
  }
  for (int i = 0; i < bins; ++i) {
    for (int j = 0; j < bins; ++j) {
      if (joint[i][j] > 0.0)
        mi += joint[i][j] * std::log(joint[i][j] / (pa[i] * pb[j]));
    }
  }
  if (h_a <= 0.0 || h_b <= 0.0) return 0.0;
  return std::clamp(mi / std::sqrt(h_a * h_b), 0.0, 1.0);
}

// Pairwise-MI culling followed by the performance filter. MI depends on the
// current window, so every pair is re-evaluated per invocation.
inline SelectionOutcome mi_thresh(const ModelRegistry& registry,
                                  const WindowBuffer& window, double tau_mi,
                                  double tau_perf, const BaseModel* current,
                                  CalcCounter* counter, int bins = 10) {
  SelectionOutcome outcome;
  outcome.method = Method::mi_thresh;
  const int n = registry.size();
  const Eigen::MatrixXd features = window.feature_matrix();
  const Eigen::VectorXd targets = window.target_vector();

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return registry.models()[a].id < registry.models()[b].id;
  });

  std::vector<Eigen::VectorXd> preds(n);
  std::vector<double> r2(n);
  for (int i = 0; i < n; ++i) {
    preds[i] = registry.models()[i].model.predict_rows(features);
    r2[i] = regress::evaluate(preds[i], targets).r2;
  }

  Eigen::MatrixXd nmi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      nmi(i, j) = nmi(j, i) = normalized_mi(preds[i], preds[j], bins);

  // Redundant pairs collapse to their better performer; R^2 ties keep the
  // lower id. Pairs are visited in ascending id order.
  std::vector<bool> alive(n, true);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int i = order[a], j = order[b];
      if (!alive[i] || !alive[j]) continue;
      if (nmi(i, j) > tau_mi) {
        if (r2[i] > r2[j]) {
          alive[j] = false;
        } else if (r2[j] > r2[i]) {
          alive[i] = false;
        } else {
          alive[j] = false;
        }
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    if (alive[i] && r2[i] >= tau_perf)
      outcome.selected.push_back(registry.models()[i].id);
  }
  outcome.calc_count = static_cast<long long>(n) * (n - 1) / 2 + n;
  if (counter) counter->add(outcome.calc_count);
  detail::finalize(outcome, current);
  return outcome;
}

// Concept-similarity admission (the registry gate of the thresholding
// strategy). Distances are computed once ever per pair and charged there.
inline bool cs_thresh_admit(ModelRegistry& registry, BaseModel candidate,
                            double tau_cs) {
  return registry.try_admit(std::move(candidate), tau_cs);
}

// Relevancy state for concept-similarity thresholding: models below tau_perf
// stay excluded until the next drift clears the set.
struct ExclusionState {
  std::set<ModelId> excluded;
  void clear_on_drift() { excluded.clear(); }
};

inline SelectionOutcome cs_thresh_select(const ModelRegistry& registry,
                                         const WindowBuffer& window,
                                         double tau_perf,
                                         const BaseModel* current,
                                         CalcCounter* counter,
                                         ExclusionState& exclusions) {
  SelectionOutcome outcome;
  outcome.method = Method::cs_thresh;
  const Eigen::MatrixXd features = window.feature_matrix();
  const Eigen::VectorXd targets = window.target_vector();
  long long evaluated = 0;
  for (const BaseModel& m : registry.models()) {
    if (exclusions.excluded.count(m.id)) continue;
    ++evaluated;
    if (detail::window_r2(m.model, features, targets) >= tau_perf) {
      outcome.selected.push_back(m.id);
    } else {
      exclusions.excluded.insert(m.id);
    }
  }
  outcome.calc_count = evaluated;
  if (counter) counter->add(evaluated);
  detail::finalize(outcome, current);
  return outcome;
}

// Conceptual clustering selection: cluster the registry on cached distances,
// then take each cluster's best performer; when that is the current local
// model, its cluster's runner-up joins as well.
inline SelectionOutcome cs_clust_select(const ModelRegistry& registry,
                                        const WindowBuffer& window,
                                        const BaseModel* current,
                                        CalcCounter* counter,
                                        int max_clusters = 0) {
  SelectionOutcome outcome;
  outcome.method = Method::cs_clust;
  const int n = registry.size();
  if (n == 0) {
    detail::finalize(outcome, current);
    return outcome;
  }

  const clustering::ClusterAssignment assignment =
      clustering::stsc_cluster(registry.affinity(), max_clusters);

  const Eigen::MatrixXd features = window.feature_matrix();
  const Eigen::VectorXd targets = window.target_vector();
  std::vector<double> r2(n);
  for (int i = 0; i < n; ++i)
    r2[i] = detail::window_r2(registry.models()[i].model, features, targets);

  const auto better = [&](int a, int b) {
    if (r2[a] != r2[b]) return r2[a] > r2[b];
    return registry.models()[a].id < registry.models()[b].id;
  };

  for (int c = 0; c < assignment.num_clusters; ++c) {
    int best = -1, second = -1;
    for (int i = 0; i < n; ++i) {
      if (assignment.labels[i] != c) continue;
      if (best < 0 || better(i, best)) {
        second = best;
        best = i;
      } else if (second < 0 || better(i, second)) {
        second = i;
      }
    }
    if (best < 0) continue;
    outcome.selected.push_back(registry.models()[best].id);
    if (current && registry.models()[best].id == current->id && second >= 0)
      outcome.selected.push_back(registry.models()[second].id);
  }

  outcome.calc_count = n;
  if (counter) counter->add(n);
  detail::finalize(outcome, current);
  return outcome;
}

}  // namespace botl::selection
