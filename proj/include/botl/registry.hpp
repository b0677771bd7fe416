#pragma once

// The per-stream registry of stable base models (locally learnt and
// transferred) together with the pairwise conceptual-distance cache. Each
// unordered pair's distance is computed exactly once, when the newer model
// arrives, and every computation is charged to the metric-calculation
// counter.

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "botl/regress.hpp"
#include "botl/subspace.hpp"
#include "botl/types.hpp"

namespace botl::selection {

struct CalcCounter {
  long long total = 0;
  void add(long long n) { total += n; }
};

// A trained regressor plus the reduced principal components of its training
// window and its provenance.
struct BaseModel {
  ModelId id;
  regress::RidgeModel model;
  subspace::ReducedPcs pcs;
  int origin_stream = -1;
  int origin_concept = -1;
  bool stable = true;
};

class ModelRegistry {
 public:
  ModelRegistry(bool maintain_distances, int scaling_k, CalcCounter* counter)
      : maintain_distances_(maintain_distances),
        scaling_k_(scaling_k),
        counter_(counter) {}

  int size() const { return static_cast<int>(models_.size()); }
  const std::vector<BaseModel>& models() const { return models_; }
  int scaling_k() const { return scaling_k_; }
  const Eigen::MatrixXd& distances() const { return distances_; }

  bool contains(const ModelId& id) const { return find(id) != nullptr; }

  const BaseModel* find(const ModelId& id) const {
    for (const BaseModel& m : models_)
      if (m.id == id) return &m;
    return nullptr;
  }

  // Unconditional insert. Extends the distance cache when maintained.
  void add(BaseModel model) {
    if (maintain_distances_) extend_distances(model);
    models_.push_back(std::move(model));
  }

  // Concept-similarity admission: compute the candidate's distances to every
  // member, build its locally scaled affinity row, and admit only when every
  // affinity is below tau_cs. A rejected candidate's rows are removed from
  // the cache again. Distance computations are charged either way.
  bool try_admit(BaseModel model, double tau_cs) {
    if (models_.empty()) {
      add(std::move(model));
      return true;
    }
    const Eigen::MatrixXd saved = distances_;
    extend_distances(model);
    const int n = static_cast<int>(distances_.rows());
    const subspace::AffinityMatrix affinity =
        subspace::build_affinity(distances_, scaling_k_);
    bool admitted = true;
    for (int j = 0; j < n - 1; ++j) {
      if (affinity.entries(n - 1, j) >= tau_cs) {
        admitted = false;
        break;
      }
    }
    if (admitted) {
      models_.push_back(std::move(model));
    } else {
      distances_ = saved;
    }
    return admitted;
  }

  subspace::AffinityMatrix affinity() const {
    return subspace::build_affinity(distances_, scaling_k_);
  }

  subspace::DistanceMatrix<ModelId> distance_matrix() const {
    subspace::DistanceMatrix<ModelId> dm;
    dm.entries = distances_;
    dm.model_ids.reserve(models_.size());
    for (const BaseModel& m : models_) dm.model_ids.push_back(m.id);
    return dm;
  }

  // Distance from the cache, if both models are members.
  std::optional<double> cached_distance(const ModelId& a, const ModelId& b) const {
    const int ia = index_of(a), ib = index_of(b);
    if (ia < 0 || ib < 0) return std::nullopt;
    if (ia == ib) return 0.0;
    return distances_(ia, ib);
  }

 private:
  int index_of(const ModelId& id) const {
    for (int i = 0; i < size(); ++i)
      if (models_[i].id == id) return i;
    return -1;
  }

  void extend_distances(const BaseModel& model) {
    const int n = size();
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + 1, n + 1);
    grown.topLeftCorner(n, n) = distances_;
    for (int j = 0; j < n; ++j) {
      const double d = subspace::conceptual_distance(model.pcs, models_[j].pcs);
      grown(n, j) = d;
      grown(j, n) = d;
    }
    if (counter_) counter_->add(n);
    distances_ = std::move(grown);
  }

  bool maintain_distances_;
  int scaling_k_;
  CalcCounter* counter_;
  std::vector<BaseModel> models_;
  Eigen::MatrixXd distances_;
};

}  // namespace botl::selection
