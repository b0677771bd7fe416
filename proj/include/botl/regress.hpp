#pragma once

// Base regressors and the meta-learner that combines them. Ridge regression
// with an unpenalised intercept is the base learner; the meta-learner is an
// ordinary least squares fit over base model predictions, solved minimum-norm
// so collinear (often duplicated) members stay finite.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "botl/errors.hpp"
#include "botl/types.hpp"
#include "botl/window.hpp"

namespace botl::regress {

struct RidgeModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double lambda = 0.0;
  int train_window_size = 0;

  double predict(const Eigen::VectorXd& x) const {
    return weights.dot(x) + intercept;
  }

  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& xs) const {
    return (xs * weights).array() + intercept;
  }
};

// Closed-form ridge solve on centred data: (Xc'Xc + lambda I) w = Xc'y,
// intercept recovered from the column means so it is never penalised.
inline RidgeModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double lambda = 1e-3) {
  const int n = static_cast<int>(x.rows());
  const int m = static_cast<int>(x.cols());
  if (n == 0) throw EmptyWindow("ridge fit on empty window");
  if (y.size() != n) throw LengthMismatch("feature/target row count mismatch");
  if (lambda < 0.0) throw DimensionMismatch("lambda must be non-negative");
  if (n < 2 && lambda == 0.0)
    throw DegenerateWindow("unregularised fit needs at least 2 rows");

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  RidgeModel model;
  model.lambda = lambda;
  model.train_window_size = n;
  if (lambda > 0.0) {
    const Eigen::MatrixXd gram =
        xc.transpose() * xc + lambda * Eigen::MatrixXd::Identity(m, m);
    model.weights = gram.ldlt().solve(xc.transpose() * yc);
  } else {
    // Minimum-norm least squares; keeps rank-deficient windows finite.
    model.weights = xc.completeOrthogonalDecomposition().solve(yc);
  }
  model.intercept = y_mean - model.weights.dot(x_mean.transpose());
  return model;
}

inline RidgeModel ridge_fit(const WindowBuffer& window, double lambda = 1e-3) {
  return ridge_fit(window.feature_matrix(), window.target_vector(), lambda);
}

struct MetaLearner {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  std::vector<ModelId> member_ids;

  double predict(const Eigen::VectorXd& member_predictions) const {
    return weights.dot(member_predictions) + intercept;
  }
};

// Least-squares combination of base model predictions over the window.
// Rank-deficient prediction matrices (duplicated or collinear members) are
// solved minimum-norm via the complete orthogonal decomposition.
inline MetaLearner ols_meta_fit(const Eigen::MatrixXd& member_predictions,
                                const Eigen::VectorXd& targets,
                                std::vector<ModelId> member_ids = {}) {
  const int n = static_cast<int>(member_predictions.rows());
  const int k = static_cast<int>(member_predictions.cols());
  if (n == 0) throw EmptyWindow("meta fit on empty window");
  if (targets.size() != n) throw LengthMismatch("prediction/target row count mismatch");
  if (k == 0) throw DimensionMismatch("meta fit needs at least one member");

  const Eigen::RowVectorXd col_mean = member_predictions.colwise().mean();
  const double y_mean = targets.mean();
  const Eigen::MatrixXd centred = member_predictions.rowwise() - col_mean;
  const Eigen::VectorXd yc = targets.array() - y_mean;

  MetaLearner meta;
  meta.weights = centred.completeOrthogonalDecomposition().solve(yc);
  meta.intercept = y_mean - meta.weights.dot(col_mean.transpose());
  meta.member_ids = std::move(member_ids);
  return meta;
}

struct Metrics {
  double r2 = 0.0;
  double pmcc2 = 0.0;
  double rmse = 0.0;
};

// Windowed R^2, squared Pearson correlation, and RMSE. R^2 is unbounded
// below; PMCC^2 stays in [0,1]. Zero-variance targets yield R^2 = 1 when the
// fit is exact and -inf otherwise, with PMCC^2 pinned to 0.
inline Metrics evaluate(const Eigen::VectorXd& preds,
                        const Eigen::VectorXd& targets) {
  const int n = static_cast<int>(preds.size());
  if (n == 0 || targets.size() != n)
    throw LengthMismatch("evaluate needs equal, non-zero lengths");

  Metrics metrics;
  const Eigen::VectorXd residual = targets - preds;
  metrics.rmse = std::sqrt(residual.squaredNorm() / n);

  const double target_mean = targets.mean();
  const double ss_tot = (targets.array() - target_mean).matrix().squaredNorm();
  const double ss_res = residual.squaredNorm();
  if (ss_tot > 0.0) {
    metrics.r2 = 1.0 - ss_res / ss_tot;
  } else {
    metrics.r2 = ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }

  const double pred_mean = preds.mean();
  const double pred_var = (preds.array() - pred_mean).matrix().squaredNorm();
  if (pred_var > 0.0 && ss_tot > 0.0) {
    const double cov = ((preds.array() - pred_mean) * (targets.array() - target_mean)).sum();
    const double r = cov / std::sqrt(pred_var * ss_tot);
    metrics.pmcc2 = std::clamp(r * r, 0.0, 1.0);
  } else {
    metrics.pmcc2 = 0.0;
  }
  return metrics;
}

// One row of the per-stream metrics series.
struct MetricsRecord {
  double r2 = 0.0;
  double pmcc2 = 0.0;
  double rmse = 0.0;
  int active_models = 0;        // |M'| in effect for this prediction
  long long metric_calcs = 0;   // cumulative selection metric computations
  long window_index = 0;
};

}  // namespace botl::regress
