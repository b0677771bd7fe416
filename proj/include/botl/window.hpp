#pragma once

#include <Eigen/Dense>
#include <deque>
#include <utility>

namespace botl {

// Sliding window of (feature vector, target) pairs with fixed capacity.
// Oldest rows fall off the front as new ones arrive.
class WindowBuffer {
 public:
  explicit WindowBuffer(int capacity) : capacity_(capacity) {}

  void push(const Eigen::VectorXd& x, double y) {
    rows_.emplace_back(x, y);
    while (static_cast<int>(rows_.size()) > capacity_) rows_.pop_front();
  }

  int size() const { return static_cast<int>(rows_.size()); }
  int capacity() const { return capacity_; }
  bool full() const { return size() >= capacity_; }
  bool empty() const { return rows_.empty(); }
  void clear() { rows_.clear(); }

  // Drop all but the k most recent rows.
  void keep_last(int k) {
    if (k < 0) k = 0;
    while (static_cast<int>(rows_.size()) > k) rows_.pop_front();
  }

  const std::pair<Eigen::VectorXd, double>& row(int i) const { return rows_[i]; }

  Eigen::MatrixXd feature_matrix() const {
    if (rows_.empty()) return {};
    Eigen::MatrixXd x(rows_.size(), rows_.front().first.size());
    for (int i = 0; i < size(); ++i) x.row(i) = rows_[i].first.transpose();
    return x;
  }

  Eigen::VectorXd target_vector() const {
    Eigen::VectorXd y(rows_.size());
    for (int i = 0; i < size(); ++i) y(i) = rows_[i].second;
    return y;
  }

  // Feature columns with the target appended as the last column.
  Eigen::MatrixXd joint_matrix() const {
    if (rows_.empty()) return {};
    const int m = static_cast<int>(rows_.front().first.size());
    Eigen::MatrixXd j(rows_.size(), m + 1);
    for (int i = 0; i < size(); ++i) {
      j.row(i).head(m) = rows_[i].first.transpose();
      j(i, m) = rows_[i].second;
    }
    return j;
  }

 private:
  int capacity_;
  std::deque<std::pair<Eigen::VectorXd, double>> rows_;
};

}  // namespace botl
