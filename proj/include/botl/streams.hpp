#pragma once

// Concept-drifting data stream sources: the drifting hyperplane generator
// with its four noise variants, a synthetic home-heating stream driven by a
// weather-like seasonal process, and CSV ingestion for recorded data. All
// generators are deterministic functions of their config and seed.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "botl/errors.hpp"
#include "botl/rng.hpp"

namespace botl::streams {

enum class StreamKind { hyperplane, heating, csv };
enum class DriftMode { sudden, gradual };
enum class HyperplaneVariant { A, B, C, D };

struct StreamConfig {
  StreamKind kind = StreamKind::hyperplane;
  HyperplaneVariant variant = HyperplaneVariant::A;
  DriftMode drift_mode = DriftMode::sudden;
  int num_features = 10;
  long length = 10000;
  int drifts = 20;
  int mixing_m = 0;  // instances per gradual drift; required when gradual
  std::uint64_t seed = 0;

  // heating
  long start_step = 0;               // offset into the shared weather timeline
  std::uint64_t weather_seed = 77;   // streams sharing this share the trend

  // csv
  std::string path;
  std::vector<std::string> feature_columns;
  std::string target_column;
  char delimiter = ',';
  bool scale_features = false;
  int window_hint = 90;

  void validate() const {
    if (length <= 0) throw ConfigError("length", "must be positive");
    if (drifts < 0) throw ConfigError("drifts", "must be non-negative");
    if (kind == StreamKind::hyperplane) {
      if (num_features < 4) throw ConfigError("num_features", "must be at least 4");
      if (drift_mode == DriftMode::gradual && mixing_m <= 0)
        throw ConfigError("mixing_m", "must be positive for gradual drift");
    }
    if (kind == StreamKind::csv) {
      if (path.empty()) throw ConfigError("path", "required for csv streams");
      if (target_column.empty())
        throw ConfigError("target_column", "required for csv streams");
    }
  }
};

// Mixing window length that keeps the stable segments at `stable_segment`
// instances when gradual transitions are inserted between them.
inline int derived_mixing(long length, int drifts, int stable_segment = 500) {
  if (drifts <= 0) return 0;
  return static_cast<int>((length - static_cast<long>(drifts) * stable_segment) / drifts);
}

struct Instance {
  Eigen::VectorXd features;
  double target = 0.0;
  long index = 0;
  int true_concept_id = -1;  // generator ground truth; -1 when unknown
};

class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual std::optional<Instance> next() = 0;
  virtual void reset() = 0;
};

// Drifting hyperplane: targets are the mean of a concept-specific triple of
// features; drifts swap the triple. A pool of five distinct triples is cycled
// so that concepts recur.
class HyperplaneStream final : public StreamSource {
 public:
  static constexpr int kPoolSize = 5;

  explicit HyperplaneStream(const StreamConfig& config) : config_(config) {
    config_.validate();
    if (config_.kind != StreamKind::hyperplane)
      throw ConfigError("kind", "expected hyperplane");
    build_pool();
    reset();
  }

  void reset() override {
    rng_ = Rng(derive_seed(config_.seed, 1));
    t_ = 0;
    failed_feature_ = -1;
    compensator_a_ = compensator_b_ = -1;
    intermittent_feature_ = -1;
    deteriorated_.assign(config_.num_features, false);
    any_deteriorated_ = false;
  }

  // Stable instances per concept. For gradual streams the mixing windows sit
  // between stable segments, so the stable run is shorter for equal length.
  long segment_length() const {
    if (config_.drifts == 0) return config_.length;
    if (config_.drift_mode == DriftMode::sudden)
      return config_.length / config_.drifts;
    return (config_.length - static_cast<long>(config_.drifts) * config_.mixing_m) /
           config_.drifts;
  }

  // Concept schedule entries, counting the one the final drift leads into.
  int schedule_size() const { return config_.drifts + 1; }

  const std::array<std::array<int, 3>, kPoolSize>& concept_pool() const {
    return pool_;
  }

  int pool_index(long segment) const {
    return static_cast<int>(segment % kPoolSize);
  }

  std::optional<Instance> next() override {
    if (t_ >= config_.length) return std::nullopt;
    const int n = config_.num_features;

    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw(i) = rng_.uniform();

    const long segment = segment_at(t_);
    const int concept_id = pool_index(segment);

    Instance instance;
    instance.index = t_;
    instance.true_concept_id = concept_id;
    const auto& triple = pool_[concept_id];
    instance.target = (raw(triple[0]) + raw(triple[1]) + raw(triple[2])) / 3.0;

    instance.features = raw;
    apply_variant(instance, raw, triple);
    ++t_;
    return instance;
  }

 private:
  long segment_at(long t) {
    if (config_.drifts == 0) return 0;
    if (config_.drift_mode == DriftMode::sudden) {
      return std::min<long>(t / segment_length(), config_.drifts);
    }
    const long block = segment_length() + config_.mixing_m;
    const long q = std::min<long>(t / block, config_.drifts - 1);
    const long offset = t - q * block;
    if (offset < segment_length()) return q;
    // Mixing window: the chance of drawing the incoming concept grows with
    // the number of instances seen since the drift began.
    const long j = offset - segment_length();
    const double p_new = static_cast<double>(j + 1) / (config_.mixing_m + 1);
    return rng_.uniform() < p_new ? q + 1 : q;
  }

  void build_pool() {
    Rng pool_rng(derive_seed(config_.seed, 0));
    std::set<std::array<int, 3>> seen;
    int filled = 0;
    while (filled < kPoolSize) {
      std::array<int, 3> triple;
      triple[0] = pool_rng.uniform_int(config_.num_features);
      do {
        triple[1] = pool_rng.uniform_int(config_.num_features);
      } while (triple[1] == triple[0]);
      do {
        triple[2] = pool_rng.uniform_int(config_.num_features);
      } while (triple[2] == triple[0] || triple[2] == triple[1]);
      std::sort(triple.begin(), triple.end());
      if (seen.insert(triple).second) pool_[filled++] = triple;
    }
  }

  void apply_variant(Instance& instance, const Eigen::VectorXd& raw,
                     const std::array<int, 3>& triple) {
    const int n = config_.num_features;
    switch (config_.variant) {
      case HyperplaneVariant::A:
        if (rng_.uniform() < 0.2) {
          instance.target += rng_.uniform() < 0.5 ? -0.05 : 0.05;
          instance.target = std::clamp(instance.target, 0.0, 1.0);
        }
        break;
      case HyperplaneVariant::B: {
        if (failed_feature_ < 0 && rng_.uniform() < 0.001) {
          failed_feature_ = rng_.uniform_int(n);
          do {
            compensator_a_ = rng_.uniform_int(n);
          } while (compensator_a_ == failed_feature_);
          do {
            compensator_b_ = rng_.uniform_int(n);
          } while (compensator_b_ == failed_feature_ ||
                   compensator_b_ == compensator_a_);
        }
        if (failed_feature_ >= 0) {
          const bool in_concept =
              failed_feature_ == triple[0] || failed_feature_ == triple[1] ||
              failed_feature_ == triple[2];
          if (in_concept) {
            instance.features(compensator_a_) = raw(failed_feature_) / 4.0;
            instance.features(compensator_b_) = 3.0 * raw(failed_feature_) / 4.0;
          }
          instance.features(failed_feature_) = 0.0;
        }
        break;
      }
      case HyperplaneVariant::C:
        if (intermittent_feature_ < 0 && rng_.uniform() < 0.001)
          intermittent_feature_ = rng_.uniform_int(n);
        if (intermittent_feature_ >= 0 && rng_.uniform() < 0.3)
          instance.features(intermittent_feature_) = 0.0;
        break;
      case HyperplaneVariant::D: {
        const double progress = static_cast<double>(t_) / config_.length;
        if (rng_.uniform() < 0.001 * progress) {
          const int pick = rng_.uniform_int(n);
          if (!deteriorated_[pick]) {
            deteriorated_[pick] = true;
            any_deteriorated_ = true;
          }
        }
        if (any_deteriorated_) {
          for (int i = 0; i < n; ++i) {
            if (!deteriorated_[i]) continue;
            const double sign = rng_.uniform() < 0.5 ? -1.0 : 1.0;
            instance.features(i) += sign * 0.2 * progress;
          }
        }
        break;
      }
    }
  }

  StreamConfig config_;
  std::array<std::array<int, 3>, kPoolSize> pool_{};
  Rng rng_{0};
  long t_ = 0;
  int failed_feature_ = -1;
  int compensator_a_ = -1;
  int compensator_b_ = -1;
  int intermittent_feature_ = -1;
  std::vector<bool> deteriorated_;
  bool any_deteriorated_ = false;
};

// Synthetic smart-home heating stream. External temperature follows a shared
// daily+seasonal trend (phase set by weather_seed) plus per-stream AR(1)
// noise; the target is a piecewise comfort schedule over hour-of-day,
// day-of-week and external temperature, switching schedule at drift points.
class HeatingStream final : public StreamSource {
 public:
  static constexpr int kStepsPerDay = 48;  // 30-minute sampling
  static constexpr double kSetback = 15.0;
  static constexpr int kSchedulePool = 3;

  explicit HeatingStream(const StreamConfig& config) : config_(config) {
    config_.validate();
    if (config_.kind != StreamKind::heating)
      throw ConfigError("kind", "expected heating");
    Rng phase_rng(derive_seed(config_.weather_seed, 3));
    seasonal_phase_ = phase_rng.uniform(0.0, 2.0 * M_PI);
    daily_phase_ = phase_rng.uniform(0.0, 2.0 * M_PI);
    reset();
  }

  void reset() override {
    rng_ = Rng(derive_seed(config_.seed, 2));
    t_ = 0;
    noise_state_ = 0.0;
    rain_remaining_ = 0;
    rain_intensity_ = 0.0;
  }

  static double setback_temperature() { return kSetback; }

  int schedule_at(long t) const {
    if (config_.drifts == 0) return 0;
    const long span = config_.length / (config_.drifts + 1);
    const long idx = std::min<long>(t / std::max<long>(span, 1), config_.drifts);
    return static_cast<int>(idx % kSchedulePool);
  }

  std::optional<Instance> next() override {
    if (t_ >= config_.length) return std::nullopt;
    const long abs_step = config_.start_step + t_;
    const long day = abs_step / kStepsPerDay;
    const double hour = (abs_step % kStepsPerDay) * 24.0 / kStepsPerDay;
    const int dow = static_cast<int>(day % 7);
    const double day_of_year = static_cast<double>(day % 365);

    // Shared trend, per-stream AR(1) noise.
    const double seasonal =
        8.0 * std::sin(2.0 * M_PI * day_of_year / 365.0 + seasonal_phase_);
    const double daily =
        4.0 * std::sin(2.0 * M_PI * (abs_step % kStepsPerDay) / kStepsPerDay +
                       daily_phase_);
    noise_state_ = 0.95 * noise_state_ + 0.5 * rng_.normal();
    const double external = 10.0 + seasonal + daily + noise_state_;

    if (rain_remaining_ > 0) {
      --rain_remaining_;
    } else if (rng_.uniform() < 0.02) {
      rain_remaining_ = 2 + rng_.uniform_int(12);
      rain_intensity_ = rng_.uniform(0.5, 6.0);
    }
    const double rainfall = rain_remaining_ > 0 ? rain_intensity_ : 0.0;

    const double sunrise = 7.0 + 2.0 * std::cos(2.0 * M_PI * day_of_year / 365.0);
    const double sunset = 17.0 - 2.0 * std::cos(2.0 * M_PI * day_of_year / 365.0);
    const double daylight = (hour >= sunrise && hour <= sunset) ? 1.0 : 0.0;

    const int schedule = schedule_at(t_);
    Instance instance;
    instance.index = t_;
    instance.true_concept_id = schedule;
    instance.features.resize(5);
    instance.features << external, rainfall, daylight, hour / 24.0, dow / 6.0;
    instance.target = desired_temperature(schedule, hour, dow, external);
    ++t_;
    return instance;
  }

 private:
  static bool weekday(int dow) { return dow < 5; }

  static bool schedule_on(int schedule, double hour, int dow) {
    switch (schedule) {
      case 0:
        return weekday(dow) ? (hour >= 6.5 && hour < 8.5) || (hour >= 17.0 && hour < 22.5)
                            : (hour >= 8.0 && hour < 23.0);
      case 1:
        return weekday(dow) ? (hour >= 7.0 && hour < 22.0)
                            : (hour >= 8.0 && hour < 22.0);
      default:
        return weekday(dow) ? (hour >= 6.0 && hour < 8.0) || (hour >= 18.0 && hour < 21.5)
                            : (hour >= 9.0 && hour < 21.0);
    }
  }

  static double desired_temperature(int schedule, double hour, int dow,
                                    double external) {
    if (!schedule_on(schedule, hour, dow)) return kSetback;
    static constexpr double kComfort[kSchedulePool] = {20.0, 21.0, 19.0};
    const double compensation =
        std::clamp(0.15 * (16.0 - external), 0.0, 2.0);
    return kComfort[schedule] + compensation;
  }

  StreamConfig config_;
  double seasonal_phase_ = 0.0;
  double daily_phase_ = 0.0;
  Rng rng_{0};
  long t_ = 0;
  double noise_state_ = 0.0;
  int rain_remaining_ = 0;
  double rain_intensity_ = 0.0;
};

// Streams rows of a delimited text file with a header. Cells must parse as
// doubles; failures carry the 1-based file line number.
class CsvStream final : public StreamSource {
 public:
  explicit CsvStream(const StreamConfig& config) : config_(config) {
    config_.validate();
    if (config_.kind != StreamKind::csv) throw ConfigError("kind", "expected csv");
    reset();
  }

  void reset() override {
    file_ = std::ifstream(config_.path);
    if (!file_.is_open()) throw ConfigError("path", "cannot open " + config_.path);
    std::string header;
    if (!std::getline(file_, header)) throw EmptyFile(config_.path + " is empty");
    line_number_ = 1;
    t_ = 0;
    running_min_.clear();
    running_max_.clear();

    const std::vector<std::string> names = split(header);
    feature_index_.clear();
    if (config_.feature_columns.empty()) {
      // All columns except the target, in file order.
      for (int i = 0; i < static_cast<int>(names.size()); ++i) {
        if (names[i] != config_.target_column) feature_index_.push_back(i);
      }
    } else {
      for (const auto& wanted : config_.feature_columns)
        feature_index_.push_back(find_column(names, wanted));
    }
    target_index_ = find_column(names, config_.target_column);
    if (feature_index_.empty()) throw MissingColumn("(no feature columns)");
  }

  std::optional<Instance> next() override {
    std::string line;
    while (std::getline(file_, line)) {
      ++line_number_;
      if (line.empty()) continue;
      const std::vector<std::string> cells = split(line);
      Instance instance;
      instance.index = t_;
      instance.features.resize(feature_index_.size());
      for (std::size_t i = 0; i < feature_index_.size(); ++i)
        instance.features(i) = parse_cell(cells, feature_index_[i]);
      instance.target = parse_cell(cells, target_index_);
      if (config_.scale_features) apply_running_scale(instance.features);
      ++t_;
      return instance;
    }
    return std::nullopt;
  }

 private:
  std::vector<std::string> split(const std::string& line) const {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, config_.delimiter)) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  }

  static int find_column(const std::vector<std::string>& names,
                         const std::string& wanted) {
    for (int i = 0; i < static_cast<int>(names.size()); ++i)
      if (names[i] == wanted) return i;
    throw MissingColumn(wanted);
  }

  double parse_cell(const std::vector<std::string>& cells, int index) const {
    if (index >= static_cast<int>(cells.size()))
      throw MalformedRow(line_number_, "too few cells");
    const std::string& cell = cells[index];
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
      throw MalformedRow(line_number_, "non-numeric cell '" + cell + "'");
    return value;
  }

  void apply_running_scale(Eigen::VectorXd& features) {
    if (running_min_.empty()) {
      running_min_.assign(features.size(), 0.0);
      running_max_.assign(features.size(), 0.0);
      for (int i = 0; i < features.size(); ++i)
        running_min_[i] = running_max_[i] = features(i);
    }
    for (int i = 0; i < features.size(); ++i) {
      running_min_[i] = std::min(running_min_[i], features(i));
      running_max_[i] = std::max(running_max_[i], features(i));
      const double span = running_max_[i] - running_min_[i];
      features(i) = span > 0.0 ? (features(i) - running_min_[i]) / span : 0.0;
    }
  }

  StreamConfig config_;
  std::ifstream file_;
  std::vector<int> feature_index_;
  int target_index_ = -1;
  long line_number_ = 0;
  long t_ = 0;
  std::vector<double> running_min_;
  std::vector<double> running_max_;
};

inline std::unique_ptr<StreamSource> make_stream(const StreamConfig& config) {
  switch (config.kind) {
    case StreamKind::hyperplane:
      return std::make_unique<HyperplaneStream>(config);
    case StreamKind::heating:
      return std::make_unique<HeatingStream>(config);
    case StreamKind::csv:
      return std::make_unique<CsvStream>(config);
  }
  throw ConfigError("kind", "unknown stream kind");
}

// Default detector/meta window size per stream kind.
inline int default_window_size(StreamKind kind, int csv_hint = 90) {
  switch (kind) {
    case StreamKind::hyperplane:
      return 30;
    case StreamKind::heating:
      return 480;
    case StreamKind::csv:
      return csv_hint;
  }
  return 30;
}

}  // namespace botl::streams
