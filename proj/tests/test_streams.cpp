#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "botl/streams.hpp"

using namespace botl;
using namespace botl::streams;

namespace {

StreamConfig sudden_config(std::uint64_t seed = 1, long length = 10000,
                           int drifts = 20,
                           HyperplaneVariant variant = HyperplaneVariant::A) {
  StreamConfig c;
  c.kind = StreamKind::hyperplane;
  c.variant = variant;
  c.drift_mode = DriftMode::sudden;
  c.length = length;
  c.drifts = drifts;
  c.seed = seed;
  return c;
}

std::vector<Instance> drain(StreamSource& s, long max_count = -1) {
  std::vector<Instance> all;
  while (auto inst = s.next()) {
    all.push_back(*inst);
    if (max_count > 0 && static_cast<long>(all.size()) >= max_count) break;
  }
  return all;
}

std::filesystem::path write_temp_csv(const std::string& name,
                                     const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("sudden schedule arithmetic") {
  HyperplaneStream s(sudden_config());
  REQUIRE(s.segment_length() == 500);
  REQUIRE(s.schedule_size() == 21);
}

TEST_CASE("gradual mixing window derivation") {
  REQUIRE(derived_mixing(11900, 20) == 95);
}

TEST_CASE("concept pool has five distinct triples that cycle") {
  HyperplaneStream s(sudden_config(9));
  const auto& pool = s.concept_pool();
  std::set<std::array<int, 3>> unique(pool.begin(), pool.end());
  REQUIRE(unique.size() == HyperplaneStream::kPoolSize);
  REQUIRE(s.pool_index(0) == s.pool_index(5));
  REQUIRE(s.pool_index(1) != s.pool_index(0));
}

TEST_CASE("targets are the concept triple mean before overlay noise") {
  // Variant C zeroes observed features but computes the target from the
  // underlying draw, so rows whose triple features were untouched must agree
  // exactly.
  StreamConfig cfg = sudden_config(3, 2000, 4, HyperplaneVariant::C);
  HyperplaneStream s(cfg);
  const auto& pool = s.concept_pool();
  long checked = 0;
  for (const Instance& inst : drain(s)) {
    const auto& triple = pool[inst.true_concept_id];
    const double x0 = inst.features(triple[0]);
    const double x1 = inst.features(triple[1]);
    const double x2 = inst.features(triple[2]);
    if (x0 == 0.0 || x1 == 0.0 || x2 == 0.0) continue;  // zeroed by the overlay
    REQUIRE(inst.target == Catch::Approx((x0 + x1 + x2) / 3.0).margin(1e-12));
    REQUIRE(inst.target >= 0.0);
    REQUIRE(inst.target <= 1.0);
    ++checked;
  }
  REQUIRE(checked > 1500);
}

TEST_CASE("variant A perturbs targets by at most the clamped 0.05") {
  HyperplaneStream s(sudden_config(5, 1000, 2, HyperplaneVariant::A));
  const auto& pool = s.concept_pool();
  long noisy = 0;
  for (const Instance& inst : drain(s)) {
    const auto& triple = pool[inst.true_concept_id];
    const double mean = (inst.features(triple[0]) + inst.features(triple[1]) +
                         inst.features(triple[2])) / 3.0;
    const double delta = inst.target - mean;
    const bool plain = std::abs(delta) < 1e-12;
    const bool shifted = std::abs(std::abs(delta) - 0.05) < 1e-12;
    const bool clamped = inst.target == 0.0 || inst.target == 1.0;
    REQUIRE((plain || shifted || clamped));
    REQUIRE(inst.target >= 0.0);
    REQUIRE(inst.target <= 1.0);
    if (!plain) ++noisy;
  }
  // Noise probability 0.2 over 1000 draws.
  REQUIRE(noisy > 120);
  REQUIRE(noisy < 280);
}

TEST_CASE("variant B fails a single feature permanently") {
  StreamConfig cfg = sudden_config(11, 8000, 4, HyperplaneVariant::B);
  HyperplaneStream s(cfg);
  int failed = -1;
  long first_zero = -1;
  long zero_after = 0, total_after = 0;
  for (const Instance& inst : drain(s)) {
    for (int i = 0; i < cfg.num_features; ++i) {
      if (inst.features(i) == 0.0 && first_zero < 0) {
        failed = i;
        first_zero = inst.index;
      }
    }
    if (first_zero >= 0 && inst.index >= first_zero) {
      ++total_after;
      if (inst.features(failed) == 0.0) ++zero_after;
    }
  }
  if (first_zero >= 0) {
    // Permanent: every instance after the failure has the feature at 0.
    REQUIRE(zero_after == total_after);
  }
}

TEST_CASE("generators replay identically for a fixed seed") {
  const StreamConfig cfg = sudden_config(21, 500, 2, HyperplaneVariant::D);
  HyperplaneStream a(cfg);
  HyperplaneStream b(cfg);
  const auto sa = drain(a);
  const auto sb = drain(b);
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    REQUIRE(sa[i].target == sb[i].target);
    REQUIRE((sa[i].features - sb[i].features).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(sa[i].true_concept_id == sb[i].true_concept_id);
  }
  // reset() restarts the exact same sequence.
  a.reset();
  const auto sc = drain(a);
  REQUIRE(sc.size() == sa.size());
  for (std::size_t i = 0; i < sa.size(); ++i)
    REQUIRE(sc[i].target == sa[i].target);
}

TEST_CASE("gradual mixing fraction rises monotonically in aggregate") {
  const int mixing = 50;
  const int stable = 100;
  std::vector<double> decile_sum(10, 0.0);
  const int seeds = 1000;
  for (int seed = 1; seed <= seeds; ++seed) {
    StreamConfig cfg;
    cfg.kind = StreamKind::hyperplane;
    cfg.drift_mode = DriftMode::gradual;
    cfg.variant = HyperplaneVariant::A;
    cfg.drifts = 2;
    cfg.mixing_m = mixing;
    cfg.length = 2L * (stable + mixing);
    cfg.seed = seed;
    HyperplaneStream s(cfg);
    const auto all = drain(s);
    const int next_concept = s.pool_index(1);
    for (int j = 0; j < mixing; ++j) {
      const Instance& inst = all[stable + j];
      const int decile = j * 10 / mixing;
      decile_sum[decile] += inst.true_concept_id == next_concept ? 1.0 : 0.0;
    }
  }
  const double per_decile = seeds * (mixing / 10.0);
  for (int d = 0; d + 1 < 10; ++d) {
    const double frac_d = decile_sum[d] / per_decile;
    const double frac_next = decile_sum[d + 1] / per_decile;
    REQUIRE(frac_next >= frac_d - 0.05);
  }
  REQUIRE(decile_sum[0] / per_decile < 0.25);
  REQUIRE(decile_sum[9] / per_decile > 0.75);
}

TEST_CASE("heating schedule-off hours give the setback constant") {
  StreamConfig cfg;
  cfg.kind = StreamKind::heating;
  cfg.length = 48 * 14;
  cfg.drifts = 0;
  cfg.seed = 7;
  HeatingStream s(cfg);
  long off_hours = 0;
  for (const Instance& inst : drain(s)) {
    const double hour = inst.features(3) * 24.0;
    if (hour < 5.0) {  // every schedule is off in the small hours
      REQUIRE(inst.target == HeatingStream::setback_temperature());
      ++off_hours;
    } else if (inst.target != HeatingStream::setback_temperature()) {
      REQUIRE(inst.target > HeatingStream::setback_temperature());
    }
  }
  REQUIRE(off_hours > 100);
}

TEST_CASE("overlapping heating streams share the temperature trend") {
  StreamConfig a;
  a.kind = StreamKind::heating;
  a.length = 48 * 120;
  a.drifts = 0;
  a.seed = 100;
  a.weather_seed = 500;
  StreamConfig b = a;
  b.seed = 200;               // different noise
  b.start_step = 48 * 30;     // overlaps the last 90 days of stream a

  HeatingStream sa(a), sb(b);
  const auto ia = drain(sa);
  const auto ib = drain(sb);
  const long overlap = a.length - b.start_step;
  Eigen::VectorXd ta(overlap), tb(overlap);
  for (long i = 0; i < overlap; ++i) {
    ta(i) = ia[b.start_step + i].features(0);
    tb(i) = ib[i].features(0);
  }
  const double ca = ((ta.array() - ta.mean()) * (tb.array() - tb.mean())).sum();
  const double corr =
      ca / std::sqrt((ta.array() - ta.mean()).square().sum() *
                     (tb.array() - tb.mean()).square().sum());
  REQUIRE(corr > 0.5);
}

TEST_CASE("heating stream replays byte-identically") {
  StreamConfig cfg;
  cfg.kind = StreamKind::heating;
  cfg.length = 500;
  cfg.drifts = 3;
  cfg.seed = 31;
  HeatingStream a(cfg), b(cfg);
  const auto sa = drain(a);
  const auto sb = drain(b);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    REQUIRE(sa[i].target == sb[i].target);
    REQUIRE((sa[i].features - sb[i].features).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("csv ingestion") {
  SECTION("well-formed file streams rows in order") {
    const auto path = write_temp_csv("botl_ok.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
    StreamConfig cfg;
    cfg.kind = StreamKind::csv;
    cfg.path = path.string();
    cfg.feature_columns = {"a", "b"};
    cfg.target_column = "y";
    CsvStream s(cfg);
    const auto all = drain(s);
    REQUIRE(all.size() == 3);
    REQUIRE(all[0].features(0) == 1.0);
    REQUIRE(all[0].target == 3.0);
    REQUIRE(all[2].target == 9.0);
  }
  SECTION("missing target column") {
    const auto path = write_temp_csv("botl_missing.csv", "a,b\n1,2\n");
    StreamConfig cfg;
    cfg.kind = StreamKind::csv;
    cfg.path = path.string();
    cfg.target_column = "y";
    REQUIRE_THROWS_AS(CsvStream(cfg), MissingColumn);
  }
  SECTION("malformed row reports its line number") {
    const auto path =
        write_temp_csv("botl_bad.csv", "a,y\n1,2\n3,4\nfive,6\n");
    StreamConfig cfg;
    cfg.kind = StreamKind::csv;
    cfg.path = path.string();
    cfg.target_column = "y";
    CsvStream s(cfg);
    REQUIRE(s.next().has_value());
    REQUIRE(s.next().has_value());
    try {
      s.next();
      FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
      REQUIRE(e.row == 4);
    }
  }
  SECTION("empty file") {
    const auto path = write_temp_csv("botl_empty.csv", "");
    StreamConfig cfg;
    cfg.kind = StreamKind::csv;
    cfg.path = path.string();
    cfg.target_column = "y";
    REQUIRE_THROWS_AS(CsvStream(cfg), EmptyFile);
  }
}

TEST_CASE("config invariants") {
  StreamConfig cfg = sudden_config();
  cfg.num_features = 3;
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);

  StreamConfig gradual = sudden_config();
  gradual.drift_mode = DriftMode::gradual;
  gradual.mixing_m = 0;
  REQUIRE_THROWS_AS(gradual.validate(), ConfigError);
}
