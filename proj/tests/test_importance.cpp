#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "actseq/importance.hpp"

using namespace actseq;

TEST_CASE("an always-correct trace stabilizes at frame zero") {
  const auto s = time_to_stable_correct({2, 2, 2, 2}, 2, 10.0);
  REQUIRE(!s.never());
  CHECK(*s.frames == 0);
  CHECK(s.milliseconds == doctest::Approx(0.0));
}

TEST_CASE("a trace that ends wrong never stabilizes") {
  const auto s = time_to_stable_correct({1, 1, 1, 0}, 1, 10.0);
  CHECK(s.never());
  CHECK_THROWS_AS(time_to_stable_correct({}, 1, 10.0), std::invalid_argument);
}

TEST_CASE("late flips reset the stabilization point") {
  // correct, wrong, then correct for good: stabilizes at the last switch
  const auto s = time_to_stable_correct({3, 3, 0, 3, 3, 3}, 3, 10.0);
  REQUIRE(!s.never());
  CHECK(*s.frames == 3);
  CHECK(s.milliseconds == doctest::Approx(300.0));
}

TEST_CASE("milliseconds derive from the sample rate") {
  std::vector<int> trace(220, 0);
  for (std::size_t i = 0; i < 100; ++i) trace[i] = 1;
  const auto s = time_to_stable_correct(trace, 0, 120.0);
  REQUIRE(!s.never());
  CHECK(*s.frames == 100);
  CHECK(s.milliseconds == doctest::Approx(100.0 * 1000.0 / 120.0).epsilon(1e-12));
}

TEST_CASE("first_correct_frame ignores later mistakes") {
  CHECK(*first_correct_frame({0, 2, 0, 2}, 2) == 1);
  CHECK(!first_correct_frame({0, 0}, 2).has_value());
}

TEST_CASE("truncating a suffix never makes stabilization earlier in frames") {
  // Property: on the full trace vs any prefix that still ends correct,
  // the stable point of the prefix is <= that of the full trace.
  const std::vector<int> trace{1, 0, 1, 1, 0, 1, 1, 1};
  const auto full = time_to_stable_correct(trace, 1, 10.0);
  REQUIRE(!full.never());
  for (std::size_t cut = 6; cut < trace.size(); ++cut) {
    const std::vector<int> prefix(trace.begin(), trace.begin() + static_cast<long>(cut));
    const auto partial = time_to_stable_correct(prefix, 1, 10.0);
    if (!partial.never()) CHECK(*partial.frames <= *full.frames);
  }
}

TEST_CASE("subset_from_groups unions columns and joins names") {
  SyntheticSpec spec;
  spec.num_early = 2;
  spec.num_late = 2;
  spec.num_noise = 1;
  spec.num_sequences = 2;
  const Dataset ds = generate_synthetic(spec);
  const auto sub = subset_from_groups(ds, {"early", "late"});
  CHECK(sub.name == "early+late");
  CHECK(sub.columns == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(subset_from_groups(ds, {"bogus"}), std::invalid_argument);
}

TEST_CASE("duplicate subsets rank identically and deterministically") {
  SyntheticSpec spec;
  spec.vocab_size = 3;
  spec.num_sequences = 8;
  spec.seed = 4;
  const Dataset ds = generate_synthetic(spec);
  TrainingConfig cfg;
  cfg.iterations = 15;
  cfg.hidden_dim = 5;
  cfg.embed_dim = 5;
  cfg.seed = 7;
  const auto sub = subset_from_groups(ds, {"early"});
  FeatureSubset twin = sub;
  twin.name = "early_copy";
  const auto a = wrapper_rank(ds, {sub, twin}, cfg);
  const auto b = wrapper_rank(ds, {sub, twin}, cfg);
  REQUIRE(a.subsets.size() == 2);
  CHECK(a.subsets[0].auc == a.subsets[1].auc);
  CHECK(a.subsets[0].accuracy_curve == a.subsets[1].accuracy_curve);
  CHECK(a.subsets[0].name == "early");  // name breaks the tie
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.subsets[i].auc == b.subsets[i].auc);
    CHECK(a.subsets[i].mean_stable_frames == b.subsets[i].mean_stable_frames);
  }
}

TEST_CASE("informative columns outrank pure noise") {
  SyntheticSpec spec;
  spec.vocab_size = 3;
  spec.num_early = 3;
  spec.num_late = 0;
  spec.num_noise = 3;
  spec.num_sequences = 24;
  spec.emission_scale = 1.5;
  spec.seed = 11;
  const Dataset ds = generate_synthetic(spec);
  TrainingConfig cfg;
  cfg.iterations = 120;
  cfg.learning_rate = 0.01;
  cfg.hidden_dim = 8;
  cfg.embed_dim = 8;
  cfg.seed = 2;
  const auto report = wrapper_rank(
      ds, {subset_from_groups(ds, {"early"}), subset_from_groups(ds, {"noise"})}, cfg);
  REQUIRE(report.subsets.size() == 2);
  CHECK(report.subsets[0].name == "early");
  CHECK(report.subsets[0].auc > report.subsets[1].auc);
  CHECK(report.subsets[0].mean_stable_frames <= report.subsets[1].mean_stable_frames);
}

TEST_CASE("wrapper_rank validates its inputs") {
  SyntheticSpec spec;
  spec.num_sequences = 4;
  const Dataset ds = generate_synthetic(spec);
  TrainingConfig cfg;
  cfg.iterations = 2;
  const auto sub = subset_from_groups(ds, {"early"});
  CHECK_THROWS_AS(wrapper_rank(ds, {sub}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(wrapper_rank(ds, {sub, FeatureSubset{"empty", {}}}, cfg),
                  std::invalid_argument);
}

TEST_CASE("importance CSV emitters keep their schemas") {
  ImportanceReport report;
  report.sample_rate_hz = 10.0;
  SubsetResult a;
  a.name = "early";
  a.accuracy_curve = {0.5, 1.0};
  a.auc = 0.75;
  a.mean_stable_frames = 1.0;
  a.mean_stable_ms = 100.0;
  SubsetResult b = a;
  b.name = "noise";
  b.auc = 0.25;
  b.mean_stable_frames = 2.0;
  b.mean_stable_ms = 200.0;
  b.never_count = 1;
  report.subsets = {a, b};

  std::ostringstream curves;
  write_importance_curves_csv(curves, report);
  std::istringstream in(curves.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "subset,frame,accuracy");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);

  std::ostringstream summary;
  write_importance_summary_csv(summary, report);
  std::istringstream sin(summary.str());
  REQUIRE(std::getline(sin, line));
  CHECK(line == "rank,subset,auc,mean_stable_frames,mean_stable_ms,never_count");
  REQUIRE(std::getline(sin, line));
  CHECK(line.rfind("1,early,", 0) == 0);

  std::ostringstream deltas;
  write_importance_deltas_csv(deltas, report);
  std::istringstream din(deltas.str());
  REQUIRE(std::getline(din, line));
  CHECK(line == "subset_a,subset_b,delta_frames,delta_ms");
  REQUIRE(std::getline(din, line));
  CHECK(line.rfind("early,noise,", 0) == 0);
  CHECK(line.find("-1") != std::string::npos);  // early is 1 frame faster
}
