#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "actseq/checkpoint.hpp"
#include "actseq/data.hpp"
#include "actseq/model.hpp"

using namespace actseq;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("actseq_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kHeader = R"({
  "version": 1,
  "sample_rate_hz": 5.0,
  "vocabulary": ["pour", "eat"],
  "columns": ["c0", "c1"],
  "groups": [{"name": "pose", "columns": [0, 1]}],
  "intentions": {"s1": "pour"}
})";

}  // namespace

TEST_CASE("minimal valid dataset loads") {
  const auto dir = temp_dir("minimal");
  write_file(dir / "header.json", kHeader);
  write_file(dir / "data.csv",
             "sequence_id,frame_index,c0,c1,label\n"
             "s1,0,0.5,1.5,pour\n"
             "s1,1,0.25,-1,eat\n");
  const Dataset ds = load_dataset(dir);
  REQUIRE(ds.sequences.size() == 1);
  CHECK(ds.sequences[0].length() == 2);
  CHECK(ds.sequences[0].intention == 0);
  CHECK(ds.sequences[0].labels == std::vector<int>{0, 1});
  CHECK(ds.sequences[0].features(1, 1) == doctest::Approx(-1.0));
  CHECK(ds.sample_rate_hz == doctest::Approx(5.0));
}

TEST_CASE("wrong-width frame reports sequence and frame") {
  const auto dir = temp_dir("width");
  write_file(dir / "header.json", kHeader);
  write_file(dir / "data.csv",
             "sequence_id,frame_index,c0,c1,label\n"
             "s1,0,0.5,1.5,pour\n"
             "s1,1,0.25,eat\n");
  try {
    load_dataset(dir);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("s1") != std::string::npos);
    CHECK(msg.find(":3") != std::string::npos);
  }
}

TEST_CASE("unknown label is a typed error") {
  const auto dir = temp_dir("label");
  write_file(dir / "header.json", kHeader);
  write_file(dir / "data.csv",
             "sequence_id,frame_index,c0,c1,label\n"
             "s1,0,0.5,1.5,fly\n");
  CHECK_THROWS_AS(load_dataset(dir), DataError);
}

TEST_CASE("mutated files always yield typed errors") {
  const std::string good_csv =
      "sequence_id,frame_index,c0,c1,label\n"
      "s1,0,0.5,1.5,pour\n"
      "s1,1,0.25,-1,eat\n";
  // header mutations
  const std::vector<std::string> bad_headers = {
      "{", "[]", "{\"version\": 2}", "{\"version\": 1}",
      R"({"version":1,"sample_rate_hz":5,"vocabulary":["a","a"],"columns":["c0","c1"]})",
      R"({"version":1,"sample_rate_hz":5,"vocabulary":["a"],"columns":["c0"],"groups":[{"name":"g","columns":[5]}]})"};
  for (std::size_t i = 0; i < bad_headers.size(); ++i) {
    const auto dir = temp_dir("fuzzh" + std::to_string(i));
    write_file(dir / "header.json", bad_headers[i]);
    write_file(dir / "data.csv", good_csv);
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  // csv mutations
  const std::vector<std::string> bad_csvs = {
      "",
      "bogus\n",
      "sequence_id,frame_index,c0,c1,label\ns1,0,0.5,abc,pour\n",
      "sequence_id,frame_index,c0,c1,label\ns1,1,0.5,1.0,pour\n",
      "sequence_id,frame_index,c0,c1,label\ns1,0,0.5,1.0,pour\ns2,0,1,1,eat\ns1,1,0.5,1.0,pour\n",
      "sequence_id,frame_index,c0,c1,label\ns1,0,0.5,1.0,1.0,pour\n"};
  for (std::size_t i = 0; i < bad_csvs.size(); ++i) {
    const auto dir = temp_dir("fuzzc" + std::to_string(i));
    write_file(dir / "header.json", kHeader);
    write_file(dir / "data.csv", bad_csvs[i]);
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
}

TEST_CASE("a generated multi-action dataset round-trips bit-identically") {
  SyntheticSpec spec;
  spec.vocab_size = 11;
  spec.transition = SyntheticSpec::cyclic_grammar(11);
  spec.num_sequences = 8;
  spec.min_len = 20;
  spec.max_len = 30;
  spec.sample_rate_hz = 5.0;
  spec.seed = 21;
  const Dataset ds = generate_synthetic(spec);

  const auto dir1 = temp_dir("rt1");
  const auto dir2 = temp_dir("rt2");
  save_dataset(ds, dir1);
  const Dataset loaded = load_dataset(dir1);
  save_dataset(loaded, dir2);
  CHECK(read_file(dir1 / "header.json") == read_file(dir2 / "header.json"));
  CHECK(read_file(dir1 / "data.csv") == read_file(dir2 / "data.csv"));
  REQUIRE(loaded.sequences.size() == ds.sequences.size());
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    CHECK(loaded.sequences[i].features.data == ds.sequences[i].features.data);
    CHECK(loaded.sequences[i].labels == ds.sequences[i].labels);
  }
}

TEST_CASE("synthetic generation is deterministic and validates its spec") {
  SyntheticSpec spec;
  spec.seed = 5;
  const Dataset a = generate_synthetic(spec);
  const Dataset b = generate_synthetic(spec);
  REQUIRE(a.sequences.size() == b.sequences.size());
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    CHECK(a.sequences[i].features.data == b.sequences[i].features.data);
    CHECK(a.sequences[i].labels == b.sequences[i].labels);
  }

  SyntheticSpec bad = spec;
  bad.transition = {{0.5, 0.6}, {1.0, 0.0}};
  bad.vocab_size = 2;
  CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
}

TEST_CASE("zero noise with a single repeated action emits identical frames") {
  SyntheticSpec spec;
  spec.vocab_size = 2;
  spec.transition = {{1.0, 0.0}, {0.0, 1.0}};
  spec.noise_scale = 0.0;
  spec.late_onset = 0.0;
  spec.num_sequences = 3;
  const Dataset ds = generate_synthetic(spec);
  for (const auto& seq : ds.sequences) {
    const Vector first = seq.features.row(0);
    for (std::size_t r = 1; r < seq.length(); ++r) CHECK(seq.features.row(r) == first);
  }
}

TEST_CASE("generated action bigrams match the transition table") {
  SyntheticSpec spec;
  spec.vocab_size = 3;
  spec.transition = {{0.6, 0.3, 0.1}, {0.2, 0.2, 0.6}, {0.5, 0.0, 0.5}};
  spec.num_sequences = 400;
  spec.min_len = 25;
  spec.max_len = 25;
  spec.seed = 9;
  const Dataset ds = generate_synthetic(spec);
  std::map<int, std::map<int, double>> counts;
  std::map<int, double> totals;
  for (const auto& seq : ds.sequences) {
    for (std::size_t t = 1; t < seq.labels.size(); ++t) {
      counts[seq.labels[t - 1]][seq.labels[t]] += 1.0;
      totals[seq.labels[t - 1]] += 1.0;
    }
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double n = totals[a];
      REQUIRE(n > 1000);
      const double p = spec.transition[a][b];
      const double freq = counts[a][b] / n;
      const double se = std::sqrt(std::max(p * (1 - p), 1e-9) / n);
      CHECK(std::abs(freq - p) <= 3.0 * se + 1e-9);
    }
  }
}

TEST_CASE("synthetic output passes load-time validation after round trip") {
  SyntheticSpec spec;
  spec.seed = 31;
  spec.num_sequences = 5;
  const auto dir = temp_dir("validate");
  save_dataset(generate_synthetic(spec), dir);
  CHECK_NOTHROW(load_dataset(dir));
}

// ---------------------------------------------------------------------------

TEST_CASE("checkpoint round trip preserves inference outputs") {
  SyntheticSpec spec;
  spec.seed = 17;
  spec.num_sequences = 6;
  const Dataset ds = generate_synthetic(spec);
  TrainingConfig cfg;
  cfg.iterations = 5;
  cfg.hidden_dim = 6;
  cfg.embed_dim = 8;
  Rng rng(4);
  const PredictionModel model =
      PredictionModel::init(static_cast<int>(ds.feature_width()), ds.vocabulary, cfg, rng);

  const auto dir = temp_dir("ckpt");
  save_checkpoint(model, dir / "model.json");
  const Checkpoint loaded = load_checkpoint(dir / "model.json");
  REQUIRE(std::holds_alternative<PredictionModel>(loaded));
  const auto& m2 = std::get<PredictionModel>(loaded);
  CHECK(m2.params.to_flat() == model.params.to_flat());  // bit-exact
  CHECK(m2.vocab == model.vocab);

  const Matrix obs = slice_rows(ds.sequences[0].features, 0, 3);
  const auto [d1, s1] = model.decode_step(0, model.encode(obs));
  const auto [d2, s2] = m2.decode_step(0, m2.encode(obs));
  CHECK(d1.probs == d2.probs);
}

TEST_CASE("truncated checkpoint is a corrupt-file error") {
  SyntheticSpec spec;
  spec.num_sequences = 3;
  const Dataset ds = generate_synthetic(spec);
  TrainingConfig cfg;
  cfg.hidden_dim = 4;
  cfg.embed_dim = 4;
  Rng rng(1);
  const RecognitionModel model =
      RecognitionModel::init(static_cast<int>(ds.feature_width()), ds.vocabulary, cfg, rng);
  const auto dir = temp_dir("trunc");
  save_checkpoint(model, dir / "model.json");
  std::string content = read_file(dir / "model.json");
  write_file(dir / "model.json", content.substr(0, content.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir / "model.json"), DataError);

  // flipped weight byte fails the checksum
  save_checkpoint(model, dir / "model.json");
  content = read_file(dir / "model.json");
  const auto pos = content.find("\"data\": \"");
  REQUIRE(pos != std::string::npos);
  content[pos + 10] = content[pos + 10] == 'A' ? 'B' : 'A';
  write_file(dir / "model.json", content);
  CHECK_THROWS_AS(load_checkpoint(dir / "model.json"), DataError);
}

TEST_CASE("restrict_columns remaps groups and features") {
  SyntheticSpec spec;
  spec.num_early = 2;
  spec.num_late = 2;
  spec.num_noise = 1;
  spec.num_sequences = 2;
  const Dataset ds = generate_synthetic(spec);
  const Dataset r = ds.restrict_columns({2, 3, 4});
  CHECK(r.feature_width() == 3);
  CHECK(r.columns == std::vector<std::string>{"late_0", "late_1", "noise_0"});
  REQUIRE(r.groups.size() == 2);  // early dropped
  CHECK(r.groups[0].name == "late");
  CHECK(r.groups[0].columns == std::vector<std::size_t>{0, 1});
  CHECK(r.sequences[0].features(0, 0) == ds.sequences[0].features(0, 2));
  CHECK_THROWS_AS(ds.restrict_columns({99}), std::invalid_argument);
}
