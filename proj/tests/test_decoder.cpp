#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "actseq/decode.hpp"

using namespace actseq;

namespace {

ActionVocabulary make_vocab(int v) {
  std::vector<std::string> syms;
  for (int i = 0; i < v; ++i) syms.push_back("a" + std::to_string(i));
  return ActionVocabulary(std::move(syms));
}

PredictionModel make_model(int features, int v, int hidden, std::uint64_t seed) {
  TrainingConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.embed_dim = hidden + 1;
  Rng rng(seed);
  return PredictionModel::init(features, make_vocab(v), cfg, rng);
}

LstmState make_context(const PredictionModel& model, std::uint64_t seed) {
  Rng rng(seed);
  Matrix obs(3, model.params.at("enc.embed.W").cols);
  for (double& v : obs.data) v = rng.uniform(-1.0, 1.0);
  return model.encode(obs);
}

// Independent enumeration oracle: recurse over every action at every depth.
void enumerate_oracle(const PredictionModel& model, const LstmState& state, int prev,
                      int remaining, std::vector<int>& prefix, double log_prob,
                      std::vector<Beam>& out) {
  if (remaining == 0) {
    out.push_back(Beam{prefix, log_prob, state});
    return;
  }
  const auto [dist, next] = model.decode_step(prev, state);
  for (std::size_t a = 0; a < dist.size(); ++a) {
    prefix.push_back(static_cast<int>(a));
    enumerate_oracle(model, next, static_cast<int>(a), remaining - 1, prefix,
                     log_prob + std::log(std::max(dist[a], 1e-300)), out);
    prefix.pop_back();
  }
}

}  // namespace

TEST_CASE("exhaustive decode at horizon 1 reproduces the step distribution") {
  const auto model = make_model(4, 5, 6, 1);
  const auto ctx = make_context(model, 2);
  const auto set = exhaustive_decode(model, ctx, 1);
  REQUIRE(set.beams.size() == 5);
  const auto [dist, unused] = model.decode_step(model.start_token(), ctx);
  for (const auto& b : set.beams) {
    REQUIRE(b.actions.size() == 1);
    CHECK(std::exp(b.log_prob) ==
          doctest::Approx(dist[static_cast<std::size_t>(b.actions[0])]).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive decode enumerates V^N sequences with unit total mass") {
  const auto model = make_model(4, 11, 6, 3);
  const auto ctx = make_context(model, 4);
  const auto set = exhaustive_decode(model, ctx, 2);
  REQUIRE(set.beams.size() == 121);
  CHECK(cumulative_probability(set) == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 1; i < set.beams.size(); ++i) {
    CHECK(beam_before(set.beams[i - 1], set.beams[i]));
  }
}

TEST_CASE("exhaustive decode matches an independent recursive enumeration") {
  const auto model = make_model(3, 3, 5, 5);
  const auto ctx = make_context(model, 6);
  const auto set = exhaustive_decode(model, ctx, 3);
  std::vector<Beam> oracle;
  std::vector<int> prefix;
  enumerate_oracle(model, ctx, model.start_token(), 3, prefix, 0.0, oracle);
  std::sort(oracle.begin(), oracle.end(), beam_before);
  REQUIRE(set.beams.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(set.beams[i].actions == oracle[i].actions);
    CHECK(set.beams[i].log_prob == doctest::Approx(oracle[i].log_prob).epsilon(1e-12));
  }
}

TEST_CASE("greedy equals beam search with width one") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto model = make_model(3, 4, 5, seed);
    const auto ctx = make_context(model, seed + 50);
    const Beam g = greedy_decode(model, ctx, 3);
    const auto b = beam_decode(model, ctx, 3, 1);
    REQUIRE(b.beams.size() == 1);
    CHECK(g.actions == b.beams[0].actions);
    CHECK(g.log_prob == b.beams[0].log_prob);
  }
}

TEST_CASE("a forced deterministic model decodes with log probability zero") {
  auto model = make_model(2, 3, 4, 9);
  for (double& v : model.params.at("proj.W").data) v = 0.0;
  for (double& v : model.params.at("proj.b").data) v = 0.0;
  model.params.at("proj.b").data[2] = 1000.0;
  const auto ctx = make_context(model, 10);
  const Beam g = greedy_decode(model, ctx, 4);
  CHECK(g.actions == std::vector<int>{2, 2, 2, 2});
  CHECK(g.log_prob == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("greedy can miss the most probable sequence") {
  // Seeded search for a model whose greedy path is not the global argmax.
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    const auto model = make_model(2, 2, 2, seed);
    const auto ctx = make_context(model, seed + 1000);
    const Beam g = greedy_decode(model, ctx, 2);
    const auto full = exhaustive_decode(model, ctx, 2);
    if (full.beams[0].actions != g.actions) {
      CHECK(full.beams[0].log_prob > g.log_prob);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("beam search with width >= V^N equals exhaustive decode exactly") {
  const auto model = make_model(3, 3, 4, 11);
  const auto ctx = make_context(model, 12);
  const auto full = exhaustive_decode(model, ctx, 3);
  const auto beams = beam_decode(model, ctx, 3, 27);
  REQUIRE(beams.beams.size() == full.beams.size());
  for (std::size_t i = 0; i < full.beams.size(); ++i) {
    CHECK(beams.beams[i].actions == full.beams[i].actions);
    CHECK(beams.beams[i].log_prob == full.beams[i].log_prob);  // bit-identical
  }
}

TEST_CASE("pruned beams report exact log probabilities") {
  const auto model = make_model(3, 4, 5, 13);
  const auto ctx = make_context(model, 14);
  const auto full = exhaustive_decode(model, ctx, 3);
  const auto pruned = beam_decode(model, ctx, 3, 5);
  REQUIRE(pruned.beams.size() == 5);
  for (const auto& b : pruned.beams) {
    bool matched = false;
    for (const auto& f : full.beams) {
      if (f.actions == b.actions) {
        CHECK(std::abs(f.log_prob - b.log_prob) <= 1e-12);
        matched = true;
        break;
      }
    }
    CHECK(matched);
  }
  // Pruning keeps exactly the top entries of the exhaustive ranking.
  for (std::size_t i = 0; i < pruned.beams.size(); ++i) {
    CHECK(pruned.beams[i].actions == full.beams[i].actions);
  }
}

TEST_CASE("cumulative probability is monotone in beam width") {
  const auto model = make_model(3, 5, 5, 15);
  const auto ctx = make_context(model, 16);
  double prev = 0.0;
  for (const int width : {1, 2, 4, 8, 16, 25}) {
    const double c = cumulative_probability(beam_decode(model, ctx, 2, width));
    CHECK(c >= prev - 1e-12);
    CHECK(c <= 1.0 + 1e-9);
    prev = c;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("replaying a beam's actions reproduces its log probability") {
  const auto model = make_model(4, 6, 6, 17);
  const auto ctx = make_context(model, 18);
  const auto set = beam_decode(model, ctx, 3, 7);
  for (const auto& b : set.beams) {
    CHECK(std::abs(replay_log_prob(model, ctx, b.actions) - b.log_prob) <= 1e-9);
  }
}

TEST_CASE("beam CSV has the documented schema") {
  const auto model = make_model(3, 3, 4, 19);
  const auto ctx = make_context(model, 20);
  const auto set = beam_decode(model, ctx, 2, 3);
  std::ostringstream os;
  write_beam_csv(os, set, model.vocab);
  std::istringstream in(os.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "rank,log_prob,prob,action_1,action_2");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
    ++rows;
  }
  CHECK(rows == 3);

  std::ostringstream os2;
  write_beam_csv(os2, set, model.vocab, true, "seq7");
  std::istringstream in2(os2.str());
  REQUIRE(std::getline(in2, line));
  CHECK(line == "sequence_id,rank,log_prob,prob,action_1,action_2");
  REQUIRE(std::getline(in2, line));
  CHECK(line.rfind("seq7,", 0) == 0);
}

TEST_CASE("exhaustive decode refuses to exceed its sequence cap") {
  const auto model = make_model(3, 11, 4, 21);
  const auto ctx = make_context(model, 22);
  try {
    exhaustive_decode(model, ctx, 7);  // 11^7 > 1e6
    FAIL("expected ResourceLimitError");
  } catch (const ResourceLimitError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("11") != std::string::npos);
    CHECK(msg.find("7") != std::string::npos);
  }
  CHECK_NOTHROW(exhaustive_decode(model, ctx, 6, 2'000'000));
}
