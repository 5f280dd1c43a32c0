#include "actseq/decode.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "actseq/common.hpp"

namespace actseq {

namespace {

// V^n, or nullopt on overflow past cap.
std::size_t pow_or_cap(std::size_t v, int n, std::size_t cap) {
  std::size_t r = 1;
  for (int i = 0; i < n; ++i) {
    if (r > cap / v) return cap + 1;
    r *= v;
  }
  return r;
}

double log_floor(double p) { return std::log(std::max(p, kProbFloor)); }

}  // namespace

BeamSet exhaustive_decode(const PredictionModel& model, const LstmState& context,
                          int horizon, std::size_t cap) {
  if (horizon < 1) throw std::invalid_argument("exhaustive_decode: horizon must be >= 1");
  const std::size_t v = static_cast<std::size_t>(model.vocab.size());
  const std::size_t total = pow_or_cap(v, horizon, cap);
  if (total > cap) {
    throw ResourceLimitError("exhaustive_decode: V=" + std::to_string(v) +
                             ", N=" + std::to_string(horizon) +
                             " exceeds cap " + std::to_string(cap));
  }

  std::vector<Beam> frontier{{{}, 0.0, context}};
  for (int step = 0; step < horizon; ++step) {
    std::vector<Beam> next;
    next.reserve(frontier.size() * v);
    for (const Beam& b : frontier) {
      const int prev = b.actions.empty() ? model.start_token() : b.actions.back();
      auto [dist, state] = model.decode_step(prev, b.state);
      for (std::size_t a = 0; a < v; ++a) {
        Beam child{b.actions, b.log_prob + log_floor(dist[a]), state};
        child.actions.push_back(static_cast<int>(a));
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  std::sort(frontier.begin(), frontier.end(), beam_before);
  return {std::move(frontier), static_cast<int>(total), horizon};
}

BeamSet beam_decode(const PredictionModel& model, const LstmState& context,
                    int horizon, int width) {
  if (horizon < 1 || width < 1) {
    throw std::invalid_argument("beam_decode: horizon and width must be >= 1");
  }
  const std::size_t v = static_cast<std::size_t>(model.vocab.size());
  std::vector<Beam> live{{{}, 0.0, context}};
  for (int step = 0; step < horizon; ++step) {
    std::vector<Beam> pool;
    pool.reserve(live.size() * v);
    for (const Beam& b : live) {
      const int prev = b.actions.empty() ? model.start_token() : b.actions.back();
      auto [dist, state] = model.decode_step(prev, b.state);
      for (std::size_t a = 0; a < v; ++a) {
        Beam child{b.actions, b.log_prob + log_floor(dist[a]), state};
        child.actions.push_back(static_cast<int>(a));
        pool.push_back(std::move(child));
      }
    }
    std::sort(pool.begin(), pool.end(), beam_before);
    if (pool.size() > static_cast<std::size_t>(width)) {
      pool.resize(static_cast<std::size_t>(width));
    }
    live = std::move(pool);
  }
#ifndef NDEBUG
  // Expansion is a tree, so duplicates cannot arise.
  std::set<std::vector<int>> seen;
  for (const Beam& b : live) assert(seen.insert(b.actions).second);
#endif
  return {std::move(live), width, horizon};
}

Beam greedy_decode(const PredictionModel& model, const LstmState& context, int horizon) {
  BeamSet set = beam_decode(model, context, horizon, 1);
  return set.beams.front();
}

double cumulative_probability(const BeamSet& set) {
  double sum = 0.0;
  for (const Beam& b : set.beams) sum += std::exp(b.log_prob);
  return sum;
}

double replay_log_prob(const PredictionModel& model, const LstmState& context,
                       const std::vector<int>& actions) {
  double lp = 0.0;
  LstmState state = context;
  int prev = model.start_token();
  for (const int a : actions) {
    auto [dist, next] = model.decode_step(prev, state);
    lp += log_floor(dist[static_cast<std::size_t>(a)]);
    state = next;
    prev = a;
  }
  return lp;
}

void write_beam_csv(std::ostream& os, const BeamSet& set,
                    const ActionVocabulary& vocab, bool header,
                    const std::string& id_prefix) {
  char buf[64];
  if (header) {
    if (!id_prefix.empty()) os << "sequence_id,";
    os << "rank,log_prob,prob";
    for (int t = 1; t <= set.horizon; ++t) os << ",action_" << t;
    os << "\n";
  }
  for (std::size_t k = 0; k < set.beams.size(); ++k) {
    const Beam& b = set.beams[k];
    if (!id_prefix.empty()) os << id_prefix << ",";
    os << (k + 1);
    std::snprintf(buf, sizeof buf, ",%.17g", b.log_prob);
    os << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", std::exp(b.log_prob));
    os << buf;
    for (const int a : b.actions) os << "," << vocab.symbol(a);
    os << "\n";
  }
}

}  // namespace actseq
