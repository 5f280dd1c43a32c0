#pragma once

#include <ostream>
#include <vector>

#include "actseq/model.hpp"

namespace actseq {

// One candidate future action sequence. log_prob is the sum of per-step log
// conditionals (natural log); state is the decoder state after consuming the
// last action, ready for further expansion.
struct Beam {
  std::vector<int> actions;
  double log_prob = 0.0;
  LstmState state;
};

// Sorted by log_prob descending; ties broken by lexicographically smaller
// action sequence.
struct BeamSet {
  std::vector<Beam> beams;
  int width = 0;
  int horizon = 0;
};

inline bool beam_before(const Beam& a, const Beam& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.actions < b.actions;
}

// All V^horizon sequences. Throws ResourceLimitError when V^horizon exceeds
// the cap.
BeamSet exhaustive_decode(const PredictionModel& model, const LstmState& context,
                          int horizon, std::size_t cap = 1'000'000);

// Argmax action at every step.
Beam greedy_decode(const PredictionModel& model, const LstmState& context, int horizon);

// Expands every live beam by all V actions, then prunes the pooled set back
// to the top `width` by log probability.
BeamSet beam_decode(const PredictionModel& model, const LstmState& context,
                    int horizon, int width);

// Sum of the beams' probabilities; the covered share of the outcome space.
double cumulative_probability(const BeamSet& set);

// Recomputes a beam's log probability by replaying its actions through
// decode_step from the given context.
double replay_log_prob(const PredictionModel& model, const LstmState& context,
                       const std::vector<int>& actions);

// CSV: rank,log_prob,prob,action_1..action_N (vocabulary symbols).
void write_beam_csv(std::ostream& os, const BeamSet& set,
                    const ActionVocabulary& vocab, bool header = true,
                    const std::string& id_prefix = "");

}  // namespace actseq
