#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "actseq/decode.hpp"
#include "actseq/vocab.hpp"

namespace actseq {

// Tabular cooperation world: states, joint human-robot actions, a total
// transition function and a finite immediate reward function.
struct WorldModel {
  std::vector<std::string> states;
  ActionVocabulary human_actions;
  ActionVocabulary robot_actions;
  int initial_state = 0;
  int horizon = 1;

  // Flat tables indexed by (state * #H + h) * #R + r.
  std::vector<int> transition;
  std::vector<double> reward_table;

  // Predictor vocabulary index -> human action index; empty means identity.
  std::vector<int> predictor_to_human;

  std::size_t joint_index(int s, int h, int r) const;
  int step(int s, int h, int r) const { return transition[joint_index(s, h, r)]; }
  double reward(int s, int h, int r) const { return reward_table[joint_index(s, h, r)]; }
  int map_human(int predictor_action) const;
  void validate() const;
};

// Versioned JSON scenario file (states, action sets, transition and reward
// triples, initial state, horizon, optional vocabulary_map).
WorldModel load_scenario(const std::filesystem::path& file);

// Equal-length human and robot action sequences.
struct JointPlan {
  std::vector<int> human;
  std::vector<int> robot;
};

// Rolls the state forward from the initial state, summing one immediate
// reward per action pair in the plan.
double total_reward(const WorldModel& world, const JointPlan& plan);

// Explicit weighted set of human action sequences.
using HumanSequenceDist = std::vector<std::pair<std::vector<int>, double>>;

// Exact expectation of the total reward over the given human-sequence
// distribution (weights must sum to 1 within 1e-9).
double expected_reward_exhaustive(const WorldModel& world,
                                  const std::vector<int>& robot_seq,
                                  const HumanSequenceDist& human_dist);

// Biased Monte-Carlo estimate: beam-weighted rollout rewards normalized by
// the captured probability mass. Beam actions are mapped through the
// predictor-to-human table.
double expected_reward_beam(const WorldModel& world, const std::vector<int>& robot_seq,
                            const BeamSet& beams);

struct PlanChoice {
  std::vector<int> robot;
  double estimated_reward = 0.0;
};

// Enumerates all robot sequences of the beam horizon and returns the argmax
// of the beam estimate; lexicographically smallest sequence wins ties.
PlanChoice select_robot_plan(const WorldModel& world, const BeamSet& beams,
                             std::size_t cap = 100'000);

}  // namespace actseq
