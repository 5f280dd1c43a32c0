#include "actseq/reward.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "actseq/common.hpp"

namespace actseq {

using nlohmann::json;

std::size_t WorldModel::joint_index(int s, int h, int r) const {
  const int nh = human_actions.size();
  const int nr = robot_actions.size();
  if (s < 0 || s >= static_cast<int>(states.size()) || h < 0 || h >= nh || r < 0 ||
      r >= nr) {
    throw std::invalid_argument("world model: state or action index out of range");
  }
  return (static_cast<std::size_t>(s) * nh + h) * nr + r;
}

int WorldModel::map_human(int predictor_action) const {
  if (predictor_to_human.empty()) {
    if (predictor_action < 0 || predictor_action >= human_actions.size()) {
      throw std::invalid_argument("world model: human action out of range");
    }
    return predictor_action;
  }
  if (predictor_action < 0 ||
      predictor_action >= static_cast<int>(predictor_to_human.size())) {
    throw std::invalid_argument("world model: unmapped predictor action");
  }
  return predictor_to_human[static_cast<std::size_t>(predictor_action)];
}

void WorldModel::validate() const {
  const std::size_t n = states.size() * static_cast<std::size_t>(human_actions.size()) *
                        static_cast<std::size_t>(robot_actions.size());
  if (transition.size() != n) {
    throw DataError("scenario: transition table is not total over S x A^H x A^R");
  }
  if (reward_table.size() != n) throw DataError("scenario: reward table size mismatch");
  for (const int s : transition) {
    if (s < 0 || s >= static_cast<int>(states.size())) {
      throw DataError("scenario: transition target out of range");
    }
  }
  for (const double r : reward_table) {
    if (!std::isfinite(r)) throw DataError("scenario: non-finite reward");
  }
  if (initial_state < 0 || initial_state >= static_cast<int>(states.size())) {
    throw DataError("scenario: initial state out of range");
  }
  if (horizon < 1) throw DataError("scenario: horizon must be >= 1");
}

WorldModel load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("scenario: cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("scenario: parse error in " + file.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) {
      throw DataError("scenario: unsupported version in " + file.string());
    }
    WorldModel w;
    w.states = j.at("states").get<std::vector<std::string>>();
    w.human_actions =
        ActionVocabulary(j.at("human_actions").get<std::vector<std::string>>());
    w.robot_actions =
        ActionVocabulary(j.at("robot_actions").get<std::vector<std::string>>());
    w.horizon = j.at("horizon").get<int>();

    auto state_index = [&w](const std::string& name) {
      for (std::size_t i = 0; i < w.states.size(); ++i) {
        if (w.states[i] == name) return static_cast<int>(i);
      }
      throw DataError("scenario: unknown state '" + name + "'");
    };
    w.initial_state = state_index(j.at("initial_state").get<std::string>());

    const std::size_t n = w.states.size() *
                          static_cast<std::size_t>(w.human_actions.size()) *
                          static_cast<std::size_t>(w.robot_actions.size());
    w.transition.assign(n, -1);
    w.reward_table.assign(n, j.value("default_reward", 0.0));

    for (const auto& t : j.at("transitions")) {
      const int s = state_index(t.at(0).get<std::string>());
      const int h = w.human_actions.require(t.at(1).get<std::string>());
      const int r = w.robot_actions.require(t.at(2).get<std::string>());
      w.transition[w.joint_index(s, h, r)] = state_index(t.at(3).get<std::string>());
    }
    if (j.contains("rewards")) {
      for (const auto& t : j.at("rewards")) {
        const int s = state_index(t.at(0).get<std::string>());
        const int h = w.human_actions.require(t.at(1).get<std::string>());
        const int r = w.robot_actions.require(t.at(2).get<std::string>());
        w.reward_table[w.joint_index(s, h, r)] = t.at(3).get<double>();
      }
    }
    if (j.contains("vocabulary_map")) {
      // predictor symbol -> human action symbol, in predictor vocabulary order
      const auto& m = j.at("vocabulary_map");
      std::vector<std::string> predictor_symbols =
          j.at("predictor_vocabulary").get<std::vector<std::string>>();
      for (const auto& sym : predictor_symbols) {
        w.predictor_to_human.push_back(
            w.human_actions.require(m.at(sym).get<std::string>()));
      }
    }
    w.validate();
    return w;
  } catch (const json::exception& e) {
    throw DataError("scenario: schema error in " + file.string() + ": " + e.what());
  }
}

double total_reward(const WorldModel& world, const JointPlan& plan) {
  if (plan.human.size() != plan.robot.size()) {
    throw std::invalid_argument("total_reward: plan length mismatch");
  }
  double total = 0.0;
  int state = world.initial_state;
  for (std::size_t i = 0; i < plan.human.size(); ++i) {
    total += world.reward(state, plan.human[i], plan.robot[i]);
    state = world.step(state, plan.human[i], plan.robot[i]);
  }
  return total;
}

double expected_reward_exhaustive(const WorldModel& world,
                                  const std::vector<int>& robot_seq,
                                  const HumanSequenceDist& human_dist) {
  double mass = 0.0;
  for (const auto& [seq, p] : human_dist) mass += p;
  if (std::abs(mass - 1.0) > 1e-9) {
    throw std::invalid_argument("expected_reward_exhaustive: distribution not normalized");
  }
  double expectation = 0.0;
  for (const auto& [seq, p] : human_dist) {
    expectation += p * total_reward(world, {seq, robot_seq});
  }
  return expectation;
}

double expected_reward_beam(const WorldModel& world, const std::vector<int>& robot_seq,
                            const BeamSet& beams) {
  if (beams.beams.empty()) {
    throw std::invalid_argument("expected_reward_beam: empty beam set");
  }
  if (static_cast<int>(robot_seq.size()) != beams.horizon) {
    throw std::invalid_argument("expected_reward_beam: robot sequence/horizon mismatch");
  }
  double weighted = 0.0, mass = 0.0;
  for (const Beam& b : beams.beams) {
    std::vector<int> human;
    human.reserve(b.actions.size());
    for (const int a : b.actions) human.push_back(world.map_human(a));
    const double p = std::exp(b.log_prob);
    weighted += p * total_reward(world, {human, robot_seq});
    mass += p;
  }
  return weighted / mass;
}

PlanChoice select_robot_plan(const WorldModel& world, const BeamSet& beams,
                             std::size_t cap) {
  const std::size_t nr = static_cast<std::size_t>(world.robot_actions.size());
  const int n = beams.horizon;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > cap / nr) {
      throw ResourceLimitError("select_robot_plan: " + std::to_string(nr) + "^" +
                               std::to_string(n) + " exceeds cap " +
                               std::to_string(cap));
    }
    total *= nr;
  }

  PlanChoice best;
  std::vector<int> seq(static_cast<std::size_t>(n), 0);
  bool first = true;
  // Lexicographic enumeration; strict improvement keeps the first (smallest)
  // maximizer.
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int i = n - 1; i >= 0; --i) {
      seq[static_cast<std::size_t>(i)] = static_cast<int>(rem % nr);
      rem /= nr;
    }
    const double value = expected_reward_beam(world, seq, beams);
    if (first || value > best.estimated_reward) {
      best = {seq, value};
      first = false;
    }
  }
  return best;
}

}  // namespace actseq
