#pragma once

// One learning agent and its per-step update: act, observe, sanction, shape,
// store, learn, record the behaviour.

#include <optional>
#include <vector>

#include "rawle/env.hpp"
#include "rawle/ethics.hpp"
#include "rawle/learner.hpp"
#include "rawle/norms.hpp"

namespace rawle {

// Health and bag scaled by h_initial and b_initial, distance by o + p,
// well-being by the spawn well-being.
std::vector<double> encode_observation(const Observation& obs, const SimConfig& config);
int feature_count(const SimConfig& config);

struct StepContext {
  const SimConfig* sim = nullptr;
  const NormConfig* norms = nullptr;
  double epsilon = 0.0;
  bool learn = true;
  bool sanctions = true;
  // 1-based index of the environment step in progress.
  int step_number = 1;
};

struct AgentStepLog {
  int agent = 0;
  Action action = Action::MoveNorth;
  StepResult env;
  double sanction = 0.0;
  double shaped_reward = 0.0;
  bool improvable = false;
  std::vector<double> wellbeing_before;
  std::vector<double> wellbeing_after;
  View view;
  std::optional<double> loss;
};

class Agent {
 public:
  Agent(int id, const SimConfig& sim, const LearnerConfig& learner, const NormConfig& norms,
        std::uint64_t seed);

  int id() const { return id_; }
  DqnLearner& learner() { return learner_; }
  const DqnLearner& learner() const { return learner_; }
  BehaviourBase& behaviours() { return behaviours_; }
  const BehaviourBase& behaviours() const { return behaviours_; }

  AgentStepLog step(GridState& state, const StepContext& ctx);

 private:
  int id_;
  DqnLearner learner_;
  BehaviourBase behaviours_;
};

}  // namespace rawle
