#include "rawle/agent.hpp"

#include <cmath>

namespace rawle {

int feature_count(const SimConfig& config) { return 3 + config.n_agents; }

std::vector<double> encode_observation(const Observation& obs, const SimConfig& config) {
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(feature_count(config)));
  f.push_back(obs.health / config.h_initial);
  f.push_back(static_cast<double>(obs.bag) / std::max(config.b_initial, 1));
  f.push_back(static_cast<double>(obs.distance_to_berry) / (config.grid_width + config.grid_height));
  const double spawn = config.spawn_wellbeing();
  for (double w : obs.wellbeing) f.push_back(w / spawn);
  return f;
}

Agent::Agent(int id, const SimConfig& sim, const LearnerConfig& learner, const NormConfig& norms,
             std::uint64_t seed)
    : id_(id), learner_(feature_count(sim), learner, seed), behaviours_(norms) {}

AgentStepLog Agent::step(GridState& state, const StepContext& ctx) {
  const SimConfig& sim = *ctx.sim;
  AgentStepLog log;
  log.agent = id_;

  const Observation obs = observe(state, id_, sim);
  const auto features = encode_observation(obs, sim);
  log.wellbeing_before = obs.wellbeing;
  const bool shaping = sim.society == Society::Rawle && ctx.sanctions;
  log.improvable = shaping && could_improve_min(state, id_, sim);

  log.action = action_from_index(learner_.act(features, ctx.epsilon));
  log.env = step_agent(state, id_, log.action, sim);

  const Observation next = observe(state, id_, sim);
  log.wellbeing_after = next.wellbeing;
  // Judge the action, not the decay every agent suffers regardless of it.
  auto& own_after = log.wellbeing_after[static_cast<std::size_t>(id_)];
  if (own_after > 0.0) own_after -= sim.h_decay / std::abs(sim.h_decay);
  if (shaping) {
    const SanctionRule rule{sim.reward_table.sanction_magnitude, sim.sanction_on_worsen,
                           sim.sanction_on_missed};
    log.sanction = sanction(log.wellbeing_before, log.wellbeing_after, log.improvable, rule);
  }
  log.shaped_reward = log.env.reward + log.sanction;

  if (ctx.learn) {
    learner_.remember(Transition{features, action_index(log.action), log.shaped_reward,
                                 encode_observation(next, sim), log.env.done});
    log.loss = learner_.learn();
  }

  log.view = make_view(obs, ctx.norms->thresholds, sim);
  behaviours_.record(log.view, act_class(log.action), log.shaped_reward);
  behaviours_.clip(ctx.step_number);
  return log;
}

}  // namespace rawle
