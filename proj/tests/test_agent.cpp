#include "doctest.h"

#include <cmath>

#include "rawle/agent.hpp"

using namespace rawle;

TEST_CASE("observation encoding") {
  const auto c = SimConfig::capabilities();
  CHECK(feature_count(c) == 7);
  const Observation obs{1, 2.5, 3, 6, {500, 250, 0, 510}};
  const auto f = encode_observation(obs, c);
  REQUIRE(f.size() == 7);
  CHECK(f[0] == doctest::Approx(0.5));
  CHECK(f[1] == doctest::Approx(3.0 / 12.0));
  CHECK(f[2] == doctest::Approx(6.0 / 12.0));
  CHECK(f[3] == doctest::Approx(1.0));
  CHECK(f[4] == doctest::Approx(0.5));
  CHECK(f[5] == 0.0);
  CHECK(f[6] == doctest::Approx(1.02));
}

TEST_CASE("agent step bookkeeping over fuzzed episodes") {
  for (Society society : {Society::Baseline, Society::Rawle}) {
    auto sim = SimConfig::allotment();
    sim.society = society;
    sim.reward_table = RewardTable::for_society(society);
    LearnerConfig lc;
    lc.hidden_units = 16;
    lc.batch_size = 8;
    NormConfig nc;
    std::vector<Agent> agents;
    for (int id = 0; id < sim.n_agents; ++id) agents.emplace_back(id, sim, lc, nc, 7 + id);
    const SanctionRule rule{sim.reward_table.sanction_magnitude, sim.sanction_on_worsen,
                            sim.sanction_on_missed};
    int expected_replay = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto state = init_episode(sim, seed);
      for (auto& a : state.agents) a.bag.assign(2, a.group);
      for (auto& a : agents) a.behaviours().clear();
      std::vector<int> turns(4, 0);
      while (!episode_done(state, sim)) {
        StepContext ctx{&sim, &nc, 0.5, true, true, state.t + 1};
        run_step(state, sim, [&](GridState& s, int id) {
          auto& agent = agents[static_cast<std::size_t>(id)];
          const int before = agent.learner().replay().size();
          const auto log = agent.step(s, ctx);
          turns[static_cast<std::size_t>(id)]++;
          CHECK(agent.learner().replay().size() == std::min(before + 1, lc.replay_capacity));
          const double f = log.shaped_reward - log.env.reward;
          const double xi = sim.reward_table.sanction_magnitude;
          CHECK((std::abs(f) < 1e-12 || std::abs(std::abs(f) - xi) < 1e-12));
          CHECK(f == doctest::Approx(sanction(log.wellbeing_before, log.wellbeing_after, log.improvable, rule)));
          if (society == Society::Baseline) CHECK(f == 0.0);
          const Transition& last = agent.learner().replay().at(agent.learner().replay().size() - 1);
          CHECK(last.reward == log.shaped_reward);
          CHECK(last.action == action_index(log.action));
          CHECK(last.done == log.env.done);
          CHECK(agent.behaviours().contains({log.view, act_class(log.action)}));
        });
      }
      for (std::size_t id = 0; id < agents.size(); ++id) {
        int total = 0;
        for (const auto& [key, b] : agents[id].behaviours().entries()) total += b.num;
        CHECK(total == turns[id]);  // one record per turn, none clipped at this size
        expected_replay += turns[id];
      }
    }
    int replay = 0;
    for (const auto& a : agents) replay += a.learner().replay().size();
    CHECK(replay == expected_replay);
  }
}

TEST_CASE("no learning when disabled") {
  auto sim = SimConfig::capabilities();
  LearnerConfig lc;
  lc.hidden_units = 8;
  NormConfig nc;
  Agent agent(0, sim, lc, nc, 1);
  const auto net = agent.learner().online();
  auto state = init_episode(sim, 1);
  StepContext ctx{&sim, &nc, 0.0, false, true, 1};
  const auto log = agent.step(state, ctx);
  CHECK_FALSE(log.loss.has_value());
  CHECK(agent.learner().replay().size() == 0);
  CHECK(agent.learner().online() == net);
  CHECK(agent.behaviours().size() == 1);
}
