#include "doctest.h"

#include <algorithm>
#include <set>

#include "rawle/env.hpp"

using namespace rawle;

namespace {

// Places one agent per id at explicit cells on an otherwise empty grid.
GridState empty_state(const SimConfig& c, std::vector<Cell> cells) {
  GridState s;
  s.width = c.grid_width;
  s.height = c.grid_height;
  s.berry_at.assign(static_cast<std::size_t>(c.cell_count()), kNoBerry);
  s.rng.seed(99);
  for (int id = 0; id < static_cast<int>(cells.size()); ++id) {
    AgentState a;
    a.id = id;
    a.pos = cells[static_cast<std::size_t>(id)];
    a.health = c.h_initial;
    a.group = c.scenario == Scenario::Capabilities ? (id % 2 == 0 ? kGround : kTree) : id;
    s.agents.push_back(a);
  }
  return s;
}

int total_berries(const GridState& s) {
  int n = s.berry_count();
  for (const auto& a : s.agents) n += a.bag_count();
  return n;
}

}  // namespace

TEST_CASE("default configurations") {
  const auto cap = SimConfig::capabilities();
  CHECK(cap.grid_width == 8);
  CHECK(cap.grid_height == 4);
  CHECK(cap.n_agents == 4);
  CHECK(cap.b_initial == 12);
  CHECK(cap.h_initial == 5.0);
  CHECK(cap.h_gain == 0.1);
  CHECK(cap.h_decay == -0.01);
  CHECK(cap.h_throw == 0.6);
  CHECK(cap.t_max == 50);
  const auto al = SimConfig::allotment();
  CHECK(al.grid_width == 16);
  CHECK(al.grid_height == 4);
  CHECK_NOTHROW(cap.validate());
  CHECK_NOTHROW(al.validate());
}

TEST_CASE("reward columns") {
  const auto b = RewardTable::baseline();
  const std::vector<double> base{b.survive_episode, b.eat_berry, b.forage_hit, b.throw_berry,
                                 b.try_eat_empty, b.try_throw_empty, b.try_throw_low_health,
                                 b.try_throw_no_recipient, b.die, b.sanction_magnitude};
  CHECK(base == std::vector<double>{1.0, 1.0, 1.0, 0.5, -0.2, -0.2, -0.2, -0.2, -1.0, 0.0});
  const auto r = RewardTable::rawle();
  const std::vector<double> rawle{r.survive_episode, r.eat_berry, r.forage_hit, r.throw_berry,
                                  r.try_eat_empty, r.try_throw_empty, r.try_throw_low_health,
                                  r.try_throw_no_recipient, r.die, r.sanction_magnitude};
  CHECK(rawle == std::vector<double>{1.0, 0.8, 0.8, 0.5, -0.1, -0.1, -0.1, -0.1, -1.0, 0.4});
}

TEST_CASE("config validation") {
  auto c = SimConfig::capabilities();
  c.n_agents = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(init_episode(c, 1), ConfigError);

  c = SimConfig::capabilities();
  c.b_initial = 29;  // 29 + 4 > 32 cells
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.b_initial = 28;
  CHECK_NOTHROW(c.validate());

  c = SimConfig::capabilities();
  c.h_decay = 0.01;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig::capabilities();
  c.h_gain = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig::capabilities();
  c.h_throw = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig::capabilities();
  c.h_initial = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  auto a = SimConfig::allotment();
  a.allotment_profile = {6, 3, 2};
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a.allotment_profile = {6, 3, 2, 2};
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a.allotment_profile = {12, 0, 0, 0};
  CHECK_NOTHROW(a.validate());
  a.allotment_profile = {};
  CHECK(a.resolved_allotment_profile() == std::vector<int>{3, 3, 3, 3});
}

TEST_CASE("init_episode capabilities seed 7") {
  const auto c = SimConfig::capabilities();
  const auto s = init_episode(c, 7);
  CHECK(s.width == 8);
  CHECK(s.height == 4);
  CHECK(s.agents.size() == 4);
  CHECK(s.berry_count() == 12);
  CHECK(s.t == 0);
  std::set<int> cells;
  for (const auto& b : s.berries()) cells.insert(s.index(b.pos));
  for (const auto& a : s.agents) {
    CHECK(a.health == 5.0);
    CHECK(a.bag.empty());
    CHECK(a.alive);
    cells.insert(s.index(a.pos));
  }
  CHECK(cells.size() == 16);  // all entities on distinct cells
  int short_agents = 0;
  for (const auto& a : s.agents) short_agents += a.group == kGround;
  CHECK(short_agents == 2);
}

TEST_CASE("init_episode is deterministic per seed") {
  for (const auto& c : {SimConfig::capabilities(), SimConfig::allotment()}) {
    CHECK(init_episode(c, 42) == init_episode(c, 42));
    CHECK_FALSE(init_episode(c, 42) == init_episode(c, 43));
  }
}

TEST_CASE("allotment layout") {
  const auto c = SimConfig::allotment();
  CHECK(allotment_of_column(0, c) == 0);
  CHECK(allotment_of_column(3, c) == 0);
  CHECK(allotment_of_column(4, c) == 1);
  CHECK(allotment_of_column(11, c) == 2);
  CHECK(allotment_of_column(15, c) == 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = init_episode(c, seed);
    std::vector<int> per(4, 0);
    for (const auto& b : s.berries()) {
      CHECK(b.group == allotment_of_column(b.pos.x, c));
      per[static_cast<std::size_t>(b.group)]++;
    }
    CHECK(per == std::vector<int>{6, 3, 2, 1});
    for (const auto& a : s.agents) CHECK(s.berry_at[static_cast<std::size_t>(s.index(a.pos))] == kNoBerry);
  }
}

TEST_CASE("wellbeing examples") {
  const auto c = SimConfig::capabilities();
  AgentState a;
  a.health = 5.0;
  CHECK(wellbeing(a, c) == doctest::Approx(500.0).epsilon(1e-12));
  a.health = 1.0;
  a.bag.assign(10, kGround);
  CHECK(wellbeing(a, c) == doctest::Approx(200.0).epsilon(1e-12));
  a.alive = false;
  a.health = 0.0;
  CHECK(wellbeing(a, c) == 0.0);
  CHECK(c.spawn_wellbeing() == doctest::Approx(500.0));
}

TEST_CASE("move clamps at edges and forages") {
  const auto c = SimConfig::capabilities();
  auto s = empty_state(c, {{0, 0}, {7, 3}});
  auto r = step_agent(s, 0, Action::MoveNorth, c);
  CHECK(s.agents[0].pos == Cell{0, 0});
  CHECK(r.reward == 0.0);
  step_agent(s, 0, Action::MoveWest, c);
  CHECK(s.agents[0].pos == Cell{0, 0});
  step_agent(s, 1, Action::MoveEast, c);
  CHECK(s.agents[1].pos == Cell{7, 3});

  // Agent 0 is short: a ground berry east of it is harvested, a tree berry is not.
  s.berry_at[static_cast<std::size_t>(s.index({1, 0}))] = kGround;
  s.berry_at[static_cast<std::size_t>(s.index({1, 1}))] = kTree;
  r = step_agent(s, 0, Action::MoveEast, c);
  CHECK(r.foraged);
  CHECK(r.reward == doctest::Approx(1.0));
  CHECK(s.agents[0].bag == std::vector<int>{kGround});
  CHECK(s.berry_at[static_cast<std::size_t>(s.index({1, 0}))] == kNoBerry);
  r = step_agent(s, 0, Action::MoveSouth, c);
  CHECK_FALSE(r.foraged);
  CHECK(s.berry_at[static_cast<std::size_t>(s.index({1, 1}))] == kTree);
}

TEST_CASE("eat with empty bag is penalised and changes nothing but health") {
  const auto c = SimConfig::capabilities();
  auto s = empty_state(c, {{0, 0}, {3, 3}});
  const auto before = s;
  const auto r = step_agent(s, 0, Action::Eat, c);
  CHECK(r.reward == doctest::Approx(-0.2));
  CHECK(r.outcome == Outcome::EatEmpty);
  CHECK(s.agents[0].health == doctest::Approx(5.0 - 0.01));
  s.agents[0].health = before.agents[0].health;
  CHECK(s.agents == before.agents);
  CHECK(s.berry_at == before.berry_at);
}

TEST_CASE("eat restores health and regrows a berry") {
  auto c = SimConfig::capabilities();
  auto s = empty_state(c, {{0, 0}, {3, 3}});
  s.agents[0].bag = {kTree, kGround};
  const int total = total_berries(s);
  const auto r = step_agent(s, 0, Action::Eat, c);
  CHECK(r.outcome == Outcome::Ate);
  CHECK(r.reward == doctest::Approx(1.0));
  CHECK(s.agents[0].bag == std::vector<int>{kTree});
  CHECK(s.agents[0].health == doctest::Approx(5.0 + 0.1 - 0.01));
  CHECK(s.agents[0].eaten == 1);
  CHECK(total_berries(s) == total);
  CHECK(s.berry_count() == 1);
  for (const auto& b : s.berries()) CHECK_FALSE(s.cell_has_agent(b.pos));

  auto a = SimConfig::allotment();
  auto sa = empty_state(a, {{0, 0}, {5, 0}, {9, 0}, {13, 0}});
  sa.agents[2].bag = {2};
  step_agent(sa, 2, Action::Eat, a);
  REQUIRE(sa.berry_count() == 1);
  const auto berry = sa.berries().front();
  CHECK(berry.group == 2);
  CHECK(allotment_of_column(berry.pos.x, a) == 2);
}

TEST_CASE("throw preconditions and transfer") {
  const auto c = SimConfig::capabilities();
  auto s = empty_state(c, {{0, 0}, {3, 3}, {5, 1}, {7, 2}});
  auto r = step_agent(s, 0, Action::Throw, c);
  CHECK(r.outcome == Outcome::ThrowEmpty);
  CHECK(r.reward == doctest::Approx(-0.2));

  s.agents[0].bag = {kGround};
  s.agents[0].health = 0.5;
  r = step_agent(s, 0, Action::Throw, c);
  CHECK(r.outcome == Outcome::ThrowLowHealth);
  CHECK(r.reward == doctest::Approx(-0.2));
  CHECK(s.agents[0].bag.size() == 1);

  s.agents[0].health = 3.0;
  s.agents[2].health = 2.0;  // lowest well-being among the others
  r = step_agent(s, 0, Action::Throw, c);
  CHECK(r.outcome == Outcome::Threw);
  CHECK(r.throw_target == 2);
  CHECK(r.reward == doctest::Approx(0.5));
  CHECK(s.agents[0].bag.empty());
  CHECK(s.agents[2].bag == std::vector<int>{kGround});

  auto solo = empty_state(c, {{0, 0}});
  solo.agents[0].bag = {kGround};
  r = step_agent(solo, 0, Action::Throw, c);
  CHECK(r.outcome == Outcome::ThrowNoRecipient);
  CHECK(r.reward == doctest::Approx(-0.2));
  CHECK(solo.agents[0].bag.size() == 1);
}

TEST_CASE("throw recipient ties go to the lowest id") {
  const auto c = SimConfig::capabilities();
  auto s = empty_state(c, {{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  CHECK(throw_recipient(s, 0, c) == 1);
  CHECK(throw_recipient(s, 1, c) == 0);
  s.agents[3].health = 4.0;
  CHECK(throw_recipient(s, 0, c) == 3);
  s.agents[3].alive = false;
  s.agents[3].health = 0.0;
  CHECK(throw_recipient(s, 0, c) == 1);
}

TEST_CASE("death and survival rewards") {
  auto c = SimConfig::capabilities();
  auto s = empty_state(c, {{0, 0}, {3, 3}});
  s.agents[0].health = 0.005;
  auto r = step_agent(s, 0, Action::MoveEast, c);
  CHECK(r.died);
  CHECK(r.done);
  CHECK(r.reward == doctest::Approx(-1.0));
  CHECK_FALSE(s.agents[0].alive);
  CHECK_FALSE(s.cell_has_agent(s.agents[0].pos));
  CHECK(wellbeing(s.agents[0], c) == 0.0);
  CHECK_THROWS(step_agent(s, 0, Action::MoveEast, c));

  s.t = c.t_max - 1;
  r = step_agent(s, 1, Action::MoveEast, c);
  CHECK(r.done);
  CHECK(r.reward == doctest::Approx(1.0));
  CHECK_THROWS_AS(step_agent(s, 7, Action::Eat, c), std::out_of_range);
}

TEST_CASE("observation") {
  const auto c = SimConfig::capabilities();
  auto s = empty_state(c, {{0, 0}, {7, 3}});
  auto obs = observe(s, 0, c);
  CHECK(obs.distance_to_berry == 12);  // no visible berry: o + p
  s.berry_at[static_cast<std::size_t>(s.index({2, 0}))] = kTree;  // invisible to agent 0
  s.berry_at[static_cast<std::size_t>(s.index({3, 2}))] = kGround;
  obs = observe(s, 0, c);
  CHECK(obs.distance_to_berry == 5);
  CHECK(observe(s, 1, c).distance_to_berry == 8);
  CHECK(obs.wellbeing.size() == 2);
  CHECK(obs.health == 5.0);
  CHECK(obs.bag == 0);
}

TEST_CASE("run_step ordering") {
  const auto c = SimConfig::capabilities();
  auto s = init_episode(c, 3);
  auto s2 = s;
  std::vector<int> calls;
  const auto order = run_step(s, c, [&](GridState&, int id) { calls.push_back(id); });
  CHECK(calls == order);
  auto sorted = calls;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
  CHECK(s.t == 1);
  CHECK(run_step(s2, c, [](GridState&, int) {}) == order);

  for (auto& a : s.agents) {
    a.alive = false;
    a.health = 0.0;
  }
  CHECK(episode_done(s, c));
  calls.clear();
  CHECK(run_step(s, c, [&](GridState&, int id) { calls.push_back(id); }).empty());
  CHECK(calls.empty());
  CHECK(s.t == 1);
}

TEST_CASE("random-walk fuzz keeps the invariants") {
  for (auto c : {SimConfig::capabilities(), SimConfig::allotment()}) {
    c.t_max = 400;  // long enough for some agents to starve
    c.h_initial = 1.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto s = init_episode(c, seed);
      Rng pick(seed + 1000);
      const int total = total_berries(s);
      std::vector<int> eats(4, 0);
      int last_death = 0;
      while (!episode_done(s, c)) {
        const auto health = [&] {
          std::vector<double> h;
          for (const auto& a : s.agents) h.push_back(a.health);
          return h;
        }();
        std::vector<int> ate(4, 0);
        run_step(s, c, [&](GridState& st, int id) {
          const auto a = action_from_index(std::uniform_int_distribution<int>(0, 5)(pick));
          const auto r = step_agent(st, id, a, c);
          const auto& agent = st.agents[static_cast<std::size_t>(id)];
          if (r.foraged) CHECK(agent.bag.back() == agent.group);
          if (r.outcome == Outcome::Ate) ate[static_cast<std::size_t>(id)]++;
          if (r.died) last_death = st.t + 1;
        });
        CHECK(total_berries(s) == total);
        for (std::size_t i = 0; i < 4; ++i) {
          const auto& a = s.agents[i];
          CHECK(a.alive == (a.health > 0.0));
          if (a.alive) CHECK(a.health == doctest::Approx(health[i] + c.h_decay + ate[i] * c.h_gain));
          eats[i] += ate[i];
        }
        std::set<int> cells;
        for (const auto& b : s.berries()) CHECK(cells.insert(s.index(b.pos)).second);
      }
      CHECK(s.t <= c.t_max);
      if (s.all_dead()) CHECK(s.t == last_death);
      else CHECK(s.t == c.t_max);
    }
  }
}

TEST_CASE("full trajectories are reproducible") {
  const auto c = SimConfig::allotment();
  auto run = [&](std::uint64_t seed) {
    auto s = init_episode(c, seed);
    Rng pick(seed);
    std::vector<GridState> trace;
    while (!episode_done(s, c)) {
      run_step(s, [&](const GridState&, int) {
        return action_from_index(std::uniform_int_distribution<int>(0, 5)(pick));
      }, c);
      trace.push_back(s);
    }
    return trace;
  };
  CHECK(run(11) == run(11));
}
