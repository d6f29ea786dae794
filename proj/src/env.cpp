#include "rawle/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rawle {

std::string_view to_string(Scenario s) {
  return s == Scenario::Capabilities ? "capabilities" : "allotment";
}

std::string_view to_string(Society s) { return s == Society::Baseline ? "baseline" : "rawle"; }

Scenario parse_scenario(std::string_view name) {
  if (name == "capabilities") return Scenario::Capabilities;
  if (name == "allotment") return Scenario::Allotment;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

Society parse_society(std::string_view name) {
  if (name == "baseline") return Society::Baseline;
  if (name == "rawle" || name == "maximin") return Society::Rawle;
  throw ConfigError("unknown society '" + std::string(name) + "'");
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::MoveNorth: return "north";
    case Action::MoveEast: return "east";
    case Action::MoveSouth: return "south";
    case Action::MoveWest: return "west";
    case Action::Eat: return "eat";
    case Action::Throw: return "throw";
  }
  return "?";
}

RewardTable RewardTable::baseline() { return RewardTable{}; }

RewardTable RewardTable::rawle() {
  RewardTable r;
  r.eat_berry = 0.8;
  r.forage_hit = 0.8;
  r.try_eat_empty = -0.1;
  r.try_throw_empty = -0.1;
  r.try_throw_low_health = -0.1;
  r.try_throw_no_recipient = -0.1;
  r.sanction_magnitude = 0.4;
  return r;
}

RewardTable RewardTable::for_society(Society s) {
  return s == Society::Baseline ? baseline() : rawle();
}

SimConfig SimConfig::capabilities() { return SimConfig{}; }

SimConfig SimConfig::allotment() {
  SimConfig c;
  c.scenario = Scenario::Allotment;
  c.grid_width = 16;
  c.grid_height = 4;
  return c;
}

double SimConfig::spawn_wellbeing() const { return h_initial / std::abs(h_decay); }

std::vector<int> SimConfig::resolved_allotment_profile() const {
  if (!allotment_profile.empty()) return allotment_profile;
  std::vector<int> even(static_cast<std::size_t>(std::max(n_agents, 0)), 0);
  for (int i = 0; i < b_initial && n_agents > 0; ++i) even[static_cast<std::size_t>(i % n_agents)]++;
  return even;
}

int allotment_of_column(int x, const SimConfig& config) {
  return x * config.n_agents / config.grid_width;
}

void SimConfig::validate() const {
  if (n_agents < 1) throw ConfigError("n_agents must be at least 1");
  if (grid_width < 1 || grid_height < 1) throw ConfigError("grid dimensions must be positive");
  if (b_initial < 0) throw ConfigError("b_initial must be non-negative");
  if (cell_count() < b_initial + n_agents)
    throw ConfigError("grid of " + std::to_string(cell_count()) + " cells cannot hold " +
                      std::to_string(b_initial) + " berries and " + std::to_string(n_agents) +
                      " agents");
  if (!(h_initial > 0)) throw ConfigError("h_initial must be positive");
  if (!(h_gain > 0)) throw ConfigError("h_gain must be positive");
  if (!(h_decay < 0)) throw ConfigError("h_decay must be negative");
  if (!(h_throw > 0)) throw ConfigError("h_throw must be positive");
  if (t_max < 1) throw ConfigError("t_max must be at least 1");
  if (scenario == Scenario::Allotment) {
    if (grid_width < n_agents)
      throw ConfigError("allotment grid must be at least one column per agent");
    const auto profile = resolved_allotment_profile();
    if (static_cast<int>(profile.size()) != n_agents)
      throw ConfigError("allotment_profile needs one entry per agent");
    if (std::accumulate(profile.begin(), profile.end(), 0) != b_initial)
      throw ConfigError("allotment_profile must sum to b_initial");
    std::vector<int> capacity(profile.size(), 0);
    for (int x = 0; x < grid_width; ++x)
      capacity[static_cast<std::size_t>(allotment_of_column(x, *this))] += grid_height;
    for (std::size_t a = 0; a < profile.size(); ++a) {
      if (profile[a] < 0) throw ConfigError("allotment_profile entries must be non-negative");
      if (profile[a] > capacity[a])
        throw ConfigError("allotment " + std::to_string(a) + " cannot hold its berries");
    }
  }
}

std::string trait_name(const AgentState& agent, Scenario scenario) {
  if (scenario == Scenario::Capabilities) return agent.group == kGround ? "short" : "tall";
  return "allotment " + std::to_string(agent.group);
}

std::vector<Berry> GridState::berries() const {
  std::vector<Berry> out;
  for (int i = 0; i < static_cast<int>(berry_at.size()); ++i)
    if (berry_at[static_cast<std::size_t>(i)] != kNoBerry)
      out.push_back({cell(i), berry_at[static_cast<std::size_t>(i)]});
  return out;
}

int GridState::berry_count() const {
  return static_cast<int>(std::count_if(berry_at.begin(), berry_at.end(),
                                        [](int g) { return g != kNoBerry; }));
}

int GridState::alive_count() const {
  return static_cast<int>(
      std::count_if(agents.begin(), agents.end(), [](const AgentState& a) { return a.alive; }));
}

bool GridState::cell_has_agent(Cell c) const {
  return std::any_of(agents.begin(), agents.end(),
                     [c](const AgentState& a) { return a.alive && a.pos == c; });
}

namespace {

int uniform_index(Rng& rng, int n) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

int random_kind(Rng& rng) { return std::bernoulli_distribution(0.5)(rng) ? kTree : kGround; }

AgentState& agent_ref(GridState& state, int agent_id) {
  if (agent_id < 0 || agent_id >= static_cast<int>(state.agents.size()))
    throw std::out_of_range("unknown agent id " + std::to_string(agent_id));
  return state.agents[static_cast<std::size_t>(agent_id)];
}

// Empty = no berry and no living agent. In the allotment harvest only cells
// of the given allotment qualify.
void regrow(GridState& state, int group, const SimConfig& config) {
  std::vector<int> empty;
  for (int i = 0; i < config.cell_count(); ++i) {
    if (state.berry_at[static_cast<std::size_t>(i)] != kNoBerry) continue;
    const Cell c = state.cell(i);
    if (config.scenario == Scenario::Allotment && allotment_of_column(c.x, config) != group)
      continue;
    if (state.cell_has_agent(c)) continue;
    empty.push_back(i);
  }
  if (empty.empty()) return;
  const int target = empty[static_cast<std::size_t>(uniform_index(state.rng, static_cast<int>(empty.size())))];
  const int kind = config.scenario == Scenario::Capabilities ? random_kind(state.rng) : group;
  state.berry_at[static_cast<std::size_t>(target)] = kind;
}

}  // namespace

GridState init_episode(const SimConfig& config, std::uint64_t rng_seed) {
  config.validate();
  GridState state;
  state.width = config.grid_width;
  state.height = config.grid_height;
  state.berry_at.assign(static_cast<std::size_t>(config.cell_count()), kNoBerry);
  state.rng.seed(rng_seed);

  std::vector<int> free(static_cast<std::size_t>(config.cell_count()));
  std::iota(free.begin(), free.end(), 0);

  if (config.scenario == Scenario::Capabilities) {
    std::shuffle(free.begin(), free.end(), state.rng);
    for (int b = 0; b < config.b_initial; ++b) {
      state.berry_at[static_cast<std::size_t>(free.back())] = random_kind(state.rng);
      free.pop_back();
    }
  } else {
    const auto profile = config.resolved_allotment_profile();
    for (int a = 0; a < config.n_agents; ++a) {
      std::vector<int> plot;
      for (int i : free)
        if (allotment_of_column(state.cell(i).x, config) == a) plot.push_back(i);
      std::shuffle(plot.begin(), plot.end(), state.rng);
      for (int b = 0; b < profile[static_cast<std::size_t>(a)]; ++b)
        state.berry_at[static_cast<std::size_t>(plot[static_cast<std::size_t>(b)])] = a;
    }
    std::erase_if(free, [&](int i) { return state.berry_at[static_cast<std::size_t>(i)] != kNoBerry; });
    std::shuffle(free.begin(), free.end(), state.rng);
  }

  for (int id = 0; id < config.n_agents; ++id) {
    AgentState agent;
    agent.id = id;
    agent.pos = state.cell(free.back());
    free.pop_back();
    agent.health = config.h_initial;
    agent.alive = true;
    agent.group = config.scenario == Scenario::Capabilities ? (id % 2 == 0 ? kGround : kTree) : id;
    state.agents.push_back(std::move(agent));
  }
  return state;
}

double wellbeing(const AgentState& agent, const SimConfig& config) {
  if (!agent.alive || agent.health <= 0.0) return 0.0;
  return (agent.health + agent.bag_count() * config.h_gain) / std::abs(config.h_decay);
}

std::vector<double> wellbeing_vector(const GridState& state, const SimConfig& config) {
  std::vector<double> out;
  out.reserve(state.agents.size());
  for (const auto& a : state.agents) out.push_back(wellbeing(a, config));
  return out;
}

bool can_harvest(const AgentState& agent, int berry_group) {
  return berry_group != kNoBerry && berry_group == agent.group;
}

int throw_recipient(const GridState& state, int agent_id, const SimConfig& config) {
  int best = -1;
  double best_value = 0.0;
  for (const auto& other : state.agents) {
    if (!other.alive || other.id == agent_id) continue;
    const double w = wellbeing(other, config);
    if (best < 0 || w < best_value) {
      best = other.id;
      best_value = w;
    }
  }
  return best;
}

Observation observe(const GridState& state, int agent_id, const SimConfig& config) {
  if (agent_id < 0 || agent_id >= static_cast<int>(state.agents.size()))
    throw std::out_of_range("unknown agent id " + std::to_string(agent_id));
  const auto& agent = state.agents[static_cast<std::size_t>(agent_id)];
  Observation obs;
  obs.self = agent_id;
  obs.health = agent.alive ? agent.health : 0.0;
  obs.bag = agent.bag_count();
  obs.distance_to_berry = config.grid_width + config.grid_height;
  for (int i = 0; i < static_cast<int>(state.berry_at.size()); ++i) {
    if (!can_harvest(agent, state.berry_at[static_cast<std::size_t>(i)])) continue;
    obs.distance_to_berry = std::min(obs.distance_to_berry, manhattan(agent.pos, state.cell(i)));
  }
  obs.wellbeing = wellbeing_vector(state, config);
  return obs;
}

StepResult step_agent(GridState& state, int agent_id, Action action, const SimConfig& config) {
  AgentState& agent = agent_ref(state, agent_id);
  if (!agent.alive) throw std::logic_error("agent " + std::to_string(agent_id) + " is dead");
  const RewardTable& rewards = config.reward_table;
  StepResult result;

  switch (action) {
    case Action::MoveNorth:
    case Action::MoveEast:
    case Action::MoveSouth:
    case Action::MoveWest: {
      static constexpr int dx[] = {0, 1, 0, -1};
      static constexpr int dy[] = {-1, 0, 1, 0};
      const int d = action_index(action);
      const int nx = agent.pos.x + dx[d];
      const int ny = agent.pos.y + dy[d];
      if (nx >= 0 && nx < state.width && ny >= 0 && ny < state.height) agent.pos = {nx, ny};
      result.outcome = Outcome::Moved;
      break;
    }
    case Action::Eat: {
      if (agent.bag.empty()) {
        result.outcome = Outcome::EatEmpty;
        result.reward += rewards.try_eat_empty;
        break;
      }
      const int group = agent.bag.back();
      agent.bag.pop_back();
      agent.health += config.h_gain;
      agent.eaten += 1;
      result.outcome = Outcome::Ate;
      result.reward += rewards.eat_berry;
      regrow(state, group, config);
      break;
    }
    case Action::Throw: {
      if (agent.bag.empty()) {
        result.outcome = Outcome::ThrowEmpty;
        result.reward += rewards.try_throw_empty;
        break;
      }
      if (agent.health < config.h_throw) {
        result.outcome = Outcome::ThrowLowHealth;
        result.reward += rewards.try_throw_low_health;
        break;
      }
      const int target = throw_recipient(state, agent_id, config);
      if (target < 0) {
        result.outcome = Outcome::ThrowNoRecipient;
        result.reward += rewards.try_throw_no_recipient;
        break;
      }
      state.agents[static_cast<std::size_t>(target)].bag.push_back(agent.bag.back());
      agent.bag.pop_back();
      result.outcome = Outcome::Threw;
      result.throw_target = target;
      result.reward += rewards.throw_berry;
      break;
    }
  }

  // Forage at the (possibly new) cell.
  auto& slot = state.berry_at[static_cast<std::size_t>(state.index(agent.pos))];
  if (can_harvest(agent, slot)) {
    agent.bag.push_back(slot);
    slot = kNoBerry;
    result.foraged = true;
    result.reward += rewards.forage_hit;
  }

  agent.health += config.h_decay;
  if (agent.health <= 1e-9) {
    agent.health = 0.0;
    agent.alive = false;
    result.died = true;
    result.done = true;
    result.reward += rewards.die;
  } else if (state.t + 1 >= config.t_max) {
    result.done = true;
    result.reward += rewards.survive_episode;
  }
  return result;
}

bool episode_done(const GridState& state, const SimConfig& config) {
  return state.all_dead() || state.t >= config.t_max;
}

std::vector<int> draw_turn_order(GridState& state) {
  std::vector<int> order;
  for (const auto& a : state.agents)
    if (a.alive) order.push_back(a.id);
  std::shuffle(order.begin(), order.end(), state.rng);
  return order;
}

std::vector<int> run_step(GridState& state, const SimConfig& config, const TurnFn& turn) {
  if (episode_done(state, config)) return {};
  auto order = draw_turn_order(state);
  for (int id : order)
    if (state.agents[static_cast<std::size_t>(id)].alive) turn(state, id);
  state.t += 1;
  return order;
}

std::vector<int> run_step(GridState& state, const PolicyFn& policy, const SimConfig& config) {
  return run_step(state, config, [&](GridState& s, int id) {
    step_agent(s, id, policy(s, id), config);
  });
}

}  // namespace rawle
